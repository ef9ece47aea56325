#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ember/constitutive.hpp"
#include "ember/errors.hpp"
#include "ember/grid.hpp"
#include "ember/ignition.hpp"
#include "ember/mpm.hpp"
#include "ember/particles.hpp"
#include "ember/rng.hpp"
#include "ember/thermal.hpp"

namespace ember::scene {

using nlohmann::json;

struct MaterialSettings {
    double youngs_modulus = 100.0;
    double poisson_ratio = 0.3;
    double burnt_youngs_modulus = 100.0;
    double burnt_poisson_ratio = 0.3;
    double friction_angle = 35.0;
    double rho_solid = 1.0;
    double rho_air = 1.0;
};

struct ShrinkSettings {
    std::string mode = "none"; // none | isotropic | anisotropic_cylindrical
    double c_shrink = 1.0;
    double c_radial = 1.0;
    double c_longitudinal = 1.0;
    std::array<double, 3> axis_origin{};
    std::array<double, 3> axis_direction{1.0, 0.0, 0.0};
    double T_evap = 500.0;
    double T_max = 1500.0;
};

struct RadialFuelSettings {
    std::array<double, 3> center{};
    std::optional<std::array<double, 3>> axis; // distance from line when set
    double R = 1.0;
};

struct SeedSettings {
    std::vector<long> ids;
    std::optional<std::array<double, 3>> point;
    double radius = 0.0;
};

struct IgnitionSettings {
    ignition::IgnitionParams params;
    std::optional<RadialFuelSettings> radial_fuel;
    std::vector<SeedSettings> seeds;
};

struct FluidSettings {
    double alpha_buoyancy = 0.0;
    double alpha_flip = 0.99;
    double rho_fluid = 1.0;
    bool blended_position_update = false;
};

struct SmokeSettings {
    int emit_count = 0; // smoke particles per burning particle per step
    double mass = 1.0;
    std::optional<double> max_age;
};

struct SolverSettings {
    double cfl_number = 0.5;
    double cg_tol_pressure = 1e-6;
    double cg_tol_diffusion = 1e-6;
    int max_iterations = 4000;
    std::optional<double> max_dt; // stability cap for the explicit solid update
    double speed_scale = 1.0;     // sets the CFL velocity floor (1e-3 * scale)
};

struct OutputSettings {
    double frame_dt = 1.0 / 24.0;
    int frame_count = 0;
    bool grid_temperature = false;
    bool grid_velocity = false;
    bool grid_labels = false;
};

struct GeometrySpec {
    enum class Kind { box, sphere, cylinder, points };
    Kind kind = Kind::box;
    std::array<double, 3> a{}; // box min / sphere or cylinder center / p0
    std::array<double, 3> b{}; // box max / cylinder p1
    double radius = 0.0;
    std::string file;          // point-cloud source
    int particles_per_cell = 0; // 0 = dimension default (4 in 2D, 8 in 3D)
};

struct SceneConfig {
    int dimension = 2;
    std::array<double, 3> origin{};
    std::array<double, 3> extents{};
    double dx = 1.0;
    std::uint64_t seed = 0;
    std::array<double, 3> gravity{};
    MaterialSettings material;
    thermal::ThermalParams thermal;
    ShrinkSettings shrink;
    IgnitionSettings ignition;
    FluidSettings fluid;
    SmokeSettings smoke;
    SolverSettings solver;
    OutputSettings output;
    std::vector<GeometrySpec> geometry;
    std::string base_dir; // directory of the config file, for relative paths

    VecI<3> dims3() const {
        VecI<3> d = VecI<3>::Ones();
        for (int a = 0; a < dimension; ++a) {
            const double exact = extents[static_cast<std::size_t>(a)] / dx;
            d[a] = static_cast<int>(std::llround(exact));
        }
        return d;
    }
};

// ---------------------------------------------------------------------------
// Strict JSON parsing: unknown keys are configuration errors.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError("config: " + path + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (key == k) ok = true;
        if (!ok) throw ConfigError("config: unknown key '" + path + "." + key + "'");
    }
}

inline double get_number(const json& obj, const std::string& path, const char* key,
                         std::optional<double> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing required field '" + path + "." + key + "'");
    }
    if (!obj[key].is_number())
        throw ConfigError("config: field '" + path + "." + key + "' must be a number");
    return obj[key].get<double>();
}

inline bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean())
        throw ConfigError("config: field '" + path + "." + key + "' must be a boolean");
    return obj[key].get<bool>();
}

inline std::array<double, 3> get_vec(const json& obj, const std::string& path, const char* key,
                                     int dim) {
    if (!obj.contains(key))
        throw ConfigError("config: missing required field '" + path + "." + key + "'");
    const json& v = obj[key];
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        throw ConfigError("config: field '" + path + "." + key + "' must be an array of " +
                          std::to_string(dim) + " numbers");
    std::array<double, 3> out{};
    for (int a = 0; a < dim; ++a) {
        if (!v[static_cast<std::size_t>(a)].is_number())
            throw ConfigError("config: field '" + path + "." + key + "' must hold numbers");
        out[static_cast<std::size_t>(a)] = v[static_cast<std::size_t>(a)].get<double>();
    }
    return out;
}

} // namespace detail

inline SceneConfig parse_scene(const json& root, const std::string& base_dir = "") {
    using detail::check_keys;
    using detail::get_bool;
    using detail::get_number;
    using detail::get_vec;

    check_keys(root, "scene",
               {"dimension", "domain", "dx", "seed", "gravity", "material", "thermal", "shrink",
                "ignition", "fluid", "smoke", "solver", "output", "geometry"});
    SceneConfig cfg;
    cfg.base_dir = base_dir;
    cfg.dimension = static_cast<int>(get_number(root, "scene", "dimension"));
    if (cfg.dimension != 2 && cfg.dimension != 3)
        throw ConfigError("config: scene.dimension must be 2 or 3");
    const int dim = cfg.dimension;

    if (!root.contains("domain")) throw ConfigError("config: missing required field 'scene.domain'");
    check_keys(root["domain"], "domain", {"origin", "extents"});
    cfg.origin = get_vec(root["domain"], "domain", "origin", dim);
    cfg.extents = get_vec(root["domain"], "domain", "extents", dim);
    cfg.dx = get_number(root, "scene", "dx");
    if (!(cfg.dx > 0.0)) throw ConfigError("config: scene.dx must be > 0");
    for (int a = 0; a < dim; ++a) {
        const double cells = cfg.extents[static_cast<std::size_t>(a)] / cfg.dx;
        if (cells < 1.0 || std::abs(cells - std::llround(cells)) > 1e-9 * std::max(1.0, cells))
            throw ConfigError("config: domain.extents must be an integer multiple of dx (axis " +
                              std::to_string(a) + ")");
    }
    cfg.seed = static_cast<std::uint64_t>(get_number(root, "scene", "seed", 0.0));
    if (root.contains("gravity")) cfg.gravity = get_vec(root, "scene", "gravity", dim);

    if (!root.contains("material"))
        throw ConfigError("config: missing required field 'scene.material'");
    {
        const json& m = root["material"];
        check_keys(m, "material",
                   {"youngs_modulus", "poisson_ratio", "burnt_youngs_modulus",
                    "burnt_poisson_ratio", "friction_angle", "rho_solid", "rho_air"});
        cfg.material.youngs_modulus = get_number(m, "material", "youngs_modulus");
        cfg.material.poisson_ratio = get_number(m, "material", "poisson_ratio", 0.3);
        cfg.material.burnt_youngs_modulus =
            get_number(m, "material", "burnt_youngs_modulus", cfg.material.youngs_modulus);
        cfg.material.burnt_poisson_ratio =
            get_number(m, "material", "burnt_poisson_ratio", cfg.material.poisson_ratio);
        cfg.material.friction_angle = get_number(m, "material", "friction_angle", 35.0);
        cfg.material.rho_solid = get_number(m, "material", "rho_solid");
        cfg.material.rho_air = get_number(m, "material", "rho_air", 1.0);
        if (!(cfg.material.rho_solid > 0.0) || !(cfg.material.rho_air > 0.0))
            throw ConfigError("config: material densities must be > 0");
    }

    if (root.contains("thermal")) {
        const json& t = root["thermal"];
        check_keys(t, "thermal",
                   {"K_air", "K_solid", "cp_air", "cp_solid", "T_bar",
                    "floor_fixed_temperature"});
        cfg.thermal.K_air = get_number(t, "thermal", "K_air", 0.01);
        cfg.thermal.K_solid = get_number(t, "thermal", "K_solid", 0.1);
        cfg.thermal.cp_air = get_number(t, "thermal", "cp_air", 1.0);
        cfg.thermal.cp_solid = get_number(t, "thermal", "cp_solid", 1.0);
        cfg.thermal.T_bar = get_number(t, "thermal", "T_bar", 298.0);
        if (t.contains("floor_fixed_temperature"))
            cfg.thermal.floor_fixed_temperature =
                get_number(t, "thermal", "floor_fixed_temperature");
    }
    cfg.thermal.rho_air = cfg.material.rho_air;
    cfg.thermal.rho_solid = cfg.material.rho_solid;
    cfg.thermal.validate();

    if (root.contains("shrink")) {
        const json& s = root["shrink"];
        check_keys(s, "shrink",
                   {"mode", "c_shrink", "c_radial", "c_longitudinal", "axis_origin",
                    "axis_direction", "T_evap", "T_max"});
        if (s.contains("mode")) {
            if (!s["mode"].is_string())
                throw ConfigError("config: shrink.mode must be a string");
            cfg.shrink.mode = s["mode"].get<std::string>();
        }
        if (cfg.shrink.mode != "none" && cfg.shrink.mode != "isotropic" &&
            cfg.shrink.mode != "anisotropic_cylindrical")
            throw ConfigError("config: shrink.mode must be none, isotropic, or "
                              "anisotropic_cylindrical");
        cfg.shrink.c_shrink = get_number(s, "shrink", "c_shrink", 1.0);
        cfg.shrink.c_radial = get_number(s, "shrink", "c_radial", 1.0);
        cfg.shrink.c_longitudinal = get_number(s, "shrink", "c_longitudinal", 1.0);
        if (s.contains("axis_origin")) cfg.shrink.axis_origin = get_vec(s, "shrink", "axis_origin", 3);
        if (s.contains("axis_direction"))
            cfg.shrink.axis_direction = get_vec(s, "shrink", "axis_direction", 3);
        cfg.shrink.T_evap = get_number(s, "shrink", "T_evap", 500.0);
        cfg.shrink.T_max = get_number(s, "shrink", "T_max", 1500.0);
    }

    if (root.contains("ignition")) {
        const json& ig = root["ignition"];
        check_keys(ig, "ignition",
                   {"F0", "radial_fuel", "F_min", "gamma", "beta", "T_ignition", "T_max",
                    "c_flame", "seeds"});
        cfg.ignition.params.F0 = get_number(ig, "ignition", "F0", 1.0);
        cfg.ignition.params.F_min = get_number(ig, "ignition", "F_min", 0.3);
        cfg.ignition.params.gamma = get_number(ig, "ignition", "gamma", 1.0);
        cfg.ignition.params.beta = get_number(ig, "ignition", "beta", 0.0);
        cfg.ignition.params.T_ignition = get_number(ig, "ignition", "T_ignition", 600.0);
        cfg.ignition.params.T_max = get_number(ig, "ignition", "T_max", 1500.0);
        cfg.ignition.params.c_flame = get_number(ig, "ignition", "c_flame", 0.03);
        if (ig.contains("radial_fuel")) {
            const json& rf = ig["radial_fuel"];
            check_keys(rf, "ignition.radial_fuel", {"center", "axis", "R"});
            RadialFuelSettings r;
            r.center = get_vec(rf, "ignition.radial_fuel", "center", dim);
            if (rf.contains("axis")) r.axis = get_vec(rf, "ignition.radial_fuel", "axis", dim);
            r.R = get_number(rf, "ignition.radial_fuel", "R");
            if (!(r.R > 0.0)) throw ConfigError("config: ignition.radial_fuel.R must be > 0");
            cfg.ignition.radial_fuel = r;
        }
        if (ig.contains("seeds")) {
            if (!ig["seeds"].is_array())
                throw ConfigError("config: ignition.seeds must be an array");
            for (const json& s : ig["seeds"]) {
                check_keys(s, "ignition.seeds[]", {"ids", "point", "radius"});
                SeedSettings seed;
                if (s.contains("ids")) {
                    if (!s["ids"].is_array())
                        throw ConfigError("config: ignition.seeds[].ids must be an array");
                    for (const json& v : s["ids"]) seed.ids.push_back(v.get<long>());
                }
                if (s.contains("point")) {
                    seed.point = get_vec(s, "ignition.seeds[]", "point", dim);
                    seed.radius = get_number(s, "ignition.seeds[]", "radius", 0.0);
                }
                if (seed.ids.empty() && !seed.point)
                    throw ConfigError("config: ignition seed needs ids or a point");
                cfg.ignition.seeds.push_back(std::move(seed));
            }
        }
    }
    cfg.ignition.params.validate();

    if (root.contains("fluid")) {
        const json& f = root["fluid"];
        check_keys(f, "fluid",
                   {"alpha_buoyancy", "alpha_flip", "rho_fluid", "blended_position_update"});
        cfg.fluid.alpha_buoyancy = get_number(f, "fluid", "alpha_buoyancy", 0.0);
        cfg.fluid.alpha_flip = get_number(f, "fluid", "alpha_flip", 0.99);
        cfg.fluid.rho_fluid = get_number(f, "fluid", "rho_fluid", 1.0);
        cfg.fluid.blended_position_update =
            get_bool(f, "fluid", "blended_position_update", false);
        if (cfg.fluid.alpha_flip < 0.0 || cfg.fluid.alpha_flip > 1.0)
            throw ConfigError("config: fluid.alpha_flip must be in [0, 1]");
        if (!(cfg.fluid.rho_fluid > 0.0))
            throw ConfigError("config: fluid.rho_fluid must be > 0");
    }

    if (root.contains("smoke")) {
        const json& s = root["smoke"];
        check_keys(s, "smoke", {"emit_count", "mass", "max_age"});
        cfg.smoke.emit_count = static_cast<int>(get_number(s, "smoke", "emit_count", 0.0));
        cfg.smoke.mass = get_number(s, "smoke", "mass", 1.0);
        if (s.contains("max_age")) cfg.smoke.max_age = get_number(s, "smoke", "max_age");
        if (cfg.smoke.emit_count < 0) throw ConfigError("config: smoke.emit_count must be >= 0");
        if (!(cfg.smoke.mass > 0.0)) throw ConfigError("config: smoke.mass must be > 0");
    }

    if (root.contains("solver")) {
        const json& s = root["solver"];
        check_keys(s, "solver",
                   {"cfl_number", "cg_tol_pressure", "cg_tol_diffusion", "max_iterations",
                    "max_dt", "speed_scale"});
        cfg.solver.cfl_number = get_number(s, "solver", "cfl_number", 0.5);
        cfg.solver.cg_tol_pressure = get_number(s, "solver", "cg_tol_pressure", 1e-6);
        cfg.solver.cg_tol_diffusion = get_number(s, "solver", "cg_tol_diffusion", 1e-6);
        cfg.solver.max_iterations =
            static_cast<int>(get_number(s, "solver", "max_iterations", 4000.0));
        if (s.contains("max_dt")) cfg.solver.max_dt = get_number(s, "solver", "max_dt");
        cfg.solver.speed_scale = get_number(s, "solver", "speed_scale", 1.0);
        if (!(cfg.solver.cfl_number > 0.0))
            throw ConfigError("config: solver.cfl_number must be > 0");
        if (!(cfg.solver.speed_scale > 0.0))
            throw ConfigError("config: solver.speed_scale must be > 0");
    }

    if (root.contains("output")) {
        const json& o = root["output"];
        check_keys(o, "output",
                   {"frame_dt", "frame_count", "grid_temperature", "grid_velocity",
                    "grid_labels"});
        cfg.output.frame_dt = get_number(o, "output", "frame_dt", 1.0 / 24.0);
        cfg.output.frame_count = static_cast<int>(get_number(o, "output", "frame_count", 0.0));
        cfg.output.grid_temperature = get_bool(o, "output", "grid_temperature", false);
        cfg.output.grid_velocity = get_bool(o, "output", "grid_velocity", false);
        cfg.output.grid_labels = get_bool(o, "output", "grid_labels", false);
        if (!(cfg.output.frame_dt > 0.0))
            throw ConfigError("config: output.frame_dt must be > 0");
        if (cfg.output.frame_count < 0)
            throw ConfigError("config: output.frame_count must be >= 0");
    }

    if (!root.contains("geometry") || !root["geometry"].is_array() || root["geometry"].empty())
        throw ConfigError("config: scene.geometry must be a non-empty array");
    for (const json& g : root["geometry"]) {
        check_keys(g, "geometry[]",
                   {"shape", "min", "max", "center", "radius", "p0", "p1", "file",
                    "particles_per_cell"});
        if (!g.contains("shape") || !g["shape"].is_string())
            throw ConfigError("config: geometry[].shape is required");
        const std::string shape = g["shape"].get<std::string>();
        GeometrySpec spec;
        spec.particles_per_cell =
            static_cast<int>(get_number(g, "geometry[]", "particles_per_cell", 0.0));
        if (shape == "box") {
            spec.kind = GeometrySpec::Kind::box;
            spec.a = get_vec(g, "geometry[]", "min", dim);
            spec.b = get_vec(g, "geometry[]", "max", dim);
        } else if (shape == "sphere") {
            spec.kind = GeometrySpec::Kind::sphere;
            spec.a = get_vec(g, "geometry[]", "center", dim);
            spec.radius = get_number(g, "geometry[]", "radius");
        } else if (shape == "cylinder") {
            if (dim != 3) throw ConfigError("config: cylinder geometry requires dimension 3");
            spec.kind = GeometrySpec::Kind::cylinder;
            spec.a = get_vec(g, "geometry[]", "p0", 3);
            spec.b = get_vec(g, "geometry[]", "p1", 3);
            spec.radius = get_number(g, "geometry[]", "radius");
        } else if (shape == "points") {
            spec.kind = GeometrySpec::Kind::points;
            if (!g.contains("file") || !g["file"].is_string())
                throw ConfigError("config: geometry[].file is required for points");
            spec.file = g["file"].get<std::string>();
        } else {
            throw ConfigError("config: unknown geometry shape '" + shape + "'");
        }
        cfg.geometry.push_back(std::move(spec));
    }
    return cfg;
}

inline SceneConfig load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open scene file '" + path + "'");
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("config: JSON parse failure in '" + path + "': " + e.what());
    }
    std::string base_dir;
    if (const auto slash = path.find_last_of('/'); slash != std::string::npos)
        base_dir = path.substr(0, slash + 1);
    return parse_scene(root, base_dir);
}

// ---------------------------------------------------------------------------
// Geometry sampling
// ---------------------------------------------------------------------------

namespace detail {

template <int D>
Vec<D> to_vec(const std::array<double, 3>& a) {
    Vec<D> v;
    for (int i = 0; i < D; ++i) v[i] = a[static_cast<std::size_t>(i)];
    return v;
}

template <int D>
bool inside_shape(const GeometrySpec& spec, const Vec<D>& x) {
    switch (spec.kind) {
    case GeometrySpec::Kind::box: {
        for (int a = 0; a < D; ++a)
            if (x[a] < spec.a[static_cast<std::size_t>(a)] ||
                x[a] > spec.b[static_cast<std::size_t>(a)])
                return false;
        return true;
    }
    case GeometrySpec::Kind::sphere:
        return (x - to_vec<D>(spec.a)).norm() <= spec.radius;
    case GeometrySpec::Kind::cylinder: {
        if constexpr (D == 3) {
            const Vec3 p0 = to_vec<3>(spec.a), p1 = to_vec<3>(spec.b);
            const Vec3 axis = p1 - p0;
            const double len2 = axis.squaredNorm();
            if (len2 == 0.0) return false;
            const double t = (x - p0).dot(axis) / len2;
            if (t < 0.0 || t > 1.0) return false;
            return (x - (p0 + t * axis)).norm() <= spec.radius;
        }
        return false;
    }
    case GeometrySpec::Kind::points:
        return false; // sampled directly from the file
    }
    return false;
}

template <int D>
void shape_bounds(const GeometrySpec& spec, Vec<D>& lo, Vec<D>& hi) {
    switch (spec.kind) {
    case GeometrySpec::Kind::box:
        lo = to_vec<D>(spec.a);
        hi = to_vec<D>(spec.b);
        break;
    case GeometrySpec::Kind::sphere:
        lo = to_vec<D>(spec.a) - Vec<D>::Constant(spec.radius);
        hi = to_vec<D>(spec.a) + Vec<D>::Constant(spec.radius);
        break;
    case GeometrySpec::Kind::cylinder:
        for (int a = 0; a < D; ++a) {
            lo[a] = std::min(spec.a[static_cast<std::size_t>(a)],
                             spec.b[static_cast<std::size_t>(a)]) -
                    spec.radius;
            hi[a] = std::max(spec.a[static_cast<std::size_t>(a)],
                             spec.b[static_cast<std::size_t>(a)]) +
                    spec.radius;
        }
        break;
    case GeometrySpec::Kind::points:
        break;
    }
}

template <int D>
std::vector<Vec<D>> read_point_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open point file '" + path + "'");
    std::vector<Vec<D>> points;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        Vec<D> x;
        bool ok = true;
        for (int a = 0; a < D; ++a)
            if (!(ls >> x[a])) ok = false;
        if (!ok)
            throw ConfigError("config: malformed point row in '" + path + "': " + line);
        points.push_back(x);
    }
    return points;
}

} // namespace detail

/// Per-particle initial fuel: flat F0 by default, or the radial ramp
/// clamp(1 + r/R, 1, 2) when configured.
template <int D>
double initial_fuel(const SceneConfig& cfg, const Vec<D>& x) {
    if (!cfg.ignition.radial_fuel) return cfg.ignition.params.F0;
    const RadialFuelSettings& rf = *cfg.ignition.radial_fuel;
    const Vec<D> center = detail::to_vec<D>(rf.center);
    double r;
    if (rf.axis) {
        Vec<D> axis = detail::to_vec<D>(*rf.axis);
        axis.normalize();
        const Vec<D> rel = x - center;
        r = (rel - rel.dot(axis) * axis).norm();
    } else {
        r = (x - center).norm();
    }
    return std::clamp(1.0 + r / rf.R, 1.0, 2.0);
}

/// Samples the configured geometry with jittered particles-per-cell
/// placement (seeded per cell, reproducible across runs). V0 is the cell
/// volume divided by the sampling density.
template <int D>
std::vector<MpmParticle<D>> sample_geometry(const SceneConfig& cfg) {
    if (cfg.dimension != D) throw ConfigError("config: dimension mismatch in sampling");
    grid::GridDescriptor<D> lattice;
    lattice.origin = detail::to_vec<D>(cfg.origin);
    lattice.dx = cfg.dx;
    for (int a = 0; a < D; ++a) lattice.dims[a] = cfg.dims3()[a];
    lattice.site = grid::NodeSite::cell_center;
    lattice.validate();

    std::vector<MpmParticle<D>> particles;
    const int default_ppc = D == 2 ? 4 : 8;

    auto push_particle = [&](const Vec<D>& x, double V0) {
        for (int a = 0; a < D; ++a) {
            const double lo = lattice.origin[a] + 1.0 * cfg.dx;
            const double hi = lattice.origin[a] + (lattice.dims[a] - 1.0) * cfg.dx;
            if (x[a] < lo || x[a] > hi)
                throw ConfigError(
                    "config: geometry produces particles outside the valid interior "
                    "(axis " + std::to_string(a) + "); inset shapes by at least one cell");
        }
        MpmParticle<D> p;
        p.x = x;
        p.V0 = V0;
        p.m = cfg.material.rho_solid * V0;
        p.T = cfg.thermal.T_bar;
        p.fuel = p.fuel0 = initial_fuel<D>(cfg, x);
        particles.push_back(p);
    };

    for (std::size_t gi = 0; gi < cfg.geometry.size(); ++gi) {
        const GeometrySpec& spec = cfg.geometry[gi];
        const int ppc = spec.particles_per_cell > 0 ? spec.particles_per_cell : default_ppc;
        if (spec.kind == GeometrySpec::Kind::points) {
            const std::string path =
                spec.file.empty() || spec.file[0] == '/' ? spec.file : cfg.base_dir + spec.file;
            const double V0 = std::pow(cfg.dx, D) / ppc;
            for (const Vec<D>& x : detail::read_point_file<D>(path)) push_particle(x, V0);
            continue;
        }
        Vec<D> lo, hi;
        detail::shape_bounds<D>(spec, lo, hi);
        VecI<D> cell_lo, cell_hi;
        for (int a = 0; a < D; ++a) {
            cell_lo[a] = std::max(
                0, static_cast<int>(std::floor((lo[a] - lattice.origin[a]) / cfg.dx)));
            cell_hi[a] = std::min(
                lattice.dims[a] - 1,
                static_cast<int>(std::floor((hi[a] - lattice.origin[a]) / cfg.dx)));
        }
        const double V0 = std::pow(cfg.dx, D) / ppc;
        VecI<D> cell = cell_lo;
        bool any = false;
        for (int a = 0; a < D; ++a) any |= cell_lo[a] > cell_hi[a];
        if (any) continue;
        while (true) {
            const std::int64_t cell_key = grid::pack_index<D>(cell);
            for (int k = 0; k < ppc; ++k) {
                Vec<D> x;
                for (int a = 0; a < D; ++a) {
                    const std::uint64_t key = rng::key(
                        cfg.seed, rng::kStreamGeometry, static_cast<std::uint64_t>(gi),
                        static_cast<std::uint64_t>(cell_key), static_cast<std::uint64_t>(k),
                        static_cast<std::uint64_t>(a));
                    x[a] = lattice.origin[a] + (cell[a] + rng::u01(key)) * cfg.dx;
                }
                if (detail::inside_shape<D>(spec, x)) push_particle(x, V0);
            }
            int a = 0;
            for (; a < D; ++a) {
                if (++cell[a] <= cell_hi[a]) break;
                cell[a] = cell_lo[a];
            }
            if (a == D) break;
        }
    }
    if (particles.empty()) throw ConfigError("config: geometry produced no particles");
    return particles;
}

} // namespace ember::scene
