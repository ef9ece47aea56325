#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ember/errors.hpp"
#include "ember/fluid.hpp"
#include "ember/frame_io.hpp"
#include "ember/grid.hpp"
#include "ember/ignition.hpp"
#include "ember/interp.hpp"
#include "ember/log.hpp"
#include "ember/mpm.hpp"
#include "ember/particles.hpp"
#include "ember/scene.hpp"
#include "ember/thermal.hpp"

namespace ember::sim {

template <int D>
struct SimState {
    double time = 0.0;
    std::uint64_t step_index = 0;
    std::uint32_t next_frame = 0; // next frame file to write
    std::vector<MpmParticle<D>> mpm;
    std::vector<SmokeParticle<D>> smoke;
    grid::SparseField<Vec<D>, D> u;       // corner velocities
    grid::SparseField<double, D> T_fluid; // cell temperatures (solid cells extrapolated)
    grid::SparseField<double, D> p_cache; // previous pressure, warm-starts the projection
};

struct StepStats {
    double dt = 0.0;
    int pressure_iterations = 0;
    int diffusion_iterations = 0;
    int smoke_emitted = 0;
    int fluid_cells = 0;
};

struct FrameStats {
    int frame = 0;
    double seconds = 0.0;
    int steps = 0;
    long pressure_iterations = 0;
    long diffusion_iterations = 0;
    std::size_t mpm_count = 0;
    std::size_t smoke_count = 0;
};

struct RunSummary {
    int frames_written = 0;
    long total_steps = 0;
    double total_seconds = 0.0;
    double mean_seconds_per_frame = 0.0;
    std::vector<FrameStats> frames;
};

struct RunOptions {
    std::string out_dir;
    std::optional<int> frame_count; // overrides the scene's frame count
    bool write_csv = false;
    std::optional<std::string> checkpoint_path; // written after every frame
    std::optional<std::string> resume_path;
};

inline constexpr char kCheckpointMagic[4] = {'T', 'H', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <int D>
class Simulation {
public:
    explicit Simulation(const scene::SceneConfig& cfg, int threads = 1)
        : cfg_(cfg), threads_(std::max(1, threads)) {
        if (cfg.dimension != D) throw ConfigError("simulation: dimension mismatch");
        const VecI<3> d3 = cfg.dims3();
        Vec<D> origin;
        VecI<D> dims;
        for (int a = 0; a < D; ++a) {
            origin[a] = cfg.origin[static_cast<std::size_t>(a)];
            dims[a] = d3[a];
        }
        centers_ = {origin, cfg.dx, dims, grid::NodeSite::cell_center};
        corners_ = {origin, cfg.dx, dims, grid::NodeSite::cell_corner};
        centers_.validate();
        for (int a = 0; a < D; ++a) gravity_[a] = cfg.gravity[static_cast<std::size_t>(a)];

        material_.fixed_corotated = constitutive::ElasticParams::from_moduli(
            cfg.material.youngs_modulus, cfg.material.poisson_ratio);
        material_.stvk_hencky = constitutive::ElasticParams::from_moduli(
            cfg.material.burnt_youngs_modulus, cfg.material.burnt_poisson_ratio);
        material_.drucker_prager =
            constitutive::PlasticParams::from_friction_angle(cfg.material.friction_angle);

        shrink_.mode = cfg.shrink.mode == "isotropic"
                           ? mpm::ShrinkConfig::Mode::isotropic
                           : cfg.shrink.mode == "anisotropic_cylindrical"
                                 ? mpm::ShrinkConfig::Mode::anisotropic_cylindrical
                                 : mpm::ShrinkConfig::Mode::none;
        shrink_.c_shrink = cfg.shrink.c_shrink;
        shrink_.c_radial = cfg.shrink.c_radial;
        shrink_.c_longitudinal = cfg.shrink.c_longitudinal;
        for (int a = 0; a < 3; ++a) {
            shrink_.axis_origin[a] = cfg.shrink.axis_origin[static_cast<std::size_t>(a)];
            shrink_.axis_direction[a] = cfg.shrink.axis_direction[static_cast<std::size_t>(a)];
        }
        shrink_.T_evap = cfg.shrink.T_evap;
        shrink_.T_max = cfg.shrink.T_max;
        shrink_.validate(D);

        state_.mpm = scene::sample_geometry<D>(cfg);
        state_.u = grid::SparseField<Vec<D>, D>(corners_, Vec<D>::Zero());
        state_.T_fluid = grid::SparseField<double, D>(centers_, cfg.thermal.T_bar);
        state_.p_cache = grid::SparseField<double, D>(centers_, 0.0);
        for (const scene::SeedSettings& s : cfg.ignition.seeds) {
            ignition::SeedSpec<D> spec;
            spec.ids = s.ids;
            if (s.point) spec.point = scene::detail::to_vec<D>(*s.point);
            spec.radius = s.radius;
            ignition::seed_ignition<D>(state_.mpm, spec, cfg.ignition.params);
        }
    }

    SimState<D>& state() { return state_; }
    const SimState<D>& state() const { return state_; }
    const scene::SceneConfig& config() const { return cfg_; }
    const grid::GridDescriptor<D>& centers() const { return centers_; }
    const grid::GridDescriptor<D>& corners() const { return corners_; }

    /// CFL-limited adaptive step, clamped to the remaining frame time; a
    /// small velocity floor keeps static scenes from dividing by zero.
    double compute_dt(double frame_remaining) const {
        double vmax = 0.0;
        for (const auto& p : state_.mpm) vmax = std::max(vmax, p.v.norm());
        for (const auto& p : state_.smoke) vmax = std::max(vmax, p.v.norm());
        state_.u.for_each([&](const VecI<D>&, const Vec<D>& v) {
            vmax = std::max(vmax, v.norm());
        });
        vmax = std::max(vmax, 1e-3 * cfg_.solver.speed_scale);
        double dt = std::min(frame_remaining, cfg_.solver.cfl_number * cfg_.dx / vmax);
        if (cfg_.solver.max_dt) dt = std::min(dt, *cfg_.solver.max_dt);
        return dt;
    }

    StepStats step(double dt) {
        StepStats stats;
        stats.dt = dt;
        const double t_end = state_.time + dt;

        // -- solid update ---------------------------------------------------
        mpm::MpmGridState<D> grid_state = with_context("solid", [&] {
            auto gs = mpm::p2g<D>(state_.mpm, centers_, threads_);
            apply_shrinking(dt);
            mpm::grid_forces<D>(state_.mpm, material_, gravity_, gs, threads_);
            mpm::grid_update(gs, dt);
            mpm::g2p(gs, std::span<MpmParticle<D>>(state_.mpm), dt, threads_);
            for (auto& p : state_.mpm) mpm::update_constitutive_model(p);
            return gs;
        });

        std::vector<Vec<D>> positions(state_.mpm.size());
        for (std::size_t i = 0; i < state_.mpm.size(); ++i) positions[i] = state_.mpm[i].x;
        std::vector<int> combustible;
        for (std::size_t i = 0; i < state_.mpm.size(); ++i)
            if (state_.mpm[i].state != BurnState::D) combustible.push_back(static_cast<int>(i));

        grid::SparseField<double, D> level_set(centers_, 2.0 * cfg_.dx);
        std::vector<int> boundary;
        with_context("surface", [&] {
            level_set = mpm::build_particle_level_set<D>(positions, combustible, centers_);
            const auto hash = grid::hash_build<D>(std::span<const Vec<D>>(positions),
                                                  combustible, cfg_.dx, centers_.origin);
            boundary = mpm::find_boundary_particles<D>(positions, combustible, hash);
            if (cfg_.smoke.emit_count > 0 && !boundary.empty()) {
                const auto boundary_hash = grid::hash_build<D>(
                    std::span<const Vec<D>>(positions), boundary, cfg_.dx, centers_.origin);
                mpm::SmokeSamplingParams sp{cfg_.smoke.emit_count, cfg_.smoke.mass,
                                            cfg_.ignition.params.T_ignition,
                                            cfg_.ignition.params.F0};
                auto emitted = mpm::sample_smoke<D>(state_.mpm, boundary_hash, positions,
                                                    cfg_.dx, sp, cfg_.seed, state_.step_index,
                                                    t_end);
                stats.smoke_emitted = static_cast<int>(emitted.size());
                state_.smoke.insert(state_.smoke.end(), emitted.begin(), emitted.end());
            }
            return 0;
        });

        // -- incompressible update -------------------------------------------
        fluid::FluidState<D> fs(centers_.origin, cfg_.dx, centers_.dims, cfg_.fluid.rho_fluid);
        with_context("fluid", [&] {
            fluid::default_domain_bcs(fs);
            fluid::mark_solid_cells(grid_state, fs);
            fs.u = state_.u;
            grid::SparseField<Vec<D>, D> u_flip;
            grid::SparseField<double, D> flip_mass;
            fluid::flip_p2g<D>(state_.smoke, corners_, u_flip, flip_mass, threads_);
            fs.u = fluid::advect_velocity(fs, u_flip, flip_mass, dt, threads_);
            // the particle update measures its velocity delta against the
            // advected grid, so it picks up body forces and the projection
            // but not its own transfer
            const interp::FlatVector<D> u_ref = interp::FlatVector<D>::from(fs.u);
            if (cfg_.fluid.alpha_buoyancy != 0.0) {
                const interp::FlatScalar<D> T_flat = interp::FlatScalar<D>::from(state_.T_fluid);
                fluid::apply_buoyancy<D>(fs.u, T_flat.view(), cfg_.fluid.alpha_buoyancy,
                                         cfg_.thermal.T_bar, dt);
            }
            const auto proj = fluid::pressure_solve(fs, dt, cfg_.solver.cg_tol_pressure,
                                                    cfg_.solver.max_iterations, threads_,
                                                    &state_.p_cache);
            stats.pressure_iterations = proj.cg_iterations;
            stats.fluid_cells = proj.fluid_cells;
            state_.p_cache = fs.pressure;
            const interp::FlatVector<D> u_new = interp::FlatVector<D>::from(fs.u);
            fluid::advect_smoke_particles<D>(state_.smoke, u_ref, u_new, cfg_.fluid.alpha_flip,
                                             dt, centers_.domain_min(), centers_.domain_max(),
                                             cfg_.fluid.blended_position_update,
                                             cfg_.smoke.max_age, t_end, threads_);
            state_.u = fs.u;
            return 0;
        });

        // -- temperature update ----------------------------------------------
        with_context("thermal", [&] {
            grid::SparseField<double, D> T_part, mass_T;
            thermal::temperature_p2g<D>(state_.mpm, state_.smoke, centers_, T_part, mass_T,
                                        threads_);
            grid::SparseField<std::uint8_t, D> solid_mask(centers_, 0);
            grid_state.mass.for_each_sorted([&](const VecI<D>& i, const double& m) {
                if (m > 0.0) solid_mask.set(i, 1);
            });
            const interp::FlatVector<D> u_now = interp::FlatVector<D>::from(state_.u);
            auto T_grid = thermal::advect_temperature<D>(state_.T_fluid, u_now, dt, T_part,
                                                         mass_T, cfg_.thermal.T_bar, threads_);
            thermal::merge_temperatures<D>(T_grid, T_part, solid_mask);
            grid::SparseField<double, D> K_field, rho_cp;
            thermal::heaviside_coefficients<D>(level_set, cfg_.thermal, K_field, rho_cp);
            const auto diff = thermal::diffusion_solve<D>(
                T_grid, K_field, rho_cp, cfg_.dx, dt, cfg_.solver.cg_tol_diffusion,
                cfg_.solver.max_iterations, cfg_.thermal.floor_fixed_temperature, threads_);
            stats.diffusion_iterations = diff.cg_iterations;
            thermal::temperature_g2p<D>(T_grid, std::span<MpmParticle<D>>(state_.mpm),
                                        std::span<SmokeParticle<D>>(state_.smoke), threads_);
            thermal::extrapolate_fluid_temperature<D>(T_grid, solid_mask);
            state_.T_fluid = std::move(T_grid);
            return 0;
        });

        // -- ignition update -------------------------------------------------
        with_context("ignition", [&] {
            for (auto& p : state_.mpm) ignition::update_fuel<D>(p, t_end, cfg_.ignition.params);
            for (auto& s : state_.smoke) ignition::update_fuel<D>(s, t_end, cfg_.ignition.params);
            for (auto& p : state_.mpm)
                ignition::update_burn_temperature<D>(p, dt, cfg_.ignition.params);
            for (auto& s : state_.smoke)
                ignition::update_burn_temperature<D>(s, dt, cfg_.ignition.params);

            bool any_burning = false;
            for (const auto& p : state_.mpm)
                if (p.state == BurnState::B) any_burning = true;
            if (any_burning && !boundary.empty()) {
                for (std::size_t i = 0; i < state_.mpm.size(); ++i)
                    positions[i] = state_.mpm[i].x;
                std::vector<int> original;
                for (std::size_t i = 0; i < state_.mpm.size(); ++i)
                    if (state_.mpm[i].state == BurnState::O)
                        original.push_back(static_cast<int>(i));
                if (!original.empty()) {
                    const auto hash_o = grid::hash_build<D>(std::span<const Vec<D>>(positions),
                                                            original, cfg_.dx, centers_.origin);
                    const auto surface =
                        ignition::compute_surface_set<D>(positions, boundary, hash_o);
                    if (!surface.empty()) {
                        const auto hash_s = grid::hash_build<D>(
                            std::span<const Vec<D>>(positions), surface, cfg_.dx,
                            centers_.origin);
                        ignition::ignite_neighbors<D>(std::span<MpmParticle<D>>(state_.mpm),
                                                      hash_s, positions, t_end,
                                                      cfg_.ignition.params);
                    }
                }
            }
            ignition::advance_states<D>(std::span<MpmParticle<D>>(state_.mpm), t_end);
            // object-wide temperature ceiling; the affine transfer can
            // overshoot T_max near a sharp front on particles the burning
            // cap never touches
            for (auto& p : state_.mpm) p.T = std::min(p.T, cfg_.ignition.params.T_max);
            return 0;
        });

        state_.time = t_end;
        ++state_.step_index;
        return stats;
    }

    RunSummary run(const RunOptions& opts) {
        namespace fs = std::filesystem;
        if (opts.resume_path) load_checkpoint(*opts.resume_path);
        fs::create_directories(opts.out_dir);
        const int frame_count = opts.frame_count.value_or(cfg_.output.frame_count);
        RunSummary summary;

        if (state_.next_frame == 0) {
            write_frame_file(opts, 0);
            state_.next_frame = 1;
        }
        for (int frame = static_cast<int>(state_.next_frame); frame <= frame_count; ++frame) {
            const auto wall_start = std::chrono::steady_clock::now();
            FrameStats fstats;
            fstats.frame = frame;
            const double frame_end = frame * cfg_.output.frame_dt;
            while (state_.time < frame_end) {
                const double remaining = frame_end - state_.time;
                const double dt = compute_dt(remaining);
                const bool last = dt >= remaining;
                const StepStats s = step(dt);
                if (last) state_.time = frame_end; // land exactly on the boundary
                ++fstats.steps;
                fstats.pressure_iterations += s.pressure_iterations;
                fstats.diffusion_iterations += s.diffusion_iterations;
            }
            write_frame_file(opts, frame);
            state_.next_frame = static_cast<std::uint32_t>(frame) + 1;
            if (opts.checkpoint_path) save_checkpoint(*opts.checkpoint_path);
            fstats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                           wall_start)
                                 .count();
            fstats.mpm_count = state_.mpm.size();
            fstats.smoke_count = state_.smoke.size();
            summary.frames.push_back(fstats);
            summary.total_steps += fstats.steps;
            summary.total_seconds += fstats.seconds;
            log::info("frame %d: %d steps, %.3fs, %zu mpm, %zu smoke", frame, fstats.steps,
                      fstats.seconds, fstats.mpm_count, fstats.smoke_count);
        }
        summary.frames_written = frame_count + 1;
        summary.mean_seconds_per_frame =
            summary.frames.empty() ? 0.0
                                   : summary.total_seconds /
                                         static_cast<double>(summary.frames.size());
        write_summary(opts, summary);
        return summary;
    }

    io::FrameRecord make_frame() const {
        io::FrameRecord frame;
        frame.d = D;
        const std::size_t n = state_.mpm.size();
        frame.mpm_x.reserve(n * D);
        frame.mpm_v.reserve(n * D);
        for (const auto& p : state_.mpm) {
            for (int a = 0; a < D; ++a) frame.mpm_x.push_back(static_cast<float>(p.x[a]));
            for (int a = 0; a < D; ++a) frame.mpm_v.push_back(static_cast<float>(p.v[a]));
            frame.mpm_T.push_back(static_cast<float>(p.T));
            frame.mpm_fuel.push_back(static_cast<float>(p.fuel));
            frame.mpm_state.push_back(static_cast<std::uint8_t>(p.state));
            frame.mpm_J.push_back(static_cast<float>(p.J()));
        }
        for (const auto& s : state_.smoke) {
            for (int a = 0; a < D; ++a) frame.smoke_x.push_back(static_cast<float>(s.x[a]));
            for (int a = 0; a < D; ++a) frame.smoke_v.push_back(static_cast<float>(s.v[a]));
            frame.smoke_T.push_back(static_cast<float>(s.T));
        }
        if (cfg_.output.grid_temperature) {
            frame.flags |= io::kFlagGridTemperature;
            frame.grid_T = make_grid_block(false);
            const interp::FlatScalar<D> flat = interp::FlatScalar<D>::from(state_.T_fluid);
            frame.grid_T->values.assign(flat.data.begin(), flat.data.end());
        }
        if (cfg_.output.grid_velocity) {
            frame.flags |= io::kFlagGridVelocity;
            frame.grid_u = make_grid_block(false);
            const interp::FlatVector<D> flat = interp::FlatVector<D>::from(state_.u);
            const std::size_t nodes = flat.comp[0].size();
            frame.grid_u->values.resize(nodes * D);
            for (std::size_t i = 0; i < nodes; ++i)
                for (int a = 0; a < D; ++a)
                    frame.grid_u->values[i * D + static_cast<std::size_t>(a)] =
                        static_cast<float>(flat.comp[static_cast<std::size_t>(a)][i]);
        }
        if (cfg_.output.grid_labels) {
            frame.flags |= io::kFlagGridLabels;
            frame.grid_labels = make_grid_block(true);
        }
        return frame;
    }

    // ---------------------------------------------------------------------
    // Checkpointing: a bit-exact dump of the persistent state.
    // ---------------------------------------------------------------------

    void save_checkpoint(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
        out.write(kCheckpointMagic, 4);
        io::detail::write_pod(out, kCheckpointVersion);
        io::detail::write_pod(out, static_cast<std::uint32_t>(D));
        io::detail::write_pod(out, state_.time);
        io::detail::write_pod(out, state_.step_index);
        io::detail::write_pod(out, state_.next_frame);
        io::detail::write_pod(out, static_cast<std::uint64_t>(state_.mpm.size()));
        for (const auto& p : state_.mpm) {
            write_vec(out, p.x);
            write_vec(out, p.v);
            io::detail::write_pod(out, p.m);
            io::detail::write_pod(out, p.V0);
            write_mat(out, p.F);
            write_mat(out, p.C);
            io::detail::write_pod(out, p.T);
            write_vec(out, p.gradT);
            io::detail::write_pod(out, static_cast<std::uint8_t>(p.state));
            io::detail::write_pod(out, p.fuel);
            io::detail::write_pod(out, p.fuel0);
            io::detail::write_pod(out, p.burn_start_time);
            io::detail::write_pod(out, p.time_to_burn);
            io::detail::write_pod(out, static_cast<std::uint8_t>(p.model));
        }
        io::detail::write_pod(out, static_cast<std::uint64_t>(state_.smoke.size()));
        for (const auto& s : state_.smoke) {
            write_vec(out, s.x);
            write_vec(out, s.v);
            io::detail::write_pod(out, s.m);
            io::detail::write_pod(out, s.T);
            write_vec(out, s.gradT);
            io::detail::write_pod(out, s.fuel);
            io::detail::write_pod(out, s.fuel0);
            io::detail::write_pod(out, s.emit_time);
        }
        write_vector_field(out, state_.u);
        write_scalar_field(out, state_.T_fluid);
        write_scalar_field(out, state_.p_cache);
        if (!out) throw IoError("checkpoint: I/O failure writing '" + path + "'");
    }

    void load_checkpoint(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
        char magic[4];
        if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
            throw IoError("checkpoint: bad magic in '" + path + "'");
        if (io::detail::read_pod<std::uint32_t>(in, "version") != kCheckpointVersion)
            throw IoError("checkpoint: unsupported version");
        if (io::detail::read_pod<std::uint32_t>(in, "dimension") != D)
            throw IoError("checkpoint: dimension mismatch");
        state_.time = io::detail::read_pod<double>(in, "time");
        state_.step_index = io::detail::read_pod<std::uint64_t>(in, "step index");
        state_.next_frame = io::detail::read_pod<std::uint32_t>(in, "next frame");
        const auto mpm_count = io::detail::read_pod<std::uint64_t>(in, "mpm count");
        state_.mpm.assign(mpm_count, MpmParticle<D>{});
        for (auto& p : state_.mpm) {
            read_vec(in, p.x);
            read_vec(in, p.v);
            p.m = io::detail::read_pod<double>(in, "m");
            p.V0 = io::detail::read_pod<double>(in, "V0");
            read_mat(in, p.F);
            read_mat(in, p.C);
            p.T = io::detail::read_pod<double>(in, "T");
            read_vec(in, p.gradT);
            p.state = static_cast<BurnState>(io::detail::read_pod<std::uint8_t>(in, "state"));
            p.fuel = io::detail::read_pod<double>(in, "fuel");
            p.fuel0 = io::detail::read_pod<double>(in, "fuel0");
            p.burn_start_time = io::detail::read_pod<double>(in, "burn start");
            p.time_to_burn = io::detail::read_pod<double>(in, "time to burn");
            p.model =
                static_cast<ConstitutiveModel>(io::detail::read_pod<std::uint8_t>(in, "model"));
        }
        const auto smoke_count = io::detail::read_pod<std::uint64_t>(in, "smoke count");
        state_.smoke.assign(smoke_count, SmokeParticle<D>{});
        for (auto& s : state_.smoke) {
            read_vec(in, s.x);
            read_vec(in, s.v);
            s.m = io::detail::read_pod<double>(in, "m");
            s.T = io::detail::read_pod<double>(in, "T");
            read_vec(in, s.gradT);
            s.fuel = io::detail::read_pod<double>(in, "fuel");
            s.fuel0 = io::detail::read_pod<double>(in, "fuel0");
            s.emit_time = io::detail::read_pod<double>(in, "emit time");
        }
        read_vector_field(in, state_.u, corners_, Vec<D>::Zero());
        read_scalar_field(in, state_.T_fluid, centers_);
        read_scalar_field(in, state_.p_cache, centers_);
    }

private:
    template <class F>
    auto with_context(const char* phase, F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (SolverError& e) {
            throw SolverError("step " + std::to_string(state_.step_index) + " (" + phase +
                                  "): " + e.what(),
                              e.residual, e.iterations);
        }
    }

    void apply_shrinking(double dt) {
        if (shrink_.mode == mpm::ShrinkConfig::Mode::none) return;
        parallel_for(state_.mpm.size(), threads_, [&](std::size_t begin, std::size_t end, int) {
            for (std::size_t i = begin; i < end; ++i) {
                if (shrink_.mode == mpm::ShrinkConfig::Mode::isotropic) {
                    mpm::apply_isotropic_shrinking(state_.mpm[i], dt, shrink_);
                } else if constexpr (D == 3) {
                    mpm::apply_anisotropic_shrinking(state_.mpm[i], dt, shrink_, cfg_.dx);
                }
            }
        });
    }

    typename io::FrameRecord::GridBlock make_grid_block(bool labels) const {
        typename io::FrameRecord::GridBlock b;
        for (int a = 0; a < D; ++a) {
            b.origin.push_back(static_cast<float>(centers_.origin[a]));
            b.dims.push_back(static_cast<std::uint32_t>(centers_.dims[a]));
        }
        b.dx = static_cast<float>(cfg_.dx);
        if (labels) {
            // rebuilt on demand from the current solid occupancy
            fluid::FluidState<D> fs(centers_.origin, cfg_.dx, centers_.dims,
                                    cfg_.fluid.rho_fluid);
            fluid::default_domain_bcs(fs);
            const auto gs = mpm::p2g<D>(state_.mpm, centers_, threads_);
            fluid::mark_solid_cells(gs, fs);
            const std::size_t total = static_cast<std::size_t>(centers_.total_nodes());
            b.labels.assign(total, 0);
            const interp::FlatScalar<D> probe = interp::FlatScalar<D>::from(state_.T_fluid);
            fs.labels.for_each([&](const VecI<D>& i, const std::uint8_t& v) {
                b.labels[static_cast<std::size_t>(probe.view().flat(i))] = v;
            });
        }
        return b;
    }

    void write_frame_file(const RunOptions& opts, int frame) const {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%06d.bin", frame);
        const std::string path = opts.out_dir + "/" + name;
        const io::FrameRecord record = make_frame();
        io::write_frame(record, path);
        if (opts.write_csv) {
            std::snprintf(name, sizeof(name), "frame_%06d.csv", frame);
            io::write_frame_csv(record, opts.out_dir + "/" + name);
        }
    }

    void write_summary(const RunOptions& opts, const RunSummary& summary) const {
        nlohmann::json j;
        j["frames_written"] = summary.frames_written;
        j["total_steps"] = summary.total_steps;
        j["total_seconds"] = summary.total_seconds;
        j["mean_seconds_per_frame"] = summary.mean_seconds_per_frame;
        j["frames"] = nlohmann::json::array();
        for (const FrameStats& f : summary.frames) {
            j["frames"].push_back({{"frame", f.frame},
                                   {"seconds", f.seconds},
                                   {"steps", f.steps},
                                   {"pressure_iterations", f.pressure_iterations},
                                   {"diffusion_iterations", f.diffusion_iterations},
                                   {"mpm_count", f.mpm_count},
                                   {"smoke_count", f.smoke_count}});
        }
        std::ofstream out(opts.out_dir + "/summary.json");
        out << j.dump(2) << "\n";
    }

    void write_vec(std::ostream& out, const Vec<D>& v) const {
        for (int a = 0; a < D; ++a) io::detail::write_pod(out, v[a]);
    }
    void write_mat(std::ostream& out, const Mat<D>& m) const {
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c) io::detail::write_pod(out, m(r, c));
    }
    void read_vec(std::istream& in, Vec<D>& v) const {
        for (int a = 0; a < D; ++a) v[a] = io::detail::read_pod<double>(in, "vec");
    }
    void read_mat(std::istream& in, Mat<D>& m) const {
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c) m(r, c) = io::detail::read_pod<double>(in, "mat");
    }

    void write_vector_field(std::ostream& out, const grid::SparseField<Vec<D>, D>& f) const {
        write_vec(out, f.background());
        io::detail::write_pod(out, static_cast<std::uint64_t>(f.active_count()));
        f.for_each_sorted([&](const VecI<D>& i, const Vec<D>& v) {
            io::detail::write_pod(out, grid::pack_index<D>(i));
            write_vec(out, v);
        });
    }
    void write_scalar_field(std::ostream& out, const grid::SparseField<double, D>& f) const {
        io::detail::write_pod(out, f.background());
        io::detail::write_pod(out, static_cast<std::uint64_t>(f.active_count()));
        f.for_each_sorted([&](const VecI<D>& i, const double& v) {
            io::detail::write_pod(out, grid::pack_index<D>(i));
            io::detail::write_pod(out, v);
        });
    }
    void read_vector_field(std::istream& in, grid::SparseField<Vec<D>, D>& f,
                           const grid::GridDescriptor<D>& g, const Vec<D>&) const {
        Vec<D> background;
        read_vec(in, background);
        f = grid::SparseField<Vec<D>, D>(g, background);
        const auto count = io::detail::read_pod<std::uint64_t>(in, "field count");
        for (std::uint64_t k = 0; k < count; ++k) {
            const auto key = io::detail::read_pod<std::int64_t>(in, "field key");
            Vec<D> v;
            read_vec(in, v);
            f.set(grid::unpack_index<D>(key), v);
        }
    }
    void read_scalar_field(std::istream& in, grid::SparseField<double, D>& f,
                           const grid::GridDescriptor<D>& g) const {
        const double background = io::detail::read_pod<double>(in, "field background");
        f = grid::SparseField<double, D>(g, background);
        const auto count = io::detail::read_pod<std::uint64_t>(in, "field count");
        for (std::uint64_t k = 0; k < count; ++k) {
            const auto key = io::detail::read_pod<std::int64_t>(in, "field key");
            f.set(grid::unpack_index<D>(key), io::detail::read_pod<double>(in, "field value"));
        }
    }

    scene::SceneConfig cfg_;
    int threads_ = 1;
    grid::GridDescriptor<D> centers_;
    grid::GridDescriptor<D> corners_;
    Vec<D> gravity_ = Vec<D>::Zero();
    mpm::MaterialParams material_;
    mpm::ShrinkConfig shrink_;
    SimState<D> state_;
};

/// Loads a scene and runs it at the dimension named in the config.
inline RunSummary run_scene(const scene::SceneConfig& cfg, const RunOptions& opts,
                            int threads = 1) {
    if (cfg.dimension == 2) return Simulation<2>(cfg, threads).run(opts);
    return Simulation<3>(cfg, threads).run(opts);
}

} // namespace ember::sim
