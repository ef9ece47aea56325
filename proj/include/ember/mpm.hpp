#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ember/constitutive.hpp"
#include "ember/errors.hpp"
#include "ember/grid.hpp"
#include "ember/log.hpp"
#include "ember/parallel.hpp"
#include "ember/particles.hpp"
#include "ember/rng.hpp"
#include "ember/spatial_hash.hpp"

namespace ember::mpm {

using grid::GridDescriptor;
using grid::SparseField;
using grid::SpatialHash;

template <int D>
struct MpmGridState {
    GridDescriptor<D> grid;
    SparseField<double, D> mass;
    SparseField<Vec<D>, D> momentum;
    SparseField<Vec<D>, D> velocity;
    SparseField<Vec<D>, D> force;

    explicit MpmGridState(const GridDescriptor<D>& g)
        : grid(g), mass(g), momentum(g), velocity(g), force(g) {}
};

template <int D>
Vec<D> clamped_particle_position(const Vec<D>& x, const GridDescriptor<D>& g) {
    bool clamped = false;
    Vec<D> out = grid::clamp_to_kernel_domain(x, g, 3, &clamped);
    if (clamped)
        log::warn_once("mpm_clamp", "particle clamped to the valid stencil region");
    return out;
}

/// Particle-to-grid transfer with quadratic affine (APIC) kernels:
/// mass_i = sum_p w_ip m_p, momentum_i = sum_p w_ip m_p (v_p + C_p (x_i - x_p)).
template <int D>
MpmGridState<D> p2g(std::span<const MpmParticle<D>> particles, const GridDescriptor<D>& g,
                    int threads = 1) {
    MpmGridState<D> state(g);
    struct Partial {
        std::optional<MpmGridState<D>> s;
    };
    std::vector<Partial> partials;
    parallel_scatter(
        particles.size(), threads, partials,
        [&](Partial& acc, std::size_t i) {
            if (!acc.s) acc.s.emplace(g);
            const MpmParticle<D>& p = particles[i];
            const Vec<D> xp = clamped_particle_position(p.x, g);
            const auto stencil = grid::quadratic_weights(xp, g);
            stencil.for_each_node([&](const VecI<D>& node, double w, const Vec<D>&) {
                const Vec<D> xi = g.node_position(node);
                acc.s->mass.ref(node) += w * p.m;
                acc.s->momentum.ref(node) += w * p.m * (p.v + p.C * (xi - p.x));
            });
        },
        [&](Partial& acc) {
            if (!acc.s) return;
            state.mass.merge_add(acc.s->mass);
            state.momentum.merge_add(acc.s->momentum);
        });
    state.mass.for_each_sorted([&](const VecI<D>& i, const double& m) {
        if (m > 0.0) state.velocity.set(i, Vec<D>(state.momentum.at(i) / m));
    });
    return state;
}

struct MaterialParams {
    constitutive::ElasticParams fixed_corotated;
    constitutive::ElasticParams stvk_hencky;
    constitutive::PlasticParams drucker_prager;
};

/// First Piola-Kirchhoff stress for a particle under its current model.
/// Burnt material is projected onto the friction cone before evaluation.
template <int D>
Mat<D> particle_stress(const MpmParticle<D>& p, const MaterialParams& mat) {
    if (p.model == ConstitutiveModel::fixed_corotated)
        return constitutive::fixed_corotated_stress(p.F, mat.fixed_corotated);
    const Mat<D> F_proj =
        constitutive::drucker_prager_project(p.F, mat.stvk_hencky, mat.drucker_prager);
    return constitutive::stvk_hencky_stress(F_proj, mat.stvk_hencky);
}

/// Weak-form internal force plus gravity:
/// f_i = -sum_p V0_p P(F_p) F_p^T grad(w_ip) + mass_i g.
template <int D>
void grid_forces(std::span<const MpmParticle<D>> particles, const MaterialParams& mat,
                 const Vec<D>& gravity, MpmGridState<D>& state, int threads = 1) {
    const GridDescriptor<D>& g = state.grid;
    struct Partial {
        std::optional<SparseField<Vec<D>, D>> f;
    };
    std::vector<Partial> partials;
    parallel_scatter(
        particles.size(), threads, partials,
        [&](Partial& acc, std::size_t i) {
            if (!acc.f) acc.f.emplace(g);
            const MpmParticle<D>& p = particles[i];
            Mat<D> PFt;
            try {
                Mat<D> F = p.F;
                if (p.model == ConstitutiveModel::stvk_hencky_dp)
                    F = constitutive::drucker_prager_project(p.F, mat.stvk_hencky,
                                                             mat.drucker_prager);
                const Mat<D> P = p.model == ConstitutiveModel::fixed_corotated
                                     ? constitutive::fixed_corotated_stress(F, mat.fixed_corotated)
                                     : constitutive::stvk_hencky_stress(F, mat.stvk_hencky);
                PFt = P * F.transpose();
            } catch (DegenerateElement& e) {
                throw DegenerateElement(std::string(e.what()) + " (particle " +
                                            std::to_string(i) + ")",
                                        static_cast<long>(i));
            }
            const Vec<D> xp = clamped_particle_position(p.x, g);
            const auto stencil = grid::quadratic_weights(xp, g);
            stencil.for_each_node([&](const VecI<D>& node, double, const Vec<D>& grad) {
                acc.f->ref(node) -= p.V0 * (PFt * grad);
            });
        },
        [&](Partial& acc) {
            if (acc.f) state.force.merge_add(*acc.f);
        });
    state.mass.for_each_sorted([&](const VecI<D>& i, const double& m) {
        if (m > 0.0) state.force.ref(i) += m * gravity;
    });
}

/// Explicit symplectic grid update followed by domain-wall collisions:
/// nodes within bc_margin cells of a wall lose their outward normal velocity.
template <int D>
void grid_update(MpmGridState<D>& state, double dt, int bc_margin = 2) {
    const GridDescriptor<D>& g = state.grid;
    state.mass.for_each_sorted([&](const VecI<D>& i, const double& m) {
        if (m <= 0.0) return;
        Vec<D> v = state.momentum.at(i) / m + dt * state.force.at(i) / m;
        for (int a = 0; a < D; ++a) {
            if (i[a] < bc_margin && v[a] < 0.0) v[a] = 0.0;
            if (i[a] >= g.node_count(a) - bc_margin && v[a] > 0.0) v[a] = 0.0;
        }
        state.velocity.set(i, v);
    });
}

/// Grid-to-particle APIC gather; also advances F by the grid velocity
/// gradient and moves the particle.
template <int D>
void g2p(const MpmGridState<D>& state, std::span<MpmParticle<D>> particles, double dt,
         int threads = 1) {
    const GridDescriptor<D>& g = state.grid;
    const double c_scale = 4.0 / (g.dx * g.dx); // quadratic-kernel APIC inertia scaling
    parallel_for(particles.size(), threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            MpmParticle<D>& p = particles[i];
            const Vec<D> xp = clamped_particle_position(p.x, g);
            const auto stencil = grid::quadratic_weights(xp, g);
            Vec<D> v = Vec<D>::Zero();
            Mat<D> C = Mat<D>::Zero();
            Mat<D> grad_v = Mat<D>::Zero();
            stencil.for_each_node([&](const VecI<D>& node, double w, const Vec<D>& grad) {
                const Vec<D> vi = state.velocity.at(node);
                const Vec<D> xi = g.node_position(node);
                v += w * vi;
                C += w * vi * (xi - p.x).transpose();
                grad_v += vi * grad.transpose();
            });
            p.v = v;
            p.C = c_scale * C;
            p.F = (Mat<D>::Identity() + dt * grad_v) * p.F;
            p.x += dt * p.v;
            p.x = clamped_particle_position(p.x, g);
        }
    });
}

// ---------------------------------------------------------------------------
// Combustion-driven rest-state shrinking
// ---------------------------------------------------------------------------

struct ShrinkConfig {
    enum class Mode { none, isotropic, anisotropic_cylindrical };
    Mode mode = Mode::none;
    double c_shrink = 1.0;      // isotropic scale constant
    double c_radial = 1.0;      // cylindrical: hoop scale constant
    double c_longitudinal = 1.0;
    Vec3 axis_origin = Vec3::Zero();
    Vec3 axis_direction = Vec3::UnitX();
    double T_evap = 0.0; // evaporation temperature; shrinking applies above it
    double T_max = 1.0;

    void validate(int dim) const {
        if (mode == Mode::none) return;
        if (!(T_max > T_evap)) throw ConfigError("shrink: T_max must exceed T_evap");
        for (double c : {c_shrink, c_radial, c_longitudinal})
            if (c < 1.0 || c > 1.1)
                throw ConfigError("shrink: scale constants must lie in [1, 1.1]");
        if (mode == Mode::anisotropic_cylindrical) {
            if (dim != 3)
                throw ConfigError("shrink: anisotropic_cylindrical requires dimension 3");
            if (axis_direction.norm() == 0.0)
                throw ConfigError("shrink: axis_direction must be nonzero");
        }
    }
};

/// Temperature-dependent shrink rate:
/// c = (c_shrink - 1) / (T_max - T_evap) * (T - T_evap) + 1.
inline double shrink_rate(double T, double c_shrink, double T_evap, double T_max) {
    return (c_shrink - 1.0) / (T_max - T_evap) * (T - T_evap) + 1.0;
}

/// F <- (1 + c dt) F for particles hotter than T_evap.
template <int D>
void apply_isotropic_shrinking(MpmParticle<D>& p, double dt, const ShrinkConfig& cfg) {
    if (cfg.mode != ShrinkConfig::Mode::isotropic) return;
    if (!(p.T > cfg.T_evap)) return;
    const double c = shrink_rate(p.T, cfg.c_shrink, cfg.T_evap, cfg.T_max);
    p.F *= 1.0 + c * dt;
}

/// Rows of F expressed in the cylindrical frame (axis, hoop, radial).
struct CylinderRows {
    Vec3 u1, u2, u3;
};

inline constexpr double kAxisGuardScale = 1e-6; // times dx

/// Splits F into cylindrical-frame rows at local coordinates (y, z),
/// r = sqrt(y^2 + z^2):
///   u1_j = F_1j, u2_j = (F_2j z - F_3j y)/r, u3_j = (F_2j y + F_3j z)/r.
inline CylinderRows cylindrical_decompose(const Mat3& F, double y, double z, double r) {
    CylinderRows rows;
    for (int j = 0; j < 3; ++j) {
        rows.u1[j] = F(0, j);
        rows.u2[j] = (F(1, j) * z - F(2, j) * y) / r;
        rows.u3[j] = (F(1, j) * y + F(2, j) * z) / r;
    }
    return rows;
}

/// Inverse of cylindrical_decompose:
/// F = e_x (x) u1 + e_theta (x) u2 + e_r (x) u3 with
/// e_x = (1,0,0), e_theta = (0, z/r, -y/r), e_r = (0, y/r, z/r).
inline Mat3 cylindrical_recompose(const CylinderRows& rows, double y, double z, double r) {
    const Vec3 e_x(1.0, 0.0, 0.0);
    const Vec3 e_theta(0.0, z / r, -y / r);
    const Vec3 e_r(0.0, y / r, z / r);
    return e_x * rows.u1.transpose() + e_theta * rows.u2.transpose() +
           e_r * rows.u3.transpose();
}

/// Shrinks about the configured cylinder axis: the axial row component u11
/// scales with the longitudinal constant and the hoop component u22 with the
/// radial constant. On-axis particles are skipped.
inline void apply_anisotropic_shrinking(MpmParticle<3>& p, double dt, const ShrinkConfig& cfg,
                                        double dx) {
    if (cfg.mode != ShrinkConfig::Mode::anisotropic_cylindrical) return;
    if (!(p.T > cfg.T_evap)) return;
    const Vec3 axis = cfg.axis_direction.normalized();
    // deterministic frame: pair the axis with the world axis it is least
    // aligned with
    int pick = 0;
    for (int a = 1; a < 3; ++a)
        if (std::abs(axis[a]) < std::abs(axis[pick])) pick = a;
    const Vec3 b1 = axis.cross(Vec3::Unit(pick)).normalized();
    const Vec3 b2 = axis.cross(b1);
    Mat3 Q;
    Q.col(0) = axis;
    Q.col(1) = b1;
    Q.col(2) = b2;

    const Vec3 rel = Q.transpose() * (p.x - cfg.axis_origin);
    const double y = rel[1], z = rel[2];
    const double r = std::hypot(y, z);
    if (r <= kAxisGuardScale * dx) return;

    const Mat3 F_local = Q.transpose() * p.F * Q;
    CylinderRows rows = cylindrical_decompose(F_local, y, z, r);
    rows.u1[0] *= 1.0 + shrink_rate(p.T, cfg.c_longitudinal, cfg.T_evap, cfg.T_max) * dt;
    rows.u2[1] *= 1.0 + shrink_rate(p.T, cfg.c_radial, cfg.T_evap, cfg.T_max) * dt;
    p.F = Q * cylindrical_recompose(rows, y, z, r) * Q.transpose();
}

/// Burnt particles switch from the elastic model to Hencky elastoplasticity,
/// keeping F across the switch. Idempotent.
template <int D>
void update_constitutive_model(MpmParticle<D>& p) {
    if (p.state == BurnState::D && p.model == ConstitutiveModel::fixed_corotated)
        p.model = ConstitutiveModel::stvk_hencky_dp;
}

// ---------------------------------------------------------------------------
// Surface extraction and smoke sampling
// ---------------------------------------------------------------------------

/// Union-of-spheres level set sampled in a +-2-cell band around the given
/// particles, with sphere radius (sqrt(D)/2) dx. Nodes outside the band keep
/// the background value +2 dx.
template <int D>
SparseField<double, D> build_particle_level_set(std::span<const Vec<D>> positions,
                                                std::span<const int> ids,
                                                const GridDescriptor<D>& g) {
    const double radius = 0.5 * std::sqrt(static_cast<double>(D)) * g.dx;
    const double background = 2.0 * g.dx;
    SparseField<double, D> phi(g, background);
    // band membership first, then an exact min over a stamp wide enough to
    // cover the farthest possible nearest particle of any band node; dense
    // scratch arrays keep the stamping off the hash map
    const int band = 2;
    const int stamp = D == 3 ? 4 : 3;
    std::int64_t total = 1;
    VecI<D> counts;
    for (int a = 0; a < D; ++a) {
        counts[a] = g.node_count(a);
        total *= counts[a];
    }
    auto flat = [&](const VecI<D>& i) {
        std::int64_t idx = 0;
        for (int a = D - 1; a >= 0; --a) idx = idx * counts[a] + i[a];
        return idx;
    };
    std::vector<char> in_band(static_cast<std::size_t>(total), 0);
    std::vector<double> value(static_cast<std::size_t>(total),
                              std::numeric_limits<double>::infinity());

    auto cell_of = [&](const Vec<D>& x) {
        VecI<D> cell;
        for (int a = 0; a < D; ++a)
            cell[a] = static_cast<int>(std::floor(g.node_coord(x[a], a) + 0.5));
        return cell;
    };
    auto for_box = [&](const VecI<D>& center, int r, auto&& f) {
        VecI<D> off = VecI<D>::Constant(-r);
        while (true) {
            const VecI<D> node = center + off;
            if (g.node_in_range(node)) f(node);
            int a = 0;
            for (; a < D; ++a) {
                if (++off[a] <= r) break;
                off[a] = -r;
            }
            if (a == D) break;
        }
    };
    for (int id : ids)
        for_box(cell_of(positions[static_cast<std::size_t>(id)]), band,
                [&](const VecI<D>& node) { in_band[static_cast<std::size_t>(flat(node))] = 1; });
    for (int id : ids) {
        const Vec<D>& x = positions[static_cast<std::size_t>(id)];
        for_box(cell_of(x), stamp, [&](const VecI<D>& node) {
            const std::size_t idx = static_cast<std::size_t>(flat(node));
            if (!in_band[idx]) return;
            const double d = (g.node_position(node) - x).norm() - radius;
            if (d < value[idx]) value[idx] = d;
        });
    }
    VecI<D> i = VecI<D>::Zero();
    std::int64_t idx = 0;
    while (true) {
        if (in_band[static_cast<std::size_t>(idx)])
            phi.set(i, value[static_cast<std::size_t>(idx)]);
        ++idx;
        int a = 0;
        for (; a < D; ++a) {
            if (++i[a] < counts[a]) break;
            i[a] = 0;
        }
        if (a == D) break;
    }
    return phi;
}

/// A particle is a boundary particle when at least one of its 3^D adjacent
/// hash bins (its own included) holds no particle.
template <int D>
std::vector<int> find_boundary_particles(std::span<const Vec<D>> positions,
                                         std::span<const int> ids, const SpatialHash<D>& hash) {
    std::vector<int> boundary;
    for (int id : ids) {
        bool open = false;
        hash.for_each_neighborhood_bin(positions[static_cast<std::size_t>(id)],
                                       [&](const VecI<D>& b) {
                                           const std::vector<int>* bin = hash.bin(b);
                                           if (!bin || bin->empty()) open = true;
                                       });
        if (open) boundary.push_back(id);
    }
    return boundary;
}

struct SmokeSamplingParams {
    int n_s = 0;           // particles emitted per burning particle per step
    double mass = 1.0;
    double T_ignition = 600.0;
    double fuel0 = 1.0;
};

/// Emits n_s smoke particles per burning particle at its closest boundary
/// anchor b, jittered per axis by uniform [-dx/2, dx/2). Draws are keyed on
/// (seed, step, particle, sample, axis) so emission is reproducible and
/// order-independent.
template <int D>
std::vector<SmokeParticle<D>> sample_smoke(std::span<const MpmParticle<D>> particles,
                                           const SpatialHash<D>& boundary_hash,
                                           std::span<const Vec<D>> positions, double dx,
                                           const SmokeSamplingParams& params,
                                           std::uint64_t seed, std::uint64_t step_index,
                                           double emit_time) {
    std::vector<SmokeParticle<D>> out;
    if (params.n_s <= 0) return out;
    for (std::size_t pid = 0; pid < particles.size(); ++pid) {
        if (particles[pid].state != BurnState::B) continue;
        const auto anchor = grid::closest_in_neighborhood(particles[pid].x, boundary_hash,
                                                          positions);
        if (!anchor) {
            log::warn_once("smoke_no_anchor",
                           "burning particle has no boundary anchor within one cell; "
                           "skipping smoke emission");
            continue;
        }
        const Vec<D> b = positions[static_cast<std::size_t>(*anchor)];
        for (int r = 0; r < params.n_s; ++r) {
            SmokeParticle<D> s;
            for (int a = 0; a < D; ++a) {
                const std::uint64_t k =
                    rng::key(seed, rng::kStreamSmoke, step_index, static_cast<std::uint64_t>(pid),
                             static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(a));
                s.x[a] = b[a] + rng::uniform(k, -0.5, 0.5) * dx;
            }
            s.v = Vec<D>::Zero();
            s.m = params.mass;
            s.T = params.T_ignition;
            s.fuel = s.fuel0 = params.fuel0;
            s.emit_time = emit_time;
            out.push_back(s);
        }
    }
    return out;
}

} // namespace ember::mpm
