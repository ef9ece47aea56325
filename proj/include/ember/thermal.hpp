#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "ember/cg.hpp"
#include "ember/errors.hpp"
#include "ember/fluid.hpp"
#include "ember/grid.hpp"
#include "ember/interp.hpp"
#include "ember/parallel.hpp"
#include "ember/particles.hpp"

namespace ember::thermal {

using grid::GridDescriptor;
using grid::SparseField;

struct ThermalParams {
    double K_air = 0.01;
    double K_solid = 0.1;
    double cp_air = 1.0;
    double cp_solid = 1.0;
    double rho_air = 1.0;
    double rho_solid = 1.0;
    double T_bar = 298.0; // ambient temperature
    std::optional<double> floor_fixed_temperature; // Dirichlet bottom cell layer

    void validate() const {
        for (double v : {K_air, K_solid, cp_air, cp_solid, rho_air, rho_solid})
            if (!(v > 0.0)) throw ConfigError("thermal: coefficients must be > 0");
        if (!(T_bar >= 0.0)) throw ConfigError("thermal: T_bar must be >= 0");
    }
};

/// Switches conductivity and volumetric heat capacity per cell on the sign
/// of the level set: phi < 0 takes the solid values, phi >= 0 the air values.
/// The air values are the field backgrounds, so only solid cells are stored.
template <int D>
void heaviside_coefficients(const SparseField<double, D>& level_set, const ThermalParams& tp,
                            SparseField<double, D>& K_field, SparseField<double, D>& rho_cp) {
    K_field = SparseField<double, D>(level_set.descriptor(), tp.K_air);
    rho_cp = SparseField<double, D>(level_set.descriptor(), tp.rho_air * tp.cp_air);
    level_set.for_each_sorted([&](const VecI<D>& i, const double& phi) {
        if (phi < 0.0) {
            K_field.set(i, tp.K_solid);
            rho_cp.set(i, tp.rho_solid * tp.cp_solid);
        }
    });
}

/// Linear affine particle-to-grid temperature transfer over material and
/// smoke particles:
///   (m T)_i = sum_p m_p N_i(x_p) (T_p + (x_i - x_p) . grad T_p).
template <int D>
void temperature_p2g(std::span<const MpmParticle<D>> particles,
                     std::span<const SmokeParticle<D>> smoke, const GridDescriptor<D>& centers,
                     SparseField<double, D>& T_part, SparseField<double, D>& mass_T,
                     int threads = 1) {
    T_part = SparseField<double, D>(centers, 0.0);
    mass_T = SparseField<double, D>(centers, 0.0);
    SparseField<double, D> mT(centers, 0.0);

    const std::size_t total = particles.size() + smoke.size();
    struct Partial {
        std::optional<SparseField<double, D>> m, mT;
    };
    auto accumulate = [&](Partial& acc, const Vec<D>& x, double m, double T,
                          const Vec<D>& gradT) {
        if (!acc.m) {
            acc.m.emplace(centers, 0.0);
            acc.mT.emplace(centers, 0.0);
        }
        bool clamped = false;
        const Vec<D> xp = grid::clamp_to_kernel_domain(x, centers, 2, &clamped);
        const auto stencil = grid::linear_weights(xp, centers);
        stencil.for_each_node([&](const VecI<D>& node, double w, const Vec<D>&) {
            const Vec<D> xi = centers.node_position(node);
            acc.m->ref(node) += w * m;
            acc.mT->ref(node) += w * m * (T + (xi - x).dot(gradT));
        });
    };
    std::vector<Partial> partials;
    parallel_scatter(
        total, threads, partials,
        [&](Partial& acc, std::size_t i) {
            if (i < particles.size()) {
                const auto& p = particles[i];
                accumulate(acc, p.x, p.m, p.T, p.gradT);
            } else {
                const auto& s = smoke[i - particles.size()];
                accumulate(acc, s.x, s.m, s.T, s.gradT);
            }
        },
        [&](Partial& acc) {
            if (!acc.m) return;
            mass_T.merge_add(*acc.m);
            mT.merge_add(*acc.mT);
        });
    mass_T.for_each_sorted([&](const VecI<D>& i, const double& m) {
        if (m > 0.0) T_part.set(i, mT.at(i) / m);
    });
}

/// Narrow-band temperature advection over the full cell lattice: cells that
/// received particle mass keep their transferred temperature, everything else
/// is advected semi-Lagrangian with the corner velocities interpolated to the
/// cell centers. Backtraces leaving the domain evaluate to the ambient T_bar.
template <int D>
SparseField<double, D> advect_temperature(const SparseField<double, D>& T_fluid,
                                          const interp::FlatVector<D>& u_corners, double dt,
                                          const SparseField<double, D>& T_part,
                                          const SparseField<double, D>& mass_T, double T_bar,
                                          int threads = 1) {
    const auto& g = T_fluid.descriptor();
    const interp::FlatScalar<D> T_old = interp::FlatScalar<D>::from(T_fluid);
    const interp::LatticeView<D> T_view = T_old.view();
    auto velocity = [&](const Vec<D>& x) { return u_corners.sample_linear(x); };
    const Vec<D> lo = g.domain_min();
    const Vec<D> hi = g.domain_max();

    const std::int64_t total = g.total_nodes();
    std::vector<double> out(static_cast<std::size_t>(total));
    parallel_for(static_cast<std::size_t>(total), threads,
                 [&](std::size_t begin, std::size_t end, int) {
                     for (std::size_t k = begin; k < end; ++k) {
                         VecI<D> node;
                         std::int64_t rem = static_cast<std::int64_t>(k);
                         for (int a = 0; a < D; ++a) {
                             node[a] = static_cast<int>(rem % T_view.counts[a]);
                             rem /= T_view.counts[a];
                         }
                         if (const double* m = mass_T.find(node); m && *m > 0.0) {
                             out[k] = T_part.at(node);
                             continue;
                         }
                         const Vec<D> xi = g.node_position(node);
                         const Vec<D> xup = interp::backtrace_rk3<D>(xi, velocity, dt);
                         bool outside = false;
                         for (int a = 0; a < D; ++a)
                             if (xup[a] < lo[a] || xup[a] > hi[a]) outside = true;
                         out[k] = outside ? T_bar : T_view.sample_monotonic_cubic(xup);
                     }
                 });
    SparseField<double, D> result(g, T_bar);
    for (std::int64_t k = 0; k < total; ++k) {
        VecI<D> node;
        std::int64_t rem = k;
        for (int a = 0; a < D; ++a) {
            node[a] = static_cast<int>(rem % T_view.counts[a]);
            rem /= T_view.counts[a];
        }
        result.set(node, out[static_cast<std::size_t>(k)]);
    }
    return result;
}

/// Overwrites masked cells with the particle-transferred temperature where
/// one exists; all other cells keep the advected value.
template <int D>
void merge_temperatures(SparseField<double, D>& T, const SparseField<double, D>& T_mpm,
                        const SparseField<std::uint8_t, D>& solid_mask) {
    solid_mask.for_each_sorted([&](const VecI<D>& i, const std::uint8_t& m) {
        if (m == 0) return;
        if (const double* v = T_mpm.find(i)) T.set(i, *v);
    });
}

template <int D>
struct DiffusionSystem {
    solver::SparseMatrix A;
    std::vector<double> b;
    std::vector<std::int64_t> cells;          // solved cells, sorted
    std::vector<std::pair<std::int64_t, double>> fixed; // Dirichlet cells
};

/// Backward-Euler heat equation with the 2D-point Laplacian; the conductivity
/// on a face is the harmonic mean of the two adjacent cells (consistent
/// across the air/solid jump). Lattice-boundary faces are insulated.
template <int D>
DiffusionSystem<D> build_diffusion_system(const SparseField<double, D>& T,
                                          const SparseField<double, D>& K_field,
                                          const SparseField<double, D>& rho_cp, double dx,
                                          double dt,
                                          const std::optional<double>& floor_fixed_temperature) {
    const auto& g = T.descriptor();
    DiffusionSystem<D> sys;
    std::unordered_map<std::int64_t, int> row;

    auto is_fixed = [&](const VecI<D>& c) {
        return floor_fixed_temperature && c[D - 1] == 0;
    };

    VecI<D> c = VecI<D>::Zero();
    while (true) {
        const std::int64_t key = grid::pack_index<D>(c);
        if (is_fixed(c))
            sys.fixed.emplace_back(key, *floor_fixed_temperature);
        else
            sys.cells.push_back(key);
        int a = 0;
        for (; a < D; ++a) {
            if (++c[a] < g.node_count(a)) break;
            c[a] = 0;
        }
        if (a == D) break;
    }
    std::sort(sys.cells.begin(), sys.cells.end());
    row.reserve(sys.cells.size());
    for (std::size_t r = 0; r < sys.cells.size(); ++r)
        row[sys.cells[r]] = static_cast<int>(r);

    const int n = static_cast<int>(sys.cells.size());
    sys.b.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    const double s = dt / (dx * dx);

    for (int r = 0; r < n; ++r) {
        const VecI<D> cell = grid::unpack_index<D>(sys.cells[static_cast<std::size_t>(r)]);
        const double vol_cp = rho_cp.at(cell);
        double diag = vol_cp;
        sys.b[static_cast<std::size_t>(r)] = vol_cp * T.at(cell);
        const double K_c = K_field.at(cell);
        for (int axis = 0; axis < D; ++axis) {
            for (int side = 0; side < 2; ++side) {
                VecI<D> nbr = cell;
                nbr[axis] += side == 1 ? 1 : -1;
                if (!g.node_in_range(nbr)) continue; // insulated
                const double K_n = K_field.at(nbr);
                const double K_face = 2.0 * K_c * K_n / (K_c + K_n);
                diag += s * K_face;
                if (is_fixed(nbr))
                    sys.b[static_cast<std::size_t>(r)] += s * K_face * *floor_fixed_temperature;
                else
                    rows[static_cast<std::size_t>(r)].emplace_back(
                        row.at(grid::pack_index<D>(nbr)), -s * K_face);
            }
        }
        rows[static_cast<std::size_t>(r)].emplace_back(r, diag);
    }
    sys.A = solver::SparseMatrix::from_triplets(n, rows);
    return sys;
}

template <int D>
struct DiffusionResult {
    int cg_iterations = 0;
    double rel_residual = 0.0;
};

/// Implicit diffusion step over the full lattice, solved by conjugate
/// gradient with the old temperature as the initial guess.
template <int D>
DiffusionResult<D> diffusion_solve(SparseField<double, D>& T,
                                   const SparseField<double, D>& K_field,
                                   const SparseField<double, D>& rho_cp, double dx, double dt,
                                   double tol, int max_iter,
                                   const std::optional<double>& floor_fixed_temperature,
                                   int threads = 1) {
    DiffusionSystem<D> sys =
        build_diffusion_system<D>(T, K_field, rho_cp, dx, dt, floor_fixed_temperature);
    std::vector<double> x(sys.cells.size());
    for (std::size_t r = 0; r < sys.cells.size(); ++r)
        x[r] = T.at(grid::unpack_index<D>(sys.cells[r]));
    const solver::CgResult cg =
        solver::conjugate_gradient(sys.A, sys.b, x, {tol, max_iter}, threads);
    for (std::size_t r = 0; r < sys.cells.size(); ++r)
        T.set(grid::unpack_index<D>(sys.cells[r]), x[r]);
    for (const auto& [key, value] : sys.fixed) T.set(grid::unpack_index<D>(key), value);
    return {cg.iterations, cg.rel_residual};
}

/// Fills masked (solid) cells from the surrounding known cells by
/// breadth-first layers; each layer takes the arithmetic mean of
/// face-adjacent cells from earlier layers, so the fill is independent of
/// traversal order within a layer. Known cells are never modified.
template <int D>
void extrapolate_fluid_temperature(SparseField<double, D>& T,
                                   const SparseField<std::uint8_t, D>& solid_mask) {
    const auto& g = T.descriptor();
    std::unordered_map<std::int64_t, int> layer; // unknown cells -> BFS layer
    std::vector<std::int64_t> unknown = [&] {
        std::vector<std::int64_t> keys;
        solid_mask.for_each_sorted([&](const VecI<D>& i, const std::uint8_t& m) {
            if (m != 0 && g.node_in_range(i)) keys.push_back(grid::pack_index<D>(i));
        });
        return keys;
    }();
    if (static_cast<std::int64_t>(unknown.size()) >= g.total_nodes())
        throw SolverError("extrapolate_fluid_temperature: no known cells to extrapolate from");
    for (std::int64_t key : unknown) layer[key] = -1;

    auto neighbors = [&](const VecI<D>& c, auto&& f) {
        for (int axis = 0; axis < D; ++axis) {
            for (int side = 0; side < 2; ++side) {
                VecI<D> nbr = c;
                nbr[axis] += side == 1 ? 1 : -1;
                if (g.node_in_range(nbr)) f(nbr);
            }
        }
    };

    // assign layers by multi-source BFS from the known region
    std::deque<std::int64_t> frontier;
    for (std::int64_t key : unknown) {
        const VecI<D> c = grid::unpack_index<D>(key);
        bool adjacent_known = false;
        neighbors(c, [&](const VecI<D>& nbr) {
            if (!layer.count(grid::pack_index<D>(nbr))) adjacent_known = true;
        });
        if (adjacent_known) {
            layer[key] = 1;
            frontier.push_back(key);
        }
    }
    while (!frontier.empty()) {
        const std::int64_t key = frontier.front();
        frontier.pop_front();
        const int l = layer.at(key);
        neighbors(grid::unpack_index<D>(key), [&](const VecI<D>& nbr) {
            const std::int64_t nk = grid::pack_index<D>(nbr);
            auto it = layer.find(nk);
            if (it != layer.end() && it->second == -1) {
                it->second = l + 1;
                frontier.push_back(nk);
            }
        });
    }

    // order unknown cells by (layer, index) and fill layer by layer
    std::sort(unknown.begin(), unknown.end(), [&](std::int64_t a, std::int64_t b) {
        const int la = layer.at(a), lb = layer.at(b);
        return la != lb ? la < lb : a < b;
    });
    for (std::int64_t key : unknown) {
        const int l = layer.at(key);
        const VecI<D> c = grid::unpack_index<D>(key);
        double sum = 0.0;
        int count = 0;
        neighbors(c, [&](const VecI<D>& nbr) {
            auto it = layer.find(grid::pack_index<D>(nbr));
            const bool known_now = it == layer.end() || (it->second != -1 && it->second < l);
            if (known_now) {
                sum += T.at(nbr);
                ++count;
            }
        });
        if (count > 0) T.set(c, sum / count);
    }
}

/// Linear grid-to-particle transfer of temperature and temperature gradient.
template <int D>
void temperature_g2p(const SparseField<double, D>& T, std::span<MpmParticle<D>> particles,
                     std::span<SmokeParticle<D>> smoke, int threads = 1) {
    const auto& g = T.descriptor();
    auto gather = [&](const Vec<D>& x, double& T_out, Vec<D>& grad_out) {
        bool clamped = false;
        const Vec<D> xp = grid::clamp_to_kernel_domain(x, g, 2, &clamped);
        const auto stencil = grid::linear_weights(xp, g);
        double acc = 0.0;
        Vec<D> grad = Vec<D>::Zero();
        stencil.for_each_node([&](const VecI<D>& node, double w, const Vec<D>& gw) {
            const double Ti = T.at(node);
            acc += w * Ti;
            grad += Ti * gw;
        });
        T_out = acc;
        grad_out = grad;
    };
    parallel_for(particles.size(), threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) gather(particles[i].x, particles[i].T,
                                                         particles[i].gradT);
    });
    parallel_for(smoke.size(), threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) gather(smoke[i].x, smoke[i].T, smoke[i].gradT);
    });
}

} // namespace ember::thermal
