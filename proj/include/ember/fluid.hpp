#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "ember/cg.hpp"
#include "ember/errors.hpp"
#include "ember/grid.hpp"
#include "ember/interp.hpp"
#include "ember/mpm.hpp"
#include "ember/parallel.hpp"
#include "ember/particles.hpp"

namespace ember::fluid {

using grid::GridDescriptor;
using grid::NodeSite;
using grid::SparseField;

enum class CellLabel : std::uint8_t {
    fluid = 0,
    solid = 1,          // covered by material; face velocities prescribed
    dirichlet_wall = 2, // open boundary, p = 0
    neumann_wall = 3,   // closed boundary, face velocities prescribed (0)
};

/// Prescribed normal velocities on the faces of a solid/closed cell,
/// ordered (axis0-, axis0+, axis1-, axis1+, ...).
template <int D>
struct FaceVelocities {
    std::array<double, 2 * D> v{};
};

/// Velocities live at cell corners, pressure and labels at cell centers.
template <int D>
struct FluidState {
    GridDescriptor<D> corners;
    GridDescriptor<D> centers;
    SparseField<Vec<D>, D> u;         // corner velocities
    SparseField<double, D> pressure;  // cell centers; walls stay at 0
    SparseField<std::uint8_t, D> labels; // cell centers; background = fluid
    std::unordered_map<std::int64_t, FaceVelocities<D>> face_velocity;
    double rho_fluid = 1.0;

    FluidState() = default;
    FluidState(const Vec<D>& origin, double dx, const VecI<D>& dims, double rho = 1.0)
        : rho_fluid(rho) {
        corners = {origin, dx, dims, NodeSite::cell_corner};
        centers = {origin, dx, dims, NodeSite::cell_center};
        u = SparseField<Vec<D>, D>(corners, Vec<D>::Zero());
        pressure = SparseField<double, D>(centers, 0.0);
        labels = SparseField<std::uint8_t, D>(centers,
                                              static_cast<std::uint8_t>(CellLabel::fluid));
    }

    CellLabel label(const VecI<D>& cell) const {
        if (!centers.node_in_range(cell)) return CellLabel::neumann_wall;
        return static_cast<CellLabel>(labels.at(cell));
    }

    bool cell_in_range(const VecI<D>& cell) const { return centers.node_in_range(cell); }

    static constexpr int up_axis() { return D - 1; }
};

/// Domain sides: the bottom cell layer is a closed wall with zero velocity,
/// every other boundary cell is an open (zero-pressure) boundary.
template <int D>
void default_domain_bcs(FluidState<D>& fs) {
    const auto& g = fs.centers;
    VecI<D> i = VecI<D>::Zero();
    while (true) {
        bool boundary = false;
        for (int a = 0; a < D; ++a)
            if (i[a] == 0 || i[a] == g.node_count(a) - 1) boundary = true;
        if (boundary) {
            if (i[FluidState<D>::up_axis()] == 0) {
                fs.labels.set(i, static_cast<std::uint8_t>(CellLabel::neumann_wall));
                fs.face_velocity[grid::pack_index<D>(i)] = FaceVelocities<D>{};
            } else {
                fs.labels.set(i, static_cast<std::uint8_t>(CellLabel::dirichlet_wall));
            }
        }
        int a = 0;
        for (; a < D; ++a) {
            if (++i[a] < g.node_count(a)) break;
            i[a] = 0;
        }
        if (a == D) break;
    }
}

/// Marks every pressure cell whose collocated material grid node carries
/// mass as solid, with the node's momentum/mass as the prescribed velocity on
/// all of its faces (component-wise).
template <int D>
void mark_solid_cells(const mpm::MpmGridState<D>& mpm_grid, FluidState<D>& fs) {
    mpm_grid.mass.for_each_sorted([&](const VecI<D>& i, const double& m) {
        if (m <= 0.0) return;
        const Vec<D> v = mpm_grid.momentum.at(i) / m;
        fs.labels.set(i, static_cast<std::uint8_t>(CellLabel::solid));
        FaceVelocities<D> fv;
        for (int a = 0; a < D; ++a) {
            fv.v[static_cast<std::size_t>(2 * a)] = v[a];
            fv.v[static_cast<std::size_t>(2 * a + 1)] = v[a];
        }
        fs.face_velocity[grid::pack_index<D>(i)] = fv;
    });
}

/// Momentum transfer of the smoke particles to the corner lattice with
/// linear weights; u_flip is defined where mass > 0.
template <int D>
void flip_p2g(std::span<const SmokeParticle<D>> smoke, const GridDescriptor<D>& corners,
              SparseField<Vec<D>, D>& u_flip, SparseField<double, D>& mass, int threads = 1) {
    u_flip = SparseField<Vec<D>, D>(corners, Vec<D>::Zero());
    mass = SparseField<double, D>(corners, 0.0);
    SparseField<Vec<D>, D> momentum(corners, Vec<D>::Zero());
    struct Partial {
        std::optional<SparseField<double, D>> m;
        std::optional<SparseField<Vec<D>, D>> mv;
    };
    std::vector<Partial> partials;
    parallel_scatter(
        smoke.size(), threads, partials,
        [&](Partial& acc, std::size_t i) {
            if (!acc.m) {
                acc.m.emplace(corners, 0.0);
                acc.mv.emplace(corners, Vec<D>::Zero());
            }
            const SmokeParticle<D>& p = smoke[i];
            bool clamped = false;
            const Vec<D> xp = grid::clamp_to_kernel_domain(p.x, corners, 2, &clamped);
            const auto stencil = grid::linear_weights(xp, corners);
            stencil.for_each_node([&](const VecI<D>& node, double w, const Vec<D>&) {
                acc.m->ref(node) += w * p.m;
                acc.mv->ref(node) += w * p.m * p.v;
            });
        },
        [&](Partial& acc) {
            if (!acc.m) return;
            mass.merge_add(*acc.m);
            momentum.merge_add(*acc.mv);
        });
    mass.for_each_sorted([&](const VecI<D>& i, const double& m) {
        if (m > 0.0) u_flip.set(i, Vec<D>(momentum.at(i) / m));
    });
}

/// Narrow-band advection: corner nodes holding smoke mass take the particle
/// (FLIP) velocity; the bottom wall keeps its prescribed zero velocity; all
/// other nodes are advected semi-Lagrangian (RK3 backtrace + per-component
/// monotonicity-limited cubic, sampled with domain clamping).
template <int D>
SparseField<Vec<D>, D> advect_velocity(const FluidState<D>& fs,
                                       const SparseField<Vec<D>, D>& u_flip,
                                       const SparseField<double, D>& flip_mass, double dt,
                                       int threads = 1) {
    const auto& g = fs.corners;
    const interp::FlatVector<D> u_old = interp::FlatVector<D>::from(fs.u);
    auto sampler = [&](const Vec<D>& x) { return u_old.sample_linear(x); };

    const std::int64_t total = g.total_nodes();
    std::vector<Vec<D>> out(static_cast<std::size_t>(total));
    const interp::LatticeView<D> lv = u_old.view(0);
    parallel_for(static_cast<std::size_t>(total), threads,
                 [&](std::size_t begin, std::size_t end, int) {
                     for (std::size_t k = begin; k < end; ++k) {
                         VecI<D> node;
                         std::int64_t rem = static_cast<std::int64_t>(k);
                         for (int a = 0; a < D; ++a) {
                             node[a] = static_cast<int>(rem % lv.counts[a]);
                             rem /= lv.counts[a];
                         }
                         if (const double* m = flip_mass.find(node); m && *m > 0.0) {
                             out[k] = u_flip.at(node);
                             continue;
                         }
                         if (node[FluidState<D>::up_axis()] == 0) {
                             out[k] = Vec<D>::Zero();
                             continue;
                         }
                         const Vec<D> xi = g.node_position(node);
                         const Vec<D> xup = interp::backtrace_rk3<D>(xi, sampler, dt);
                         Vec<D> v;
                         for (int c = 0; c < D; ++c)
                             v[c] = u_old.view(c).sample_monotonic_cubic(xup);
                         out[k] = v;
                     }
                 });
    SparseField<Vec<D>, D> result(g, Vec<D>::Zero());
    for (std::int64_t k = 0; k < total; ++k) {
        VecI<D> node;
        std::int64_t rem = k;
        for (int a = 0; a < D; ++a) {
            node[a] = static_cast<int>(rem % lv.counts[a]);
            rem /= lv.counts[a];
        }
        result.set(node, out[static_cast<std::size_t>(k)]);
    }
    return result;
}

/// u* = u + dt * alpha * (T(x) - T_bar) * z_hat, with the cell-centered
/// temperature interpolated to the corner nodes.
template <int D>
void apply_buoyancy(SparseField<Vec<D>, D>& u, const interp::LatticeView<D>& T_centers,
                    double alpha, double T_bar, double dt) {
    const auto& g = u.descriptor();
    u.for_each_sorted_mutable([&](const VecI<D>& i, Vec<D>& v) {
        const double T = T_centers.sample_linear(g.node_position(i));
        v[FluidState<D>::up_axis()] += dt * alpha * (T - T_bar);
    });
}

// ---------------------------------------------------------------------------
// Pressure projection
//
// Divergence at a cell center averages the corner velocities onto each face;
// the pressure gradient at a corner averages the cell-center differences of
// the faces meeting there. The two stencils are negative transposes of each
// other over the fluid cells, so the assembled system is symmetric positive
// (semi)definite.
// ---------------------------------------------------------------------------

namespace detail {

/// Flat x-fastest indexing over the cell lattice with -1 for out-of-range;
/// avoids hashed label lookups in the solver inner loops.
template <int D>
struct CellIndexer {
    VecI<D> counts;

    explicit CellIndexer(const GridDescriptor<D>& g) {
        for (int a = 0; a < D; ++a) counts[a] = g.node_count(a);
    }

    std::int64_t size() const {
        std::int64_t n = 1;
        for (int a = 0; a < D; ++a) n *= counts[a];
        return n;
    }

    std::int64_t flat(const VecI<D>& i) const {
        std::int64_t idx = 0;
        for (int a = D - 1; a >= 0; --a) {
            if (i[a] < 0 || i[a] >= counts[a]) return -1;
            idx = idx * counts[a] + i[a];
        }
        return idx;
    }

    template <class F>
    void for_each(F&& f) const {
        VecI<D> i = VecI<D>::Zero();
        std::int64_t idx = 0;
        while (true) {
            f(i, idx++);
            int a = 0;
            for (; a < D; ++a) {
                if (++i[a] < counts[a]) break;
                i[a] = 0;
            }
            if (a == D) break;
        }
    }
};

template <int D>
std::vector<std::uint8_t> flatten_labels(const FluidState<D>& fs, const CellIndexer<D>& cells) {
    std::vector<std::uint8_t> flat(static_cast<std::size_t>(cells.size()),
                                   static_cast<std::uint8_t>(CellLabel::fluid));
    fs.labels.for_each([&](const VecI<D>& i, const std::uint8_t& l) {
        const std::int64_t idx = cells.flat(i);
        if (idx >= 0) flat[static_cast<std::size_t>(idx)] = l;
    });
    return flat;
}

/// Visits the 2^{D-1} corner nodes of the face of cell `c` with normal
/// `axis` on `side` (0 = minus, 1 = plus).
template <int D, class F>
void for_each_face_corner(const VecI<D>& c, int axis, int side, F&& f) {
    const int lateral = 1 << (D - 1);
    for (int k = 0; k < lateral; ++k) {
        VecI<D> n = c;
        n[axis] += side;
        int bit = 0;
        for (int b = 0; b < D; ++b) {
            if (b == axis) continue;
            n[b] += (k >> bit) & 1;
            ++bit;
        }
        f(n);
    }
}

/// Visits the 2^{D-1} cell pairs straddling corner n along `axis`;
/// yields (c_minus, c_plus) with c_plus[axis] = n[axis].
template <int D, class F>
void for_each_corner_pair(const VecI<D>& n, int axis, F&& f) {
    const int lateral = 1 << (D - 1);
    for (int k = 0; k < lateral; ++k) {
        VecI<D> cp = n;
        int bit = 0;
        for (int b = 0; b < D; ++b) {
            if (b == axis) continue;
            cp[b] -= (k >> bit) & 1;
            ++bit;
        }
        VecI<D> cm = cp;
        cm[axis] -= 1;
        f(cm, cp);
    }
}

inline bool face_prescribed(CellLabel nbr) {
    return nbr == CellLabel::solid || nbr == CellLabel::neumann_wall;
}

template <int D>
double prescribed_face_velocity(const FluidState<D>& fs, const VecI<D>& nbr, int axis,
                                int side_of_nbr) {
    auto it = fs.face_velocity.find(grid::pack_index<D>(nbr));
    if (it == fs.face_velocity.end()) return 0.0;
    return it->second.v[static_cast<std::size_t>(2 * axis + side_of_nbr)];
}

} // namespace detail

template <int D>
struct PressureSystem {
    std::vector<std::int64_t> cells; // packed indices of fluid cells, x-fastest order
    std::unordered_map<std::int64_t, int> row;
    solver::SparseMatrix A;
    std::vector<double> b;
    bool pure_neumann = true;
};

/// Assembles M p = b with M = -div (dt/rho) grad over fluid cells and
/// b = -div(u*). Prescribed faces (solid / closed walls) enter b only; open
/// (zero-pressure) cells are folded in as p = 0.
template <int D>
PressureSystem<D> build_pressure_system(const FluidState<D>& fs,
                                        const interp::FlatVector<D>& u_star, double dt) {
    const auto& g = fs.centers;
    const double dx = g.dx;
    PressureSystem<D> sys;
    const detail::CellIndexer<D> cells(g);
    const std::vector<std::uint8_t> labels = detail::flatten_labels(fs, cells);
    auto label_at = [&](const VecI<D>& c) {
        const std::int64_t idx = cells.flat(c);
        return idx < 0 ? CellLabel::neumann_wall
                       : static_cast<CellLabel>(labels[static_cast<std::size_t>(idx)]);
    };

    std::vector<int> row_of(static_cast<std::size_t>(cells.size()), -1);
    cells.for_each([&](const VecI<D>& c, std::int64_t idx) {
        if (labels[static_cast<std::size_t>(idx)] == static_cast<std::uint8_t>(CellLabel::fluid)) {
            row_of[static_cast<std::size_t>(idx)] = static_cast<int>(sys.cells.size());
            sys.cells.push_back(grid::pack_index<D>(c));
        }
    });
    // rows follow the x-fastest lattice traversal (deterministic)
    for (std::size_t r = 0; r < sys.cells.size(); ++r)
        sys.row[sys.cells[r]] = static_cast<int>(r);

    const int n = static_cast<int>(sys.cells.size());
    sys.b.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(n));
    const double lateral = static_cast<double>(1 << (D - 1));
    const double grad_scale = dt / (fs.rho_fluid * dx * dx * lateral * lateral);

    // per-row accumulation over the 3^D cell neighborhood to keep the
    // duplicate handling out of the generic triplet path
    constexpr int kSlots = D == 3 ? 27 : 9;
    double coeff[kSlots];
    auto slot_of = [](const VecI<D>& c, const VecI<D>& nbr) {
        int slot = 0, stride = 1;
        for (int a = 0; a < D; ++a) {
            slot += (nbr[a] - c[a] + 1) * stride;
            stride *= 3;
        }
        return slot;
    };

    for (int r = 0; r < n; ++r) {
        const VecI<D> c = grid::unpack_index<D>(sys.cells[static_cast<std::size_t>(r)]);
        std::fill(coeff, coeff + kSlots, 0.0);
        for (int axis = 0; axis < D; ++axis) {
            for (int side = 0; side < 2; ++side) {
                const double sigma = side == 1 ? 1.0 : -1.0;
                VecI<D> nbr = c;
                nbr[axis] += side == 1 ? 1 : -1;
                const CellLabel nbr_label = label_at(nbr);
                if (detail::face_prescribed(nbr_label)) {
                    // prescribed normal velocity: contributes to the RHS only
                    const double un =
                        detail::prescribed_face_velocity<D>(fs, nbr, axis, 1 - side);
                    sys.b[static_cast<std::size_t>(r)] -= sigma * un / dx;
                    continue;
                }
                // active face: divergence from corner-averaged velocity
                double u_face = 0.0;
                detail::for_each_face_corner<D>(c, axis, side, [&](const VecI<D>& corner) {
                    u_face += u_star.view(axis).value(corner);
                });
                u_face /= lateral;
                sys.b[static_cast<std::size_t>(r)] -= sigma * u_face / dx;

                // gradient correction through this face
                detail::for_each_face_corner<D>(c, axis, side, [&](const VecI<D>& corner) {
                    detail::for_each_corner_pair<D>(corner, axis,
                                                    [&](const VecI<D>& cm, const VecI<D>& cp) {
                        const CellLabel lm = label_at(cm);
                        const CellLabel lp = label_at(cp);
                        if (detail::face_prescribed(lm) || detail::face_prescribed(lp))
                            return;
                        if (lp == CellLabel::fluid)
                            coeff[slot_of(c, cp)] -= sigma * grad_scale;
                        if (lm == CellLabel::fluid)
                            coeff[slot_of(c, cm)] += sigma * grad_scale;
                        if (lp == CellLabel::dirichlet_wall || lm == CellLabel::dirichlet_wall)
                            sys.pure_neumann = false;
                    });
                });
            }
        }
        auto& row_entries = rows[static_cast<std::size_t>(r)];
        for (int slot = 0; slot < kSlots; ++slot) {
            if (coeff[slot] == 0.0) continue;
            VecI<D> nbr = c;
            int rem = slot;
            for (int a = 0; a < D; ++a) {
                nbr[a] += rem % 3 - 1;
                rem /= 3;
            }
            row_entries.emplace_back(row_of[static_cast<std::size_t>(cells.flat(nbr))],
                                     coeff[slot]);
        }
    }
    sys.A = solver::SparseMatrix::from_triplets(n, rows);
    return sys;
}

/// Corner-node pressure gradient correction: u <- u - (dt/rho) grad(p).
/// Pairs touching solid/closed cells carry no pressure jump; open cells
/// contribute p = 0.
template <int D>
void apply_pressure_gradient(FluidState<D>& fs, double dt) {
    const auto& g = fs.corners;
    const double lateral = static_cast<double>(1 << (D - 1));
    const detail::CellIndexer<D> cells(fs.centers);
    const std::vector<std::uint8_t> labels = detail::flatten_labels(fs, cells);
    const interp::FlatScalar<D> p_flat = interp::FlatScalar<D>::from(fs.pressure);
    fs.u.for_each_sorted_mutable([&](const VecI<D>& nidx, Vec<D>& v) {
        for (int axis = 0; axis < D; ++axis) {
            double grad = 0.0;
            detail::for_each_corner_pair<D>(nidx, axis, [&](const VecI<D>& cm, const VecI<D>& cp) {
                const std::int64_t im = cells.flat(cm);
                const std::int64_t ip = cells.flat(cp);
                const CellLabel lm =
                    im < 0 ? CellLabel::neumann_wall
                           : static_cast<CellLabel>(labels[static_cast<std::size_t>(im)]);
                const CellLabel lp =
                    ip < 0 ? CellLabel::neumann_wall
                           : static_cast<CellLabel>(labels[static_cast<std::size_t>(ip)]);
                if (detail::face_prescribed(lm) || detail::face_prescribed(lp)) return;
                const double pm =
                    lm == CellLabel::fluid ? p_flat.data[static_cast<std::size_t>(im)] : 0.0;
                const double pp =
                    lp == CellLabel::fluid ? p_flat.data[static_cast<std::size_t>(ip)] : 0.0;
                grad += pp - pm;
            });
            v[axis] -= dt / fs.rho_fluid * grad / (lateral * g.dx);
        }
    });
}

/// Divergence of the current corner velocity over fluid cells, prescribed
/// faces included; used to verify the projection.
template <int D>
SparseField<double, D> discrete_divergence(const FluidState<D>& fs) {
    const auto& g = fs.centers;
    const interp::FlatVector<D> u_flat = interp::FlatVector<D>::from(fs.u);
    SparseField<double, D> div(g, 0.0);
    const double lateral = static_cast<double>(1 << (D - 1));
    VecI<D> c = VecI<D>::Zero();
    while (true) {
        if (fs.label(c) == CellLabel::fluid) {
            double acc = 0.0;
            for (int axis = 0; axis < D; ++axis) {
                for (int side = 0; side < 2; ++side) {
                    const double sigma = side == 1 ? 1.0 : -1.0;
                    VecI<D> nbr = c;
                    nbr[axis] += side == 1 ? 1 : -1;
                    double u_face;
                    if (detail::face_prescribed(fs.label(nbr))) {
                        u_face = detail::prescribed_face_velocity<D>(fs, nbr, axis, 1 - side);
                    } else {
                        u_face = 0.0;
                        detail::for_each_face_corner<D>(c, axis, side, [&](const VecI<D>& n) {
                            u_face += u_flat.view(axis).value(n);
                        });
                        u_face /= lateral;
                    }
                    acc += sigma * u_face / g.dx;
                }
            }
            div.set(c, acc);
        }
        int a = 0;
        for (; a < D; ++a) {
            if (++c[a] < g.node_count(a)) break;
            c[a] = 0;
        }
        if (a == D) break;
    }
    return div;
}

template <int D>
struct ProjectionResult {
    int cg_iterations = 0;
    double rel_residual = 0.0;
    int fluid_cells = 0;
};

/// Chorin projection: solves for the cell-centered pressure that removes the
/// discrete divergence from the corner velocities, then applies the gradient
/// correction. Throws CompatibilityError for an all-closed domain with net
/// in/outflow and SolverError when CG stalls. warm_start, when given, seeds
/// the solve (typically the previous step's pressure).
template <int D>
ProjectionResult<D> pressure_solve(FluidState<D>& fs, double dt, double tol, int max_iter,
                                   int threads = 1,
                                   const SparseField<double, D>* warm_start = nullptr) {
    const interp::FlatVector<D> u_star = interp::FlatVector<D>::from(fs.u);
    PressureSystem<D> sys = build_pressure_system<D>(fs, u_star, dt);
    ProjectionResult<D> result;
    result.fluid_cells = static_cast<int>(sys.cells.size());
    fs.pressure = SparseField<double, D>(fs.centers, 0.0);
    if (sys.cells.empty()) return result;

    if (sys.pure_neumann) {
        double sum = 0.0, norm1 = 0.0;
        for (double v : sys.b) {
            sum += v;
            norm1 += std::abs(v);
        }
        if (std::abs(sum) > 1e-8 * std::max(norm1, 1e-300))
            throw CompatibilityError(
                "pressure_solve: all-closed domain with incompatible net flux (sum " +
                std::to_string(sum) + ")");
        const double mean = sum / static_cast<double>(sys.b.size());
        for (double& v : sys.b) v -= mean;
    }

    std::vector<double> p(sys.cells.size(), 0.0);
    if (warm_start)
        for (std::size_t r = 0; r < sys.cells.size(); ++r)
            p[r] = warm_start->at(grid::unpack_index<D>(sys.cells[r]));
    const solver::CgResult cg = solver::conjugate_gradient(
        sys.A, sys.b, p, {tol, max_iter}, threads);
    result.cg_iterations = cg.iterations;
    result.rel_residual = cg.rel_residual;

    for (std::size_t r = 0; r < sys.cells.size(); ++r)
        fs.pressure.set(grid::unpack_index<D>(sys.cells[r]), p[r]);
    apply_pressure_gradient(fs, dt);
    return result;
}

/// FLIP/PIC particle update after projection. Positions advance with the
/// pre-blend particle velocity; particles leaving the domain (or exceeding
/// max_age, when set) are removed in stable order.
template <int D>
void advect_smoke_particles(std::vector<SmokeParticle<D>>& smoke,
                            const interp::FlatVector<D>& u_old,
                            const interp::FlatVector<D>& u_new, double alpha_flip, double dt,
                            const Vec<D>& domain_min, const Vec<D>& domain_max,
                            bool blended_position = false,
                            std::optional<double> max_age = std::nullopt, double t_now = 0.0,
                            int threads = 1) {
    parallel_for(smoke.size(), threads, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            SmokeParticle<D>& p = smoke[i];
            const Vec<D> v_pic = u_new.sample_linear(p.x);
            const Vec<D> v_flip = p.v + v_pic - u_old.sample_linear(p.x);
            const Vec<D> v_next = (1.0 - alpha_flip) * v_pic + alpha_flip * v_flip;
            p.x += dt * (blended_position ? v_next : p.v);
            p.v = v_next;
        }
    });
    std::erase_if(smoke, [&](const SmokeParticle<D>& p) {
        for (int a = 0; a < D; ++a)
            if (p.x[a] < domain_min[a] || p.x[a] > domain_max[a]) return true;
        return max_age && (t_now - p.emit_time) > *max_age;
    });
}

} // namespace ember::fluid
