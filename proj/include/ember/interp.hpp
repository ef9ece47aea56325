#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ember/grid.hpp"
#include "ember/types.hpp"

namespace ember::interp {

/// Monotonicity-limited cubic Hermite interpolation on [q0, q1] with
/// neighbors (qm1, q2); t in [0, 1]. Central-difference slopes are limited to
/// keep the result inside [min(q0,q1), max(q0,q1)].
inline double monotonic_cubic_1d(double qm1, double q0, double q1, double q2, double t) {
    const double delta = q1 - q0;
    double d0 = 0.5 * (q1 - qm1);
    double d1 = 0.5 * (q2 - q0);
    if (delta == 0.0) {
        d0 = d1 = 0.0;
    } else {
        d0 = std::clamp(d0 / delta, 0.0, 3.0) * delta;
        d1 = std::clamp(d1 / delta, 0.0, 3.0) * delta;
    }
    const double t2 = t * t, t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * q0 + (t3 - 2.0 * t2 + t) * d0 +
           (-2.0 * t3 + 3.0 * t2) * q1 + (t3 - t2) * d1;
}

/// Non-owning view of a flat scalar array over a node lattice
/// (index 0 fastest). Out-of-hull samples clamp to the hull.
template <int D>
struct LatticeView {
    const double* data = nullptr;
    VecI<D> counts = VecI<D>::Zero();
    Vec<D> node0 = Vec<D>::Zero(); // world position of node (0, ..., 0)
    double dx = 1.0;

    std::int64_t flat(const VecI<D>& i) const {
        std::int64_t idx = 0;
        for (int a = D - 1; a >= 0; --a) idx = idx * counts[a] + i[a];
        return idx;
    }

    double value(const VecI<D>& i) const { return data[flat(i)]; }

    Vec<D> coord(const Vec<D>& x) const {
        Vec<D> u;
        for (int a = 0; a < D; ++a)
            u[a] = std::clamp((x[a] - node0[a]) / dx, 0.0, static_cast<double>(counts[a] - 1));
        return u;
    }

    double sample_linear(const Vec<D>& x) const {
        const Vec<D> u = coord(x);
        VecI<D> base;
        Vec<D> frac;
        for (int a = 0; a < D; ++a) {
            if (counts[a] == 1) {
                base[a] = 0;
                frac[a] = 0.0;
                continue;
            }
            base[a] = std::clamp(static_cast<int>(std::floor(u[a])), 0, counts[a] - 2);
            frac[a] = u[a] - base[a];
        }
        double acc = 0.0;
        for (int corner = 0; corner < (1 << D); ++corner) {
            double w = 1.0;
            VecI<D> node = base;
            for (int a = 0; a < D; ++a) {
                const int bit = (corner >> a) & 1;
                w *= bit ? frac[a] : 1.0 - frac[a];
                node[a] += bit;
                if (node[a] > counts[a] - 1) node[a] = counts[a] - 1;
            }
            acc += w * value(node);
        }
        return acc;
    }

    /// Per-axis monotonic cubic; falls back to linear where the 4-point
    /// stencil would leave the lattice.
    double sample_monotonic_cubic(const Vec<D>& x) const {
        const Vec<D> u = coord(x);
        VecI<D> base;
        Vec<D> frac;
        for (int a = 0; a < D; ++a) {
            base[a] = static_cast<int>(std::floor(u[a]));
            frac[a] = u[a] - base[a];
            if (base[a] < 1 || base[a] + 2 > counts[a] - 1) return sample_linear(x);
        }
        // gather the 4^D block (axis 0 in the low digit) and reduce the
        // lowest remaining axis each pass
        std::array<double, 64> block; // up to D = 3
        const int blocksize = 1 << (2 * D); // 4^D
        for (int k = 0; k < blocksize; ++k) {
            VecI<D> node;
            int rem = k;
            for (int a = 0; a < D; ++a) {
                node[a] = base[a] + (rem & 3) - 1;
                rem >>= 2;
            }
            block[static_cast<std::size_t>(k)] = value(node);
        }
        int span = blocksize;
        for (int a = 0; a < D; ++a) {
            span /= 4;
            for (int k = 0; k < span; ++k) {
                block[static_cast<std::size_t>(k)] = monotonic_cubic_1d(
                    block[static_cast<std::size_t>(k * 4 + 0)],
                    block[static_cast<std::size_t>(k * 4 + 1)],
                    block[static_cast<std::size_t>(k * 4 + 2)],
                    block[static_cast<std::size_t>(k * 4 + 3)], frac[a]);
            }
        }
        return block[0];
    }
};

/// Owning flattened copy of a scalar lattice field; used as a per-sweep
/// snapshot so interpolation avoids hashed lookups.
template <int D>
struct FlatScalar {
    std::vector<double> data;
    VecI<D> counts = VecI<D>::Zero();
    Vec<D> node0 = Vec<D>::Zero();
    double dx = 1.0;

    LatticeView<D> view() const { return {data.data(), counts, node0, dx}; }

    static FlatScalar from(const grid::SparseField<double, D>& f) {
        const auto& g = f.descriptor();
        FlatScalar out;
        for (int a = 0; a < D; ++a) out.counts[a] = g.node_count(a);
        out.node0 = g.node_position(VecI<D>::Zero());
        out.dx = g.dx;
        out.data.assign(static_cast<std::size_t>(g.total_nodes()), f.background());
        const LatticeView<D> v = out.view();
        f.for_each([&](const VecI<D>& i, const double& val) {
            out.data[static_cast<std::size_t>(v.flat(i))] = val;
        });
        return out;
    }
};

/// Owning flattened copy of a vector lattice field, one array per component.
template <int D>
struct FlatVector {
    std::array<std::vector<double>, D> comp;
    VecI<D> counts = VecI<D>::Zero();
    Vec<D> node0 = Vec<D>::Zero();
    double dx = 1.0;

    LatticeView<D> view(int c) const { return {comp[c].data(), counts, node0, dx}; }

    /// One gather for all D components.
    Vec<D> sample_linear(const Vec<D>& x) const {
        const LatticeView<D> v = view(0);
        const Vec<D> u = v.coord(x);
        VecI<D> base;
        Vec<D> frac;
        for (int a = 0; a < D; ++a) {
            if (counts[a] == 1) {
                base[a] = 0;
                frac[a] = 0.0;
                continue;
            }
            base[a] = std::clamp(static_cast<int>(std::floor(u[a])), 0, counts[a] - 2);
            frac[a] = u[a] - base[a];
        }
        Vec<D> out = Vec<D>::Zero();
        for (int corner = 0; corner < (1 << D); ++corner) {
            double w = 1.0;
            VecI<D> node = base;
            for (int a = 0; a < D; ++a) {
                const int bit = (corner >> a) & 1;
                w *= bit ? frac[a] : 1.0 - frac[a];
                node[a] += bit;
                if (node[a] > counts[a] - 1) node[a] = counts[a] - 1;
            }
            const std::size_t idx = static_cast<std::size_t>(v.flat(node));
            for (int c = 0; c < D; ++c) out[c] += w * comp[c][idx];
        }
        return out;
    }

    Vec<D> value(const VecI<D>& i) const {
        Vec<D> out;
        for (int c = 0; c < D; ++c) out[c] = view(c).value(i);
        return out;
    }

    static FlatVector from(const grid::SparseField<Vec<D>, D>& f) {
        const auto& g = f.descriptor();
        FlatVector out;
        for (int a = 0; a < D; ++a) out.counts[a] = g.node_count(a);
        out.node0 = g.node_position(VecI<D>::Zero());
        out.dx = g.dx;
        const std::size_t n = static_cast<std::size_t>(g.total_nodes());
        for (int c = 0; c < D; ++c) out.comp[c].assign(n, f.background()[c]);
        const LatticeView<D> v = out.view(0);
        f.for_each([&](const VecI<D>& i, const Vec<D>& val) {
            const std::size_t idx = static_cast<std::size_t>(v.flat(i));
            for (int c = 0; c < D; ++c) out.comp[c][idx] = val[c];
        });
        return out;
    }
};

/// Backward characteristic trace with Ralston's third-order Runge-Kutta:
/// k1 = u(x), k2 = u(x - dt/2 k1), k3 = u(x - 3dt/4 k2),
/// x_up = x - dt (2 k1 + 3 k2 + 4 k3) / 9.
template <int D, class Sampler>
Vec<D> backtrace_rk3(const Vec<D>& x, Sampler&& u, double dt) {
    const Vec<D> k1 = u(x);
    const Vec<D> k2 = u(Vec<D>(x - 0.5 * dt * k1));
    const Vec<D> k3 = u(Vec<D>(x - 0.75 * dt * k2));
    return x - dt * (2.0 * k1 + 3.0 * k2 + 4.0 * k3) / 9.0;
}

} // namespace ember::interp
