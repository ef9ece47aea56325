#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ember/errors.hpp"
#include "ember/types.hpp"

namespace ember::grid {

/// Placement of field samples on a uniform lattice of cells.
/// cell_center nodes sit at origin + (i + 1/2) dx, cell_corner nodes at
/// origin + i dx. A grid with n cells per axis has n center nodes and n + 1
/// corner nodes along that axis.
enum class NodeSite { cell_center, cell_corner };

template <int D>
struct GridDescriptor {
    Vec<D> origin = Vec<D>::Zero();
    double dx = 1.0;
    VecI<D> dims = VecI<D>::Ones(); // cell counts per axis
    NodeSite site = NodeSite::cell_center;

    void validate() const {
        if (!(dx > 0.0)) throw ConfigError("grid: dx must be > 0");
        for (int a = 0; a < D; ++a)
            if (dims[a] < 1) throw ConfigError("grid: dims must be >= 1 per axis");
    }

    int node_count(int axis) const {
        return dims[axis] + (site == NodeSite::cell_corner ? 1 : 0);
    }

    std::int64_t total_nodes() const {
        std::int64_t n = 1;
        for (int a = 0; a < D; ++a) n *= node_count(a);
        return n;
    }

    double node_offset() const { return site == NodeSite::cell_center ? 0.5 : 0.0; }

    Vec<D> node_position(const VecI<D>& i) const {
        Vec<D> p;
        for (int a = 0; a < D; ++a) p[a] = origin[a] + (i[a] + node_offset()) * dx;
        return p;
    }

    bool node_in_range(const VecI<D>& i) const {
        for (int a = 0; a < D; ++a)
            if (i[a] < 0 || i[a] >= node_count(a)) return false;
        return true;
    }

    Vec<D> domain_min() const { return origin; }
    Vec<D> domain_max() const {
        Vec<D> p;
        for (int a = 0; a < D; ++a) p[a] = origin[a] + dims[a] * dx;
        return p;
    }

    /// Normalized node coordinate: node k lies at u == k.
    double node_coord(double x, int axis) const {
        return (x - origin[axis]) / dx - node_offset();
    }

    bool operator==(const GridDescriptor&) const = default;
};

namespace detail {
inline constexpr int kPackBits = 21;
inline constexpr std::int64_t kPackOffset = std::int64_t{1} << 20;
inline constexpr std::int64_t kPackMask = (std::int64_t{1} << kPackBits) - 1;
} // namespace detail

/// Packs an integer index into a single key whose natural ordering equals
/// lexicographic order on (i0, i1, ..., i_{D-1}).
template <int D>
inline std::int64_t pack_index(const VecI<D>& i) {
    std::int64_t key = 0;
    for (int a = 0; a < D; ++a)
        key = (key << detail::kPackBits) | ((i[a] + detail::kPackOffset) & detail::kPackMask);
    return key;
}

template <int D>
inline VecI<D> unpack_index(std::int64_t key) {
    VecI<D> i;
    for (int a = D - 1; a >= 0; --a) {
        i[a] = static_cast<int>((key & detail::kPackMask) - detail::kPackOffset);
        key >>= detail::kPackBits;
    }
    return i;
}

/// Zero value for node payloads; Eigen types need setZero rather than
/// value initialization.
template <class T>
T zero_value() {
    if constexpr (requires { T::Zero(); })
        return T::Zero();
    else
        return T{};
}

/// Sparse lattice field. Reads of nodes that were never written return the
/// declared background value; deterministic traversal is provided by
/// for_each_sorted (lexicographic by index).
template <class T, int D>
class SparseField {
public:
    SparseField() = default;
    explicit SparseField(GridDescriptor<D> desc, T background = zero_value<T>())
        : desc_(std::move(desc)), background_(std::move(background)) {}

    const GridDescriptor<D>& descriptor() const { return desc_; }
    const T& background() const { return background_; }

    bool contains(const VecI<D>& i) const { return values_.count(pack_index<D>(i)) > 0; }

    const T& at(const VecI<D>& i) const {
        auto it = values_.find(pack_index<D>(i));
        return it == values_.end() ? background_ : it->second;
    }

    const T* find(const VecI<D>& i) const {
        auto it = values_.find(pack_index<D>(i));
        return it == values_.end() ? nullptr : &it->second;
    }

    T* find(const VecI<D>& i) {
        auto it = values_.find(pack_index<D>(i));
        return it == values_.end() ? nullptr : &it->second;
    }

    T& ref(const VecI<D>& i) {
        auto [it, inserted] = values_.try_emplace(pack_index<D>(i), background_);
        return it->second;
    }

    void set(const VecI<D>& i, T v) { values_[pack_index<D>(i)] = std::move(v); }

    std::size_t active_count() const { return values_.size(); }
    void clear() { values_.clear(); }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& [key, value] : values_) f(unpack_index<D>(key), value);
    }

    std::vector<std::int64_t> sorted_keys() const {
        std::vector<std::int64_t> keys;
        keys.reserve(values_.size());
        for (const auto& [key, value] : values_) keys.push_back(key);
        std::sort(keys.begin(), keys.end());
        return keys;
    }

    template <class F>
    void for_each_sorted(F&& f) const {
        for (std::int64_t key : sorted_keys()) f(unpack_index<D>(key), values_.at(key));
    }

    template <class F>
    void for_each_sorted_mutable(F&& f) {
        for (std::int64_t key : sorted_keys()) f(unpack_index<D>(key), values_[key]);
    }

    /// Accumulates another field into this one node-wise (worker-order merges).
    void merge_add(const SparseField& other) {
        other.for_each_sorted([&](const VecI<D>& i, const T& v) { ref(i) += v; });
    }

private:
    GridDescriptor<D> desc_;
    T background_ = zero_value<T>();
    std::unordered_map<std::int64_t, T> values_;
};

// ---------------------------------------------------------------------------
// B-spline interpolation stencils
// ---------------------------------------------------------------------------

struct Weights1D {
    int base = 0;
    double w[3] = {0, 0, 0};
    double dw[3] = {0, 0, 0}; // derivative w.r.t. the node coordinate u
};

inline Weights1D quadratic_weights_from_base(double u, int base) {
    Weights1D r;
    r.base = base;
    const double fx = u - base; // in [0.5, 1.5] for an interior particle
    r.w[0] = 0.5 * (1.5 - fx) * (1.5 - fx);
    r.w[1] = 0.75 - (fx - 1.0) * (fx - 1.0);
    r.w[2] = 0.5 * (fx - 0.5) * (fx - 0.5);
    r.dw[0] = fx - 1.5;
    r.dw[1] = -2.0 * (fx - 1.0);
    r.dw[2] = fx - 0.5;
    return r;
}

inline Weights1D linear_weights_from_base(double u, int base) {
    Weights1D r;
    r.base = base;
    const double fx = u - base;
    r.w[0] = 1.0 - fx;
    r.w[1] = fx;
    r.dw[0] = -1.0;
    r.dw[1] = 1.0;
    return r;
}

/// Quadratic B-spline weights along one axis; u is the node coordinate
/// (node k at u == k). No bounds handling.
inline Weights1D quadratic_weights_1d(double u) {
    return quadratic_weights_from_base(u, static_cast<int>(std::floor(u - 0.5)));
}

/// Linear hat weights along one axis.
inline Weights1D linear_weights_1d(double u) {
    return linear_weights_from_base(u, static_cast<int>(std::floor(u)));
}

/// Tensor-product stencil over `support` nodes per axis (2 linear,
/// 3 quadratic). Weight gradients carry the 1/dx factor.
template <int D>
struct BsplineStencil {
    VecI<D> base;
    int support = 0;
    double w[D][3];
    double dw[D][3];

    template <class F>
    void for_each_node(F&& f) const {
        VecI<D> off = VecI<D>::Zero();
        while (true) {
            VecI<D> node = base + off;
            double weight = 1.0;
            for (int a = 0; a < D; ++a) weight *= w[a][off[a]];
            Vec<D> grad;
            for (int a = 0; a < D; ++a) {
                double g = dw[a][off[a]];
                for (int b = 0; b < D; ++b)
                    if (b != a) g *= w[b][off[b]];
                grad[a] = g;
            }
            f(node, weight, grad);
            int a = 0;
            for (; a < D; ++a) {
                if (++off[a] < support) break;
                off[a] = 0;
            }
            if (a == D) break;
        }
    }
};

namespace detail {

inline constexpr double kStencilTol = 1e-9;

template <int D>
BsplineStencil<D> make_stencil(const Vec<D>& xp, const GridDescriptor<D>& g, int support,
                               const char* kernel_name) {
    BsplineStencil<D> s;
    s.support = support;
    const double lo = support == 3 ? 0.5 : 0.0;
    for (int a = 0; a < D; ++a) {
        const int n = g.node_count(a);
        const double u = g.node_coord(xp[a], a);
        const double hi = support == 3 ? n - 1.5 : n - 1.0;
        if (u < lo - kStencilTol || u > hi + kStencilTol)
            throw StencilOutOfBounds(std::string(kernel_name) +
                                         " stencil out of bounds on axis " + std::to_string(a) +
                                         " (u=" + std::to_string(u) + ", valid [" +
                                         std::to_string(lo) + ", " + std::to_string(hi) + "])",
                                     a);
        // base clamps at the lattice edges so u == lo and u == hi stay valid.
        const int base = std::clamp(
            static_cast<int>(std::floor(u - (support == 3 ? 0.5 : 0.0))), 0, n - support);
        Weights1D w1 = support == 3 ? quadratic_weights_from_base(u, base)
                                    : linear_weights_from_base(u, base);
        s.base[a] = base;
        for (int k = 0; k < 3; ++k) {
            s.w[a][k] = w1.w[k];
            s.dw[a][k] = w1.dw[k] / g.dx;
        }
    }
    return s;
}

} // namespace detail

/// 3^D-node quadratic B-spline stencil. Requires xp at least 1.5 cells inside
/// the node lattice hull; throws StencilOutOfBounds otherwise.
template <int D>
BsplineStencil<D> quadratic_weights(const Vec<D>& xp, const GridDescriptor<D>& g) {
    return detail::make_stencil<D>(xp, g, 3, "quadratic");
}

/// 2^D-node linear stencil. Requires xp inside the node lattice hull.
template <int D>
BsplineStencil<D> linear_weights(const Vec<D>& xp, const GridDescriptor<D>& g) {
    return detail::make_stencil<D>(xp, g, 2, "linear");
}

/// Clamps a position into the region where the requested kernel has a full
/// in-range stencil. Sets *clamped when a coordinate moved.
template <int D>
Vec<D> clamp_to_kernel_domain(const Vec<D>& xp, const GridDescriptor<D>& g, int support,
                              bool* clamped = nullptr) {
    Vec<D> out = xp;
    const double lo_u = support == 3 ? 0.5 : 0.0;
    for (int a = 0; a < D; ++a) {
        const int n = g.node_count(a);
        const double hi_u = support == 3 ? n - 1.5 : n - 1.0;
        const double lo = g.origin[a] + (lo_u + g.node_offset()) * g.dx;
        const double hi = g.origin[a] + (hi_u + g.node_offset()) * g.dx;
        const double v = std::clamp(out[a], lo, hi);
        if (v != out[a] && clamped) *clamped = true;
        out[a] = v;
    }
    return out;
}

} // namespace ember::grid
