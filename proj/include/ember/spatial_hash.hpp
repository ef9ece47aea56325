#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ember/errors.hpp"
#include "ember/grid.hpp"
#include "ember/types.hpp"

namespace ember::grid {

/// Uniform-bin spatial hash with bin width dx. A point on a bin boundary
/// belongs to the upper bin (floor convention).
template <int D>
class SpatialHash {
public:
    SpatialHash() = default;
    SpatialHash(double cell, Vec<D> origin) : cell_(cell), origin_(std::move(origin)) {}

    double cell() const { return cell_; }
    const Vec<D>& origin() const { return origin_; }
    std::size_t size() const { return count_; }

    VecI<D> bin_of(const Vec<D>& x) const {
        VecI<D> b;
        for (int a = 0; a < D; ++a)
            b[a] = static_cast<int>(std::floor((x[a] - origin_[a]) / cell_));
        return b;
    }

    void insert(int id, const Vec<D>& x) {
        for (int a = 0; a < D; ++a)
            if (!std::isfinite(x[a]))
                throw SimError("spatial hash: non-finite position for particle " +
                               std::to_string(id));
        bins_[pack_index<D>(bin_of(x))].push_back(id);
        ++count_;
    }

    const std::vector<int>* bin(const VecI<D>& b) const {
        auto it = bins_.find(pack_index<D>(b));
        return it == bins_.end() ? nullptr : &it->second;
    }

    /// Visits the 3^D bins surrounding x (including its own).
    template <class F>
    void for_each_neighborhood_bin(const Vec<D>& x, F&& f) const {
        const VecI<D> center = bin_of(x);
        VecI<D> off = VecI<D>::Constant(-1);
        while (true) {
            f(VecI<D>(center + off));
            int a = 0;
            for (; a < D; ++a) {
                if (++off[a] <= 1) break;
                off[a] = -1;
            }
            if (a == D) break;
        }
    }

private:
    double cell_ = 1.0;
    Vec<D> origin_ = Vec<D>::Zero();
    std::unordered_map<std::int64_t, std::vector<int>> bins_;
    std::size_t count_ = 0;
};

/// Builds a hash over positions[ids]; ids are kept as the stored handles.
template <int D>
SpatialHash<D> hash_build(std::span<const Vec<D>> positions, std::span<const int> ids, double dx,
                          const Vec<D>& origin = Vec<D>::Zero()) {
    SpatialHash<D> hash(dx, origin);
    for (int id : ids) hash.insert(id, positions[static_cast<std::size_t>(id)]);
    return hash;
}

/// Builds a hash over all positions with ids 0..n-1.
template <int D>
SpatialHash<D> hash_build(std::span<const Vec<D>> positions, double dx,
                          const Vec<D>& origin = Vec<D>::Zero()) {
    SpatialHash<D> hash(dx, origin);
    for (std::size_t i = 0; i < positions.size(); ++i)
        hash.insert(static_cast<int>(i), positions[i]);
    return hash;
}

/// Nearest stored particle among the 3^D bins around xp; distance ties break
/// toward the lowest id. Returns nothing when the neighborhood is empty.
template <int D>
std::optional<int> closest_in_neighborhood(const Vec<D>& xp, const SpatialHash<D>& hash,
                                           std::span<const Vec<D>> positions) {
    std::optional<int> best;
    double best_d2 = 0.0;
    hash.for_each_neighborhood_bin(xp, [&](const VecI<D>& b) {
        const std::vector<int>* ids = hash.bin(b);
        if (!ids) return;
        for (int id : *ids) {
            const double d2 = (positions[static_cast<std::size_t>(id)] - xp).squaredNorm();
            if (!best || d2 < best_d2 || (d2 == best_d2 && id < *best)) {
                best = id;
                best_d2 = d2;
            }
        }
    });
    return best;
}

} // namespace ember::grid
