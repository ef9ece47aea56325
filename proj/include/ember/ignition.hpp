#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ember/errors.hpp"
#include "ember/mpm.hpp"
#include "ember/particles.hpp"
#include "ember/spatial_hash.hpp"

namespace ember::ignition {

using grid::SpatialHash;

struct IgnitionParams {
    double F0 = 1.0;     // initial fuel level (base value)
    double F_min = 0.3;  // burnt threshold
    double gamma = 1.0;  // fuel decay rate (1/s)
    double beta = 0.0;   // heating coefficient
    double T_ignition = 600.0;
    double T_max = 1500.0;
    double c_flame = 0.03; // flame front propagation speed

    void validate() const {
        if (!(F0 > F_min && F_min > 0.0))
            throw ConfigError("ignition: F0 > F_min > 0 required");
        if (!(gamma > 0.0)) throw ConfigError("ignition: gamma must be > 0");
        if (beta < 0.0) throw ConfigError("ignition: beta must be >= 0");
        if (!(c_flame > 0.0)) throw ConfigError("ignition: c_flame must be > 0");
        if (!(T_max > T_ignition))
            throw ConfigError("ignition: T_max must exceed T_ignition");
    }
};

/// Closed-form fuel decay F0 e^{-gamma t}; strictly positive for all finite
/// times and independent of the step size.
inline double fuel_closed_form(double fuel0, double gamma, double elapsed) {
    return std::max(fuel0 * std::exp(-gamma * elapsed), std::numeric_limits<double>::min());
}

/// Updates the fuel of a burning material particle; dropping below F_min
/// marks it burnt and switches its constitutive model.
template <int D>
void update_fuel(MpmParticle<D>& p, double t_now, const IgnitionParams& params) {
    if (p.state != BurnState::B || p.burn_start_time < 0.0) return;
    p.fuel = fuel_closed_form(p.fuel0, params.gamma, t_now - p.burn_start_time);
    if (p.fuel < params.F_min) {
        p.state = BurnState::D;
        mpm::update_constitutive_model(p);
    }
}

/// Smoke particles burn from their emission time on.
template <int D>
void update_fuel(SmokeParticle<D>& p, double t_now, const IgnitionParams& params) {
    p.fuel = fuel_closed_form(p.fuel0, params.gamma, t_now - p.emit_time);
}

/// T <- min(T + beta * fuel * dt, T_max).
template <int D>
void update_burn_temperature(MpmParticle<D>& p, double dt, const IgnitionParams& params) {
    if (p.state != BurnState::B) return;
    p.T = std::min(p.T + params.beta * p.fuel * dt, params.T_max);
}

template <int D>
void update_burn_temperature(SmokeParticle<D>& p, double dt, const IgnitionParams& params) {
    p.T = std::min(p.T + params.beta * p.fuel * dt, params.T_max);
}

/// For each boundary particle, the closest unburnt (state O) particle within
/// a one-cell radius joins the ignitable surface set; deduplicated,
/// ascending ids.
template <int D>
std::vector<int> compute_surface_set(std::span<const Vec<D>> positions,
                                     std::span<const int> boundary_ids,
                                     const SpatialHash<D>& hash_original) {
    std::vector<int> surface;
    for (int b : boundary_ids) {
        const auto closest = grid::closest_in_neighborhood(
            positions[static_cast<std::size_t>(b)], hash_original, positions);
        if (closest) surface.push_back(*closest);
    }
    std::sort(surface.begin(), surface.end());
    surface.erase(std::unique(surface.begin(), surface.end()), surface.end());
    return surface;
}

/// For every burning particle, its closest surface-set particle hotter than
/// T_ignition is scheduled to burn after a delay of distance / c_flame.
/// Competing assignments keep the earliest scheduled time (min-reduction in
/// ascending particle order).
template <int D>
void ignite_neighbors(std::span<MpmParticle<D>> particles, const SpatialHash<D>& hash_surface,
                      std::span<const Vec<D>> positions, double t_now,
                      const IgnitionParams& params) {
    for (std::size_t pid = 0; pid < particles.size(); ++pid) {
        if (particles[pid].state != BurnState::B) continue;
        const auto closest =
            grid::closest_in_neighborhood(particles[pid].x, hash_surface, positions);
        if (!closest) continue;
        MpmParticle<D>& q = particles[static_cast<std::size_t>(*closest)];
        if (!(q.T > params.T_ignition)) continue;
        const double dist =
            (positions[static_cast<std::size_t>(*closest)] - particles[pid].x).norm();
        const double when = t_now + dist / params.c_flame;
        if (q.state == BurnState::O) {
            q.state = BurnState::TB;
            q.time_to_burn = when;
        } else if (q.state == BurnState::TB) {
            q.time_to_burn = std::min(q.time_to_burn, when);
        }
    }
}

/// Scheduled particles whose time has elapsed start burning; the burn clock
/// is anchored at the scheduled instant so fuel decay does not depend on the
/// step size.
template <int D>
void advance_states(std::span<MpmParticle<D>> particles, double t_now) {
    for (MpmParticle<D>& p : particles) {
        if (p.state == BurnState::TB && p.time_to_burn >= 0.0 && t_now >= p.time_to_burn) {
            p.state = BurnState::B;
            p.burn_start_time = p.time_to_burn;
        }
    }
}

template <int D>
struct SeedSpec {
    std::vector<long> ids;             // explicit particle ids, or
    std::optional<Vec<D>> point;       // all particles within radius of point
    double radius = 0.0;               // (radius 0 -> single nearest particle)
};

/// Marks the seed particles as burning at t = 0 with temperature at least
/// T_ignition. Throws on an empty or invalid selection.
template <int D>
void seed_ignition(std::span<MpmParticle<D>> particles, const SeedSpec<D>& spec,
                   const IgnitionParams& params) {
    if (particles.empty()) throw ConfigError("seed_ignition: no particles to ignite");
    std::vector<std::size_t> selected;
    if (!spec.ids.empty()) {
        for (long id : spec.ids) {
            if (id < 0 || id >= static_cast<long>(particles.size()))
                throw ConfigError("seed_ignition: particle id " + std::to_string(id) +
                                  " out of range");
            selected.push_back(static_cast<std::size_t>(id));
        }
    } else if (spec.point) {
        for (std::size_t i = 0; i < particles.size(); ++i)
            if ((particles[i].x - *spec.point).norm() <= spec.radius) selected.push_back(i);
        if (selected.empty()) {
            std::size_t best = 0;
            double best_d = (particles[0].x - *spec.point).squaredNorm();
            for (std::size_t i = 1; i < particles.size(); ++i) {
                const double d = (particles[i].x - *spec.point).squaredNorm();
                if (d < best_d) {
                    best = i;
                    best_d = d;
                }
            }
            selected.push_back(best);
        }
    } else {
        throw ConfigError("seed_ignition: seed spec names no ids and no point");
    }
    for (std::size_t i : selected) {
        MpmParticle<D>& p = particles[i];
        p.state = BurnState::B;
        p.burn_start_time = 0.0;
        p.T = std::max(p.T, params.T_ignition);
    }
}

} // namespace ember::ignition
