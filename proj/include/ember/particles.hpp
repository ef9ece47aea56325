#pragma once

#include <cstdint>

#include "ember/types.hpp"

namespace ember {

/// Life cycle of a combustible material point. Transitions are one-way:
/// O -> TB -> B -> D.
enum class BurnState : std::uint8_t {
    O = 0,  // original
    TB = 1, // about to burn (ignition delay pending)
    B = 2,  // burning
    D = 3,  // burnt
};

enum class ConstitutiveModel : std::uint8_t {
    fixed_corotated = 0,
    stvk_hencky_dp = 1, // Hencky elasticity + Drucker-Prager plasticity (burnt material)
};

constexpr double kTimeUnset = -1.0;

template <int D>
struct MpmParticle {
    Vec<D> x = Vec<D>::Zero();
    Vec<D> v = Vec<D>::Zero();
    double m = 1.0;
    double V0 = 1.0; // initial volume
    Mat<D> F = Mat<D>::Identity();
    Mat<D> C = Mat<D>::Zero(); // affine velocity matrix
    double T = 0.0;
    Vec<D> gradT = Vec<D>::Zero();
    BurnState state = BurnState::O;
    double fuel = 1.0;
    double fuel0 = 1.0;                  // initial fuel level
    double burn_start_time = kTimeUnset; // set when the particle starts burning
    double time_to_burn = kTimeUnset;    // scheduled ignition instant (TB only)
    ConstitutiveModel model = ConstitutiveModel::fixed_corotated;

    double J() const { return F.determinant(); }
};

/// Marker particle carrying momentum and heat near the flame; used for
/// particle-assisted advection of the surrounding flow.
template <int D>
struct SmokeParticle {
    Vec<D> x = Vec<D>::Zero();
    Vec<D> v = Vec<D>::Zero();
    double m = 1.0;
    double T = 0.0;
    Vec<D> gradT = Vec<D>::Zero();
    double fuel = 1.0;
    double fuel0 = 1.0;
    double emit_time = 0.0;
};

} // namespace ember
