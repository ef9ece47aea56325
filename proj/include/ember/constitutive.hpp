#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/SVD>

#include "ember/errors.hpp"
#include "ember/types.hpp"

namespace ember::constitutive {

struct ElasticParams {
    double mu = 0.0;     // first Lamé coefficient
    double lambda = 0.0; // second Lamé coefficient

    static ElasticParams from_moduli(double youngs, double poisson) {
        if (!(youngs > 0.0)) throw ConfigError("elastic: Young's modulus must be > 0");
        if (!(poisson >= 0.0 && poisson < 0.5))
            throw ConfigError("elastic: Poisson ratio must be in [0, 0.5)");
        ElasticParams p;
        p.mu = youngs / (2.0 * (1.0 + poisson));
        p.lambda = youngs * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        return p;
    }

    void validate() const {
        if (mu < 0.0 || lambda < 0.0)
            throw ConfigError("elastic: Lamé coefficients must be >= 0");
    }
};

struct PlasticParams {
    double friction_angle_deg = 35.0;
    double alpha_dp = 0.0; // derived friction coefficient
    double cohesion = 0.0; // fixed at zero

    static PlasticParams from_friction_angle(double deg) {
        if (!(deg > 0.0 && deg < 90.0))
            throw ConfigError("plastic: friction angle must be in (0, 90) degrees");
        PlasticParams p;
        p.friction_angle_deg = deg;
        const double sin_phi = std::sin(deg * std::numbers::pi / 180.0);
        p.alpha_dp = std::sqrt(2.0 / 3.0) * 2.0 * sin_phi / (3.0 - sin_phi);
        return p;
    }
};

template <int D>
struct SvdResult {
    Mat<D> U, V;
    Vec<D> sigma; // sorted descending; the last entry may be negative
};

/// SVD with proper rotations: det(U) = det(V) = +1, any reflection folded
/// into the smallest singular value.
template <int D>
SvdResult<D> svd_polar(const Mat<D>& F) {
    if (!F.allFinite()) throw SimError("svd_polar: non-finite matrix entries");
    Eigen::JacobiSVD<Mat<D>> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdResult<D> r{svd.matrixU(), svd.matrixV(), svd.singularValues()};
    if (r.U.determinant() < 0.0) {
        r.U.col(D - 1) *= -1.0;
        r.sigma[D - 1] *= -1.0;
    }
    if (r.V.determinant() < 0.0) {
        r.V.col(D - 1) *= -1.0;
        r.sigma[D - 1] *= -1.0;
    }
    return r;
}

/// Energy density penalizing deviation of the singular values from 1 and of
/// the volume ratio from 1; robust under large rotations.
template <int D>
double fixed_corotated_energy(const Mat<D>& F, const ElasticParams& p) {
    const SvdResult<D> s = svd_polar(F);
    const double J = F.determinant();
    double e = 0.0;
    for (int i = 0; i < D; ++i) e += (s.sigma[i] - 1.0) * (s.sigma[i] - 1.0);
    return p.mu * e + 0.5 * p.lambda * (J - 1.0) * (J - 1.0);
}

/// First Piola-Kirchhoff stress of the fixed-corotated energy:
/// P = 2 mu (F - R) + lambda (J - 1) J F^{-T} with R = U V^T.
template <int D>
Mat<D> fixed_corotated_stress(const Mat<D>& F, const ElasticParams& p) {
    const double J = F.determinant();
    if (J <= 1e-8)
        throw DegenerateElement("fixed_corotated_stress: J <= 1e-8 (J=" + std::to_string(J) + ")");
    const SvdResult<D> s = svd_polar(F);
    const Mat<D> R = s.U * s.V.transpose();
    return 2.0 * p.mu * (F - R) + p.lambda * (J - 1.0) * J * F.inverse().transpose();
}

/// St. Venant-Kirchhoff energy in Hencky (logarithmic) strain:
/// psi = mu tr(eta^2) + lambda/2 tr(eta)^2, eta = 1/2 ln(F F^T).
template <int D>
double stvk_hencky_energy(const Mat<D>& F, const ElasticParams& p) {
    const SvdResult<D> s = svd_polar(F);
    double tr2 = 0.0, tr = 0.0;
    for (int i = 0; i < D; ++i) {
        if (s.sigma[i] <= 0.0)
            throw DegenerateElement("stvk_hencky_energy: non-positive singular value");
        const double l = std::log(s.sigma[i]);
        tr2 += l * l;
        tr += l;
    }
    return p.mu * tr2 + 0.5 * p.lambda * tr * tr;
}

/// P = U diag((2 mu ln s_i + lambda sum_j ln s_j) / s_i) V^T.
template <int D>
Mat<D> stvk_hencky_stress(const Mat<D>& F, const ElasticParams& p) {
    const SvdResult<D> s = svd_polar(F);
    Vec<D> logs;
    for (int i = 0; i < D; ++i) {
        if (s.sigma[i] <= 1e-8)
            throw DegenerateElement("stvk_hencky_stress: singular value <= 1e-8");
        logs[i] = std::log(s.sigma[i]);
    }
    const double trace = logs.sum();
    Vec<D> tau;
    for (int i = 0; i < D; ++i)
        tau[i] = (2.0 * p.mu * logs[i] + p.lambda * trace) / s.sigma[i];
    return s.U * tau.asDiagonal() * s.V.transpose();
}

/// Drucker-Prager return map in Hencky-strain space. Volumetric expansion
/// projects to the cone tip (Sigma = I); states inside the friction cone are
/// returned unchanged; everything else is projected onto the cone along the
/// deviatoric direction.
template <int D>
Mat<D> drucker_prager_project(const Mat<D>& F_trial, const ElasticParams& e,
                              const PlasticParams& pl) {
    const SvdResult<D> s = svd_polar(F_trial);
    Vec<D> eps;
    for (int i = 0; i < D; ++i) {
        if (s.sigma[i] <= 1e-8)
            throw DegenerateElement("drucker_prager_project: degenerate singular value");
        eps[i] = std::log(s.sigma[i]);
    }
    const double trace = eps.sum();
    if (trace > 0.0) return s.U * s.V.transpose(); // cone tip
    const Vec<D> dev = eps - Vec<D>::Constant(trace / D);
    const double dev_norm = dev.norm();
    const double delta_gamma =
        dev_norm + pl.alpha_dp * (D * e.lambda + 2.0 * e.mu) / (2.0 * e.mu) * trace;
    if (delta_gamma <= 0.0) return F_trial;
    const Vec<D> projected = eps - (delta_gamma / dev_norm) * dev;
    Vec<D> sigma_new;
    for (int i = 0; i < D; ++i) sigma_new[i] = std::exp(projected[i]);
    return s.U * sigma_new.asDiagonal() * s.V.transpose();
}

/// Value of the yield function after a trial decomposition; <= 0 inside the
/// friction cone. Exposed for verification.
template <int D>
double drucker_prager_yield(const Mat<D>& F, const ElasticParams& e, const PlasticParams& pl) {
    const SvdResult<D> s = svd_polar(F);
    Vec<D> eps;
    for (int i = 0; i < D; ++i) eps[i] = std::log(s.sigma[i]);
    const double trace = eps.sum();
    const Vec<D> dev = eps - Vec<D>::Constant(trace / D);
    return dev.norm() + pl.alpha_dp * (D * e.lambda + 2.0 * e.mu) / (2.0 * e.mu) * trace;
}

} // namespace ember::constitutive
