#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ember/errors.hpp"
#include "ember/parallel.hpp"

namespace ember::solver {

/// Compressed sparse row matrix assembled once per solve.
struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;

    static SparseMatrix from_triplets(int n, std::vector<std::vector<std::pair<int, double>>>& rows) {
        SparseMatrix m;
        m.n = n;
        m.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
        for (int r = 0; r < n; ++r) {
            auto& entries = rows[static_cast<std::size_t>(r)];
            std::sort(entries.begin(), entries.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            // collapse duplicate columns
            std::size_t out = 0;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                if (out > 0 && entries[out - 1].first == entries[i].first)
                    entries[out - 1].second += entries[i].second;
                else
                    entries[out++] = entries[i];
            }
            entries.resize(out);
            m.row_ptr[static_cast<std::size_t>(r) + 1] =
                m.row_ptr[static_cast<std::size_t>(r)] + static_cast<int>(out);
        }
        m.col.reserve(static_cast<std::size_t>(m.row_ptr.back()));
        m.val.reserve(static_cast<std::size_t>(m.row_ptr.back()));
        for (int r = 0; r < n; ++r) {
            for (const auto& [c, v] : rows[static_cast<std::size_t>(r)]) {
                m.col.push_back(c);
                m.val.push_back(v);
            }
        }
        return m;
    }

    void multiply(std::span<const double> x, std::span<double> y, int threads = 1) const {
        parallel_for(static_cast<std::size_t>(n), threads,
                     [&](std::size_t begin, std::size_t end, int) {
                         for (std::size_t r = begin; r < end; ++r) {
                             double acc = 0.0;
                             for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                                 acc += val[static_cast<std::size_t>(k)] *
                                        x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
                             y[r] = acc;
                         }
                     });
    }

    double max_asymmetry() const {
        double worst = 0.0;
        for (int r = 0; r < n; ++r) {
            for (int k = row_ptr[static_cast<std::size_t>(r)];
                 k < row_ptr[static_cast<std::size_t>(r) + 1]; ++k) {
                const int c = col[static_cast<std::size_t>(k)];
                const double v = val[static_cast<std::size_t>(k)];
                double vt = 0.0;
                for (int j = row_ptr[static_cast<std::size_t>(c)];
                     j < row_ptr[static_cast<std::size_t>(c) + 1]; ++j) {
                    if (col[static_cast<std::size_t>(j)] == r) {
                        vt = val[static_cast<std::size_t>(j)];
                        break;
                    }
                }
                worst = std::max(worst, std::abs(v - vt));
            }
        }
        return worst;
    }
};

struct CgOptions {
    double tol = 1e-6; // relative residual, measured in the max norm
    int max_iterations = 1000;
};

struct CgResult {
    int iterations = 0;
    double rel_residual = 0.0;
};

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Hestenes-Stiefel conjugate gradient for symmetric positive (semi)definite
/// systems. x holds the initial guess on entry and the solution on exit.
/// Stops when max|r| <= tol * max|b|; throws SolverError past max_iterations.
inline CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b,
                                   std::span<double> x, const CgOptions& opts, int threads = 1) {
    const std::size_t n = static_cast<std::size_t>(A.n);
    const double b_inf = max_abs(b);
    if (b_inf == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0};
    }
    std::vector<double> r(n), p(n), Ap(n);
    A.multiply(x, r, threads);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    double r_inf = max_abs(r);
    if (r_inf <= opts.tol * b_inf) return {0, r_inf / b_inf};
    p.assign(r.begin(), r.end());
    double rho = 0.0;
    for (std::size_t i = 0; i < n; ++i) rho += r[i] * r[i];
    for (int it = 1; it <= opts.max_iterations; ++it) {
        A.multiply(p, Ap, threads);
        double pAp = 0.0;
        for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (pAp <= 0.0)
            throw SolverError("conjugate_gradient: matrix not positive definite (p'Ap=" +
                                  std::to_string(pAp) + ")",
                              r_inf / b_inf, it);
        const double alpha = rho / pAp;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        r_inf = max_abs(r);
        if (r_inf <= opts.tol * b_inf) return {it, r_inf / b_inf};
        double rho_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rho_new += r[i] * r[i];
        const double beta = rho_new / rho;
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw SolverError("conjugate_gradient: no convergence after " +
                          std::to_string(opts.max_iterations) +
                          " iterations (rel residual " + std::to_string(r_inf / b_inf) + ")",
                      r_inf / b_inf, opts.max_iterations);
}

} // namespace ember::solver
