#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "srl/matrix.hpp"
#include "srl/rng.hpp"

namespace srl {

namespace detail {

inline void require_finite(const Matrix& w, const char* what) {
    for (double v : w.data)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace detail

/// Exact L-infinity induced norm: maximum absolute row sum.
inline double inf_induced_norm(const Matrix& w) {
    detail::require_finite(w, "inf_induced_norm");
    double best = 0.0;
    for (std::size_t i = 0; i < w.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) sum += std::abs(w(i, j));
        best = std::max(best, sum);
    }
    return best;
}

/// Spectral norm (largest singular value) via power iteration on W^T W with
/// Rayleigh-quotient estimates; randomized restart if the estimate stalls
/// before the relative tolerance is met.
inline double spectral_norm(const Matrix& w, double rel_tol = 1e-10, int max_iters = 10000) {
    detail::require_finite(w, "spectral_norm");
    if (w.rows == 0 || w.cols == 0) return 0.0;
    bool all_zero = true;
    for (double v : w.data)
        if (v != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) return 0.0;

    const std::size_t n = w.cols;
    Matrix a(n, n);  // A = W^T W, symmetric PSD
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < w.rows; ++r) s += w(r, i) * w(r, j);
            a(i, j) = s;
        }

    Rng rng(0x73706563747231ull);
    double best_lambda = 0.0;
    std::vector<double> v(n), av(n);
    for (int restart = 0; restart < 5; ++restart) {
        for (double& e : v) e = rng.uniform(-1.0, 1.0);
        double lambda = 0.0;
        bool have_lambda = false;
        for (int it = 0; it < max_iters; ++it) {
            double vv = 0.0;
            for (std::size_t i = 0; i < n; ++i) vv += v[i] * v[i];
            if (vv == 0.0) break;  // degenerate start, try again
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
                av[i] = s;
            }
            double va = 0.0;
            for (std::size_t i = 0; i < n; ++i) va += v[i] * av[i];
            double estimate = va / vv;
            if (have_lambda && std::abs(estimate - lambda) <= rel_tol * std::max(estimate, 1e-300))
                return std::sqrt(std::max(estimate, 0.0));
            lambda = estimate;
            have_lambda = true;
            double norm = 0.0;
            for (double e : av) norm += e * e;
            norm = std::sqrt(norm);
            if (norm == 0.0) break;  // v landed in the kernel, restart
            for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / norm;
        }
        best_lambda = std::max(best_lambda, lambda);
    }
    return std::sqrt(std::max(best_lambda, 0.0));
}

/// Induced operator norm for p in {2, inf} only.
inline double induced_norm(const Matrix& w, double p) {
    if (p == 2.0) return spectral_norm(w);
    if (p == std::numeric_limits<double>::infinity()) return inf_induced_norm(w);
    throw std::invalid_argument("induced_norm: only p = 2 and p = inf are supported");
}

/// Vector q-norm for q in {1, 2} only.
inline double vector_norm(const std::vector<double>& v, double q) {
    if (q == 1.0) {
        double s = 0.0;
        for (double e : v) s += std::abs(e);
        return s;
    }
    if (q == 2.0) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    }
    throw std::invalid_argument("vector_norm: only q = 1 and q = 2 are supported");
}

}  // namespace srl
