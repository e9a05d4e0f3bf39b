#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/network.hpp"
#include "srl/norms.hpp"
#include "srl/rng.hpp"

namespace srl {

/// The two admissible Hoelder-conjugate norm pairs: perturbations measured in
/// L_p, gradients and class-vector differences in L_q.
class NormPair {
  public:
    static NormPair l2() { return NormPair(2.0, 2.0, "l2"); }
    static NormPair linf() { return NormPair(std::numeric_limits<double>::infinity(), 1.0, "linf"); }
    static NormPair from_name(const std::string& name) {
        if (name == "l2") return l2();
        if (name == "linf") return linf();
        throw std::invalid_argument("norm pair must be l2 or linf, got: " + name);
    }

    double p() const { return p_; }
    double q() const { return q_; }
    const char* name() const { return name_; }
    bool operator==(const NormPair& other) const { return q_ == other.q_; }

  private:
    NormPair(double p, double q, const char* name) : p_(p), q_(q), name_(name) {}
    double p_;
    double q_;
    const char* name_;
};

namespace detail {

/// Effective weight matrices with masked entries zeroed and each hidden
/// layer's scaling factors folded into the downstream matrix's rows.
inline std::vector<Matrix> folded_weights(const Network& net, const Mask* mask) {
    Network eff = apply_mask(net, mask);
    for (std::size_t h = 0; h < eff.scaling.size(); ++h) {
        Matrix& down = eff.weights[h + 1];
        for (std::size_t i = 0; i < down.rows; ++i) {
            double g = eff.scaling[h][i];
            for (std::size_t j = 0; j < down.cols; ++j) down(i, j) *= g;
        }
    }
    return std::move(eff.weights);
}

/// Argmax with lowest-index tie-break (certification treats ties as zero
/// margin rather than refusing to pick a class).
inline int argmax_class(const std::vector<double>& logits) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[best]) best = k;
    return static_cast<int>(best);
}

}  // namespace detail

/// Global Lipschitz upper bound on g_yhat - g_k: the q-norm of the folded
/// final-layer column difference times the product of the hidden layers'
/// induced p-norms. Independent of the input point.
inline double lipschitz_bound(const Network& net, const Mask* mask, int yhat, int k,
                              const NormPair& pair) {
    net.validate();
    int classes = static_cast<int>(net.class_count());
    if (yhat < 0 || yhat >= classes || k < 0 || k >= classes)
        throw std::invalid_argument("lipschitz_bound: class index out of range");
    if (yhat == k) throw std::invalid_argument("lipschitz_bound: classes must differ");

    std::vector<Matrix> w = detail::folded_weights(net, mask);
    const Matrix& final_w = w.back();
    std::vector<double> diff(final_w.rows);
    for (std::size_t i = 0; i < final_w.rows; ++i)
        diff[i] = final_w(i, static_cast<std::size_t>(yhat)) -
                  final_w(i, static_cast<std::size_t>(k));
    double bound = vector_norm(diff, pair.q());
    for (std::size_t l = 0; l + 1 < w.size(); ++l) bound *= induced_norm(w[l], pair.p());
    return bound;
}

struct LipschitzCertificate {
    std::vector<double> x;
    int predicted = 0;            // argmax class, lowest index on ties
    std::vector<double> margins;  // g_yhat - g_k per class; entry at yhat is 0
    std::vector<double> bounds;   // L^k per class; entry at yhat is 0
    double radius = 0.0;
    double p = 0.0;
    double q = 0.0;
};

/// Certified radius at x: min over k != yhat of margin_k / L^k. A zero bound
/// with positive margin imposes no constraint (ratio +inf); any non-positive
/// margin (including argmax ties) pins the radius to 0.
inline LipschitzCertificate certified_radius(const Network& net, const Mask* mask,
                                             std::span<const double> x, const NormPair& pair) {
    std::vector<double> logits = forward(net, mask, x);
    LipschitzCertificate cert;
    cert.x.assign(x.begin(), x.end());
    cert.predicted = detail::argmax_class(logits);
    cert.p = pair.p();
    cert.q = pair.q();
    cert.margins.assign(logits.size(), 0.0);
    cert.bounds.assign(logits.size(), 0.0);

    double radius = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(logits.size()); ++k) {
        if (k == cert.predicted) continue;
        double margin = logits[static_cast<std::size_t>(cert.predicted)] -
                        logits[static_cast<std::size_t>(k)];
        double bound = lipschitz_bound(net, mask, cert.predicted, k, pair);
        cert.margins[static_cast<std::size_t>(k)] = margin;
        cert.bounds[static_cast<std::size_t>(k)] = bound;
        double ratio;
        if (margin <= 0.0)
            ratio = 0.0;
        else if (bound == 0.0)
            ratio = std::numeric_limits<double>::infinity();
        else
            ratio = margin / bound;
        radius = std::min(radius, ratio);
    }
    if (logits.size() < 2) radius = std::numeric_limits<double>::infinity();
    cert.radius = radius;
    return cert;
}

/// Sampled lower bound on the local Lipschitz constant of g_yhat - g_k over
/// the p-ball of radius R around x: the max gradient q-norm over n uniform
/// draws. Always at or below lipschitz_bound.
inline double empirical_lipschitz(const Network& net, const Mask* mask, std::span<const double> x,
                                  int k, int yhat, double radius, int samples,
                                  const NormPair& pair, Rng& rng) {
    if (samples < 1) throw std::invalid_argument("empirical_lipschitz: need >= 1 sample");
    if (!(radius > 0.0)) throw std::invalid_argument("empirical_lipschitz: radius must be > 0");
    std::size_t dim = x.size();
    std::vector<double> point(dim);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        if (pair.p() == 2.0) {
            // Uniform in the L2 ball: Gaussian direction, radius scaled by u^(1/dim).
            double norm_sq = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                point[i] = rng.normal();
                norm_sq += point[i] * point[i];
            }
            double norm = std::sqrt(norm_sq);
            double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
            double scale = norm > 0.0 ? r / norm : 0.0;
            for (std::size_t i = 0; i < dim; ++i) point[i] = x[i] + point[i] * scale;
        } else {
            for (std::size_t i = 0; i < dim; ++i) point[i] = x[i] + rng.uniform(-radius, radius);
        }
        std::vector<double> grad = margin_input_grad(net, mask, point, k, yhat);
        best = std::max(best, vector_norm(grad, pair.q()));
    }
    return best;
}

/// Exhaustively enumerate a grid over the p-ball of radius r*(1-1e-9) around
/// x and count points whose argmax differs from x's. Sound certification
/// implies a zero count. Input dimension is capped at 3.
inline std::size_t grid_soundness_check(const Network& net, const Mask* mask,
                                        std::span<const double> x, double r,
                                        const NormPair& pair, double grid_step) {
    if (x.size() > 3)
        throw std::invalid_argument("grid_soundness_check: input dimension must be <= 3");
    if (!(grid_step > 0.0)) throw std::invalid_argument("grid_soundness_check: step must be > 0");
    if (!std::isfinite(r))
        throw std::invalid_argument("grid_soundness_check: radius must be finite (cap it first)");
    if (r <= 0.0) return 0;

    int yhat = detail::argmax_class(forward(net, mask, x));
    double shrunk = r * (1.0 - 1e-9);
    long steps = static_cast<long>(std::floor(shrunk / grid_step));
    std::size_t violations = 0;
    std::vector<double> probe(x.begin(), x.end());
    std::vector<long> idx(x.size(), -steps);
    bool l2 = pair.p() == 2.0;
    while (true) {
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            double off = static_cast<double>(idx[d]) * grid_step;
            probe[d] = x[d] + off;
            norm_sq += off * off;
        }
        if (!l2 || norm_sq <= shrunk * shrunk)
            if (detail::argmax_class(forward(net, mask, probe)) != yhat) ++violations;
        std::size_t d = 0;
        for (; d < x.size(); ++d) {
            if (++idx[d] <= steps) break;
            idx[d] = -steps;
        }
        if (d == x.size()) break;
    }
    return violations;
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
    std::size_t underflow = 0;
    std::size_t overflow = 0;
    std::size_t masked = 0;  // masked-out entries, excluded from the bins
    std::size_t total = 0;   // all weight entries

    double bin_lo(std::size_t i) const {
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size());
    }
    double bin_hi(std::size_t i) const {
        return lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(counts.size());
    }
};

/// Histogram of surviving weights over the closed range [lo, hi]; values
/// outside the range land in the underflow/overflow tallies and masked
/// entries are excluded but counted, so bins + under + over + masked = total.
inline Histogram weight_histogram(const Network& net, const Mask* mask, std::size_t bins,
                                  double lo, double hi) {
    if (bins < 1) throw std::invalid_argument("weight_histogram: need >= 1 bin");
    if (!(lo < hi)) throw std::invalid_argument("weight_histogram: degenerate range");
    if (mask) mask->validate_against(net);
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const Matrix& w = net.weights[l];
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            ++h.total;
            if (mask && mask->layers[l][i] == 0) {
                ++h.masked;
                continue;
            }
            double v = w.data[i];
            if (v < lo) {
                ++h.underflow;
            } else if (v > hi) {
                ++h.overflow;
            } else {
                std::size_t b = static_cast<std::size_t>((v - lo) / width);
                h.counts[std::min(b, bins - 1)] += 1;
            }
        }
    }
    return h;
}

}  // namespace srl
