#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "srl/network.hpp"
#include "srl/parallel.hpp"
#include "srl/rng.hpp"

namespace srl {

/// L-infinity PGD threat model parameters, in input units.
struct AttackConfig {
    double epsilon = 8.0 / 255.0;
    double step_size = 2.0 / 255.0;
    int iterations = 10;
    bool random_start = true;
    std::optional<std::pair<double, double>> clamp;  // closed input interval, e.g. [0,1]

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("attack: epsilon must be > 0");
        if (!(step_size > 0.0)) throw std::invalid_argument("attack: step size must be > 0");
        if (iterations < 1) throw std::invalid_argument("attack: iterations must be >= 1");
        if (clamp && !(clamp->first < clamp->second))
            throw std::invalid_argument("attack: clamp interval must have low < high");
    }
};

namespace detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline void project(std::vector<double>& x, std::span<const double> center, double eps,
                    const std::optional<std::pair<double, double>>& clamp) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lo = center[i] - eps;
        double hi = center[i] + eps;
        if (clamp) {
            lo = std::max(lo, clamp->first);
            hi = std::min(hi, clamp->second);
        }
        x[i] = std::clamp(x[i], lo, hi);
    }
}

}  // namespace detail

/// Untargeted L-inf PGD: ascend the cross-entropy of the true label by sign
/// steps, projecting into the epsilon ball (and clamp box) after every move.
inline std::vector<double> pgd_attack(const Network& net, const Mask* mask,
                                      std::span<const double> x, int label,
                                      const AttackConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<double> adv(x.begin(), x.end());
    if (cfg.random_start) {
        for (double& v : adv) v += rng.uniform(-cfg.epsilon, cfg.epsilon);
        detail::project(adv, x, cfg.epsilon, cfg.clamp);
    }
    for (int it = 0; it < cfg.iterations; ++it) {
        auto [loss, grad] = loss_input_grad(net, mask, adv, label);
        (void)loss;
        for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += cfg.step_size * detail::sign(grad[i]);
        detail::project(adv, x, cfg.epsilon, cfg.clamp);
    }
    return adv;
}

struct EvalResult {
    std::size_t total = 0;
    std::size_t clean_correct = 0;
    std::size_t adv_correct = 0;
    double clean_accuracy = 0.0;
    double adversarial_accuracy = 0.0;
};

/// Clean and adversarial accuracy. A sample counts as adversarially correct
/// only if it is cleanly correct and PGD fails to change the prediction, so
/// adversarial accuracy never exceeds clean accuracy. Per-sample RNG streams
/// derive from (seed, index); the counting is order-independent.
inline EvalResult evaluate(const Network& net, const Mask* mask, std::span<const Sample> data,
                           const AttackConfig& cfg, std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
    cfg.validate();
    std::vector<std::uint8_t> clean_ok(data.size(), 0), adv_ok(data.size(), 0);
    parallel_for(data.size(), [&](std::size_t i) {
        const Sample& s = data[i];
        int pred = predicted_class(forward(net, mask, s.x));
        if (pred != s.label) return;
        clean_ok[i] = 1;
        Rng rng(derive_seed(seed, 0x65766c61ull, i));
        std::vector<double> adv = pgd_attack(net, mask, s.x, s.label, cfg, rng);
        if (predicted_class(forward(net, mask, adv)) == s.label) adv_ok[i] = 1;
    });
    EvalResult r;
    r.total = data.size();
    for (std::size_t i = 0; i < data.size(); ++i) {
        r.clean_correct += clean_ok[i];
        r.adv_correct += adv_ok[i];
    }
    r.clean_accuracy = static_cast<double>(r.clean_correct) / static_cast<double>(r.total);
    r.adversarial_accuracy = static_cast<double>(r.adv_correct) / static_cast<double>(r.total);
    return r;
}

/// Search configuration for the minimum flipping perturbation radius.
struct DistortionSearchConfig {
    double epsilon_max = 1.0;
    double resolution = 1e-3;  // 1/255 for image data
    AttackConfig inner;        // epsilon is substituted per probe

    void validate() const {
        if (!(resolution > 0.0)) throw std::invalid_argument("distortion: resolution must be > 0");
        if (!(epsilon_max > resolution))
            throw std::invalid_argument("distortion: epsilon_max must exceed resolution");
        AttackConfig probe = inner;
        probe.epsilon = epsilon_max;
        probe.validate();
    }
};

namespace detail {

inline bool probe_flips(const Network& net, const Mask* mask, std::span<const double> x, int label,
                        const DistortionSearchConfig& cfg, double eps, std::uint64_t seed,
                        std::uint64_t probe_id) {
    AttackConfig probe = cfg.inner;
    probe.epsilon = eps;
    Rng rng(derive_seed(seed, 0x64697374ull, probe_id));
    std::vector<double> adv = pgd_attack(net, mask, x, label, probe, rng);
    return predicted_class(forward(net, mask, adv)) != label;
}

}  // namespace detail

/// Minimum PGD epsilon that crafts a valid adversarial example for x, within
/// `resolution`: exponential bracketing followed by bisection. Returns 0 for a
/// cleanly misclassified input and nullopt when even epsilon_max never flips.
inline std::optional<double> distortion_bound(const Network& net, const Mask* mask,
                                              std::span<const double> x, int label,
                                              const DistortionSearchConfig& cfg,
                                              std::uint64_t seed) {
    cfg.validate();
    if (predicted_class(forward(net, mask, x)) != label) return 0.0;

    std::uint64_t probe_id = 0;
    double lo = 0.0;            // never flips
    double hi = cfg.resolution; // candidate flip radius
    bool found = false;
    while (hi < cfg.epsilon_max) {
        if (detail::probe_flips(net, mask, x, label, cfg, hi, seed, probe_id++)) {
            found = true;
            break;
        }
        lo = hi;
        hi = std::min(hi * 2.0, cfg.epsilon_max);
    }
    if (!found && !detail::probe_flips(net, mask, x, label, cfg, cfg.epsilon_max, seed, probe_id++))
        return std::nullopt;
    if (!found) hi = cfg.epsilon_max;

    while (hi - lo > cfg.resolution) {
        double mid = 0.5 * (lo + hi);
        if (detail::probe_flips(net, mask, x, label, cfg, mid, seed, probe_id++))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

struct DistortionRow {
    std::size_t sample_index = 0;
    bool clean_correct = false;
    std::optional<double> bound;
};

struct DistortionReport {
    std::vector<DistortionRow> rows;
    std::optional<double> mean;    // over samples with a finite bound
    std::size_t bounded_count = 0;
    std::size_t unbounded_count = 0;  // samples where even epsilon_max never flips
};

inline DistortionReport mean_distortion(const Network& net, const Mask* mask,
                                        std::span<const Sample> data,
                                        const DistortionSearchConfig& cfg, std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("mean_distortion: empty dataset");
    cfg.validate();
    DistortionReport report;
    report.rows.resize(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        const Sample& s = data[i];
        DistortionRow row;
        row.sample_index = i;
        row.clean_correct = predicted_class(forward(net, mask, s.x)) == s.label;
        row.bound = distortion_bound(net, mask, s.x, s.label, cfg, derive_seed(seed, 0x6d647374ull, i));
        report.rows[i] = std::move(row);
    });
    double sum = 0.0;
    for (const auto& row : report.rows) {
        if (row.bound) {
            sum += *row.bound;
            ++report.bounded_count;
        } else {
            ++report.unbounded_count;
        }
    }
    if (report.bounded_count > 0) report.mean = sum / static_cast<double>(report.bounded_count);
    return report;
}

}  // namespace srl
