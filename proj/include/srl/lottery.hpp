#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/network.hpp"
#include "srl/prune.hpp"
#include "srl/train.hpp"

namespace srl {

enum class PruneMethod { kGup, kLup, kFp, kNs };

inline const char* prune_method_name(PruneMethod m) {
    switch (m) {
        case PruneMethod::kGup: return "gup";
        case PruneMethod::kLup: return "lup";
        case PruneMethod::kFp: return "fp";
        case PruneMethod::kNs: return "ns";
    }
    throw std::logic_error("unknown pruning method");
}

inline PruneMethod prune_method_from_name(const std::string& name) {
    if (name == "gup") return PruneMethod::kGup;
    if (name == "lup") return PruneMethod::kLup;
    if (name == "fp") return PruneMethod::kFp;
    if (name == "ns") return PruneMethod::kNs;
    throw std::invalid_argument("unknown pruning method: " + name);
}

struct LotteryConfig {
    double p_percent = 20.0;      // per iteration, of the ORIGINAL prunable count
    int iterations = 3;           // K
    int epochs_per_iteration = 1; // N, fresh Stop-E schedule each iteration
    TrainConfig train;            // template for inner training
    PruneMethod method = PruneMethod::kGup;
    bool of_remaining = false;    // Frankle-Carbin convention: p% of survivors each round
    bool gup_include_final = true;

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("lottery: iterations must be >= 1");
        if (epochs_per_iteration < 1)
            throw std::invalid_argument("lottery: epochs per iteration must be >= 1");
        if (!(p_percent > 0.0)) throw std::invalid_argument("lottery: p must be > 0");
        if (!(static_cast<double>(iterations) * p_percent < 100.0))
            throw std::invalid_argument("lottery: K*p must stay below 100%");
        if (of_remaining && (method == PruneMethod::kFp || method == PruneMethod::kNs))
            throw std::invalid_argument(
                "lottery: of-remaining schedule applies to unstructured methods only");
        TrainConfig probe = train;
        probe.mode = StopMode::kStopE;
        probe.total_epochs = epochs_per_iteration;
        probe.allow_short_schedule = true;
        probe.validate();
    }
};

struct IterationRow {
    int iteration = 0;            // 1-based k
    double cumulative_ratio = 0.0;  // pruned fraction of the prunable pool, in %
    double post_train_clean_acc = 0.0;
    double post_train_adv_acc = 0.0;
};

struct LotteryResult {
    Mask mask;            // M_K
    Network ticket;       // theta_0 masked by M_K, unmasked weights bit-equal to theta_0
    std::vector<IterationRow> rows;
    std::vector<Mask> masks;        // M_1..M_K
    std::vector<Network> rewound;   // theta_0 masked by M_k, per iteration
    std::vector<ExperimentRecord> train_records;
    bool ns_warning = false;
};

namespace detail {

inline std::size_t pool_size(const Network& net, const Mask& mask, bool include_final) {
    return surviving_entries(net, mask, include_final).size();
}

inline std::size_t pool_zeros(const Network& net, const Mask& ones, const Mask& current,
                              bool include_final) {
    return pool_size(net, ones, include_final) - pool_size(net, current, include_final);
}

}  // namespace detail

/// Iterative adversarial lottery-ticket search: K rounds of (train N epochs,
/// prune to the cumulative target, rewind survivors to theta_0). Under the
/// default additive schedule the cumulative target after round k is k*p% of
/// the ORIGINAL prunable count; of_remaining switches to p% of the current
/// survivors per round.
inline LotteryResult find_winning_ticket(const Network& theta0, std::span<const Sample> train_set,
                                         std::span<const Sample> val_set,
                                         const LotteryConfig& cfg) {
    cfg.validate();
    theta0.validate();

    Mask ones = Mask::ones_like(theta0);
    std::size_t original_pool = detail::pool_size(theta0, ones, cfg.gup_include_final);

    LotteryResult result;
    result.mask = ones;
    result.ticket = theta0;
    Network current = theta0;

    for (int k = 1; k <= cfg.iterations; ++k) {
        TrainConfig inner = cfg.train;
        inner.mode = StopMode::kStopE;
        inner.total_epochs = cfg.epochs_per_iteration;
        inner.allow_short_schedule = true;
        inner.seed = derive_seed(cfg.train.seed, 0x6c6f7474ull, static_cast<std::uint64_t>(k));
        TrainResult trained = adversarial_train(current, &result.mask, train_set, val_set, inner);
        if (trained.diverged)
            throw std::runtime_error("lottery: training diverged at iteration " + std::to_string(k));

        Mask next = result.mask;
        double cumulative_percent = static_cast<double>(k) * cfg.p_percent;
        switch (cfg.method) {
            case PruneMethod::kGup: {
                if (cfg.of_remaining) {
                    next = gup(trained.net, result.mask, cfg.p_percent, cfg.gup_include_final);
                } else {
                    std::size_t target = detail::round_half_up(cumulative_percent / 100.0 *
                                                               static_cast<double>(original_pool));
                    std::size_t have = detail::pool_zeros(trained.net, ones, result.mask,
                                                          cfg.gup_include_final);
                    std::size_t extra = target > have ? target - have : 0;
                    next = detail::mask_smallest_global(trained.net, result.mask, extra,
                                                        cfg.gup_include_final, "lottery-gup");
                }
                break;
            }
            case PruneMethod::kLup: {
                if (cfg.of_remaining) {
                    next = lup(trained.net, result.mask, cfg.p_percent, cfg.gup_include_final);
                } else {
                    std::vector<std::size_t> counts(theta0.weights.size(), 0);
                    std::size_t last = theta0.weights.size() - 1;
                    for (std::size_t l = 0; l < theta0.weights.size(); ++l) {
                        if (l == last && !cfg.gup_include_final) continue;
                        std::size_t layer_total = theta0.weights[l].data.size();
                        std::size_t target = detail::round_half_up(
                            cumulative_percent / 100.0 * static_cast<double>(layer_total));
                        std::size_t have = 0;
                        for (std::uint8_t m : result.mask.layers[l]) have += m == 0;
                        counts[l] = target > have ? target - have : 0;
                    }
                    next = detail::mask_smallest_per_layer(trained.net, result.mask, counts,
                                                           cfg.gup_include_final, "lottery-lup");
                }
                break;
            }
            case PruneMethod::kFp:
                next = fp(trained.net, result.mask, cumulative_percent);
                break;
            case PruneMethod::kNs: {
                NsResult r = ns(trained.net, result.mask, cumulative_percent);
                next = r.mask;
                result.ns_warning = result.ns_warning || r.guard_warning;
                break;
            }
        }

        result.mask = next;
        current = rewind(trained.net, theta0, result.mask);

        IterationRow row;
        row.iteration = k;
        row.cumulative_ratio = 100.0 *
                               static_cast<double>(detail::pool_zeros(theta0, ones, result.mask,
                                                                     cfg.gup_include_final)) /
                               static_cast<double>(original_pool);
        if (!trained.record.rows.empty()) {
            row.post_train_clean_acc = trained.record.rows.back().clean_acc;
            row.post_train_adv_acc = trained.record.rows.back().adv_acc;
        }
        result.rows.push_back(row);
        result.masks.push_back(result.mask);
        result.rewound.push_back(current);
        result.train_records.push_back(std::move(trained.record));
    }

    result.ticket = current;
    return result;
}

/// Train a fixed-mask ticket to completion.
inline TrainResult train_ticket(const Network& ticket, const Mask& mask,
                                std::span<const Sample> train_set,
                                std::span<const Sample> val_set, const TrainConfig& cfg) {
    return adversarial_train(ticket, &mask, train_set, val_set, cfg);
}

}  // namespace srl
