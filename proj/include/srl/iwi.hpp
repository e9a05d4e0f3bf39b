#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "srl/lottery.hpp"
#include "srl/network.hpp"
#include "srl/train.hpp"

namespace srl {

struct IwiConfig {
    LotteryConfig lottery;
    int finetune_epochs = 120;  // N_f
    TrainConfig continuation;   // full-network phase: Stop-E epochs or Stop-C
    bool resume_lr = false;     // start phase 4 at the fine-tune phase's final lr

    void validate() const {
        lottery.validate();
        if (finetune_epochs < 1) throw std::invalid_argument("iwi: N_f must be >= 1");
        continuation.validate();
    }
};

/// Step-4 composition: the trained ticket's weights on surviving positions,
/// the original initialization on pruned positions. Pure selection, so the
/// result is bit-exact in both sources. Scaling factors come from the ticket.
inline Network compose_inheritance(const Network& ticket_trained, const Mask& mask,
                                   const Network& theta0) {
    mask.validate_against(ticket_trained);
    mask.validate_against(theta0);
    if (ticket_trained.dims != theta0.dims)
        throw std::invalid_argument("compose: networks must share dims");
    Network out = ticket_trained;
    for (std::size_t l = 0; l < out.weights.size(); ++l)
        for (std::size_t i = 0; i < out.weights[l].data.size(); ++i)
            out.weights[l].data[i] = mask.layers[l][i] != 0 ? ticket_trained.weights[l].data[i]
                                                            : theta0.weights[l].data[i];
    return out;
}

struct IwiResult {
    Network network;         // theta'' after full-capacity continuation
    LotteryResult lottery;   // phase 1
    TrainResult finetune;    // phase 2 (produces theta')
    Network composed;        // phase 3 snapshot, before any continuation step
    TrainResult continuation;  // phase 4 (all-ones mask)
    int total_epochs = 0;    // K*N + N_f + continuation epochs actually run
};

/// Inverse weights inheritance: find a winning ticket, fine-tune it, graft
/// the tuned weights back into the full network on the surviving positions
/// (pruned positions revert to theta_0), then train the full network.
inline IwiResult inverse_weights_inheritance(const Network& theta0,
                                             std::span<const Sample> train_set,
                                             std::span<const Sample> val_set,
                                             const IwiConfig& cfg) {
    cfg.validate();
    theta0.validate();

    IwiResult result;
    result.lottery = find_winning_ticket(theta0, train_set, val_set, cfg.lottery);

    TrainConfig ft = cfg.lottery.train;
    ft.mode = StopMode::kStopE;
    ft.total_epochs = cfg.finetune_epochs;
    ft.allow_short_schedule = true;
    ft.seed = derive_seed(cfg.lottery.train.seed, 0x66696e65ull);
    result.finetune = train_ticket(result.lottery.ticket, result.lottery.mask, train_set, val_set, ft);
    if (result.finetune.diverged) throw std::runtime_error("iwi: fine-tune phase diverged");

    result.composed = compose_inheritance(result.finetune.net, result.lottery.mask, theta0);

    TrainConfig cont = cfg.continuation;
    cont.seed = derive_seed(cfg.continuation.seed, 0x636f6e74ull);
    if (cfg.resume_lr && !result.finetune.record.rows.empty())
        cont.initial_lr = result.finetune.record.rows.back().lr;
    result.continuation = adversarial_train(result.composed, nullptr, train_set, val_set, cont);
    if (result.continuation.diverged) throw std::runtime_error("iwi: continuation phase diverged");

    result.network = result.continuation.net;
    result.total_epochs = cfg.lottery.iterations * cfg.lottery.epochs_per_iteration +
                          cfg.finetune_epochs +
                          static_cast<int>(result.continuation.record.rows.size());
    return result;
}

/// Comparison arm: plain dense adversarial training from theta_0 with the
/// total epoch budget matched to an IWI pipeline.
inline TrainResult baseline_train(const Network& theta0, std::span<const Sample> train_set,
                                  std::span<const Sample> val_set, const TrainConfig& template_cfg,
                                  int total_epochs) {
    if (total_epochs < 1) throw std::invalid_argument("baseline: budget must be >= 1 epoch");
    TrainConfig cfg = template_cfg;
    cfg.mode = StopMode::kStopE;
    cfg.total_epochs = total_epochs;
    cfg.allow_short_schedule = true;
    return adversarial_train(theta0, nullptr, train_set, val_set, cfg);
}

}  // namespace srl
