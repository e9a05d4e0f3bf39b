#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/attack.hpp"
#include "srl/network.hpp"
#include "srl/parallel.hpp"
#include "srl/rng.hpp"

namespace srl {

enum class StopMode { kStopE, kStopC };

struct TrainConfig {
    double initial_lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t batch_size = 128;
    StopMode mode = StopMode::kStopE;
    int total_epochs = 240;            // Stop-E
    bool allow_short_schedule = false; // permit Stop-E budgets below 3 (lottery search rounds)
    int patience_epochs = 10;          // Stop-C
    double relative_threshold = 1e-5;  // Stop-C
    int max_decays = 2;                // Stop-C
    int stop_c_epoch_cap = 10000;      // Stop-C safety valve
    AttackConfig attack;               // inner maximization
    double ns_l1_lambda = 0.0;         // L1 penalty on scaling factors (0 disables)
    bool train_scaling = false;        // update scaling factors alongside weights
    bool monitor_natural_loss = false; // Stop-C watches natural instead of PGD val loss
    std::uint64_t seed = 0;

    void validate() const {
        if (!(initial_lr > 0.0)) throw std::invalid_argument("train: initial_lr must be > 0");
        if (!(momentum >= 0.0 && momentum < 1.0))
            throw std::invalid_argument("train: momentum must be in [0,1)");
        if (!(weight_decay >= 0.0))
            throw std::invalid_argument("train: weight_decay must be >= 0");
        if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
        if (mode == StopMode::kStopE) {
            if (total_epochs < (allow_short_schedule ? 1 : 3))
                throw std::invalid_argument("train: stop-e needs total_epochs >= 3");
        } else {
            if (patience_epochs < 1)
                throw std::invalid_argument("train: stop-c needs patience >= 1");
            if (!(relative_threshold > 0.0))
                throw std::invalid_argument("train: stop-c needs relative_threshold > 0");
            if (max_decays < 1) throw std::invalid_argument("train: stop-c needs max_decays >= 1");
            if (stop_c_epoch_cap < 1)
                throw std::invalid_argument("train: stop-c epoch cap must be >= 1");
        }
        if (!(ns_l1_lambda >= 0.0))
            throw std::invalid_argument("train: ns_l1_lambda must be >= 0");
        attack.validate();
    }
};

struct EpochRow {
    int epoch = 0;
    double lr = 0.0;
    double train_adv_loss = 0.0;
    double val_loss = 0.0;
    double clean_acc = 0.0;
    double adv_acc = 0.0;
};

struct LayerNorms {
    std::size_t l0 = 0;  // nonzero entries
    double l1 = 0.0;
    double l2 = 0.0;
};

inline std::vector<LayerNorms> compute_layer_norms(const Network& net) {
    std::vector<LayerNorms> out;
    out.reserve(net.weights.size());
    for (const Matrix& w : net.weights) {
        LayerNorms n;
        double sq = 0.0;
        for (double v : w.data) {
            if (v != 0.0) ++n.l0;
            n.l1 += std::abs(v);
            sq += v * v;
        }
        n.l2 = std::sqrt(sq);
        out.push_back(n);
    }
    return out;
}

struct ExperimentRecord {
    std::vector<EpochRow> rows;
    std::vector<LayerNorms> layer_norms;  // of the final weights
    double wall_clock_seconds = 0.0;
    int best_sum_epoch = -1;  // epoch maximizing clean_acc + adv_acc (earliest on ties)

    void validate() const {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].epoch <= rows[i - 1].epoch)
                throw std::logic_error("record: epochs must be strictly increasing");
            if (rows[i].lr > rows[i - 1].lr)
                throw std::logic_error("record: lr must be non-increasing");
        }
    }
};

/// Momentum buffers matching a network's parameter shapes.
struct SgdState {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> scaling;

    static SgdState zeros_like(const Network& net) {
        SgdState s;
        for (const Matrix& w : net.weights) s.weights.emplace_back(w.rows, w.cols);
        for (const auto& g : net.scaling) s.scaling.emplace_back(g.size(), 0.0);
        return s;
    }
};

/// One SGD-with-momentum update: v <- momentum*v + grad + weight_decay*w,
/// w <- w - lr*v. Masked entries keep v and w exactly zero. Scaling factors
/// skip weight decay but add the L1 subgradient ns_l1_lambda*sign(scale).
inline void sgd_step(Network& net, const Mask* mask, const Gradients& grads, SgdState& state,
                     double lr, double momentum, double weight_decay,
                     double ns_l1_lambda = 0.0, bool update_scaling = false) {
    if (grads.weights.size() != net.weights.size() || state.weights.size() != net.weights.size())
        throw std::invalid_argument("sgd_step: layer count mismatch");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        Matrix& w = net.weights[l];
        const Matrix& g = grads.weights[l];
        Matrix& v = state.weights[l];
        require_same_shape(w, g, "sgd_step gradient");
        require_same_shape(w, v, "sgd_step velocity");
        const std::vector<std::uint8_t>* m = mask ? &mask->layers[l] : nullptr;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            if (!std::isfinite(g.data[i]))
                throw std::runtime_error("sgd_step: non-finite gradient in layer " +
                                         std::to_string(l + 1) + " at entry " + std::to_string(i));
            if (m && (*m)[i] == 0) {
                v.data[i] = 0.0;
                w.data[i] = 0.0;
                continue;
            }
            v.data[i] = momentum * v.data[i] + g.data[i] + weight_decay * w.data[i];
            w.data[i] -= lr * v.data[i];
        }
    }
    if (!update_scaling) return;
    for (std::size_t l = 0; l < net.scaling.size(); ++l) {
        auto& s = net.scaling[l];
        const auto& g = grads.scaling[l];
        auto& v = state.scaling[l];
        if (g.size() != s.size() || v.size() != s.size())
            throw std::invalid_argument("sgd_step: scaling shape mismatch");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw std::runtime_error("sgd_step: non-finite scaling gradient in layer " +
                                         std::to_string(l + 1) + " at entry " + std::to_string(i));
            v[i] = momentum * v[i] + g[i] + ns_l1_lambda * detail::sign(s[i]);
            s[i] -= lr * v[i];
        }
    }
}

/// Stop-E: divide the initial lr by 10 at every third of the epoch budget.
inline double lr_schedule_stop_e(int total_epochs, double initial_lr, int epoch) {
    if (epoch < 0 || epoch >= total_epochs)
        throw std::invalid_argument("lr_schedule_stop_e: epoch out of range");
    int decades = (3 * epoch) / total_epochs;
    return initial_lr * std::pow(10.0, -decades);
}

/// Plateau-driven decay: after `patience` consecutive epochs without a
/// relative improvement > relative_threshold over the best-so-far, decay the
/// lr; after max_decays decays plus one further stagnation window, stop.
class StopCController {
  public:
    enum class Action { kContinue, kDecay, kStop };

    StopCController(int patience, double relative_threshold, int max_decays)
        : patience_(patience), relative_threshold_(relative_threshold), max_decays_(max_decays) {
        if (patience < 1) throw std::invalid_argument("stop-c: patience must be >= 1");
        if (!(relative_threshold > 0.0))
            throw std::invalid_argument("stop-c: relative_threshold must be > 0");
        if (max_decays < 1) throw std::invalid_argument("stop-c: max_decays must be >= 1");
    }

    Action observe(double val_loss) {
        if (!std::isfinite(val_loss)) throw std::invalid_argument("stop-c: loss must be finite");
        if (!has_best_) {
            has_best_ = true;
            best_ = val_loss;
            return Action::kContinue;
        }
        if (best_ - val_loss > relative_threshold_ * std::abs(best_)) {
            best_ = val_loss;
            stall_ = 0;
            return Action::kContinue;
        }
        if (++stall_ < patience_) return Action::kContinue;
        stall_ = 0;
        if (decays_ >= max_decays_) return Action::kStop;
        ++decays_;
        return Action::kDecay;
    }

    int decays() const { return decays_; }

  private:
    int patience_;
    double relative_threshold_;
    int max_decays_;
    bool has_best_ = false;
    double best_ = 0.0;
    int stall_ = 0;
    int decays_ = 0;
};

struct TrainResult {
    Network net;
    ExperimentRecord record;
    bool diverged = false;
};

namespace detail {

struct ValMetrics {
    double natural_loss = 0.0;
    double adv_loss = 0.0;
    double clean_acc = 0.0;
    double adv_acc = 0.0;
};

/// One validation sweep: clean/PGD accuracy (PGD credit requires clean
/// correctness) plus mean natural and adversarial cross-entropy.
inline ValMetrics validation_pass(const Network& net, const Mask* mask,
                                  std::span<const Sample> val, const AttackConfig& attack,
                                  std::uint64_t seed, int epoch) {
    struct Row {
        double nat_ce, adv_ce;
        std::uint8_t clean_ok, adv_ok;
    };
    std::vector<Row> rows(val.size());
    parallel_for(val.size(), [&](std::size_t i) {
        const Sample& s = val[i];
        std::vector<double> logits = forward(net, mask, s.x);
        Row row{};
        row.nat_ce = cross_entropy(logits, s.label);
        row.clean_ok = predicted_class(logits) == s.label ? 1 : 0;
        Rng rng(derive_seed(seed, 0x76616c61ull, static_cast<std::uint64_t>(epoch), i));
        std::vector<double> adv = pgd_attack(net, mask, s.x, s.label, attack, rng);
        std::vector<double> adv_logits = forward(net, mask, adv);
        row.adv_ce = cross_entropy(adv_logits, s.label);
        row.adv_ok = (row.clean_ok && predicted_class(adv_logits) == s.label) ? 1 : 0;
        rows[i] = row;
    });
    ValMetrics m;
    std::size_t clean = 0, adv = 0;
    for (const Row& r : rows) {
        m.natural_loss += r.nat_ce;
        m.adv_loss += r.adv_ce;
        clean += r.clean_ok;
        adv += r.adv_ok;
    }
    double inv = 1.0 / static_cast<double>(val.size());
    m.natural_loss *= inv;
    m.adv_loss *= inv;
    m.clean_acc = static_cast<double>(clean) * inv;
    m.adv_acc = static_cast<double>(adv) * inv;
    return m;
}

}  // namespace detail

/// Adversarial training: every minibatch is replaced by its PGD perturbation
/// before the gradient step. Shuffling and all attack randomness derive from
/// (seed, epoch, sample index), so identical configs replay bit-identically.
/// On divergence the record up to the failing epoch is preserved.
inline TrainResult adversarial_train(const Network& initial, const Mask* mask,
                                     std::span<const Sample> train_set,
                                     std::span<const Sample> val_set, const TrainConfig& cfg) {
    cfg.validate();
    initial.validate();
    if (mask) mask->validate_against(initial);
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("train: train and validation sets must be non-empty");

    auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    result.net = apply_mask(initial, mask);
    SgdState state = SgdState::zeros_like(result.net);
    StopCController controller(cfg.patience_epochs, cfg.relative_threshold, cfg.max_decays);
    double lr = cfg.initial_lr;
    double best_sum = -1.0;

    int epoch_limit = cfg.mode == StopMode::kStopE ? cfg.total_epochs : cfg.stop_c_epoch_cap;
    for (int epoch = 0; epoch < epoch_limit; ++epoch) {
        if (cfg.mode == StopMode::kStopE) lr = lr_schedule_stop_e(cfg.total_epochs, cfg.initial_lr, epoch);

        Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566ull, static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order = shuffled_indices(train_set.size(), shuffle_rng);

        double loss_sum = 0.0;
        bool finite = true;
        for (std::size_t start = 0; start < order.size() && finite; start += cfg.batch_size) {
            std::size_t end = std::min(start + cfg.batch_size, order.size());
            std::vector<Sample> batch(end - start);
            parallel_for(end - start, [&](std::size_t b) {
                const Sample& s = train_set[order[start + b]];
                Rng rng(derive_seed(cfg.seed, 0x61747261ull, static_cast<std::uint64_t>(epoch),
                                    order[start + b]));
                batch[b] = Sample{pgd_attack(result.net, mask, s.x, s.label, cfg.attack, rng),
                                  s.label};
            });
            auto [loss, grads] = loss_and_grads(result.net, mask, batch);
            if (!std::isfinite(loss)) {
                finite = false;
                break;
            }
            sgd_step(result.net, mask, grads, state, lr, cfg.momentum, cfg.weight_decay,
                     cfg.ns_l1_lambda, cfg.train_scaling);
            loss_sum += loss * static_cast<double>(batch.size());
        }
        if (!finite) {
            result.diverged = true;
            break;
        }
        double train_adv_loss = loss_sum / static_cast<double>(order.size());

        detail::ValMetrics vm =
            detail::validation_pass(result.net, mask, val_set, cfg.attack, cfg.seed, epoch);
        double val_loss = cfg.monitor_natural_loss ? vm.natural_loss : vm.adv_loss;
        if (!std::isfinite(val_loss)) {
            result.diverged = true;
            break;
        }
        result.record.rows.push_back(
            {epoch, lr, train_adv_loss, val_loss, vm.clean_acc, vm.adv_acc});
        if (vm.clean_acc + vm.adv_acc > best_sum) {
            best_sum = vm.clean_acc + vm.adv_acc;
            result.record.best_sum_epoch = epoch;
        }

        if (cfg.mode == StopMode::kStopC) {
            StopCController::Action act = controller.observe(val_loss);
            if (act == StopCController::Action::kDecay) lr /= 10.0;
            if (act == StopCController::Action::kStop) break;
        }
    }

    result.record.layer_norms = compute_layer_norms(result.net);
    result.record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.record.validate();
    return result;
}

}  // namespace srl
