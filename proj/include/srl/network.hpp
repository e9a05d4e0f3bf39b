#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/matrix.hpp"
#include "srl/rng.hpp"

namespace srl {

struct Sample {
    std::vector<double> x;
    int label = 0;
};

/// Bias-free dense ReLU classifier. weights[j] has shape dims[j] x dims[j+1];
/// column u of weights[j] feeds unit u of the next layer, and the columns of
/// the final matrix are the per-class score vectors. Hidden unit outputs are
/// multiplied by their scaling factor (all 1.0 unless trained otherwise).
struct Network {
    std::vector<std::size_t> dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> scaling;  // one vector per hidden layer

    std::size_t layer_count() const { return weights.size(); }
    std::size_t hidden_count() const { return weights.size() - 1; }
    std::size_t input_dim() const { return dims.front(); }
    std::size_t class_count() const { return dims.back(); }

    void validate() const {
        if (dims.size() < 2) throw std::invalid_argument("network: need at least input and output dims");
        if (dims.back() < 2) throw std::invalid_argument("network: need at least 2 classes");
        for (std::size_t w : dims)
            if (w < 1) throw std::invalid_argument("network: every layer width must be >= 1");
        if (weights.size() != dims.size() - 1)
            throw std::invalid_argument("network: weight count does not match dims");
        for (std::size_t j = 0; j < weights.size(); ++j) {
            if (weights[j].rows != dims[j] || weights[j].cols != dims[j + 1])
                throw std::invalid_argument("network: layer " + std::to_string(j + 1) +
                                            " has wrong shape");
        }
        if (scaling.size() != hidden_count())
            throw std::invalid_argument("network: scaling factor count does not match hidden layers");
        for (std::size_t j = 0; j < scaling.size(); ++j)
            if (scaling[j].size() != dims[j + 1])
                throw std::invalid_argument("network: scaling size mismatch at hidden layer " +
                                            std::to_string(j + 1));
    }

    /// Fresh network with He-style uniform weights U(-sqrt(6/fan_in), +sqrt(6/fan_in))
    /// and unit scaling factors.
    static Network init(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
        Network net;
        net.dims = std::move(layer_dims);
        if (net.dims.size() < 2) throw std::invalid_argument("network: need at least 2 dims");
        Rng rng(derive_seed(seed, 0x6e657477ull));
        for (std::size_t j = 0; j + 1 < net.dims.size(); ++j) {
            Matrix w(net.dims[j], net.dims[j + 1]);
            double bound = std::sqrt(6.0 / static_cast<double>(net.dims[j]));
            for (double& v : w.data) v = rng.uniform(-bound, bound);
            net.weights.push_back(std::move(w));
        }
        for (std::size_t j = 1; j + 1 < net.dims.size(); ++j)
            net.scaling.emplace_back(net.dims[j], 1.0);
        net.validate();
        return net;
    }

    bool operator==(const Network& other) const = default;
};

/// Binary keep/drop pattern over all weight matrices. Layer l is stored flat in
/// row-major order matching Matrix::data; entries are exactly 0 or 1.
struct Mask {
    std::vector<std::vector<std::uint8_t>> layers;

    static Mask ones_like(const Network& net) {
        Mask m;
        for (const Matrix& w : net.weights) m.layers.emplace_back(w.size(), std::uint8_t{1});
        return m;
    }

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.size();
        return n;
    }

    std::size_t zero_count() const {
        std::size_t n = 0;
        for (const auto& l : layers)
            for (std::uint8_t v : l)
                if (v == 0) ++n;
        return n;
    }

    double pruning_ratio() const {
        std::size_t t = total();
        return t == 0 ? 0.0 : static_cast<double>(zero_count()) / static_cast<double>(t);
    }

    void validate_against(const Network& net) const {
        if (layers.size() != net.weights.size())
            throw std::invalid_argument("mask: layer count does not match network");
        for (std::size_t j = 0; j < layers.size(); ++j) {
            if (layers[j].size() != net.weights[j].size())
                throw std::invalid_argument("mask: layer " + std::to_string(j + 1) +
                                            " size does not match weights");
            for (std::uint8_t v : layers[j])
                if (v > 1) throw std::invalid_argument("mask: entries must be exactly 0 or 1");
        }
    }

    bool operator==(const Mask& other) const = default;
};

/// Per-hidden-layer record of which units had strictly positive pre-activation.
struct ActivationPattern {
    std::vector<std::vector<std::uint8_t>> active;
};

/// Gradients shaped like a network's parameters.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> scaling;

    static Gradients zeros_like(const Network& net) {
        Gradients g;
        for (const Matrix& w : net.weights) g.weights.emplace_back(w.rows, w.cols, 0.0);
        for (const auto& s : net.scaling) g.scaling.emplace_back(s.size(), 0.0);
        return g;
    }
};

namespace detail {

// Masked weight read. Selection (not multiplication) so masked entries are a
// bit-exact 0.0 even when the stored weight is negative.
inline double masked(const Matrix& w, const std::vector<std::uint8_t>* m, std::size_t i,
                     std::size_t j) {
    if (m && (*m)[i * w.cols + j] == 0) return 0.0;
    return w(i, j);
}

struct ForwardCache {
    std::vector<std::vector<double>> activations;   // activations[0] = input, ..., last = logits
    std::vector<std::vector<double>> pre;           // hidden pre-activations only
};

inline void check_forward_args(const Network& net, const Mask* mask, std::size_t x_len) {
    if (x_len != net.input_dim())
        throw std::invalid_argument("forward: input length " + std::to_string(x_len) +
                                    " does not match input dim " + std::to_string(net.input_dim()));
    if (mask) mask->validate_against(net);
}

inline ForwardCache run_forward(const Network& net, const Mask* mask, std::span<const double> x) {
    check_forward_args(net, mask, x.size());
    ForwardCache cache;
    cache.activations.emplace_back(x.begin(), x.end());
    const std::size_t d = net.layer_count();
    for (std::size_t j = 0; j < d; ++j) {
        const Matrix& w = net.weights[j];
        const std::vector<std::uint8_t>* m = mask ? &mask->layers[j] : nullptr;
        const std::vector<double>& a = cache.activations.back();
        std::vector<double> z(w.cols, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            double ai = a[i];
            if (ai == 0.0) continue;
            for (std::size_t u = 0; u < w.cols; ++u) z[u] += masked(w, m, i, u) * ai;
        }
        if (j + 1 < d) {
            cache.pre.push_back(z);
            std::vector<double> out(w.cols);
            for (std::size_t u = 0; u < w.cols; ++u)
                out[u] = z[u] > 0.0 ? net.scaling[j][u] * z[u] : 0.0;
            cache.activations.push_back(std::move(out));
        } else {
            cache.activations.push_back(std::move(z));
        }
    }
    return cache;
}

/// Backpropagate a gradient seed at the logits down to the input, optionally
/// accumulating parameter gradients. Returns the input gradient. ReLU uses the
/// strict-positivity subgradient (derivative 0 at exactly 0).
inline std::vector<double> run_backward(const Network& net, const Mask* mask,
                                        const ForwardCache& cache, std::vector<double> logit_grad,
                                        Gradients* grads) {
    const std::size_t d = net.layer_count();
    std::vector<double> delta = std::move(logit_grad);  // gradient wrt current layer output
    for (std::size_t j = d; j-- > 0;) {
        const Matrix& w = net.weights[j];
        const std::vector<std::uint8_t>* m = mask ? &mask->layers[j] : nullptr;
        const std::vector<double>& a_in = cache.activations[j];
        std::vector<double> dz;
        if (j + 1 < d) {
            const std::vector<double>& z = cache.pre[j];
            dz.assign(w.cols, 0.0);
            for (std::size_t u = 0; u < w.cols; ++u) {
                if (z[u] > 0.0) {
                    if (grads) grads->scaling[j][u] += delta[u] * z[u];
                    dz[u] = delta[u] * net.scaling[j][u];
                }
            }
        } else {
            dz = std::move(delta);
        }
        if (grads) {
            Matrix& gw = grads->weights[j];
            for (std::size_t i = 0; i < w.rows; ++i) {
                double ai = a_in[i];
                if (ai == 0.0) continue;
                for (std::size_t u = 0; u < w.cols; ++u) gw(i, u) += ai * dz[u];
            }
        }
        std::vector<double> next(w.rows, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            double acc = 0.0;
            for (std::size_t u = 0; u < w.cols; ++u) acc += masked(w, m, i, u) * dz[u];
            next[i] = acc;
        }
        delta = std::move(next);
    }
    return delta;
}

inline void zero_masked_grads(Gradients& grads, const Mask* mask) {
    if (!mask) return;
    for (std::size_t j = 0; j < grads.weights.size(); ++j) {
        const std::vector<std::uint8_t>& m = mask->layers[j];
        Matrix& g = grads.weights[j];
        for (std::size_t k = 0; k < g.data.size(); ++k)
            if (m[k] == 0) g.data[k] = 0.0;
    }
}

}  // namespace detail

/// Class scores for input x; masked weights act as exact zeros.
inline std::vector<double> forward(const Network& net, const Mask* mask, std::span<const double> x) {
    return detail::run_forward(net, mask, x).activations.back();
}

struct ForwardWithPattern {
    std::vector<double> logits;
    ActivationPattern pattern;
};

inline ForwardWithPattern forward_with_pattern(const Network& net, const Mask* mask,
                                               std::span<const double> x) {
    auto cache = detail::run_forward(net, mask, x);
    ForwardWithPattern out;
    out.logits = cache.activations.back();
    out.pattern.active.reserve(cache.pre.size());
    for (const auto& z : cache.pre) {
        std::vector<std::uint8_t> row(z.size());
        for (std::size_t u = 0; u < z.size(); ++u) row[u] = z[u] > 0.0 ? 1 : 0;
        out.pattern.active.push_back(std::move(row));
    }
    return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - mx);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

inline double cross_entropy(std::span<const double> logits, int label) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    return std::log(sum) - (logits[std::size_t(label)] - mx);
}

struct LossGrads {
    double loss = 0.0;
    Gradients grads;
};

/// Mean softmax cross-entropy over the batch with exact analytical gradients.
/// Gradients at masked positions are forced to zero.
inline LossGrads loss_and_grads(const Network& net, const Mask* mask,
                                std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
    LossGrads out;
    out.grads = Gradients::zeros_like(net);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const Sample& s : batch) {
        if (s.label < 0 || std::size_t(s.label) >= net.class_count())
            throw std::invalid_argument("loss_and_grads: label " + std::to_string(s.label) +
                                        " out of range");
        auto cache = detail::run_forward(net, mask, s.x);
        const std::vector<double>& logits = cache.activations.back();
        out.loss += cross_entropy(logits, s.label) * inv_n;
        std::vector<double> seed = softmax(logits);
        seed[std::size_t(s.label)] -= 1.0;
        for (double& v : seed) v *= inv_n;
        detail::run_backward(net, mask, cache, std::move(seed), &out.grads);
    }
    detail::zero_masked_grads(out.grads, mask);
    return out;
}

/// Gradient wrt the input of the class-score difference g_top - g_other.
inline std::vector<double> margin_input_grad(const Network& net, const Mask* mask,
                                             std::span<const double> x, int other, int top) {
    const auto c = static_cast<int>(net.class_count());
    if (top < 0 || top >= c || other < 0 || other >= c)
        throw std::invalid_argument("margin_input_grad: class index out of range");
    if (top == other) throw std::invalid_argument("margin_input_grad: classes must differ");
    auto cache = detail::run_forward(net, mask, x);
    std::vector<double> seed(net.class_count(), 0.0);
    seed[std::size_t(top)] = 1.0;
    seed[std::size_t(other)] = -1.0;
    return detail::run_backward(net, mask, cache, std::move(seed), nullptr);
}

/// Cross-entropy loss and its gradient wrt the input (the PGD ascent direction).
inline std::pair<double, std::vector<double>> loss_input_grad(const Network& net, const Mask* mask,
                                                              std::span<const double> x, int label) {
    if (label < 0 || std::size_t(label) >= net.class_count())
        throw std::invalid_argument("loss_input_grad: label out of range");
    auto cache = detail::run_forward(net, mask, x);
    const std::vector<double>& logits = cache.activations.back();
    double loss = cross_entropy(logits, label);
    std::vector<double> seed = softmax(logits);
    seed[std::size_t(label)] -= 1.0;
    return {loss, detail::run_backward(net, mask, cache, std::move(seed), nullptr)};
}

/// Network with masked weights replaced by exact zeros; surviving weights are
/// unchanged bit-for-bit. A null mask returns the network untouched.
inline Network apply_mask(const Network& net, const Mask* mask) {
    Network out = net;
    if (!mask) return out;
    mask->validate_against(net);
    for (std::size_t j = 0; j < out.weights.size(); ++j) {
        const std::vector<std::uint8_t>& m = mask->layers[j];
        Matrix& w = out.weights[j];
        for (std::size_t k = 0; k < w.data.size(); ++k)
            if (m[k] == 0) w.data[k] = 0.0;
    }
    return out;
}

/// Reset surviving weights to the stored initial network; pruned positions are
/// exact zeros. `current` is only consulted for shape checking.
inline Network rewind(const Network& current, const Network& initial, const Mask& mask) {
    if (current.dims != initial.dims)
        throw std::invalid_argument("rewind: current and initial networks have different dims");
    return apply_mask(initial, &mask);
}

/// Strict argmax: returns the predicted class, or -1 when the top score is tied
/// (ties count as misclassification everywhere in the evaluation code).
inline int predicted_class(std::span<const double> logits) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[best]) best = k;
    for (std::size_t k = 0; k < logits.size(); ++k)
        if (k != best && logits[k] == logits[best]) return -1;
    return static_cast<int>(best);
}

}  // namespace srl
