#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/network.hpp"
#include "srl/norms.hpp"

namespace srl {

namespace detail {

inline void check_percent(double p, const char* what) {
    if (!(p > 0.0 && p < 100.0))
        throw std::invalid_argument(std::string(what) + ": percentage must lie in (0, 100)");
}

/// Round-half-up count for unstructured pruning.
inline std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

struct EntryRef {
    double magnitude;
    std::size_t layer, row, col;
};

/// Surviving entries of the given layers in (layer, row, col) order.
inline std::vector<EntryRef> surviving_entries(const Network& net, const Mask& mask,
                                               bool include_final) {
    std::vector<EntryRef> out;
    std::size_t last = net.weights.size() - 1;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (l == last && !include_final) continue;
        const Matrix& w = net.weights[l];
        for (std::size_t i = 0; i < w.rows; ++i)
            for (std::size_t j = 0; j < w.cols; ++j)
                if (mask.layers[l][i * w.cols + j] != 0)
                    out.push_back({std::abs(w(i, j)), l, i, j});
    }
    return out;
}

inline void require_no_empty_layer(const Mask& mask, const char* what) {
    for (std::size_t l = 0; l < mask.layers.size(); ++l) {
        bool any = false;
        for (std::uint8_t m : mask.layers[l])
            if (m != 0) {
                any = true;
                break;
            }
        if (!any)
            throw std::invalid_argument(std::string(what) + ": pruning would empty layer " +
                                        std::to_string(l + 1));
    }
}

/// Mask the `count` smallest-magnitude survivors pooled over the included
/// layers; ties fall back to (layer, row, col) order.
inline Mask mask_smallest_global(const Network& net, const Mask& mask_in, std::size_t count,
                                 bool include_final, const char* what) {
    std::vector<EntryRef> pool = surviving_entries(net, mask_in, include_final);
    if (count > pool.size())
        throw std::invalid_argument(std::string(what) + ": not enough surviving weights");
    std::stable_sort(pool.begin(), pool.end(),
                     [](const EntryRef& a, const EntryRef& b) { return a.magnitude < b.magnitude; });
    Mask out = mask_in;
    for (std::size_t i = 0; i < count; ++i) {
        const EntryRef& e = pool[i];
        out.layers[e.layer][e.row * net.weights[e.layer].cols + e.col] = 0;
    }
    require_no_empty_layer(out, what);
    return out;
}

/// Per-layer variant: counts[l] smallest survivors masked within each layer.
inline Mask mask_smallest_per_layer(const Network& net, const Mask& mask_in,
                                    const std::vector<std::size_t>& counts, bool include_final,
                                    const char* what) {
    Mask out = mask_in;
    std::size_t last = net.weights.size() - 1;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (l == last && !include_final) continue;
        const Matrix& w = net.weights[l];
        std::vector<EntryRef> pool;
        for (std::size_t i = 0; i < w.rows; ++i)
            for (std::size_t j = 0; j < w.cols; ++j)
                if (mask_in.layers[l][i * w.cols + j] != 0)
                    pool.push_back({std::abs(w(i, j)), l, i, j});
        if (counts[l] > pool.size())
            throw std::invalid_argument(std::string(what) + ": not enough survivors in layer " +
                                        std::to_string(l + 1));
        std::stable_sort(pool.begin(), pool.end(), [](const EntryRef& a, const EntryRef& b) {
            return a.magnitude < b.magnitude;
        });
        for (std::size_t i = 0; i < counts[l]; ++i)
            out.layers[l][pool[i].row * w.cols + pool[i].col] = 0;
    }
    require_no_empty_layer(out, what);
    return out;
}

/// Zero a hidden unit's incoming column and outgoing row in the mask.
/// hidden_layer is 0-based over hidden layers (weights index hidden_layer
/// feeds the unit; weights index hidden_layer+1 consumes it).
inline void remove_unit(Mask& mask, const Network& net, std::size_t hidden_layer,
                        std::size_t unit) {
    const Matrix& in = net.weights[hidden_layer];
    for (std::size_t i = 0; i < in.rows; ++i) mask.layers[hidden_layer][i * in.cols + unit] = 0;
    const Matrix& out = net.weights[hidden_layer + 1];
    for (std::size_t j = 0; j < out.cols; ++j)
        mask.layers[hidden_layer + 1][unit * out.cols + j] = 0;
}

/// A unit is dead when its incoming column is fully masked.
inline bool unit_dead(const Mask& mask, const Network& net, std::size_t hidden_layer,
                      std::size_t unit) {
    const Matrix& in = net.weights[hidden_layer];
    for (std::size_t i = 0; i < in.rows; ++i)
        if (mask.layers[hidden_layer][i * in.cols + unit] != 0) return false;
    return true;
}

/// L1 norm of a unit's incoming column under the mask.
inline double incoming_l1(const Network& net, const Mask& mask, std::size_t hidden_layer,
                          std::size_t unit) {
    const Matrix& in = net.weights[hidden_layer];
    double s = 0.0;
    for (std::size_t i = 0; i < in.rows; ++i)
        if (mask.layers[hidden_layer][i * in.cols + unit] != 0) s += std::abs(in(i, unit));
    return s;
}

}  // namespace detail

/// Global unstructured pruning: mask the p% smallest-magnitude survivors
/// pooled across all layers (final-layer columns included unless opted out).
inline Mask gup(const Network& net, const Mask& mask_in, double p_percent,
                bool include_final = true) {
    detail::check_percent(p_percent, "gup");
    net.validate();
    mask_in.validate_against(net);
    std::size_t survivors = detail::surviving_entries(net, mask_in, include_final).size();
    std::size_t count = detail::round_half_up(p_percent / 100.0 * static_cast<double>(survivors));
    return detail::mask_smallest_global(net, mask_in, count, include_final, "gup");
}

/// Layer-local unstructured pruning: each layer loses p% of its own survivors.
inline Mask lup(const Network& net, const Mask& mask_in, double p_percent,
                bool include_final = true) {
    detail::check_percent(p_percent, "lup");
    net.validate();
    mask_in.validate_against(net);
    std::vector<std::size_t> counts(net.weights.size(), 0);
    std::size_t last = net.weights.size() - 1;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (l == last && !include_final) continue;
        std::size_t survivors = 0;
        for (std::uint8_t m : mask_in.layers[l]) survivors += m != 0;
        counts[l] = detail::round_half_up(p_percent / 100.0 * static_cast<double>(survivors));
    }
    return detail::mask_smallest_per_layer(net, mask_in, counts, include_final, "lup");
}

/// Filter pruning adapted to dense layers: per hidden layer, remove the
/// floor(p%) of units with the lowest incoming-column L1 norm (already-dead
/// units rank lowest, so repeated calls at the same p are no-ops). Removal
/// zeroes the unit's incoming column and outgoing row.
inline Mask fp(const Network& net, const Mask& mask_in, double p_percent) {
    detail::check_percent(p_percent, "fp");
    net.validate();
    mask_in.validate_against(net);
    Mask out = mask_in;
    for (std::size_t h = 0; h < net.hidden_count(); ++h) {
        std::size_t units = net.dims[h + 1];
        std::size_t count =
            static_cast<std::size_t>(std::floor(p_percent / 100.0 * static_cast<double>(units)));
        if (count >= units) throw std::invalid_argument("fp: would remove all units of layer " +
                                                        std::to_string(h + 1));
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t u = 0; u < units; ++u)
            ranked.emplace_back(detail::incoming_l1(net, mask_in, h, u), u);
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i < count; ++i) detail::remove_unit(out, net, h, ranked[i].second);
    }
    return out;
}

struct NsResult {
    Mask mask;
    double achieved_percent = 0.0;  // dead hidden units / total hidden units, in %
    bool guard_warning = false;     // the layer-survival guard made p unreachable
};

/// Network-slimming pruning: rank hidden units globally by |scaling factor|
/// and mask the p% smallest, but never empty a layer; when the guard binds,
/// the next-smallest candidates elsewhere substitute. Reports the achieved
/// unit ratio and whether the target was unreachable.
inline NsResult ns(const Network& net, const Mask& mask_in, double p_percent) {
    detail::check_percent(p_percent, "ns");
    net.validate();
    mask_in.validate_against(net);

    struct Unit {
        double gamma_abs;
        std::size_t layer, index;
    };
    std::vector<Unit> units;
    std::size_t total = 0;
    for (std::size_t h = 0; h < net.hidden_count(); ++h) {
        for (std::size_t u = 0; u < net.dims[h + 1]; ++u)
            units.push_back({std::abs(net.scaling[h][u]), h, u});
        total += net.dims[h + 1];
    }
    std::stable_sort(units.begin(), units.end(),
                     [](const Unit& a, const Unit& b) { return a.gamma_abs < b.gamma_abs; });

    std::vector<std::size_t> alive(net.hidden_count(), 0);
    std::size_t initially_dead = 0;
    for (std::size_t h = 0; h < net.hidden_count(); ++h)
        for (std::size_t u = 0; u < net.dims[h + 1]; ++u) {
            if (detail::unit_dead(mask_in, net, h, u))
                ++initially_dead;
            else
                ++alive[h];
        }

    std::size_t target =
        static_cast<std::size_t>(std::floor(p_percent / 100.0 * static_cast<double>(total)));
    NsResult result;
    result.mask = mask_in;
    std::size_t selected = 0, newly_removed = 0;
    for (const Unit& u : units) {
        if (selected >= target) break;
        if (detail::unit_dead(result.mask, net, u.layer, u.index)) {
            detail::remove_unit(result.mask, net, u.layer, u.index);  // also clears outgoing row
            ++selected;
            continue;
        }
        if (alive[u.layer] <= 1) continue;  // layer-survival guard
        detail::remove_unit(result.mask, net, u.layer, u.index);
        --alive[u.layer];
        ++selected;
        ++newly_removed;
    }
    result.guard_warning = selected < target;
    result.achieved_percent =
        100.0 * static_cast<double>(initially_dead + newly_removed) / static_cast<double>(total);
    return result;
}

/// Same structure, fresh weights: redraw every entry from the standard
/// initializer and re-apply the mask.
inline Network rand_reinit(const Network& net, const Mask& mask, std::uint64_t seed) {
    mask.validate_against(net);
    Network fresh = Network::init(net.dims, seed);
    return apply_mask(fresh, &mask);
}

struct LayerSparsity {
    std::size_t l0 = 0;  // surviving nonzero entries
    std::size_t total = 0;
    double density = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double inf_induced = 0.0;
    double spectral = 0.0;
};

struct SparsityReport {
    std::vector<LayerSparsity> layers;
    LayerSparsity global;  // induced-norm fields hold the per-layer products
};

/// Per-layer and pooled sparsity metrics of the effective (masked) weights.
/// The global row's induced-norm fields are the products over layers, the
/// quantity entering the Lipschitz certificate.
inline SparsityReport sparsity_report(const Network& net, const Mask* mask) {
    net.validate();
    if (mask) mask->validate_against(net);
    Network eff = apply_mask(net, mask);
    SparsityReport report;
    report.global.inf_induced = 1.0;
    report.global.spectral = 1.0;
    for (const Matrix& w : eff.weights) {
        LayerSparsity s;
        s.total = w.data.size();
        double sq = 0.0;
        for (double v : w.data) {
            if (v != 0.0) ++s.l0;
            s.l1 += std::abs(v);
            sq += v * v;
        }
        s.l2 = std::sqrt(sq);
        s.density = s.total ? static_cast<double>(s.l0) / static_cast<double>(s.total) : 0.0;
        s.inf_induced = inf_induced_norm(w);
        s.spectral = spectral_norm(w);
        report.global.l0 += s.l0;
        report.global.total += s.total;
        report.global.l1 += s.l1;
        report.global.l2 += sq;  // accumulate squares, sqrt below
        report.global.inf_induced *= s.inf_induced;
        report.global.spectral *= s.spectral;
        report.layers.push_back(s);
    }
    report.global.l2 = std::sqrt(report.global.l2);
    report.global.density = report.global.total
                                ? static_cast<double>(report.global.l0) /
                                      static_cast<double>(report.global.total)
                                : 0.0;
    return report;
}

}  // namespace srl
