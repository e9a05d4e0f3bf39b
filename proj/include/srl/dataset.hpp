#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/network.hpp"
#include "srl/rng.hpp"
#include "srl/serde.hpp"

namespace srl {

struct Dataset {
    std::string name;
    std::vector<Sample> samples;
    std::vector<std::size_t> train_idx, val_idx, test_idx;
    std::optional<std::pair<double, double>> clamp_hint;

    std::size_t dim() const { return samples.empty() ? 0 : samples.front().x.size(); }

    int classes() const {
        int c = 0;
        for (const Sample& s : samples) c = std::max(c, s.label + 1);
        return c;
    }

    std::vector<Sample> gather(const std::vector<std::size_t>& idx) const {
        std::vector<Sample> out;
        out.reserve(idx.size());
        for (std::size_t i : idx) out.push_back(samples.at(i));
        return out;
    }
    std::vector<Sample> train() const { return gather(train_idx); }
    std::vector<Sample> val() const { return gather(val_idx); }
    std::vector<Sample> test() const { return gather(test_idx); }

    void validate() const {
        if (samples.empty()) throw std::invalid_argument("dataset: empty");
        std::size_t d = samples.front().x.size();
        for (const Sample& s : samples) {
            if (s.x.size() != d) throw std::invalid_argument("dataset: inconsistent dimensions");
            if (s.label < 0) throw std::invalid_argument("dataset: negative label");
        }
        if (train_idx.empty() || val_idx.empty() || test_idx.empty())
            throw std::invalid_argument("dataset: all three splits must be non-empty");
        std::set<std::size_t> seen;
        for (const auto* split : {&train_idx, &val_idx, &test_idx})
            for (std::size_t i : *split) {
                if (i >= samples.size()) throw std::invalid_argument("dataset: split index range");
                if (!seen.insert(i).second)
                    throw std::invalid_argument("dataset: splits must be disjoint");
            }
    }
};

namespace detail {

/// Label-balanced 2:1:1 train/val/test split with seeded per-class shuffles.
inline void assign_splits(Dataset& ds, Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        std::size_t c = static_cast<std::size_t>(ds.samples[i].label);
        if (by_class.size() <= c) by_class.resize(c + 1);
        by_class[c].push_back(i);
    }
    for (auto& idx : by_class) {
        std::vector<std::size_t> perm = shuffled_indices(idx.size(), rng);
        std::size_t n_train = idx.size() / 2, n_val = idx.size() / 4;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            std::size_t i = idx[perm[j]];
            if (j < n_train)
                ds.train_idx.push_back(i);
            else if (j < n_train + n_val)
                ds.val_idx.push_back(i);
            else
                ds.test_idx.push_back(i);
        }
    }
}

inline void check_even_n(std::size_t n, const char* what) {
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument(std::string(what) + ": n must be even and >= 4");
}

}  // namespace detail

/// Two half-circle arcs of radius 1: class 0 at the origin, class 1 offset by
/// (1, -0.5), plus Gaussian coordinate noise. n/2 points per class, arc
/// parameter evenly spaced over [0, pi].
inline Dataset gen_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed) {
    detail::check_even_n(n, "two_moons");
    if (noise_sigma < 0.0) throw std::invalid_argument("two_moons: noise must be >= 0");
    Rng rng(derive_seed(seed, 0x6d6f6f6eull));
    Dataset ds;
    ds.name = "two_moons";
    std::size_t m = n / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double t = std::numbers::pi * static_cast<double>(i) / static_cast<double>(m - 1);
        ds.samples.push_back({{std::cos(t) + noise_sigma * rng.normal(),
                               std::sin(t) + noise_sigma * rng.normal()},
                              0});
        ds.samples.push_back({{1.0 + std::cos(t) + noise_sigma * rng.normal(),
                               std::sin(t) - 0.5 + noise_sigma * rng.normal()},
                              1});
    }
    detail::assign_splits(ds, rng);
    ds.validate();
    return ds;
}

/// Two linearly separable Gaussian blobs centered at (-1.5, 0) and (1.5, 0).
inline Dataset gen_blobs(std::size_t n, double noise_sigma, std::uint64_t seed) {
    detail::check_even_n(n, "blobs");
    if (noise_sigma < 0.0) throw std::invalid_argument("blobs: noise must be >= 0");
    Rng rng(derive_seed(seed, 0x626c6f62ull));
    Dataset ds;
    ds.name = "blobs";
    for (std::size_t i = 0; i < n / 2; ++i) {
        ds.samples.push_back(
            {{-1.5 + noise_sigma * rng.normal(), noise_sigma * rng.normal()}, 0});
        ds.samples.push_back(
            {{1.5 + noise_sigma * rng.normal(), noise_sigma * rng.normal()}, 1});
    }
    detail::assign_splits(ds, rng);
    ds.validate();
    return ds;
}

/// Concentric circles of radius 0.5 (class 0) and 1.0 (class 1).
inline Dataset gen_circles(std::size_t n, double noise_sigma, std::uint64_t seed) {
    detail::check_even_n(n, "circles");
    if (noise_sigma < 0.0) throw std::invalid_argument("circles: noise must be >= 0");
    Rng rng(derive_seed(seed, 0x63697263ull));
    Dataset ds;
    ds.name = "circles";
    std::size_t m = n / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m);
        ds.samples.push_back({{0.5 * std::cos(t) + noise_sigma * rng.normal(),
                               0.5 * std::sin(t) + noise_sigma * rng.normal()},
                              0});
        ds.samples.push_back({{std::cos(t) + noise_sigma * rng.normal(),
                               std::sin(t) + noise_sigma * rng.normal()},
                              1});
    }
    detail::assign_splits(ds, rng);
    ds.validate();
    return ds;
}

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(std::string(what) + ": truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

}  // namespace detail

/// Load an IDX image/label file pair (big-endian headers, magic 0x803 for
/// images and 0x801 for labels, pixel bytes scaled onto [0, 1]). limit = 0
/// keeps every sample; splits are sequential 80/10/10.
inline Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                              std::size_t limit = 0) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("idx: cannot open " + labels_path);

    std::uint32_t img_magic = detail::read_be_u32(img, "idx images");
    if (img_magic != 0x00000803u)
        throw std::runtime_error("idx: bad image magic 0x" + hex64(img_magic) +
                                 ", expected 0x0000000000000803");
    std::uint32_t lab_magic = detail::read_be_u32(lab, "idx labels");
    if (lab_magic != 0x00000801u)
        throw std::runtime_error("idx: bad label magic 0x" + hex64(lab_magic) +
                                 ", expected 0x0000000000000801");

    std::uint32_t n_img = detail::read_be_u32(img, "idx images");
    std::uint32_t rows = detail::read_be_u32(img, "idx images");
    std::uint32_t cols = detail::read_be_u32(img, "idx images");
    std::uint32_t n_lab = detail::read_be_u32(lab, "idx labels");
    if (n_img != n_lab)
        throw std::runtime_error("idx: image count " + std::to_string(n_img) +
                                 " != label count " + std::to_string(n_lab));

    std::size_t take = limit == 0 ? n_img : std::min<std::size_t>(limit, n_img);
    std::size_t dim = static_cast<std::size_t>(rows) * cols;
    Dataset ds;
    ds.name = "mnist";
    ds.clamp_hint = {0.0, 1.0};
    std::vector<unsigned char> pixels(dim);
    for (std::size_t i = 0; i < take; ++i) {
        if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(dim)))
            throw std::runtime_error("idx: truncated image payload at sample " + std::to_string(i));
        char label;
        if (!lab.read(&label, 1))
            throw std::runtime_error("idx: truncated label payload at sample " + std::to_string(i));
        Sample s;
        s.x.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) s.x[j] = static_cast<double>(pixels[j]) / 255.0;
        s.label = static_cast<unsigned char>(label);
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.size() < 3) throw std::runtime_error("idx: need at least 3 samples to split");
    std::size_t n_train = std::max<std::size_t>(1, take * 8 / 10);
    std::size_t n_val = std::max<std::size_t>(1, take / 10);
    if (n_train + n_val >= take) {
        n_train = take - 2;
        n_val = 1;
    }
    for (std::size_t i = 0; i < take; ++i) {
        if (i < n_train)
            ds.train_idx.push_back(i);
        else if (i < n_train + n_val)
            ds.val_idx.push_back(i);
        else
            ds.test_idx.push_back(i);
    }
    ds.validate();
    return ds;
}

inline Dataset make_dataset(const std::string& name, std::size_t n, double noise,
                            std::uint64_t seed) {
    if (name == "two_moons") return gen_two_moons(n, noise, seed);
    if (name == "blobs") return gen_blobs(n, noise, seed);
    if (name == "circles") return gen_circles(n, noise, seed);
    throw std::invalid_argument("unknown dataset: " + name);
}

}  // namespace srl
