#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace srl {

/// Dense row-major matrix of doubles. The only container the whole library
/// uses for weights, masks and gradients.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Matrix& other) const = default;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(what + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                                    std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                    std::to_string(b.cols) + ")");
    }
}

}  // namespace srl
