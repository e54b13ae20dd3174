#pragma once

// Dense row-major matrix arithmetic and the SplitMix64 PRNG that every
// other component builds on. Storage is 32-bit float, accumulation is
// double so rounding introduced elsewhere stays the only error source.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpx {

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("Matrix: data length " +
                                        std::to_string(data_.size()) +
                                        " != rows*cols " +
                                        std::to_string(rows_ * cols_));
        }
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t r = 0;
        for (const auto& row : rows) {
            if (row.size() != m.cols_) {
                throw std::invalid_argument("Matrix::from_rows: ragged rows");
            }
            std::size_t c = 0;
            for (float v : row) m(r, c++) = v;
            ++r;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    bool all_finite() const {
        for (float v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

// Row-major product. Each dot product accumulates in a double and is
// rounded to float once at the end, so the result is independent of any
// blocking or traversal-order choices.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: dimension mismatch (" +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    ") * (" +
                                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += static_cast<double>(a(i, k)) * static_cast<double>(b(k, j));
            }
            out(i, j) = static_cast<float>(acc);
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(c, r) = m(r, c);
    return out;
}

inline double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (float v : m.data()) acc += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(acc);
}

inline double max_abs(const Matrix& m) {
    double mx = 0.0;
    for (float v : m.data()) {
        const double a = std::fabs(static_cast<double>(v));
        if (a > mx) mx = a;
    }
    return mx;
}

// SplitMix64. Chosen for its published test vectors: the stream is
// platform-independent and ten lines long.
struct Rng {
    std::uint64_t state = 0;

    explicit Rng(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next_u64() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Top 53 bits mapped to [0,1).
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + next_uniform() * (hi - lo);
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_uniform() * static_cast<double>(n)) % n;
    }
};

// One SplitMix64 finalizer round; used to derive independent sub-streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + b * 0x9E3779B97F4A7C15ULL + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace fpx
