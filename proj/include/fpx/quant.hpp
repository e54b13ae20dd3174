#pragma once

// Per-tensor scaled integer quantization and the quantized matmul built on
// it. The grid is a uniform signed integer lattice of half-width `range`:
// 6 for the 4-bit format, 240 for the 8-bit format. A tensor whose max
// magnitude exceeds the range is divided down by max/range; anything
// already inside the range is rounded in place (scale 1). Rounding is
// half-to-even everywhere.

#include <cmath>
#include <stdexcept>

#include "fpx/tensor.hpp"

namespace fpx {

enum class BitWidth { B4, B8, B16 };

inline int bits_of(BitWidth b) {
    switch (b) {
        case BitWidth::B4: return 4;
        case BitWidth::B8: return 8;
        case BitWidth::B16: return 16;
    }
    throw std::invalid_argument("bits_of: unknown BitWidth");
}

// Half-width of the integer grid for a quantized width. B16 is the
// unquantized sentinel and has no grid.
inline double grid_range(BitWidth b) {
    switch (b) {
        case BitWidth::B4: return 6.0;
        case BitWidth::B8: return 240.0;
        default:
            throw std::invalid_argument("grid_range: B16 has no quantization grid");
    }
}

// Round-to-nearest, ties to even. Hand-rolled so the result does not
// depend on the ambient floating-point environment.
inline double round_half_even(double v) {
    const double fl = std::floor(v);
    const double diff = v - fl;
    if (diff > 0.5) return fl + 1.0;
    if (diff < 0.5) return fl;
    return (std::fmod(fl, 2.0) == 0.0) ? fl : fl + 1.0;
}

struct QuantizedMatrix {
    Matrix q;                        // integer-valued entries in [-range, +range]
    double scale = 1.0;              // strictly positive dequantization factor
    BitWidth bits = BitWidth::B16;
};

inline QuantizedMatrix quantize(const Matrix& x, BitWidth bits) {
    if (bits == BitWidth::B16) {
        throw std::invalid_argument("quantize: B16 is the unquantized sentinel");
    }
    const double range = grid_range(bits);
    const double mx = max_abs(x);
    const double scale = (mx > range) ? mx / range : 1.0;
    Matrix q(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = round_half_even(static_cast<double>(x.data()[i]) / scale);
        if (v > range) v = range;
        if (v < -range) v = -range;
        q.data()[i] = static_cast<float>(v);
    }
    return QuantizedMatrix{std::move(q), scale, bits};
}

inline Matrix dequantize(const QuantizedMatrix& qm) {
    Matrix out(qm.q.rows(), qm.q.cols());
    for (std::size_t i = 0; i < qm.q.size(); ++i) {
        out.data()[i] = static_cast<float>(static_cast<double>(qm.q.data()[i]) * qm.scale);
    }
    return out;
}

// x @ w with each side quantized at its own width first. A B16 side
// participates unquantized with scale 1, so B16/B16 reproduces matmul
// exactly.
inline Matrix quant_matmul(const Matrix& x, const Matrix& w, BitWidth bits_x, BitWidth bits_w) {
    if (x.cols() != w.rows()) {
        throw std::invalid_argument("quant_matmul: dimension mismatch (" +
                                    std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                    ") * (" +
                                    std::to_string(w.rows()) + "x" + std::to_string(w.cols()) + ")");
    }
    if (bits_x == BitWidth::B16 && bits_w == BitWidth::B16) {
        return matmul(x, w);
    }
    double scale_x = 1.0;
    double scale_w = 1.0;
    const Matrix* qx = &x;
    const Matrix* qw = &w;
    QuantizedMatrix hold_x, hold_w;
    if (bits_x != BitWidth::B16) {
        hold_x = quantize(x, bits_x);
        scale_x = hold_x.scale;
        qx = &hold_x.q;
    }
    if (bits_w != BitWidth::B16) {
        hold_w = quantize(w, bits_w);
        scale_w = hold_w.scale;
        qw = &hold_w.q;
    }
    Matrix prod = matmul(*qx, *qw);
    const double s = scale_x * scale_w;
    for (float& v : prod.data()) v = static_cast<float>(static_cast<double>(v) * s);
    return prod;
}

}  // namespace fpx
