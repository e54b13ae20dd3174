#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "fpx/quant.hpp"
#include "fpx/tensor.hpp"

namespace {

fpx::Matrix seeded_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols, double lo,
                          double hi) {
    fpx::Rng rng(seed);
    fpx::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = float(rng.uniform(lo, hi));
    return m;
}

double rel_frobenius_error(const fpx::Matrix& got, const fpx::Matrix& want) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) {
        const double d = double(got.data()[i]) - double(want.data()[i]);
        diff += d * d;
        ref += double(want.data()[i]) * double(want.data()[i]);
    }
    return std::sqrt(diff) / std::sqrt(ref);
}

}  // namespace

TEST_CASE("round_half_even resolves ties toward even integers") {
    REQUIRE(fpx::round_half_even(0.5) == 0.0);
    REQUIRE(fpx::round_half_even(1.5) == 2.0);
    REQUIRE(fpx::round_half_even(2.5) == 2.0);
    REQUIRE(fpx::round_half_even(-0.5) == 0.0);
    REQUIRE(fpx::round_half_even(-1.5) == -2.0);
    REQUIRE(fpx::round_half_even(-2.5) == -2.0);
    REQUIRE(fpx::round_half_even(1.4999) == 1.0);
    REQUIRE(fpx::round_half_even(-1.4999) == -1.0);
    REQUIRE(fpx::round_half_even(3.75) == 4.0);
}

TEST_CASE("quantize keeps small integer-valued input exact at scale 1") {
    fpx::Matrix x = fpx::Matrix::from_rows({{1.0f, -2.0f}});
    const auto q = fpx::quantize(x, fpx::BitWidth::B4);
    REQUIRE(q.scale == 1.0);
    REQUIRE(q.q(0, 0) == 1.0f);
    REQUIRE(q.q(0, 1) == -2.0f);
}

TEST_CASE("quantize engages the scale above the 4-bit range") {
    fpx::Matrix x = fpx::Matrix::from_rows({{12.0f, -3.0f}});
    const auto q = fpx::quantize(x, fpx::BitWidth::B4);
    REQUIRE(q.scale == 2.0);
    REQUIRE(q.q(0, 0) == 6.0f);
    // -3 / 2 = -1.5 rounds to even: -2
    REQUIRE(q.q(0, 1) == -2.0f);
}

TEST_CASE("quantize engages the scale above the 8-bit range") {
    fpx::Matrix x = fpx::Matrix::from_rows({{480.0f, 120.0f}});
    const auto q = fpx::quantize(x, fpx::BitWidth::B8);
    REQUIRE(q.scale == 2.0);
    REQUIRE(q.q(0, 0) == 240.0f);
    REQUIRE(q.q(0, 1) == 60.0f);
}

TEST_CASE("quantize of the zero matrix uses scale 1") {
    const auto q = fpx::quantize(fpx::Matrix(2, 2), fpx::BitWidth::B8);
    REQUIRE(q.scale == 1.0);
    for (float v : q.q.data()) REQUIRE(v == 0.0f);
}

TEST_CASE("quantize rejects the unquantized sentinel width") {
    fpx::Matrix x(1, 1);
    REQUIRE_THROWS_AS(fpx::quantize(x, fpx::BitWidth::B16), std::invalid_argument);
}

TEST_CASE("quantized entries always land on the integer grid inside the range") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        fpx::Matrix x = seeded_matrix(seed + 100, 9, 7, -1000.0, 1000.0);
        for (fpx::BitWidth w : {fpx::BitWidth::B4, fpx::BitWidth::B8}) {
            const auto q = fpx::quantize(x, w);
            const double range = fpx::grid_range(w);
            REQUIRE(q.scale > 0.0);
            for (float v : q.q.data()) {
                REQUIRE(v == std::floor(v));
                REQUIRE(std::fabs(v) <= range);
            }
        }
    }
}

TEST_CASE("dequantize stays within half a step of the clamped input") {
    // Exercises both the scale-engaged and scale-1 branches by drawing at
    // very different magnitudes. The tiny slack covers float storage of
    // the dequantized product.
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const double mag = std::pow(10.0, double(seed % 7) - 2.0);
        fpx::Matrix x = seeded_matrix(seed + 500, 6, 6, -mag, mag);
        for (fpx::BitWidth w : {fpx::BitWidth::B4, fpx::BitWidth::B8}) {
            const auto q = fpx::quantize(x, w);
            const fpx::Matrix back = fpx::dequantize(q);
            const double limit = q.scale * fpx::grid_range(w);
            for (std::size_t i = 0; i < x.size(); ++i) {
                double clamped = double(x.data()[i]);
                if (clamped > limit) clamped = limit;
                if (clamped < -limit) clamped = -limit;
                REQUIRE(std::fabs(double(back.data()[i]) - clamped) <=
                        q.scale * (0.5 + 1e-4));
                ++checked;
            }
        }
    }
    REQUIRE(checked > 0);
}

TEST_CASE("rescaling input rescales the quantization without changing the grid image") {
    fpx::Matrix x = seeded_matrix(321, 8, 8, -20.0, 20.0);  // max above the 4-bit range
    const auto q1 = fpx::quantize(x, fpx::BitWidth::B4);
    fpx::Matrix scaled = x;
    for (float& v : scaled.data()) v *= 16.0f;
    const auto q2 = fpx::quantize(scaled, fpx::BitWidth::B4);
    REQUIRE(q2.scale == Catch::Approx(16.0 * q1.scale).epsilon(1e-9));
    for (std::size_t i = 0; i < x.size(); ++i) {
        REQUIRE(q1.q.data()[i] == Catch::Approx(q2.q.data()[i]).margin(1.0 + 1e-9));
    }
}

TEST_CASE("8-bit matmul loses under 1% on large-scale seeded input") {
    fpx::Matrix x = seeded_matrix(1001, 32, 32, -500.0, 500.0);
    fpx::Matrix w = seeded_matrix(1002, 32, 32, -500.0, 500.0);
    const fpx::Matrix exact = fpx::matmul(x, w);
    const fpx::Matrix q8 = fpx::quant_matmul(x, w, fpx::BitWidth::B8, fpx::BitWidth::B8);
    REQUIRE(rel_frobenius_error(q8, exact) < 0.01);
}

TEST_CASE("8 bits never lose more than 4 bits once the scale engages") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        fpx::Matrix x = seeded_matrix(seed + 2000, 16, 16, -300.0, 300.0);
        fpx::Matrix w = seeded_matrix(seed + 3000, 16, 16, -300.0, 300.0);
        const fpx::Matrix exact = fpx::matmul(x, w);
        const double e8 =
            rel_frobenius_error(fpx::quant_matmul(x, w, fpx::BitWidth::B8, fpx::BitWidth::B8), exact);
        const double e4 =
            rel_frobenius_error(fpx::quant_matmul(x, w, fpx::BitWidth::B4, fpx::BitWidth::B4), exact);
        REQUIRE(e8 <= e4);
    }
}

TEST_CASE("quant_matmul reproduces the worked mixed example") {
    fpx::Matrix x = fpx::Matrix::from_rows({{12.0f, -3.0f}});
    fpx::Matrix w = fpx::Matrix::from_rows({{2.0f}, {4.0f}});
    const fpx::Matrix out = fpx::quant_matmul(x, w, fpx::BitWidth::B4, fpx::BitWidth::B4);
    // scale_x = 2, q_x = [6, -2]; w is exact at scale 1 -> 2 * (12 - 8) = 8
    REQUIRE(out(0, 0) == 8.0f);
}

TEST_CASE("quant_matmul with B16 on both sides is exactly matmul") {
    fpx::Matrix x = seeded_matrix(71, 7, 5, -3.0, 3.0);
    fpx::Matrix w = seeded_matrix(73, 5, 4, -3.0, 3.0);
    REQUIRE(fpx::quant_matmul(x, w, fpx::BitWidth::B16, fpx::BitWidth::B16) == fpx::matmul(x, w));
}

TEST_CASE("quant_matmul is exact for integer operands inside the grid") {
    fpx::Matrix x = fpx::Matrix::from_rows({{3.0f, -6.0f, 1.0f}});
    fpx::Matrix w = fpx::Matrix::from_rows({{2.0f}, {-1.0f}, {5.0f}});
    const fpx::Matrix exact = fpx::matmul(x, w);
    REQUIRE(fpx::quant_matmul(x, w, fpx::BitWidth::B4, fpx::BitWidth::B4) == exact);
    REQUIRE(fpx::quant_matmul(x, w, fpx::BitWidth::B8, fpx::BitWidth::B8) == exact);
}

TEST_CASE("quant_matmul rejects mismatched inner dimensions") {
    fpx::Matrix x(2, 3);
    fpx::Matrix w(2, 3);
    REQUIRE_THROWS_AS(fpx::quant_matmul(x, w, fpx::BitWidth::B4, fpx::BitWidth::B4),
                      std::invalid_argument);
}
