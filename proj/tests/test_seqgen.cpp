#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pmcw/seqgen.hpp"

using namespace pmcw;

TEST_CASE("degree-3 register matches the hand-simulated sequence") {
    const auto seq = generate_mls(builtin_lfsr(3, 0));
    const auto expected = oracle::bits_to_chips(oracle::lfsr_bits(3, {3, 2}, 0));
    REQUIRE(seq.size() == 7);
    CHECK(seq.chips == expected);
    CHECK(std::count(seq.chips.begin(), seq.chips.end(), -1.0) == 4);
    CHECK(std::count(seq.chips.begin(), seq.chips.end(), 1.0) == 3);
}

TEST_CASE("every built-in register passes length, balance and two-valued autocorrelation") {
    for (int m = kMinDegree; m <= kMaxDegree; ++m) {
        for (int idx = 0; idx < 2; ++idx) {
            const auto spec = builtin_lfsr(m, idx);
            const auto seq = generate_mls(spec);
            const std::size_t n = (1u << m) - 1;
            CAPTURE(m);
            CAPTURE(idx);
            REQUIRE(seq.size() == n);
            CHECK(seq.chips == oracle::bits_to_chips(oracle::lfsr_bits(m, spec.taps, spec.seed)));
            const auto neg = std::count(seq.chips.begin(), seq.chips.end(), -1.0);
            const auto pos = std::count(seq.chips.begin(), seq.chips.end(), 1.0);
            CHECK(neg == pos + 1);
            CVector a(seq.chips.begin(), seq.chips.end());
            const auto r = circular_correlate(a, seq.view());
            CHECK(r[0].real() == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
            double worst = 0.0;
            for (std::size_t l = 1; l < n; ++l) worst = std::max(worst, std::abs(r[l] - Complex(-1.0, 0.0)));
            CHECK(worst < 1e-8);
        }
    }
}

TEST_CASE("the two registers per degree are distinct") {
    for (int m = kMinDegree; m <= kMaxDegree; ++m) CHECK_FALSE(builtin_lfsr(m, 0) == builtin_lfsr(m, 1));
}

TEST_CASE("FFT circular correlation equals the direct double loop") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int m : {3, 5, 7}) {
        const auto seq = generate_mls(builtin_lfsr(m, 1));
        CVector a(seq.size());
        for (auto& v : a) v = {g(rng), g(rng)};
        const auto fast = circular_correlate(a, seq.view());
        const auto slow = oracle::circular_correlation(a, seq.chips);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            num = std::max(num, std::abs(fast[i] - slow[i]));
            den = std::max(den, std::abs(slow[i]));
        }
        CHECK(num / den < 1e-9);
    }
}

TEST_CASE("circular correlation examples") {
    SUBCASE("all ones") {
        CVector a(4, Complex(1.0, 0.0));
        std::vector<double> b(4, 1.0);
        for (const auto& v : circular_correlate(a, b)) CHECK(std::abs(v - Complex(4.0, 0.0)) < 1e-12);
    }
    SUBCASE("delayed copy peaks at its delay") {
        const auto seq = generate_mls(builtin_lfsr(8, 0));
        const std::size_t L = seq.size();
        CVector a(L);
        for (std::size_t k = 0; k < L; ++k) a[(k + 3) % L] = seq.chips[k];
        const auto r = circular_correlate(a, seq.view());
        std::size_t arg = 0;
        for (std::size_t l = 0; l < L; ++l)
            if (std::abs(r[l]) > std::abs(r[arg])) arg = l;
        CHECK(arg == 3);
        CHECK(r[3].real() == doctest::Approx(255.0));
    }
    SUBCASE("length mismatch") {
        CVector a(7);
        std::vector<double> b(8, 1.0);
        CHECK_THROWS_AS(circular_correlate(a, b), ArgumentError);
    }
}

TEST_CASE("Correlator reuses the cached reference spectrum") {
    const auto seq = generate_mls(builtin_lfsr(6, 0));
    Correlator c(seq.view());
    CVector a(seq.chips.begin(), seq.chips.end());
    std::rotate(a.begin(), a.begin() + 10, a.end());
    const auto direct = circular_correlate(a, seq.view());
    const auto cached = c.correlate(a);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(direct[i] - cached[i]) < 1e-9);
}

TEST_CASE("cross-correlation bound") {
    const auto a = generate_mls(builtin_lfsr(7, 0));
    const auto b = generate_mls(builtin_lfsr(7, 1));
    CHECK(cross_correlation_bound(a, a) == doctest::Approx(1.0));

    const auto oracle_corr = oracle::circular_correlation(a.chips, b.chips);
    double peak = 0.0;
    for (const auto& v : oracle_corr) peak = std::max(peak, std::abs(v));
    CHECK(cross_correlation_bound(a, b) == doctest::Approx(peak / 127.0));
    CHECK(cross_correlation_bound(a, b) <= 0.18);

    ChipSequence ones{std::vector<double>(127, 1.0), LfsrSpec{}};
    CHECK(cross_correlation_bound(ones, a) == doctest::Approx(1.0 / 127.0));
}

TEST_CASE("invalid register descriptions are rejected") {
    CHECK_THROWS_AS(generate_mls(LfsrSpec{7, {7, 1, 2}, 0}), ConfigError);
    CHECK_THROWS_AS(generate_mls(LfsrSpec{7, {7, 3}, 0x80}), ConfigError);  // wider than the register
    CHECK_THROWS_AS(builtin_lfsr(12, 0), ConfigError);
    CHECK_THROWS_AS(builtin_lfsr(7, 2), ConfigError);
}

TEST_CASE("generation is deterministic and honours the seed") {
    auto spec = builtin_lfsr(9, 1);
    CHECK(generate_mls(spec).chips == generate_mls(spec).chips);
    spec.seed = 0x5;
    const auto seeded = generate_mls(spec);
    CHECK(seeded.chips == oracle::bits_to_chips(oracle::lfsr_bits(9, spec.taps, 0x5)));
    CHECK(seeded.chips != generate_mls(builtin_lfsr(9, 1)).chips);
}

TEST_CASE("MLS length predicate") {
    CHECK(is_mls_length(7));
    CHECK(is_mls_length(2047));
    CHECK_FALSE(is_mls_length(8));
    CHECK_FALSE(is_mls_length(0));
}
