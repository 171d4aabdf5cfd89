#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pmcw/fft.hpp"
#include "pmcw/impairments.hpp"
#include "pmcw/seqgen.hpp"

using namespace pmcw;

namespace {

constexpr double kFs = 1e9;

IqBuffer random_buffer(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    IqBuffer b{CVector(n), kFs};
    for (auto& v : b.samples) v = {g(rng), g(rng)};
    return b;
}

// Sum of a few tones, all below 0.1 fs.
IqBuffer tones(std::size_t n) {
    IqBuffer b{CVector(n), kFs};
    const double f[] = {0.013, 0.047, -0.071, 0.093};
    const Complex a[] = {{1.0, 0.0}, {0.0, 0.6}, {0.4, 0.3}, {-0.5, 0.2}};
    for (std::size_t i = 0; i < n; ++i)
        for (int t = 0; t < 4; ++t) b.samples[i] += a[t] * std::polar(1.0, kTwoPi * f[t] * static_cast<double>(i));
    return b;
}

double max_abs_diff(const CVector& a, const CVector& b, std::size_t from = 0, std::size_t to = SIZE_MAX) {
    double d = 0.0;
    to = std::min({to, a.size(), b.size()});
    for (std::size_t i = from; i < to; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("interpolator reproduces integer positions and band-limited signals") {
    const auto& ip = default_interpolator();
    const auto x = tones(400);
    for (std::size_t i = 0; i < 400; i += 37) CHECK(ip.at(x.samples, static_cast<double>(i)) == x.samples[i]);

    double worst = 0.0;
    const double f[] = {0.013, 0.047, -0.071, 0.093};
    const Complex a[] = {{1.0, 0.0}, {0.0, 0.6}, {0.4, 0.3}, {-0.5, 0.2}};
    for (double t = 20.0; t < 380.0; t += 0.731) {
        Complex truth{};
        for (int k = 0; k < 4; ++k) truth += a[k] * std::polar(1.0, kTwoPi * f[k] * t);
        worst = std::max(worst, std::abs(ip.at(x.samples, t) - truth));
    }
    CHECK(worst < 2e-3);
    CHECK(ip.description().find("taps=32") != std::string::npos);
}

TEST_CASE("multipath") {
    SUBCASE("unit single path is the identity and preserves energy") {
        const auto x = random_buffer(1000, 1);
        const auto y = apply_multipath(x, {PathSpec{}});
        CHECK(y.size() == x.size());
        CHECK(max_abs_diff(x.samples, y.samples) == 0.0);
    }
    SUBCASE("integer delay shifts exactly") {
        const auto x = random_buffer(500, 2);
        const auto y = apply_multipath(x, {PathSpec{100.0 / kFs, {1.0, 0.0}, 0.0}});
        REQUIRE(y.size() == 600);
        for (std::size_t i = 0; i < 100; ++i) CHECK(y.samples[i] == Complex{});
        for (std::size_t i = 0; i < 500; ++i) REQUIRE(y.samples[i + 100] == x.samples[i]);
    }
    SUBCASE("two paths show up as two correlation peaks 10.46 dB apart") {
        const auto seq = generate_mls(builtin_lfsr(8, 0));
        // periodic input so the circular correlation of one period sees both paths cleanly
        IqBuffer x{CVector(), kFs};
        for (int r = 0; r < 3; ++r) x.samples.insert(x.samples.end(), seq.chips.begin(), seq.chips.end());
        const auto y = apply_multipath(x, {PathSpec{0.0, {1.0, 0.0}, 0.0}, PathSpec{7.0 / kFs, {0.0, 0.3}, 0.0}});
        CVector period(y.samples.begin() + 255, y.samples.begin() + 510);
        const auto corr = oracle::circular_correlation(period, seq.chips);
        std::vector<std::size_t> order(255);
        for (std::size_t i = 0; i < 255; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(corr[a]) > std::abs(corr[b]); });
        CHECK(order[0] == 0);
        CHECK(order[1] == 7);
        const double diff = 20.0 * std::log10(std::abs(corr[0]) / std::abs(corr[7]));
        CHECK(diff == doctest::Approx(20.0 * std::log10(1.0 / 0.3)).epsilon(0.01));
    }
    SUBCASE("main path must be strongest") {
        const auto x = random_buffer(10, 3);
        CHECK_THROWS_AS(apply_multipath(x, {PathSpec{0.0, {0.5, 0.0}, 0.0}, PathSpec{1e-9, {1.0, 0.0}, 0.0}}),
                        ConfigError);
        CHECK_THROWS_AS(apply_multipath(x, {}), ConfigError);
    }
}

TEST_CASE("CFO rotation") {
    IqBuffer ones{CVector(8, Complex(1.0, 0.0)), kFs};
    const auto y = apply_cfo(ones, kFs / 4.0);
    const Complex expect[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(y.samples[i] - expect[i % 4]) < 1e-12);

    CHECK(max_abs_diff(apply_cfo(ones, 0.0).samples, ones.samples) == 0.0);

    // -85 kHz over 1 ms accumulates -2 pi 85 rad, an integer number of turns
    IqBuffer longer{CVector(1'000'001, Complex(1.0, 0.0)), kFs};
    const auto z = apply_cfo(longer, -85e3, 0.3);
    CHECK(std::abs(z.samples.back() - std::polar(1.0, 0.3)) < 1e-9);
    CHECK(std::abs(z.samples[250'000] - std::polar(1.0, 0.3 - kTwoPi * 85e3 * 250e-6)) < 1e-9);
}

TEST_CASE("SFO resampling") {
    SUBCASE("zero ppm is the identity") {
        const auto x = random_buffer(100, 4);
        CHECK(max_abs_diff(apply_sfo(x, 0.0).samples, x.samples) == 0.0);
    }
    SUBCASE("100 ppm drifts by 100 samples over one million") {
        // input sample 10^6 lands at output index 10^6 (1 + 1e-4)
        IqBuffer x{CVector(1'000'001), kFs};
        x.samples.back() = 1.0;
        const auto y = apply_sfo(x, 100.0);
        CHECK(y.size() - x.size() == 100);
        CHECK(std::abs(y.samples[1'000'100] - Complex(1.0, 0.0)) < 1e-6);
    }
    SUBCASE("tone frequency scales by 1/(1+ppm)") {
        const std::size_t n = 1 << 16;
        const double f0 = 0.05 * kFs;
        IqBuffer x{CVector(n), kFs};
        for (std::size_t i = 0; i < n; ++i) x.samples[i] = std::polar(1.0, kTwoPi * f0 * i / kFs);
        const auto y = apply_sfo(x, 50.0);
        // zero-padded DFT peak, refined by a parabola on the magnitude
        const std::size_t L = 1 << 20;
        CVector pad(L);
        std::copy(y.samples.begin(), y.samples.begin() + n, pad.begin());
        const auto Y = dft(pad);
        std::size_t k = 0;
        for (std::size_t i = 0; i < L / 2; ++i)
            if (std::abs(Y[i]) > std::abs(Y[k])) k = i;
        const double a = std::abs(Y[k - 1]), b = std::abs(Y[k]), c = std::abs(Y[k + 1]);
        const double peak = (k + 0.5 * (a - c) / (a - 2 * b + c)) * kFs / L;
        CHECK(peak == doctest::Approx(f0 / (1.0 + 50e-6)).epsilon(1e-3));
    }
}

TEST_CASE("STO and noise") {
    SUBCASE("zero STO and infinite SNR is the identity") {
        const auto x = random_buffer(300, 5);
        const auto y = apply_sto_and_noise(x, 0.0, INFINITY, 1);
        CHECK(max_abs_diff(x.samples, y.samples) == 0.0);
        CHECK(y.size() == x.size());
    }
    SUBCASE("integer STO prepends zeros") {
        const auto x = random_buffer(50, 6);
        const auto y = apply_sto_and_noise(x, 12345.0, INFINITY, 1);
        REQUIRE(y.size() == 12345 + 50);
        CHECK(y.samples[12344] == Complex{});
        CHECK(y.samples[12345] == x.samples[0]);
    }
    SUBCASE("fractional STO delays a band-limited signal") {
        const auto x = tones(500);
        const auto y = apply_sto_and_noise(x, 3.25, INFINITY, 1);
        const auto ref = default_interpolator().resample(x.samples, -0.25, 1.0, 501);
        CHECK(max_abs_diff(CVector(y.samples.begin() + 3, y.samples.end()), ref) < 1e-15);
    }
    SUBCASE("empirical SNR") {
        IqBuffer x{CVector(1'000'000), kFs};
        const auto seq = generate_mls(builtin_lfsr(10, 0));
        for (std::size_t i = 0; i < x.size(); ++i) x.samples[i] = seq.chips[i % seq.size()];
        const auto y = apply_sto_and_noise(x, 0.0, 16.23, 42);
        double noise = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) noise += std::norm(y.samples[i] - x.samples[i]);
        noise /= static_cast<double>(x.size());
        CHECK(10.0 * std::log10(mean_power(x.samples) / noise) == doctest::Approx(16.23).epsilon(0.1 / 16.23));
    }
    SUBCASE("noise is deterministic under a fixed seed") {
        const auto x = random_buffer(1000, 8);
        CHECK(apply_sto_and_noise(x, 2.0, 10.0, 99).samples == apply_sto_and_noise(x, 2.0, 10.0, 99).samples);
        CHECK(apply_sto_and_noise(x, 2.0, 10.0, 99).samples != apply_sto_and_noise(x, 2.0, 10.0, 98).samples);
    }
}

TEST_CASE("composite channel") {
    SUBCASE("all-zero impairments compose to the identity") {
        const auto x = random_buffer(2000, 9);
        const auto y = apply_channel(x, ChannelConfig{});
        CHECK(max_abs_diff(x.samples, y.samples) < 1e-12);
        CHECK(y.size() == x.size());
    }
    SUBCASE("order is multipath, CFO, SFO, then STO and noise") {
        const auto x = tones(4000);
        ChannelConfig cfg;
        cfg.paths = {PathSpec{0.0, {1.0, 0.0}, 0.0}, PathSpec{3.0 / kFs, {0.2, 0.1}, 1e6}};
        cfg.cfo_hz = 2e6;
        cfg.cfo_phase_rad = 0.4;
        cfg.sfo_ppm = 80.0;
        cfg.sto_samples = 17.0;
        const auto y = apply_channel(x, cfg);

        auto ref = apply_multipath(x, cfg.paths);
        ref = apply_cfo(ref, cfg.cfo_hz, cfg.cfo_phase_rad);
        ref = apply_sfo(ref, cfg.sfo_ppm);
        ref = apply_sto_and_noise(ref, cfg.sto_samples, INFINITY, 0);
        CHECK(max_abs_diff(y.samples, ref.samples) == 0.0);

        // swapping CFO and SFO changes the result
        auto alt = apply_multipath(x, cfg.paths);
        alt = apply_sfo(alt, cfg.sfo_ppm);
        alt = apply_cfo(alt, cfg.cfo_hz, cfg.cfo_phase_rad);
        alt = apply_sto_and_noise(alt, cfg.sto_samples, INFINITY, 0);
        CHECK(max_abs_diff(y.samples, alt.samples, 1000) > 1e-3);
    }
    SUBCASE("invariants") {
        const auto x = random_buffer(10, 10);
        ChannelConfig cfg;
        cfg.cfo_hz = 0.6 * kFs;
        CHECK_THROWS_AS(apply_channel(x, cfg), ConfigError);
        cfg = {};
        cfg.sfo_ppm = 1500.0;
        CHECK_THROWS_AS(apply_channel(x, cfg), ConfigError);
        cfg = {};
        cfg.paths.clear();
        CHECK_THROWS_AS(apply_channel(x, cfg), ConfigError);
    }
}
