#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "pmcw/impairments.hpp"
#include "pmcw/radarproc.hpp"

using namespace pmcw;

namespace {

struct Scene {
    FramePlan plan;
    FrameSequences seqs;
    std::vector<double> symbols;
    IqBuffer tx;
};

Scene make_scene(const char* preset, std::size_t blocks, bool random_bits = true) {
    Scene s;
    s.plan = preset_plan(preset);
    if (blocks) s.plan.blocks = blocks;
    s.seqs = FrameSequences::for_plan(s.plan);
    Bits bits(s.plan.data_bit_count(), 0);
    std::mt19937_64 rng(77);
    if (random_bits)
        for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1u);
    s.symbols = block_symbols(bits, s.plan);
    s.tx = {build_payload(s.seqs.payload, bits, s.plan), s.plan.sample_rate};
    return s;
}

IqBuffer echo(const Scene& s, std::vector<PathSpec> targets, double snr_db = INFINITY, std::uint64_t seed = 1) {
    IqBuffer y = apply_multipath(s.tx, targets);
    if (std::isfinite(snr_db)) y = apply_sto_and_noise(y, 0.0, snr_db, seed);
    return y;
}

PathSpec target(const FramePlan& plan, double range_m, double velocity_mps, double gain = 1.0) {
    return {2.0 * range_m / kSpeedOfLight, {gain, 0.0}, 2.0 * velocity_mps / plan.wavelength()};
}

RangeDopplerMap map_of(const Scene& s, const IqBuffer& y, bool hann = false) {
    return range_doppler(range_profiles(y.samples, s.plan, s.seqs.payload, s.symbols), s.plan, hann);
}

std::pair<std::size_t, std::size_t> argmax_cell(const RangeDopplerMap& map) {
    const auto it = std::max_element(map.magnitude.begin(), map.magnitude.end());
    const std::size_t i = static_cast<std::size_t>(it - map.magnitude.begin());
    return {i / map.velocity_bins, i % map.velocity_bins};
}

}  // namespace

TEST_CASE("range profiles") {
    SUBCASE("integer delay of 100 samples") {
        const auto s = make_scene("pmcw1", 40);
        const auto prof = range_profiles(echo(s, {{100e-9, {1.0, 0.0}, 0.0}}).samples, s.plan, s.seqs.payload, s.symbols);
        for (std::size_t k = 0; k < prof.rows; ++k) {
            const auto r = prof.row(k);
            const auto it = std::max_element(r.begin(), r.end(), [](Complex a, Complex b) { return std::abs(a) < std::abs(b); });
            REQUIRE(it - r.begin() == 100);
            REQUIRE(it->real() == doctest::Approx(1020.0));
        }
    }
    SUBCASE("delay beyond N aliases") {
        const auto s = make_scene("pmcw1", 20, false);
        const auto prof = range_profiles(echo(s, {{260e-9, {1.0, 0.0}, 0.0}}).samples, s.plan, s.seqs.payload, s.symbols);
        for (std::size_t k = 1; k < prof.rows; ++k) REQUIRE(std::abs(prof.row(k)[5]) == doctest::Approx(1020.0));
    }
    SUBCASE("zero input") {
        const auto s = make_scene("pmcw1", 10);
        const auto prof = range_profiles(CVector(s.plan.payload_length()), s.plan, s.seqs.payload, s.symbols);
        for (const auto& v : prof.data) REQUIRE(v == Complex{});
        CHECK_THROWS_AS(range_profiles(s.tx.samples, s.plan, s.seqs.payload, std::vector<double>(3, 1.0)), ArgumentError);
    }
}

TEST_CASE("range-Doppler map geometry") {
    const auto s = make_scene("pmcw1", 64);
    const double dv_hz = s.plan.sample_rate / (static_cast<double>(s.plan.block_length()) * 64.0);

    SUBCASE("static target sits in the centre column") {
        const auto map = map_of(s, echo(s, {{100e-9, {1.0, 0.0}, 0.0}}));
        const auto [r, v] = argmax_cell(map);
        CHECK(r == 100);
        CHECK(v == 32);
        CHECK(map.velocity_of(static_cast<double>(v)) == 0.0);
    }
    SUBCASE("Doppler of 16 bins") {
        const auto map = map_of(s, echo(s, {{100e-9, {1.0, 0.0}, 16.0 * dv_hz}}));
        const auto [r, v] = argmax_cell(map);
        CHECK(r == 100);
        CHECK(v == 48);
        CHECK(map.velocity_of(static_cast<double>(v)) == doctest::Approx(16.0 * map.velocity_resolution_mps));
        const auto hann = map_of(s, echo(s, {{100e-9, {1.0, 0.0}, 16.0 * dv_hz}}), true);
        CHECK(argmax_cell(hann).second == 48);
    }
    SUBCASE("axes equal the parameter report") {
        for (const char* preset : {"pmcw1", "pmcw2s", "pmcw4s"}) {
            auto p = preset_plan(preset);
            const auto perf = derive_parameters(p);
            BlockMatrix prof{p.blocks, p.prbs_length, CVector(p.blocks * p.prbs_length), p.pilot_indices()};
            const auto map = range_doppler(prof, p);
            CHECK(map.range_resolution_m == perf.range_resolution_m);
            CHECK(map.max_range_m == perf.max_range_m);
            CHECK(map.velocity_resolution_mps == perf.velocity_resolution_mps);
            CHECK(map.max_velocity_mps == perf.max_velocity_mps);
            if (std::string(preset) == "pmcw1") {
                CHECK(std::abs(map.max_velocity_mps - 744.09) < 0.005);
                CHECK(std::abs(map.velocity_resolution_mps - 0.18) < 0.005);
            }
            CHECK(map.velocity_axis().front() == doctest::Approx(-map.max_velocity_mps));
        }
    }
    SUBCASE("Parseval") {
        const auto y = echo(s, {target(s.plan, 15.0, 20.0)}, -10.0, 3);
        const auto prof = range_profiles(y.samples, s.plan, s.seqs.payload, s.symbols);
        const auto map = range_doppler(prof, s.plan);
        double ep = 0.0, em = 0.0;
        for (const auto& v : prof.data) ep += std::norm(v);
        for (double v : map.magnitude) em += v * v;
        CHECK(em / 64.0 == doctest::Approx(ep).epsilon(1e-6));
    }
}

TEST_CASE("detection") {
    SUBCASE("single target at 15 m and 20 m/s, -10 dB per sample") {
        const auto s = make_scene("pmcw1s", 0);
        const auto map = map_of(s, echo(s, {target(s.plan, 15.0, 20.0)}, -10.0, 5));
        const auto det = detect(map, 20.0);
        REQUIRE_FALSE(det.empty());
        CHECK(std::abs(det[0].range_m - 15.0) <= map.range_resolution_m);
        CHECK(std::abs(det[0].velocity_mps - 20.0) <= map.velocity_resolution_mps);
        const auto gain = peak_to_noise_db(map, static_cast<std::size_t>(std::lround(det[0].range_bin)),
                                           static_cast<std::size_t>(std::lround(det[0].velocity_bin))) + 10.0;
        CHECK(gain == doctest::Approx(power_to_db(255.0 * 4.0 * 1024.0)).epsilon(1.0 / 60.19));
    }
    SUBCASE("noise only, 13 dB threshold") {
        const auto s = make_scene("pmcw1s", 0);
        IqBuffer noise{CVector(s.plan.payload_length()), s.plan.sample_rate};
        add_awgn(noise.samples, 1.0, 9);
        const auto det = detect(map_of(s, noise), 13.0);
        // Exponential cell statistics give exp(-20 ln 2) ~ 1e-6 per cell above 13 dB: 0.25 expected.
        CHECK(det.size() <= 3);
    }
    SUBCASE("two targets two bins apart on both axes") {
        const auto s = make_scene("pmcw1", 128);
        const double dr = kSpeedOfLight / (2.0 * s.plan.sample_rate);
        const double dv = derive_parameters(s.plan).velocity_resolution_mps;
        const auto map = map_of(s, echo(s, {target(s.plan, 40 * dr, 10 * dv), target(s.plan, 42 * dr, 12 * dv, 0.8)}));
        const auto det = detect(map, 30.0);
        REQUIRE(det.size() >= 2);
        CHECK(det[0].range_bin == doctest::Approx(40.0).epsilon(0.1 / 40));
        CHECK(det[0].velocity_bin == doctest::Approx(74.0).epsilon(0.1 / 74));
        CHECK(det[1].range_bin == doctest::Approx(42.0).epsilon(0.1 / 42));
        CHECK(det[1].velocity_bin == doctest::Approx(76.0).epsilon(0.1 / 76));
    }
    SUBCASE("empty map") {
        CHECK(detect(RangeDopplerMap{}, 13.0).empty());
    }
}

TEST_CASE("map file round trip") {
    const auto s = make_scene("pmcw1", 16);
    const auto map = map_of(s, echo(s, {target(s.plan, 15.0, 20.0)}, 0.0, 4));
    const auto path = std::filesystem::temp_directory_path() / "pmcw_map_test.bin";
    write_map(path, map);
    CHECK(std::filesystem::file_size(path) == 8 + 8 + 24 + 4 * 255 * 16);
    const auto back = read_map(path);
    CHECK(back.range_bins == 255);
    CHECK(back.velocity_bins == 16);
    CHECK(back.range_resolution_m == map.range_resolution_m);
    CHECK(back.velocity_resolution_mps == map.velocity_resolution_mps);
    CHECK(back.velocity_of(0.0) == map.velocity_of(0.0));
    for (std::size_t i = 0; i < map.magnitude.size(); ++i)
        REQUIRE(back.magnitude[i] == static_cast<double>(static_cast<float>(map.magnitude[i])));

    std::filesystem::resize_file(path, 100);
    CHECK_THROWS_AS(read_map(path), FormatError);
    { std::ofstream(path, std::ios::binary) << "NOTAMAP!"; }
    CHECK_THROWS_AS(read_map(path), FormatError);
    std::filesystem::remove(path);
}
