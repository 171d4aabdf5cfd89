// End-to-end acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "pmcw/runner.hpp"
#include "pmcw/seqgen.hpp"

using namespace pmcw;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

const SummaryRow& row(const SimulationResult& r, const std::string& metric) {
    for (const auto& s : r.summary)
        if (s.metric == metric) return s;
    throw std::runtime_error("no summary metric " + metric);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("pmcw_accept_" + name);
    std::filesystem::remove_all(p);
    return p;
}

const std::vector<std::string> kImpaired = {"channel.sto_samples=12345", "channel.cfo_hz=-85000",
                                            "channel.sfo_ppm=100", "channel.snr_db=16.23", "run.trials=100"};

std::vector<std::string> with(std::vector<std::string> base, std::initializer_list<std::string> extra) {
    base.insert(base.end(), extra);
    return base;
}

Outcome table_reproduction() {
    struct Column {
        const char* preset;
        double values[9];
    };
    const Column table[] = {
        {"pmcw1", {30.09, 0.26, 78.43, 627.03, 69.22, 0.15, 38.22, 0.18, 744.09}},
        {"pmcw2", {33.10, 0.51, 39.14, 312.67, 69.23, 0.15, 76.60, 0.18, 371.32}},
        {"pmcw3", {36.12, 1.02, 19.55, 156.00, 69.23, 0.15, 153.34, 0.18, 185.48}},
        {"pmcw4", {39.13, 2.05, 9.77, 77.78, 69.23, 0.15, 306.84, 0.18, 92.69}},
    };
    const char* names[9] = {"comm gain", "max delay", "max Doppler", "data rate", "radar gain",
                            "range resolution", "max range", "velocity resolution", "max velocity"};
    Outcome o;
    std::size_t matched = 0;
    for (const auto& col : table) {
        const auto r = derive_parameters(preset_plan(col.preset));
        const double got[9] = {r.comm_gain_db, r.max_delay_s * 1e6, r.max_doppler_hz / 1e3, r.data_rate_bps / 1e3,
                               r.radar_gain_db, r.range_resolution_m, r.max_range_m, r.velocity_resolution_mps,
                               r.max_velocity_mps};
        for (int i = 0; i < 9; ++i) {
            const bool ok = std::abs(round2(got[i]) - col.values[i]) < 1e-9;
            matched += ok;
            o.require(ok, std::string(col.preset) + " " + names[i] + " " + fmt("%.4f", got[i]));
        }
    }
    o.note(std::to_string(matched) + "/36 values match");
    return o;
}

Outcome mls_suite() {
    Outcome o;
    std::size_t sequences = 0;
    for (int m = kMinDegree; m <= kMaxDegree; ++m)
        for (int idx = 0; idx < 2; ++idx) {
            const auto seq = generate_mls(builtin_lfsr(m, idx));
            const std::size_t n = (std::size_t{1} << m) - 1;
            const std::string tag = "degree " + std::to_string(m) + " index " + std::to_string(idx);
            o.require(seq.size() == n, tag + " length");
            long minus = 0;
            for (double c : seq.chips) minus += c < 0;
            o.require(minus == static_cast<long>(n / 2 + 1), tag + " balance");
            CVector a(seq.chips.begin(), seq.chips.end());
            const auto ac = circular_correlate(a, seq.view());
            bool two_valued = std::abs(ac[0] - Complex(double(n), 0.0)) < 1e-9;
            for (std::size_t l = 1; l < n; ++l) two_valued &= std::abs(ac[l] - Complex(-1.0, 0.0)) < 1e-9;
            o.require(two_valued, tag + " autocorrelation");
            ++sequences;
        }
    double worst = 0.0;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int m : {3, 5, 7}) {
        const auto seq = generate_mls(builtin_lfsr(m));
        CVector x(seq.size());
        for (auto& v : x) v = {g(rng), g(rng)};
        const auto fast = circular_correlate(x, seq.view());
        const auto slow = oracle::circular_correlation(x, seq.chips);
        for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
    }
    o.require(worst <= 1e-9, "FFT correlation vs oracle " + fmt("%.3g", worst));
    o.note(std::to_string(sequences) + " sequences, max correlation deviation " + fmt("%.2g", worst));
    return o;
}

Outcome loopback() {
    Outcome o;
    for (const char* p : {"pmcw1s", "pmcw2s", "pmcw3s", "pmcw4s"}) {
        const auto s = parse_scenario("", {std::string("plan.preset=") + p, "run.mode=loopback", "run.trials=2"});
        const auto r = run_simulation(s);
        const double ber = row(r, "ber").max;
        const double mer = row(r, "mer_db").min;
        o.require(r.failed == 0 && r.errored == 0, std::string(p) + " trial failures");
        o.require(ber == 0.0, std::string(p) + " BER " + fmt("%.3g", ber));
        o.require(mer >= 60.0, std::string(p) + " MER " + fmt("%.2f", mer));
        o.note(std::string(p) + " BER " + fmt("%g", ber) + " min MER " + fmt("%.1f dB", mer));
    }
    return o;
}

Outcome impaired(const std::filesystem::path& dir) {
    Outcome o;
    auto s = parse_scenario("", with(kImpaired, {"plan.preset=pmcw1s"}));
    const auto r = run_simulation(s);
    write_simulation_artifacts(s, r, dir);
    o.require(s.plan.blocks == 1024, "plan has M = 1024");
    const auto sto_ok = row(r, "sto_within_1").count;
    o.require(sto_ok >= 99, "STO within 1 sample in " + std::to_string(sto_ok) + " trials");

    double abs_cfo = 0.0;
    std::size_t ok = 0;
    for (const auto& t : r.trials)
        if (t.status == TrialStatus::ok) {
            abs_cfo += std::abs(t.cfo_error_hz);
            ++ok;
        }
    abs_cfo = ok ? abs_cfo / static_cast<double>(ok) : INFINITY;
    const double tsai = row(r, "sfo_error_ppm").rms;
    const double post = row(r, "residual_sfo_after_pilots_ppm").rms;
    const auto ber_zero = row(r, "ber_zero").count;
    o.require(ok == 100, std::to_string(100 - ok) + " trials without a result");
    o.require(abs_cfo < 200.0, "CFO error " + fmt("%.1f Hz", abs_cfo));
    o.require(tsai < 1.0, "Tsai SFO RMS error " + fmt("%.3f ppm", tsai));
    o.require(post < 0.1, "post-pilot residual SFO " + fmt("%.4f ppm", post));
    o.require(ber_zero == 100, "BER = 0 in " + std::to_string(ber_zero) + " trials");
    o.note("STO within 1: " + std::to_string(sto_ok) + "/100, mean |CFO error| " + fmt("%.2f Hz", abs_cfo) +
           ", Tsai RMS " + fmt("%.3f ppm", tsai) + ", post-pilot RMS " + fmt("%.4f ppm", post) +
           ", BER-free trials " + std::to_string(ber_zero) + ", mean MER " + fmt("%.2f dB", row(r, "mer_db").mean));
    return o;
}

Outcome precision_trend() {
    Outcome o;
    double prev = INFINITY;
    std::string trend;
    for (const char* p : {"pmcw1s", "pmcw2s", "pmcw3s", "pmcw4s"}) {
        // The Tsai estimate uses only the preamble; a short payload keeps the run quick.
        const auto s = parse_scenario("", with(kImpaired, {std::string("plan.preset=") + p, "plan.blocks=40"}));
        const auto r = run_simulation(s);
        const double sd = row(r, "sfo_tsai_ppm").stddev;
        o.require(r.failed == 0 && r.errored == 0, std::string(p) + " trial failures");
        o.require(sd < prev, std::string(p) + " std " + fmt("%.3f", sd) + " not below " + fmt("%.3f", prev));
        trend += (trend.empty() ? "" : " > ") + fmt("%.3f", sd);
        prev = sd;
    }
    o.note("Tsai std (ppm) " + trend);
    return o;
}

Outcome ambiguity() {
    Outcome o;
    const auto base = with(kImpaired, {"run.trials=20", "receiver.residual_cfo_hz=-15000"});
    const auto r4 = run_simulation(parse_scenario("", with(base, {"plan.preset=pmcw4s"})));
    const auto r3 = run_simulation(parse_scenario("", with(base, {"plan.preset=pmcw3s"})));
    const double doppler = row(r4, "pilot_doppler_hz").mean;
    const double ber4 = row(r4, "ber").mean;
    const double ber3 = row(r3, "ber").max;
    o.require(r4.failed + r4.errored + r3.failed + r3.errored == 0, "trial failures");
    o.require(std::abs(doppler - 4540.0) <= 200.0, "pmcw4s Doppler " + fmt("%.1f Hz", doppler));
    o.require(std::abs(ber4 - 0.5) <= 0.05, "pmcw4s BER " + fmt("%.4f", ber4));
    o.require(ber3 == 0.0, "pmcw3s BER " + fmt("%.4f", ber3));
    o.note("pmcw4s Doppler " + fmt("%.1f Hz", doppler) + " BER " + fmt("%.4f", ber4) + ", pmcw3s max BER " +
           fmt("%g", ber3) + " Doppler " + fmt("%.1f Hz", row(r3, "pilot_doppler_hz").mean));
    return o;
}

Outcome mer_trend() {
    Outcome o;
    const std::vector<std::string> ideal = {"receiver.enable_sc=false", "receiver.enable_sfo=false",
                                            "channel.snr_db=0", "run.trials=100", "plan.blocks=256"};
    const auto r1 = run_simulation(parse_scenario("", with(ideal, {"plan.preset=pmcw1s"})));
    const auto r2 = run_simulation(parse_scenario("", with(ideal, {"plan.preset=pmcw2s"})));
    const double m1 = row(r1, "mer_db").mean, m2 = row(r2, "mer_db").mean;
    o.require(std::abs(m2 - m1 - 3.01) <= 0.5, "difference " + fmt("%.3f dB", m2 - m1));
    o.note("MER " + fmt("%.2f", m1) + " -> " + fmt("%.2f dB", m2) + ", difference " + fmt("%.3f dB", m2 - m1));
    return o;
}

Outcome radar() {
    Outcome o;
    const auto s = parse_scenario("", {"run.mode=radar", "run.trials=1"});
    const auto r = run_radar(s);
    const auto& t = r.trials.at(0);
    o.require(t.status == TrialStatus::ok, t.message);
    const auto& map = r.first_map;
    const auto& tg = t.targets.at(0);
    o.require(tg.detected, "target not detected");
    o.require(std::abs(tg.range_m - 15.0) <= map.range_resolution_m, "range " + fmt("%.3f m", tg.range_m));
    o.require(std::abs(tg.velocity_mps - 20.0) <= map.velocity_resolution_mps, "velocity " + fmt("%.3f m/s", tg.velocity_mps));
    o.require(std::abs(tg.gain_db - tg.expected_gain_db) <= 1.0, "gain " + fmt("%.2f dB", tg.gain_db));

    const auto perf = derive_parameters(s.plan);
    bool axes = map.range_resolution_m == perf.range_resolution_m && map.max_range_m == perf.max_range_m &&
                map.velocity_resolution_mps == perf.velocity_resolution_mps &&
                map.max_velocity_mps == perf.max_velocity_mps;
    const auto ra = map.range_axis();
    const auto va = map.velocity_axis();
    for (std::size_t i = 0; i < ra.size(); ++i) axes &= ra[i] == static_cast<double>(i) * perf.range_resolution_m;
    for (std::size_t k = 0; k < va.size(); ++k)
        axes &= va[k] == (static_cast<double>(k) - static_cast<double>(va.size() / 2)) * perf.velocity_resolution_mps;
    const auto dir = scratch("radar");
    write_radar_artifacts(s, r, dir);
    const auto back = read_map(dir / "range_doppler.bin");
    axes &= back.range_resolution_m == perf.range_resolution_m &&
            back.velocity_resolution_mps == perf.velocity_resolution_mps && back.velocity_axis() == va;
    std::filesystem::remove_all(dir);
    o.require(axes, "map axes differ from the parameter report");
    o.note("detected at " + fmt("%.3f m", tg.range_m) + ", " + fmt("%.3f m/s", tg.velocity_mps) + ", gain " +
           fmt("%.2f dB", tg.gain_db) + " vs " + fmt("%.2f dB", tg.expected_gain_db));
    return o;
}

Outcome determinism(const std::filesystem::path& first) {
    Outcome o;
    const auto dir = scratch("repeat");
    auto s = parse_scenario("", with(kImpaired, {"plan.preset=pmcw1s"}));
    write_simulation_artifacts(s, run_simulation(s), dir);
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(first)) {
        const auto name = e.path().filename();
        const bool same = slurp(e.path()) == slurp(dir / name);
        o.require(same, name.string() + " differs");
        ++files;
    }
    o.require(files >= 5, "only " + std::to_string(files) + " artifacts written");
    o.note(std::to_string(files) + " artifacts compared");
    std::filesystem::remove_all(dir);
    return o;
}

}  // namespace

int main() {
    int failures = 0;
    const auto run = [&](int id, const char* title, double limit_s, const std::function<Outcome()>& f) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (limit_s > 0.0) o.require(secs < limit_s, "runtime over " + fmt("%.0f s", limit_s));
        failures += !o.pass;
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
        std::fflush(stdout);
    };

    const auto first = scratch("impaired");
    run(1, "parameter table", 1.0, table_reproduction);
    run(2, "MLS properties", 10.0, mls_suite);
    run(3, "noiseless loopback", 30.0, loopback);
    run(4, "impaired end-to-end", 300.0, [&] { return impaired(first); });
    run(5, "Tsai precision trend", 0.0, precision_trend);
    run(6, "Doppler ambiguity", 0.0, ambiguity);
    run(7, "MER gain trend", 0.0, mer_trend);
    run(8, "radar gain and geometry", 60.0, radar);
    run(9, "determinism", 0.0, [&] { return determinism(first); });
    std::filesystem::remove_all(first);
    return failures == 0 ? 0 : 1;
}
