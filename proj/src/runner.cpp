#include "pmcw/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "pmcw/impairments.hpp"
#include "pmcw/interpolator.hpp"
#include "pmcw/iqfile.hpp"
#include "pmcw/txframe.hpp"

namespace pmcw {

namespace {

constexpr std::uint32_t kBitsStream = 0;
constexpr std::uint32_t kNoiseStream = 1;

template <typename F>
void parallel_for(std::size_t count, std::size_t workers, F&& body) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < count; i = next++) body(i);
    };
    if (workers <= 1) {
        loop();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
}

Bits random_bits(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Bits bits(count);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1u);
    return bits;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::size_t field_count(const std::string& header) {
    return static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
}

std::string empty_fields(std::size_t n) { return std::string(n > 0 ? n - 1 : 0, ','); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    return os;
}

std::string prefix(const Scenario& s) { return scenario_hash(s) + "," + std::to_string(s.seed); }

SummaryRow summary_of(const std::string& name, const std::vector<double>& v) {
    SummaryRow r;
    r.metric = name;
    r.count = v.size();
    if (v.empty()) return r;
    double sum = 0.0, sq = 0.0;
    for (double x : v) {
        sum += x;
        sq += x * x;
    }
    r.mean = sum / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - r.mean) * (x - r.mean);
    r.stddev = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    r.rms = std::sqrt(sq / static_cast<double>(v.size()));
    r.min = *std::min_element(v.begin(), v.end());
    r.max = *std::max_element(v.begin(), v.end());
    return r;
}

SummaryRow count_row(const std::string& name, std::size_t n) {
    SummaryRow r;
    r.metric = name;
    r.mean = r.min = r.max = r.rms = static_cast<double>(n);
    r.count = n;
    return r;
}

CommTrial run_comm_trial(const Scenario& s, const FrameSequences& seqs, const FractionalInterpolator& interp,
                         std::size_t trial) {
    CommTrial t;
    t.trial = trial;
    t.bits_seed = trial_seed(s.seed, trial, kBitsStream);
    t.noise_seed = trial_seed(s.seed, trial, kNoiseStream);

    ChannelConfig cfg = s.mode == Mode::loopback ? ChannelConfig{} : s.channel;
    cfg.noise_seed = t.noise_seed;
    const double residual = s.mode == Mode::loopback ? 0.0 : s.receiver.residual_cfo_hz;
    t.true_sto = cfg.sto_samples;
    t.true_cfo_hz = cfg.cfo_hz + residual;
    t.true_sfo_ppm = cfg.sfo_ppm;

    try {
        const Bits bits = random_bits(s.plan.data_bit_count(), t.bits_seed);
        const TxFrame frame = assemble_frame(s.plan, seqs, bits);
        const IqBuffer rx = apply_channel(frame.buffer, cfg, interp);
        if (s.dump_iq && trial == 0) {
            std::filesystem::create_directories(s.output_dir);
            const IqMetadata meta{s.plan.sample_rate, scenario_hash(s), s.seed, ""};
            auto m = meta;
            m.description = "transmit frame, trial 0";
            write_iq(s.output_dir / "tx_trial0.iq", frame.buffer, m);
            m.description = "received samples, trial 0";
            write_iq(s.output_dir / "rx_trial0.iq", rx, m);
        }

        AcquisitionOptions ao;
        ao.enable_sc = s.receiver.enable_sc;
        ao.enable_sfo = s.receiver.enable_sfo;
        ao.sfo_band_fraction = s.receiver.sfo_band_fraction;
        ao.integer_cfo.search_range = s.receiver.integer_cfo_range;
        ao.interpolator = &interp;
        if (!s.receiver.enable_sc) ao.genie_sto = static_cast<long>(std::floor(cfg.sto_samples));
        const AcquisitionResult acq = acquire(rx, s.plan, seqs, ao);
        t.sync = acq.report;

        CVector payload(acq.aligned.samples.begin() + static_cast<long>(s.plan.preamble_length()),
                        acq.aligned.samples.end());
        if (residual != 0.0) rotate_inplace(payload, residual, s.plan.sample_rate);

        DemodOptions dopt;
        dopt.correct_residual_sfo = s.receiver.pilot_corrections;
        dopt.correct_doppler = s.receiver.pilot_corrections;
        dopt.equalize = s.receiver.equalize;
        t.demod = demodulate(payload, s.plan, seqs.payload, &bits, dopt);

        t.sto_error = static_cast<double>(t.sync.sto) - t.true_sto;
        t.cfo_estimate_hz = t.sync.cfo_total_hz + t.demod.doppler_hz;
        t.cfo_error_hz = t.cfo_estimate_hz - t.true_cfo_hz;
        t.sfo_error_ppm = t.sync.sfo_ppm - t.true_sfo_ppm;
        t.residual_sfo_after_pilots_ppm = (t.true_sfo_ppm - t.sync.sfo_ppm) - t.demod.residual_sfo_ppm;
    } catch (const AcquisitionError& e) {
        t.status = TrialStatus::acquisition_failed;
        t.message = e.what();
    } catch (const RangeError& e) {
        t.status = TrialStatus::acquisition_failed;
        t.message = e.what();
    } catch (const std::exception& e) {
        t.status = TrialStatus::error;
        t.message = e.what();
    }
    return t;
}

double wrap_symmetric(double v, double half_span) {
    const double span = 2.0 * half_span;
    double w = std::fmod(v + half_span, span);
    if (w < 0.0) w += span;
    return w - half_span;
}

double circular_distance(double a, double b, double n) {
    return std::abs(std::remainder(a - b, n));
}

RadarTrial run_radar_trial(const Scenario& s, const FrameSequences& seqs, const FractionalInterpolator& interp,
                           std::size_t trial, RangeDopplerMap* keep_map) {
    RadarTrial t;
    t.trial = trial;
    t.noise_seed = trial_seed(s.seed, trial, kNoiseStream);
    try {
        const auto& plan = s.plan;
        const Bits bits = random_bits(plan.data_bit_count(), trial_seed(s.seed, trial, kBitsStream));
        const auto symbols = block_symbols(bits, plan);
        const IqBuffer tx{build_payload(seqs.payload, bits, plan), plan.sample_rate};

        std::vector<std::pair<PathSpec, std::size_t>> paths;
        double total_gain = 0.0;
        for (std::size_t i = 0; i < s.radar.targets.size(); ++i) {
            const auto& tg = s.radar.targets[i];
            const double amp = std::pow(10.0, tg.gain_db / 20.0);
            total_gain += amp * amp;
            paths.push_back({{2.0 * tg.range_m / kSpeedOfLight, {amp, 0.0}, 2.0 * tg.velocity_mps / plan.wavelength()}, i});
        }
        std::stable_sort(paths.begin(), paths.end(),
                         [](const auto& a, const auto& b) { return std::abs(a.first.gain) > std::abs(b.first.gain); });
        std::vector<PathSpec> specs;
        for (const auto& p : paths) specs.push_back(p.first);

        IqBuffer rx = apply_multipath(tx, specs, interp);
        rx = apply_sto_and_noise(rx, 0.0, s.radar.snr_db, t.noise_seed, interp);

        const auto map = range_doppler(range_profiles(rx.samples, plan, seqs.payload, symbols), plan, s.radar.hann);
        t.detections = detect(map, s.radar.threshold_db);
        const PerformanceReport perf = derive_parameters(plan);
        const double n = static_cast<double>(map.range_bins), m = static_cast<double>(map.velocity_bins);

        for (std::size_t i = 0; i < s.radar.targets.size(); ++i) {
            const auto& tg = s.radar.targets[i];
            TargetOutcome o;
            o.trial = trial;
            o.target = i;
            o.true_range_m = tg.range_m;
            o.true_velocity_mps = wrap_symmetric(tg.velocity_mps, map.max_velocity_mps);
            const double rbin = std::fmod(tg.range_m / map.range_resolution_m, n);
            const double vbin = o.true_velocity_mps / map.velocity_resolution_mps + static_cast<double>(map.velocity_bins / 2);
            const double amp = std::pow(10.0, tg.gain_db / 20.0);
            o.input_snr_db = s.radar.snr_db + power_to_db(amp * amp / total_gain);
            o.expected_gain_db = perf.radar_gain_db;

            double best = INFINITY;
            for (const auto& d : t.detections) {
                const double dr = circular_distance(d.range_bin, rbin, n), dv = circular_distance(d.velocity_bin, vbin, m);
                if (dr > 1.5 || dv > 1.5) continue;
                if (dr + dv < best) {
                    best = dr + dv;
                    o.detected = true;
                    o.range_m = d.range_m;
                    o.velocity_mps = d.velocity_mps;
                }
            }
            if (o.detected) {
                o.range_error_m = std::remainder(o.range_m - std::fmod(tg.range_m, map.max_range_m), map.max_range_m);
                o.velocity_error_mps = o.velocity_mps - o.true_velocity_mps;
            }
            const auto rc = static_cast<std::size_t>(std::lround(rbin)) % map.range_bins;
            const auto vc = static_cast<std::size_t>(std::lround(vbin)) % map.velocity_bins;
            o.peak_to_noise_db = peak_to_noise_db(map, rc, vc);
            o.gain_db = o.peak_to_noise_db - o.input_snr_db;
            t.targets.push_back(o);
        }
        if (keep_map) *keep_map = map;
    } catch (const std::exception& e) {
        t.status = TrialStatus::error;
        t.message = e.what();
    }
    return t;
}

FractionalInterpolator make_interpolator(const Scenario& s) {
    return FractionalInterpolator(s.receiver.interpolator_taps, s.receiver.interpolator_beta);
}

}  // namespace

std::string to_string(TrialStatus s) {
    switch (s) {
        case TrialStatus::ok: return "ok";
        case TrialStatus::acquisition_failed: return "acquisition_failed";
        case TrialStatus::error: return "error";
    }
    return "error";
}

std::vector<SummaryRow> summarize(const std::vector<CommTrial>& trials) {
    std::vector<double> sto, cfo_sc, cfo_total, doppler, cfo_est, cfo_err, sfo, sfo_err, pilot_sfo, post_sfo, mer, ber;
    std::size_t ok = 0, failed = 0, errors = 0, sto_ok = 0, ber_zero = 0;
    for (const auto& t : trials) {
        if (t.status == TrialStatus::acquisition_failed) ++failed;
        if (t.status == TrialStatus::error) ++errors;
        if (t.status != TrialStatus::ok) continue;
        ++ok;
        sto.push_back(t.sto_error);
        cfo_sc.push_back(t.sync.cfo_sc_hz);
        cfo_total.push_back(t.sync.cfo_total_hz);
        doppler.push_back(t.demod.doppler_hz);
        cfo_est.push_back(t.cfo_estimate_hz);
        cfo_err.push_back(t.cfo_error_hz);
        sfo.push_back(t.sync.sfo_ppm);
        sfo_err.push_back(t.sfo_error_ppm);
        pilot_sfo.push_back(t.demod.residual_sfo_ppm);
        post_sfo.push_back(t.residual_sfo_after_pilots_ppm);
        mer.push_back(t.demod.mer_db);
        ber.push_back(t.demod.ber);
        sto_ok += std::abs(t.sto_error) <= 1.0;
        ber_zero += t.demod.bit_errors == 0;
    }
    return {summary_of("sto_error_samples", sto),
            summary_of("cfo_sc_hz", cfo_sc),
            summary_of("cfo_acquisition_hz", cfo_total),
            summary_of("pilot_doppler_hz", doppler),
            summary_of("cfo_estimate_hz", cfo_est),
            summary_of("cfo_error_hz", cfo_err),
            summary_of("sfo_tsai_ppm", sfo),
            summary_of("sfo_error_ppm", sfo_err),
            summary_of("pilot_residual_sfo_ppm", pilot_sfo),
            summary_of("residual_sfo_after_pilots_ppm", post_sfo),
            summary_of("mer_db", mer),
            summary_of("ber", ber),
            count_row("trials", trials.size()),
            count_row("trials_ok", ok),
            count_row("acquisition_failed", failed),
            count_row("errors", errors),
            count_row("sto_within_1", sto_ok),
            count_row("ber_zero", ber_zero)};
}

SimulationResult run_simulation(const Scenario& s, const LogFn& log) {
    s.validate();
    if (s.mode == Mode::radar) throw ConfigError("run_simulation needs comm or loopback mode");
    const FrameSequences seqs = FrameSequences::for_plan(s.plan);
    const FractionalInterpolator interp = make_interpolator(s);

    SimulationResult r;
    r.trials.resize(s.trials);
    std::atomic<std::size_t> done{0};
    std::mutex log_mutex;
    parallel_for(s.trials, s.workers, [&](std::size_t i) {
        r.trials[i] = run_comm_trial(s, seqs, interp, i);
        const std::size_t d = ++done;
        if (log) {
            std::lock_guard lock(log_mutex);
            const auto& t = r.trials[i];
            log("trial " + std::to_string(i) + " " + to_string(t.status) +
                (t.status == TrialStatus::ok ? " ber=" + format_double(t.demod.ber, 4) + " mer=" + format_double(t.demod.mer_db, 4)
                                             : " " + t.message) +
                " (" + std::to_string(d) + "/" + std::to_string(s.trials) + ")");
        }
    });
    for (const auto& t : r.trials) {
        r.failed += t.status == TrialStatus::acquisition_failed;
        r.errored += t.status == TrialStatus::error;
    }
    r.summary = summarize(r.trials);
    return r;
}

RadarResult run_radar(const Scenario& s, const LogFn& log) {
    s.validate();
    const FrameSequences seqs = FrameSequences::for_plan(s.plan);
    const FractionalInterpolator interp = make_interpolator(s);
    RadarResult r;
    r.trials.resize(s.trials);
    std::mutex log_mutex;
    parallel_for(s.trials, s.workers, [&](std::size_t i) {
        r.trials[i] = run_radar_trial(s, seqs, interp, i, i == 0 ? &r.first_map : nullptr);
        if (log) {
            std::lock_guard lock(log_mutex);
            log("radar trial " + std::to_string(i) + " " + to_string(r.trials[i].status) + " detections=" +
                std::to_string(r.trials[i].detections.size()));
        }
    });
    for (const auto& t : r.trials) r.errored += t.status == TrialStatus::error;
    return r;
}

void write_common_artifacts(const Scenario& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    open_out(dir / "manifest.ini") << manifest_text(s);
    auto os = open_out(dir / "params.csv");
    os << "scenario_hash,seed," << report_csv_header() << "\n"
       << prefix(s) << "," << report_csv_row(s.preset, derive_parameters(s.plan)) << "\n";
}

void write_simulation_artifacts(const Scenario& s, const SimulationResult& r, const std::filesystem::path& dir) {
    write_common_artifacts(s, dir);
    const std::string pre = prefix(s);
    const std::string sync_header = sync_csv_header();
    const std::string demod_header = demod_csv_header();
    const std::string extra = "sto_error,cfo_estimate_hz,cfo_error_hz,sfo_error_ppm,residual_sfo_after_pilots_ppm";

    auto sync = open_out(dir / "sync.csv");
    sync << "scenario_hash,seed,trial,bits_seed,noise_seed,status,true_sto,true_cfo_hz,true_sfo_ppm," << sync_header
         << "," << extra << ",message\n";
    auto demod = open_out(dir / "demod.csv");
    demod << "scenario_hash,seed,trial,status," << demod_header << "\n";
    auto cons = open_out(dir / "constellation.txt");
    cons << "# scenario_hash=" << scenario_hash(s) << " seed=" << s.seed << " columns: real imag\n";

    for (const auto& t : r.trials) {
        const bool ok = t.status == TrialStatus::ok;
        sync << pre << "," << t.trial << "," << t.bits_seed << "," << t.noise_seed << "," << to_string(t.status) << ","
             << format_double(t.true_sto) << "," << format_double(t.true_cfo_hz) << "," << format_double(t.true_sfo_ppm)
             << ",";
        if (ok)
            sync << sync_csv_fields(t.sync) << "," << format_double(t.sto_error) << ","
                 << format_double(t.cfo_estimate_hz) << "," << format_double(t.cfo_error_hz) << ","
                 << format_double(t.sfo_error_ppm) << "," << format_double(t.residual_sfo_after_pilots_ppm);
        else
            sync << empty_fields(field_count(sync_header) + field_count(extra));
        sync << "," << csv_quote(t.message) << "\n";

        demod << pre << "," << t.trial << "," << to_string(t.status) << ","
              << (ok ? demod_csv_fields(t.demod) : empty_fields(field_count(demod_header))) << "\n";
        if (ok)
            for (const auto& v : t.demod.soft_symbols)
                cons << format_double(v.real(), 8) << " " << format_double(v.imag(), 8) << "\n";
    }

    auto sum = open_out(dir / "summary.csv");
    sum << "scenario_hash,seed,metric,mean,std,rms,min,max,count,mean_pm_std\n";
    for (const auto& row : r.summary) {
        char pm[96];
        std::snprintf(pm, sizeof(pm), "%.2f±%.2f", row.mean, row.stddev);
        sum << pre << "," << row.metric << "," << format_double(row.mean) << "," << format_double(row.stddev) << ","
            << format_double(row.rms) << "," << format_double(row.min) << "," << format_double(row.max) << ","
            << row.count << "," << pm << "\n";
    }
}

void write_radar_artifacts(const Scenario& s, const RadarResult& r, const std::filesystem::path& dir) {
    write_common_artifacts(s, dir);
    const std::string pre = prefix(s);
    if (!r.first_map.magnitude.empty()) write_map(dir / "range_doppler.bin", r.first_map);

    auto det = open_out(dir / "detections.csv");
    det << "scenario_hash,seed,trial,rank," << detections_csv_header() << "\n";
    auto tgt = open_out(dir / "radar_targets.csv");
    tgt << "scenario_hash,seed,trial,target,status,true_range_m,true_velocity_mps,detected,range_m,velocity_mps,"
           "range_error_m,velocity_error_mps,input_snr_db,peak_to_noise_db,gain_db,expected_gain_db,message\n";
    for (const auto& t : r.trials) {
        for (std::size_t i = 0; i < t.detections.size(); ++i)
            det << pre << "," << t.trial << "," << i << "," << detection_csv_row(t.detections[i]) << "\n";
        for (const auto& o : t.targets)
            tgt << pre << "," << t.trial << "," << o.target << "," << to_string(t.status) << ","
                << format_double(o.true_range_m) << "," << format_double(o.true_velocity_mps) << ","
                << (o.detected ? "1" : "0") << "," << format_double(o.range_m) << "," << format_double(o.velocity_mps)
                << "," << format_double(o.range_error_m) << "," << format_double(o.velocity_error_mps) << ","
                << format_double(o.input_snr_db) << "," << format_double(o.peak_to_noise_db) << ","
                << format_double(o.gain_db) << "," << format_double(o.expected_gain_db) << "," << csv_quote(t.message)
                << "\n";
        if (t.status != TrialStatus::ok)
            tgt << pre << "," << t.trial << ",,error,,,,,,,,,,,," << csv_quote(t.message) << "\n";
    }
}

std::vector<SweepPoint> run_sweep(const Scenario& s, const LogFn& log) {
    const auto axis = [](const std::vector<double>& v, double fallback) {
        return v.empty() ? std::vector<double>{fallback} : v;
    };
    const auto snrs = axis(s.sweep.snr_db, s.channel.snr_db);
    const auto cfos = axis(s.sweep.cfo_hz, s.channel.cfo_hz);
    const auto sfos = axis(s.sweep.sfo_ppm, s.channel.sfo_ppm);

    std::vector<SweepPoint> points;
    for (double snr : snrs)
        for (double cfo : cfos)
            for (double sfo : sfos) {
                SweepPoint p;
                p.snr_db = snr;
                p.cfo_hz = cfo;
                p.sfo_ppm = sfo;
                char name[32];
                std::snprintf(name, sizeof(name), "point_%03zu", points.size());
                p.dir = s.output_dir / name;
                points.push_back(p);
            }

    std::filesystem::create_directories(s.output_dir);
    write_common_artifacts(s, s.output_dir);
    auto os = open_out(s.output_dir / "sweep.csv");
    os << "scenario_hash,seed,point,snr_db,cfo_hz,sfo_ppm,point_hash,trials,trials_ok,acquisition_failed,errors,"
          "ber_mean,mer_mean_db,cfo_error_mean_hz,cfo_error_std_hz,sfo_error_mean_ppm,sfo_error_std_ppm,sto_within_1\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto& p = points[i];
        Scenario sub = s;
        sub.channel.snr_db = p.snr_db;
        sub.channel.cfo_hz = p.cfo_hz;
        sub.channel.sfo_ppm = p.sfo_ppm;
        sub.output_dir = p.dir;
        sub.sweep = {};
        if (log) log("sweep point " + std::to_string(i) + " snr=" + format_double(p.snr_db) + " cfo=" +
                     format_double(p.cfo_hz) + " sfo=" + format_double(p.sfo_ppm));
        p.result = run_simulation(sub, log);
        write_simulation_artifacts(sub, p.result, p.dir);
        auto find = [&](const std::string& metric) {
            for (const auto& row : p.result.summary)
                if (row.metric == metric) return row;
            return SummaryRow{};
        };
        os << prefix(s) << "," << i << "," << format_double(p.snr_db) << "," << format_double(p.cfo_hz) << ","
           << format_double(p.sfo_ppm) << "," << scenario_hash(sub) << "," << sub.trials << ","
           << find("trials_ok").count << "," << p.result.failed << "," << p.result.errored << ","
           << format_double(find("ber").mean) << "," << format_double(find("mer_db").mean) << ","
           << format_double(find("cfo_error_hz").mean) << "," << format_double(find("cfo_error_hz").stddev) << ","
           << format_double(find("sfo_error_ppm").mean) << "," << format_double(find("sfo_error_ppm").stddev) << ","
           << find("sto_within_1").count << "\n";
    }
    return points;
}

}  // namespace pmcw
