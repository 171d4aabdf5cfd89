#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "CLI11.hpp"
#include "pmcw/runner.hpp"

namespace {

struct RunFlags {
    std::string config;
    std::string preset;
    std::string trials;
    std::string seed;
    std::string out;
    std::string workers;
    std::string snr;
    std::string cfo;
    std::string sfo;
    std::string sto;
    std::vector<std::string> sets;
    bool dump_iq = false;
    bool loopback = false;
    bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("-c,--config", f.config, "scenario INI file");
    cmd->add_option("-p,--preset", f.preset, "plan preset (plan.preset)");
    cmd->add_option("-n,--trials", f.trials, "trial count (run.trials)");
    cmd->add_option("-s,--seed", f.seed, "seed base (run.seed)");
    cmd->add_option("-o,--out", f.out, "output directory (run.output_dir)");
    cmd->add_option("-j,--workers", f.workers, "worker threads (run.workers)");
    cmd->add_option("--snr", f.snr, "per-sample SNR in dB (channel.snr_db, radar.snr_db in radar mode)");
    cmd->add_option("--cfo", f.cfo, "CFO in Hz (channel.cfo_hz)");
    cmd->add_option("--sfo", f.sfo, "SFO in ppm (channel.sfo_ppm)");
    cmd->add_option("--sto", f.sto, "STO in samples (channel.sto_samples)");
    cmd->add_option("--set", f.sets, "section.key=value override, repeatable");
    cmd->add_flag("--dump-iq", f.dump_iq, "write transmit and receive IQ of trial 0");
    cmd->add_flag("-q,--quiet", f.quiet, "log to run.log only");
}

pmcw::Scenario resolve(const RunFlags& f, const char* mode) {
    std::vector<std::string> ov = f.sets;
    const auto put = [&](const std::string& key, const std::string& v) {
        if (!v.empty()) ov.push_back(key + "=" + v);
    };
    put("plan.preset", f.preset);
    put("run.trials", f.trials);
    put("run.seed", f.seed);
    put("run.output_dir", f.out);
    put("run.workers", f.workers);
    put(std::string(mode) == "radar" ? "radar.snr_db" : "channel.snr_db", f.snr);
    put("channel.cfo_hz", f.cfo);
    put("channel.sfo_ppm", f.sfo);
    put("channel.sto_samples", f.sto);
    if (f.dump_iq) ov.push_back("run.dump_iq=true");
    if (mode) ov.push_back(std::string("run.mode=") + (f.loopback ? "loopback" : mode));
    return f.config.empty() ? pmcw::parse_scenario("", ov) : pmcw::load_scenario(f.config, ov);
}

class RunLog {
public:
    RunLog(const std::filesystem::path& dir, bool quiet) : quiet_(quiet) {
        std::filesystem::create_directories(dir);
        os_.open(dir / "run.log", std::ios::app);
    }
    void operator()(const std::string& msg) {
        std::lock_guard lock(mutex_);
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
        os_ << stamp << " " << msg << "\n";
        os_.flush();
        if (!quiet_) std::cerr << msg << "\n";
    }
    pmcw::LogFn fn() {
        return [this](const std::string& m) { (*this)(m); };
    }

private:
    std::ofstream os_;
    std::mutex mutex_;
    bool quiet_;
};

void print_summary(const std::vector<pmcw::SummaryRow>& rows) {
    std::printf("%-32s %14s %14s %14s %8s\n", "metric", "mean", "std", "rms", "count");
    for (const auto& r : rows)
        std::printf("%-32s %14.6g %14.6g %14.6g %8zu\n", r.metric.c_str(), r.mean, r.stddev, r.rms, r.count);
}

int cmd_params(const std::vector<std::string>& presets, const std::string& config, const std::vector<std::string>& sets,
               const std::string& out) {
    std::vector<std::pair<std::string, pmcw::FramePlan>> plans;
    if (!config.empty() || !sets.empty()) {
        const auto s = config.empty() ? pmcw::parse_scenario("", sets) : pmcw::load_scenario(config, sets);
        plans.emplace_back(s.preset, s.plan);
    }
    for (const auto& p : presets) plans.emplace_back(p, pmcw::preset_plan(p));
    if (plans.empty())
        for (const char* p : {"pmcw1", "pmcw2", "pmcw3", "pmcw4"}) plans.emplace_back(p, pmcw::preset_plan(p));

    std::ofstream csv;
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        csv.open(std::filesystem::path(out) / "params.csv");
        csv << pmcw::report_csv_header() << "\n";
    }
    for (const auto& [name, plan] : plans) {
        const auto report = pmcw::derive_parameters(plan);
        pmcw::write_report_block(std::cout, name, report);
        std::cout << "\n";
        if (csv) csv << pmcw::report_csv_row(name, report) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PMCW joint radar-communication baseband simulator"};
    app.require_subcommand(1);
    app.footer(pmcw::config_keys_help());

    std::vector<std::string> param_presets, param_sets;
    std::string param_config, param_out;
    auto* params = app.add_subcommand("params", "print derived system parameters");
    params->add_option("-p,--preset", param_presets, "preset, repeatable (default: pmcw1..pmcw4)");
    params->add_option("-c,--config", param_config, "scenario INI file");
    params->add_option("--set", param_sets, "section.key=value override, repeatable");
    params->add_option("-o,--out", param_out, "directory for params.csv");

    RunFlags sim_flags, radar_flags, sweep_flags;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo link simulation");
    add_run_flags(simulate, sim_flags);
    simulate->add_flag("--loopback", sim_flags.loopback, "ideal channel, no impairments");
    auto* radar = app.add_subcommand("radar", "range-Doppler processing of target echoes");
    add_run_flags(radar, radar_flags);
    auto* sweep = app.add_subcommand("sweep", "simulation grid over the [sweep] lists");
    add_run_flags(sweep, sweep_flags);
    std::string sweep_snr, sweep_cfo, sweep_sfo;
    sweep->add_option("--snr-list", sweep_snr, "comma-separated SNR grid (sweep.snr_db)");
    sweep->add_option("--cfo-list", sweep_cfo, "comma-separated CFO grid (sweep.cfo_hz)");
    sweep->add_option("--sfo-list", sweep_sfo, "comma-separated SFO grid (sweep.sfo_ppm)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (params->parsed()) return cmd_params(param_presets, param_config, param_sets, param_out);

        if (simulate->parsed()) {
            const auto s = resolve(sim_flags, "comm");
            RunLog log(s.output_dir, sim_flags.quiet);
            log("simulate " + pmcw::to_string(s.mode) + " preset=" + s.preset + " hash=" + pmcw::scenario_hash(s) +
                " seed=" + std::to_string(s.seed) + " trials=" + std::to_string(s.trials));
            const auto r = pmcw::run_simulation(s, log.fn());
            pmcw::write_simulation_artifacts(s, r, s.output_dir);
            print_summary(r.summary);
            log("done: " + std::to_string(r.failed) + " acquisition failures, " + std::to_string(r.errored) + " errors");
            return r.errored ? 1 : 0;
        }

        if (radar->parsed()) {
            const auto s = resolve(radar_flags, "radar");
            RunLog log(s.output_dir, radar_flags.quiet);
            log("radar preset=" + s.preset + " hash=" + pmcw::scenario_hash(s) + " seed=" + std::to_string(s.seed));
            const auto r = pmcw::run_radar(s, log.fn());
            pmcw::write_radar_artifacts(s, r, s.output_dir);
            for (const auto& t : r.trials)
                for (const auto& o : t.targets)
                    std::printf("trial %zu target %zu: %s range %.3f m velocity %.3f m/s gain %.2f dB (expected %.2f)\n",
                                t.trial, o.target, o.detected ? "detected" : "missed", o.range_m, o.velocity_mps,
                                o.gain_db, o.expected_gain_db);
            log("done: " + std::to_string(r.errored) + " errors");
            return r.errored ? 1 : 0;
        }

        if (sweep->parsed()) {
            if (!sweep_snr.empty()) sweep_flags.sets.push_back("sweep.snr_db=" + sweep_snr);
            if (!sweep_cfo.empty()) sweep_flags.sets.push_back("sweep.cfo_hz=" + sweep_cfo);
            if (!sweep_sfo.empty()) sweep_flags.sets.push_back("sweep.sfo_ppm=" + sweep_sfo);
            const auto s = resolve(sweep_flags, "comm");
            RunLog log(s.output_dir, sweep_flags.quiet);
            log("sweep preset=" + s.preset + " hash=" + pmcw::scenario_hash(s) + " seed=" + std::to_string(s.seed));
            const auto points = pmcw::run_sweep(s, log.fn());
            std::size_t errored = 0;
            for (const auto& p : points) errored += p.result.errored;
            log("done: " + std::to_string(points.size()) + " points, " + std::to_string(errored) + " errors");
            return errored ? 1 : 0;
        }
    } catch (const pmcw::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
