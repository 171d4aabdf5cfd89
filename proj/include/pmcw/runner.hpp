#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pmcw/acquisition.hpp"
#include "pmcw/commdemod.hpp"
#include "pmcw/radarproc.hpp"
#include "pmcw/scenario.hpp"

namespace pmcw {

using LogFn = std::function<void(const std::string&)>;

enum class TrialStatus { ok, acquisition_failed, error };
std::string to_string(TrialStatus s);

struct CommTrial {
    std::size_t trial = 0;
    std::uint64_t bits_seed = 0;
    std::uint64_t noise_seed = 0;
    TrialStatus status = TrialStatus::ok;
    std::string message;
    SyncReport sync;
    DemodReport demod;
    double true_sto = 0.0;
    double true_cfo_hz = 0.0;       // channel CFO plus the post-acquisition injection
    double true_sfo_ppm = 0.0;
    double sto_error = 0.0;
    double cfo_estimate_hz = 0.0;   // S&C total plus pilot Doppler
    double cfo_error_hz = 0.0;
    double sfo_error_ppm = 0.0;
    double residual_sfo_after_pilots_ppm = 0.0;
};

struct SummaryRow {
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    double rms = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

struct SimulationResult {
    std::vector<CommTrial> trials;   // sorted by trial index
    std::vector<SummaryRow> summary;
    std::size_t failed = 0;
    std::size_t errored = 0;
};

// Runs every trial of a comm or loopback scenario on the worker pool.
SimulationResult run_simulation(const Scenario& s, const LogFn& log = {});
std::vector<SummaryRow> summarize(const std::vector<CommTrial>& trials);

struct TargetOutcome {
    std::size_t trial = 0;
    std::size_t target = 0;
    double true_range_m = 0.0;
    double true_velocity_mps = 0.0;   // wrapped into the unambiguous span
    bool detected = false;
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double range_error_m = 0.0;
    double velocity_error_mps = 0.0;
    double input_snr_db = 0.0;
    double peak_to_noise_db = 0.0;
    double gain_db = 0.0;            // peak_to_noise_db - input_snr_db
    double expected_gain_db = 0.0;   // 10 log10(N (A - 1) M)
};

struct RadarTrial {
    std::size_t trial = 0;
    std::uint64_t noise_seed = 0;
    TrialStatus status = TrialStatus::ok;
    std::string message;
    std::vector<Detection> detections;
    std::vector<TargetOutcome> targets;
};

struct RadarResult {
    std::vector<RadarTrial> trials;
    RangeDopplerMap first_map;   // trial 0
    std::size_t errored = 0;
};

RadarResult run_radar(const Scenario& s, const LogFn& log = {});

// Artifact writers; every CSV row starts with the scenario hash and the seed base.
void write_common_artifacts(const Scenario& s, const std::filesystem::path& dir);
void write_simulation_artifacts(const Scenario& s, const SimulationResult& r, const std::filesystem::path& dir);
void write_radar_artifacts(const Scenario& s, const RadarResult& r, const std::filesystem::path& dir);

struct SweepPoint {
    double snr_db = 0.0;
    double cfo_hz = 0.0;
    double sfo_ppm = 0.0;
    std::filesystem::path dir;
    SimulationResult result;
};

// Cartesian grid over the sweep lists; each point gets its own subdirectory plus a row in sweep.csv.
std::vector<SweepPoint> run_sweep(const Scenario& s, const LogFn& log = {});

}  // namespace pmcw
