#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pmcw/impairments.hpp"
#include "pmcw/sysparams.hpp"

namespace pmcw {

enum class Mode { comm, radar, loopback };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct TargetSpec {
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double gain_db = 0.0;
};

struct ReceiverConfig {
    bool enable_sc = true;             // false: genie timing, no CFO correction
    bool enable_sfo = true;            // Tsai estimate and resampling
    bool pilot_corrections = true;     // residual SFO and Doppler from pilots
    bool equalize = true;
    double residual_cfo_hz = 0.0;      // injected after acquisition
    double sfo_band_fraction = 0.85;
    int integer_cfo_range = 8;
    int interpolator_taps = 32;
    double interpolator_beta = 10.0;
};

struct RadarConfig {
    std::vector<TargetSpec> targets{TargetSpec{15.0, 20.0, 0.0}};
    double snr_db = -10.0;             // per sample, relative to the total echo power
    double threshold_db = 20.0;
    bool hann = false;
};

struct SweepConfig {
    std::vector<double> snr_db;
    std::vector<double> cfo_hz;
    std::vector<double> sfo_ppm;
};

struct Scenario {
    std::string preset = "pmcw1s";
    FramePlan plan;
    ChannelConfig channel;
    ReceiverConfig receiver;
    RadarConfig radar;
    SweepConfig sweep;
    Mode mode = Mode::comm;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    std::size_t workers = 0;           // 0: hardware concurrency
    bool dump_iq = false;

    // Throws ConfigError.
    void validate() const;
};

// One documented key: section, name, default text, help.
struct ConfigKey {
    const char* section;
    const char* name;
    const char* fallback;
    const char* help;
};
const std::vector<ConfigKey>& config_keys();
std::string config_keys_help();

// INI text plus "section.key=value" overrides applied on top. Unknown sections or keys are rejected.
Scenario parse_scenario(const std::string& ini_text, const std::vector<std::string>& overrides = {});
Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Every resolved key (defaults included) in INI form; the [meta] section carries the hash.
std::string manifest_text(const Scenario& s);

// FNV-1a over the resolved experiment parameters (excludes seed and output placement).
std::string scenario_hash(const Scenario& s);

std::vector<PathSpec> parse_paths(const std::string& text);
std::string format_paths(const std::vector<PathSpec>& paths);
std::vector<TargetSpec> parse_targets(const std::string& text);
std::string format_targets(const std::vector<TargetSpec>& targets);
std::vector<double> parse_list(const std::string& text);

// Deterministic per-trial seed for a given stream (bits, noise, ...).
std::uint64_t trial_seed(std::uint64_t base, std::size_t trial, std::uint32_t stream);

}  // namespace pmcw
