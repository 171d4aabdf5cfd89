#include "pmcw/sysparams.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "pmcw/common.hpp"
#include "pmcw/seqgen.hpp"

namespace pmcw {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("frame plan: " + what);
}

}  // namespace

void FramePlan::validate() const {
    require(is_mls_length(prbs_length), "N = " + std::to_string(prbs_length) + " is not of the form 2^m - 1");
    require(prbs_length >= 7, "N = " + std::to_string(prbs_length) + " must be at least 7");
    require(is_mls_length(sc_length), "N_S&C = " + std::to_string(sc_length) + " is not of the form 2^m - 1");
    require(sc_length == (prbs_length + 1) / 2 - 1,
            "N_S&C = " + std::to_string(sc_length) + " must equal (N + 1)/2 - 1 = " +
                std::to_string((prbs_length + 1) / 2 - 1));
    require(sfo_prbs_count >= 3 && sfo_prbs_count % 2 == 1,
            "M_SFO = " + std::to_string(sfo_prbs_count) + " must be odd and >= 3");
    require(repetitions >= 2, "A = " + std::to_string(repetitions) + " must be >= 2");
    require(pilot_spacing >= 1, "pilot spacing must be >= 1");
    require(blocks >= pilot_spacing, "M = " + std::to_string(blocks) + " must be >= pilot spacing " +
                                         std::to_string(pilot_spacing));
    require(sample_rate > 0.0, "sample rate must be positive");
    require(carrier_frequency > 0.0, "carrier frequency must be positive");
}

int FramePlan::degree() const { return std::bit_width(prbs_length); }

int FramePlan::sc_degree() const { return std::bit_width(sc_length); }

std::vector<std::size_t> FramePlan::pilot_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < blocks; k += pilot_spacing) idx.push_back(k);
    return idx;
}

double FramePlan::wavelength() const { return kSpeedOfLight / carrier_frequency; }

PerformanceReport derive_parameters(const FramePlan& plan) {
    plan.validate();
    const double n = static_cast<double>(plan.prbs_length);
    const double a = static_cast<double>(plan.repetitions);
    const double m = static_cast<double>(plan.blocks);
    const double fs = plan.sample_rate;
    const double block_time = n * a / fs;
    const double lambda = plan.wavelength();

    PerformanceReport r;
    r.comm_gain_db = power_to_db(n * (a - 1.0));
    r.radar_gain_db = power_to_db(n * (a - 1.0) * m);
    r.max_delay_s = n / fs;
    r.max_doppler_hz = 1.0 / (2.0 * block_time * static_cast<double>(plan.pilot_spacing));
    r.range_resolution_m = kSpeedOfLight / (2.0 * fs);
    r.max_range_m = n * kSpeedOfLight / (2.0 * fs);
    r.velocity_resolution_mps = lambda / (2.0 * m * block_time);
    r.max_velocity_mps = lambda / (4.0 * block_time);
    r.dwell_time_s = static_cast<double>(plan.frame_length()) / fs;
    r.pilot_count = plan.pilot_count();
    r.payload_bits = plan.data_bit_count();
    r.data_rate_bps = static_cast<double>(r.payload_bits) / r.dwell_time_s;
    return r;
}

std::size_t validate_s_and_c_length(std::size_t prbs_length) {
    if (!is_mls_length(prbs_length) || prbs_length < 7)
        throw ConfigError("N = " + std::to_string(prbs_length) + " is not an MLS length 2^m - 1 with m >= 3");
    const std::size_t sc = (prbs_length + 1) / 2 - 1;
    if (!is_mls_length(sc)) throw ConfigError("derived N_S&C is not an MLS length");
    return sc;
}

FramePlan preset_plan(const std::string& name) {
    FramePlan p;
    p.repetitions = 5;
    p.sfo_prbs_count = 21;
    p.pilot_spacing = 5;
    p.sample_rate = 1e9;
    p.carrier_frequency = 79e9;

    std::string base = name;
    bool scaled = false;
    if (!base.empty() && base.back() == 's') {
        scaled = true;
        base.pop_back();
    }
    if (base == "pmcw1") {
        p.prbs_length = 255;
        p.blocks = 8192;
    } else if (base == "pmcw2") {
        p.prbs_length = 511;
        p.blocks = 4096;
    } else if (base == "pmcw3") {
        p.prbs_length = 1023;
        p.blocks = 2048;
    } else if (base == "pmcw4") {
        p.prbs_length = 2047;
        p.blocks = 1024;
    } else {
        throw ConfigError("unknown preset '" + name + "' (known: pmcw1..pmcw4, pmcw1s..pmcw4s)");
    }
    if (scaled) p.blocks /= 8;
    p.sc_length = validate_s_and_c_length(p.prbs_length);
    return p;
}

std::vector<std::string> preset_names() {
    return {"pmcw1", "pmcw2", "pmcw3", "pmcw4", "pmcw1s", "pmcw2s", "pmcw3s", "pmcw4s"};
}

void write_report_block(std::ostream& os, const std::string& config_id, const PerformanceReport& r) {
    os << "[" << config_id << "]\n"
       << "comm_gain_db = " << fmt_double(r.comm_gain_db) << "\n"
       << "max_delay_s = " << fmt_double(r.max_delay_s) << "\n"
       << "max_doppler_hz = " << fmt_double(r.max_doppler_hz) << "\n"
       << "data_rate_bps = " << fmt_double(r.data_rate_bps) << "\n"
       << "radar_gain_db = " << fmt_double(r.radar_gain_db) << "\n"
       << "range_resolution_m = " << fmt_double(r.range_resolution_m) << "\n"
       << "max_range_m = " << fmt_double(r.max_range_m) << "\n"
       << "velocity_resolution_mps = " << fmt_double(r.velocity_resolution_mps) << "\n"
       << "max_velocity_mps = " << fmt_double(r.max_velocity_mps) << "\n"
       << "dwell_time_s = " << fmt_double(r.dwell_time_s) << "\n"
       << "pilot_count = " << r.pilot_count << "\n"
       << "payload_bits = " << r.payload_bits << "\n";
}

std::string report_csv_header() {
    return "config,comm_gain_db,max_delay_s,max_doppler_hz,data_rate_bps,radar_gain_db,"
           "range_resolution_m,max_range_m,velocity_resolution_mps,max_velocity_mps,dwell_time_s,"
           "pilot_count,payload_bits";
}

std::string report_csv_row(const std::string& config_id, const PerformanceReport& r) {
    std::ostringstream os;
    os << config_id << ',' << fmt_double(r.comm_gain_db) << ',' << fmt_double(r.max_delay_s) << ','
       << fmt_double(r.max_doppler_hz) << ',' << fmt_double(r.data_rate_bps) << ','
       << fmt_double(r.radar_gain_db) << ',' << fmt_double(r.range_resolution_m) << ','
       << fmt_double(r.max_range_m) << ',' << fmt_double(r.velocity_resolution_mps) << ','
       << fmt_double(r.max_velocity_mps) << ',' << fmt_double(r.dwell_time_s) << ',' << r.pilot_count << ','
       << r.payload_bits;
    return os.str();
}

}  // namespace pmcw
