#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace pmcw {

// Structural parameters of one PMCW frame. The number of synchronization blocks is fixed at two.
struct FramePlan {
    std::size_t prbs_length = 0;       // N, chips
    std::size_t repetitions = 0;       // A, PRBS copies per block (first one is the cyclic prefix)
    std::size_t blocks = 0;            // M, payload + pilot blocks
    std::size_t sc_length = 0;         // N_S&C, chips
    std::size_t sfo_prbs_count = 0;    // M_SFO, odd
    std::size_t pilot_spacing = 0;     // ΔM_pil, blocks
    double sample_rate = 0.0;          // F_s, Hz (chip rate)
    double carrier_frequency = 0.0;    // f_c, Hz

    // Throws ConfigError naming the first violated constraint.
    void validate() const;

    int degree() const;      // m with N = 2^m - 1
    int sc_degree() const;   // m - 1

    std::size_t block_length() const { return prbs_length * repetitions; }
    std::size_t sc_preamble_length() const { return 6 * sc_length; }
    std::size_t sfo_preamble_length() const { return sfo_prbs_count * prbs_length; }
    std::size_t preamble_length() const { return sc_preamble_length() + sfo_preamble_length(); }
    std::size_t payload_length() const { return block_length() * blocks; }
    std::size_t frame_length() const { return preamble_length() + payload_length(); }

    std::size_t pilot_count() const { return (blocks + pilot_spacing - 1) / pilot_spacing; }
    std::size_t data_bit_count() const { return blocks - pilot_count(); }
    bool is_pilot(std::size_t block) const { return block % pilot_spacing == 0; }
    std::vector<std::size_t> pilot_indices() const;

    double wavelength() const;
    double block_duration() const { return static_cast<double>(block_length()) / sample_rate; }

    bool operator==(const FramePlan&) const = default;
};

struct PerformanceReport {
    double comm_gain_db = 0.0;          // G_p,comm
    double max_delay_s = 0.0;           // τ_max
    double max_doppler_hz = 0.0;        // f_D,max
    double data_rate_bps = 0.0;
    double radar_gain_db = 0.0;         // G_p,rad
    double range_resolution_m = 0.0;    // ΔR
    double max_range_m = 0.0;           // R_max,ua
    double velocity_resolution_mps = 0.0;  // Δv
    double max_velocity_mps = 0.0;      // v_max,ua
    double dwell_time_s = 0.0;
    std::size_t pilot_count = 0;
    std::size_t payload_bits = 0;
};

PerformanceReport derive_parameters(const FramePlan& plan);

// Returns (N + 1)/2 - 1 and checks that it is itself an MLS length.
std::size_t validate_s_and_c_length(std::size_t prbs_length);

// Paper-scale presets "pmcw1".."pmcw4" and desk-scale "pmcw1s".."pmcw4s" (M reduced 8x).
FramePlan preset_plan(const std::string& name);
std::vector<std::string> preset_names();

// Flat key = value block, fields in PerformanceReport order.
void write_report_block(std::ostream& os, const std::string& config_id, const PerformanceReport& r);
std::string report_csv_header();
std::string report_csv_row(const std::string& config_id, const PerformanceReport& r);

}  // namespace pmcw
