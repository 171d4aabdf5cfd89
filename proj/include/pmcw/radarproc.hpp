#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pmcw/commdemod.hpp"
#include "pmcw/common.hpp"
#include "pmcw/seqgen.hpp"
#include "pmcw/sysparams.hpp"

namespace pmcw {

// Rows are range bins (N), columns are velocity bins (M) with zero velocity at column M / 2.
struct RangeDopplerMap {
    std::size_t range_bins = 0;
    std::size_t velocity_bins = 0;
    RVector magnitude;                // row-major
    double range_resolution_m = 0.0;
    double max_range_m = 0.0;
    double velocity_resolution_mps = 0.0;
    double max_velocity_mps = 0.0;

    double at(std::size_t r, std::size_t v) const { return magnitude[r * velocity_bins + v]; }
    double range_of(double bin) const { return bin * range_resolution_m; }
    double velocity_of(double bin) const {
        return (bin - static_cast<double>(velocity_bins / 2)) * velocity_resolution_mps;
    }
    RVector range_axis() const;
    RVector velocity_axis() const;
};

struct Detection {
    double range_m = 0.0;
    double velocity_mps = 0.0;
    double power_db = 0.0;   // relative to the map median
    double range_bin = 0.0;
    double velocity_bin = 0.0;
};

// Accumulated and correlated blocks with the known block symbols removed: row k is the range profile
// of block k. symbols holds one entry per block (+1 on pilots).
BlockMatrix range_profiles(std::span<const Complex> payload, const FramePlan& plan, const ChipSequence& ref,
                           std::span<const double> symbols);

// Slow-time DFT per range bin, shifted so that zero Doppler sits at column M / 2.
// A Hann window is applied across blocks when `hann` is set.
RangeDopplerMap range_doppler(const BlockMatrix& profiles, const FramePlan& plan, bool hann = false);

// 3x3 local maxima (circular on both axes) whose power exceeds the median by threshold_db,
// strongest first, with parabolic refinement of both coordinates.
std::vector<Detection> detect(const RangeDopplerMap& map, double threshold_db);

// Mean noise power per cell from the median of |map|^2 (exponential statistics).
double noise_floor(const RangeDopplerMap& map);

// Energy in a (2 half + 1)^2 neighbourhood of the cell, noise removed, over the noise floor, in dB.
double peak_to_noise_db(const RangeDopplerMap& map, std::size_t range_bin, std::size_t velocity_bin,
                        std::size_t half = 2);

// "PMCWRD1\0", u32 rows, u32 cols, f64 range resolution, f64 velocity resolution,
// f64 velocity of column 0, then rows x cols float32, all little-endian.
void write_map(const std::filesystem::path& path, const RangeDopplerMap& map);
RangeDopplerMap read_map(const std::filesystem::path& path);

std::string detections_csv_header();
std::string detection_csv_row(const Detection& d);

}  // namespace pmcw
