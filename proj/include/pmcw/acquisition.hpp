#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "pmcw/common.hpp"
#include "pmcw/interpolator.hpp"
#include "pmcw/seqgen.hpp"
#include "pmcw/sysparams.hpp"
#include "pmcw/txframe.hpp"

namespace pmcw {

// Sliding S&C metric. Entry i belongs to sample offset n = first_index + i; samples outside
// the buffer count as zero, so the metric starts at n = -window.
struct ScMetric {
    RVector gamma;
    CVector p;
    std::size_t window = 0;
    long first_index = 0;

    std::size_t size() const { return gamma.size(); }
    long index_of(std::size_t i) const { return first_index + static_cast<long>(i); }
    std::size_t position_of(long n) const { return static_cast<std::size_t>(n - first_index); }
};

// P[n] = sum_eta conj(r[n+eta]) r[n+eta+W];  gamma[n] = |P[n]|^2 / max(E1[n], E2[n])^2
// with E1, E2 the energies of the two windows. O(1) per shift.
ScMetric sc_metric(std::span<const Complex> y, std::size_t window);

struct PlateauOptions {
    double relative_threshold = 0.9;
    double absolute_floor = 0.5;
    std::size_t gap_merge = 2;
};

struct StoEstimate {
    long sto = 0;              // first sample of S&C block 1
    long plateau_first = 0;
    std::size_t plateau_width = 0;
    long plateau_point = 0;    // midpoint used for the CFO phase
    double peak = 0.0;
    bool merged_plateau = false;  // wider than two windows: the two S&C blocks were not separable
};

// First plateau midpoint minus ceil((W + 1) / 2). Throws AcquisitionError below the floor.
StoEstimate estimate_sto(const ScMetric& metric, const PlateauOptions& opt = {});

// Matched-filter timing refinement: argmax over |d| <= half_range of |sum_i y[coarse + d + i] ref[i]|.
long refine_sto(std::span<const Complex> y, long coarse, std::span<const double> reference, long half_range);

double estimate_cfo_fractional(Complex p, std::size_t window, double sample_rate);

struct IntegerCfoEstimate {
    int bins = 0;
    double hz = 0.0;
    double score = 0.0;      // normalized, 1 for a perfect noiseless match
    double runner_up = 0.0;
    bool low_confidence = false;
};

struct IntegerCfoOptions {
    int search_range = 8;
    double min_score = 0.25;
    double ambiguity_ratio = 0.01;
};

// block1, block2: the last two repetitions (2 W samples) of each S&C block, fractional CFO removed.
// Candidate shift g scores |sum_k conj(Y1[k+g]) Y2[k+g] X1[k] conj(X2[k])|^2, normalized.
// Bin width is fs / (2 W). Throws RangeError if no candidate reaches min_score.
IntegerCfoEstimate estimate_cfo_integer(std::span<const Complex> block1, std::span<const Complex> block2,
                                        const ChipSequence& seq1, const ChipSequence& seq2, double sample_rate,
                                        const IntegerCfoOptions& opt = {});

struct SfoEstimate {
    double ppm = 0.0;          // two-stage estimate
    double coarse_ppm = 0.0;   // within-pair WLS slopes only
    std::size_t pairs = 0;
};

// y starts at the SFO preamble (CP copy first) and holds at least M_SFO N samples.
// Model: period i is delayed by eps N i samples, so pair spectra satisfy B[k] = A[k] exp(-j 2 pi k eps).
// Only bins with |k| <= band_fraction N / 2 enter the fits.
SfoEstimate estimate_sfo_tsai(std::span<const Complex> y, const ChipSequence& ref, std::size_t sfo_prbs_count,
                              double band_fraction = 1.0);

// Residual CFO from the phase progression of the despread SFO-preamble periods.
// y starts at the SFO preamble; returns Hz in the clock of y.
double estimate_cfo_preamble(std::span<const Complex> y, const ChipSequence& ref, std::size_t periods,
                             double sample_rate);

// z[m] = y(origin + m (1 + ppm 1e-6)); undoes apply_sfo when origin is 0.
IqBuffer correct_sfo(const IqBuffer& y, double ppm, double origin = 0.0,
                     const FractionalInterpolator& interp = default_interpolator());

struct AcquisitionOptions {
    bool enable_sc = true;            // false: timing from genie_sto, no CFO estimate
    bool enable_sfo = true;           // Tsai estimate and resampling
    bool refine_timing = true;
    bool refine_cfo = true;           // SFO-preamble phase regression after the S&C estimate
    double sfo_band_fraction = 0.85;
    std::optional<long> genie_sto;
    PlateauOptions plateau;
    IntegerCfoOptions integer_cfo;
    const FractionalInterpolator* interpolator = nullptr;
};

struct SyncReport {
    long sto = 0;
    long sto_coarse = 0;
    double cfo_fractional_hz = 0.0;
    int cfo_integer_bins = 0;
    double cfo_integer_hz = 0.0;
    double cfo_total_hz = 0.0;        // fractional + integer, transmitter clock
    double cfo_sc_hz = 0.0;           // S&C estimate alone, receiver clock
    double cfo_refine_hz = 0.0;       // preamble refinement, transmitter clock
    double sfo_ppm = 0.0;
    double sfo_coarse_ppm = 0.0;
    double plateau_peak = 0.0;
    std::size_t plateau_width = 0;
    double integer_cfo_score = 0.0;
    bool integer_cfo_low_confidence = false;
    bool merged_plateau = false;
};

struct AcquisitionResult {
    SyncReport report;
    IqBuffer aligned;  // CFO and SFO corrected, index 0 = frame start, frame_length samples
};

AcquisitionResult acquire(const IqBuffer& y, const FramePlan& plan, const FrameSequences& seqs,
                          const AcquisitionOptions& opt = {});

std::string sync_csv_header();
std::string sync_csv_fields(const SyncReport& r);

}  // namespace pmcw
