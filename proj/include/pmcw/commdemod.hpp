#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmcw/common.hpp"
#include "pmcw/seqgen.hpp"
#include "pmcw/sysparams.hpp"
#include "pmcw/txframe.hpp"

namespace pmcw {

// M rows of N samples, row-major.
struct BlockMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    CVector data;
    std::vector<std::size_t> pilots;

    std::span<Complex> row(std::size_t k) { return {data.data() + k * cols, cols}; }
    std::span<const Complex> row(std::size_t k) const { return {data.data() + k * cols, cols}; }
};

// Row k = sum of repetitions 1..A-1 of payload block k (repetition 0 is the cyclic prefix).
// payload starts at block 0 and holds at least M N A samples.
BlockMatrix accumulate_blocks(std::span<const Complex> payload, const FramePlan& plan);

// Circular correlation of every row with ref.
BlockMatrix correlate_blocks(const BlockMatrix& bm, const ChipSequence& ref);

// Lag maximizing the summed pilot correlation magnitudes.
std::size_t main_path_lag(const BlockMatrix& correlated);

// Maps f into [-f_max, f_max).
double wrap_frequency(double f, double f_max);

// Phase progression of the pilot peaks at `lag` between consecutive pilots, in Hz.
// Unambiguous within ±f_D,max; throws ArgumentError with fewer than two pilots.
double estimate_pilot_doppler(const BlockMatrix& correlated, std::size_t lag, const FramePlan& plan);

// Sub-sample peak position of a correlation row near `lag`, from its band-limited interpolation.
// Returned relative to lag 0, in (-N/2, N/2].
double subsample_peak(std::span<const Complex> correlation, std::size_t lag);

struct SfoFit {
    double slope = 0.0;       // samples per block
    double intercept = 0.0;   // samples at block 0
    double ppm = 0.0;
};

// Least-squares line through (block index, peak position); ppm = slope / (N A) 1e6.
SfoFit estimate_residual_sfo(std::span<const double> block_index, std::span<const double> position,
                             const FramePlan& plan);

// Circular delay of `row` by `delay` samples through a linear phase over signed bins.
void delay_row(std::span<Complex> row, double delay);

struct ChannelEstimate {
    CVector response;            // N bins
    std::vector<bool> used;      // false where the reference spectrum falls below the floor
};

// H[j] = mean over pilot rows of DFT(row)[j] / ((A - 1) DFT(ref)[j]). Bins with
// |DFT(ref)[j]|^2 < floor * mean |DFT(ref)|^2 are excluded (only DC for an MLS).
ChannelEstimate estimate_cfr(const BlockMatrix& accumulated, const ChipSequence& ref, std::size_t repetitions,
                             double floor = 0.1);

struct DemodOptions {
    bool correct_residual_sfo = true;
    bool correct_doppler = true;
    bool equalize = true;                  // false: scale by the pilot peak only
    std::optional<std::size_t> main_lag;   // default: argmax of the summed pilot correlations
};

struct DemodReport {
    Bits bits;
    CVector soft_symbols;        // normalized so that pilots average to 1
    double mer_db = 0.0;
    double ber = 0.0;
    std::size_t bit_errors = 0;
    bool has_truth = false;
    RVector block_snr_db;        // per block, correlation peak over median-derived noise floor
    std::size_t main_lag = 0;
    double doppler_hz = 0.0;
    double residual_sfo_ppm = 0.0;
    RVector pilot_positions;     // sub-sample peak positions before the residual SFO correction
    ChannelEstimate cfr;
};

// Full chain on a payload aligned to block 0: accumulate, residual SFO, Doppler, CFR, equalize, decide.
// MER uses the true symbols when `truth` is given, the decisions otherwise.
DemodReport demodulate(std::span<const Complex> payload, const FramePlan& plan, const ChipSequence& ref,
                       const Bits* truth = nullptr, const DemodOptions& opt = {});

std::string demod_csv_header();
std::string demod_csv_fields(const DemodReport& r);

}  // namespace pmcw
