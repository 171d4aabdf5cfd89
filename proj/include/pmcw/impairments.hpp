#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "pmcw/common.hpp"
#include "pmcw/interpolator.hpp"

namespace pmcw {

struct PathSpec {
    double delay_s = 0.0;  // may be a fractional number of samples
    Complex gain{1.0, 0.0};
    double doppler_hz = 0.0;
};

struct ChannelConfig {
    std::vector<PathSpec> paths{PathSpec{}};
    double sto_samples = 0.0;
    double cfo_hz = 0.0;
    double cfo_phase_rad = 0.0;
    double sfo_ppm = 0.0;
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t noise_seed = 0;

    // Throws ConfigError on a violated invariant.
    void validate(double sample_rate) const;
};

void validate_paths(const std::vector<PathSpec>& paths);

// y[n] = sum_p g_p x(n - d_p) exp(j 2 pi f_p n / fs); length grows by ceil(max delay in samples).
IqBuffer apply_multipath(const IqBuffer& x, const std::vector<PathSpec>& paths,
                         const FractionalInterpolator& interp = default_interpolator());

IqBuffer apply_cfo(const IqBuffer& x, double cfo_hz, double initial_phase_rad = 0.0);

// Receiver clock runs (1 + ppm 1e-6) slower: y[n] = x(n / (1 + ppm 1e-6)).
IqBuffer apply_sfo(const IqBuffer& x, double ppm, const FractionalInterpolator& interp = default_interpolator());

// Prepends floor(sto) zeros, applies the fractional remainder as a delay, then adds complex Gaussian noise
// with power mean_power(x) / 10^(snr_db/10). Infinite SNR adds nothing.
IqBuffer apply_sto_and_noise(const IqBuffer& x, double sto_samples, double snr_db, std::uint64_t seed,
                             const FractionalInterpolator& interp = default_interpolator());

// multipath -> CFO -> SFO -> STO + noise
IqBuffer apply_channel(const IqBuffer& x, const ChannelConfig& cfg,
                       const FractionalInterpolator& interp = default_interpolator());

void add_awgn(CVector& x, double noise_power, std::uint64_t seed);

}  // namespace pmcw
