#include "pmcw/impairments.hpp"

#include <cmath>
#include <random>
#include <string>

namespace pmcw {

void validate_paths(const std::vector<PathSpec>& paths) {
    if (paths.empty()) throw ConfigError("channel needs at least one path");
    const double main = std::abs(paths.front().gain);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        if (!(p.delay_s >= 0.0) || !std::isfinite(p.delay_s))
            throw ConfigError("path " + std::to_string(i) + ": delay must be finite and >= 0");
        if (!std::isfinite(p.doppler_hz)) throw ConfigError("path " + std::to_string(i) + ": Doppler not finite");
        if (i > 0 && std::abs(p.gain) > main)
            throw ConfigError("path " + std::to_string(i) + " is stronger than the main path (entry 0)");
    }
}

void ChannelConfig::validate(double sample_rate) const {
    validate_paths(paths);
    if (!(std::abs(cfo_hz) < sample_rate / 2.0)) throw ConfigError("|CFO| must be below fs/2");
    if (!(std::abs(sfo_ppm) < 1000.0)) throw ConfigError("|SFO| must be below 1000 ppm");
    if (!(sto_samples >= 0.0) || !std::isfinite(sto_samples)) throw ConfigError("STO must be finite and >= 0");
    if (std::isnan(snr_db)) throw ConfigError("SNR is NaN");
}

IqBuffer apply_multipath(const IqBuffer& x, const std::vector<PathSpec>& paths,
                         const FractionalInterpolator& interp) {
    validate_paths(paths);
    const double fs = x.sample_rate;
    double max_delay = 0.0;
    for (const auto& p : paths) max_delay = std::max(max_delay, p.delay_s * fs);
    const std::size_t out_len = x.size() + static_cast<std::size_t>(std::ceil(max_delay - 1e-9));

    IqBuffer y{CVector(out_len), fs};
    CVector branch;
    for (const auto& p : paths) {
        const double d = p.delay_s * fs;
        const double di = std::round(d);
        if (std::abs(d - di) < 1e-9) {
            branch.assign(out_len, Complex{});
            const auto shift = static_cast<std::size_t>(di);
            for (std::size_t n = 0; n < x.size() && n + shift < out_len; ++n) branch[n + shift] = x.samples[n];
        } else {
            branch = interp.resample(x.samples, -d, 1.0, out_len);
        }
        rotate_inplace(branch, p.doppler_hz, fs);
        for (std::size_t n = 0; n < out_len; ++n) y.samples[n] += p.gain * branch[n];
    }
    return y;
}

IqBuffer apply_cfo(const IqBuffer& x, double cfo_hz, double initial_phase_rad) {
    IqBuffer y = x;
    rotate_inplace(y.samples, cfo_hz, x.sample_rate, initial_phase_rad);
    return y;
}

IqBuffer apply_sfo(const IqBuffer& x, double ppm, const FractionalInterpolator& interp) {
    if (ppm == 0.0 || x.empty()) return x;
    const double ratio = 1.0 + ppm * 1e-6;
    const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(x.size() - 1) * ratio)) + 1;
    return {interp.resample(x.samples, 0.0, 1.0 / ratio, count), x.sample_rate};
}

void add_awgn(CVector& x, double noise_power, std::uint64_t seed) {
    if (noise_power <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, std::sqrt(noise_power / 2.0));
    for (auto& v : x) {
        const double re = dist(rng);
        const double im = dist(rng);
        v += Complex{re, im};
    }
}

IqBuffer apply_sto_and_noise(const IqBuffer& x, double sto_samples, double snr_db, std::uint64_t seed,
                             const FractionalInterpolator& interp) {
    if (!(sto_samples >= 0.0)) throw ArgumentError("STO must be >= 0");
    const auto whole = static_cast<std::size_t>(std::floor(sto_samples));
    const double frac = sto_samples - static_cast<double>(whole);

    IqBuffer y{CVector(whole), x.sample_rate};
    if (frac == 0.0) {
        y.samples.insert(y.samples.end(), x.samples.begin(), x.samples.end());
    } else {
        const CVector shifted = interp.resample(x.samples, -frac, 1.0, x.size() + 1);
        y.samples.insert(y.samples.end(), shifted.begin(), shifted.end());
    }
    if (std::isfinite(snr_db)) add_awgn(y.samples, mean_power(x.samples) / db_to_power(snr_db), seed);
    return y;
}

IqBuffer apply_channel(const IqBuffer& x, const ChannelConfig& cfg, const FractionalInterpolator& interp) {
    cfg.validate(x.sample_rate);
    IqBuffer y = apply_multipath(x, cfg.paths, interp);
    rotate_inplace(y.samples, cfg.cfo_hz, y.sample_rate, cfg.cfo_phase_rad);
    y = apply_sfo(y, cfg.sfo_ppm, interp);
    return apply_sto_and_noise(y, cfg.sto_samples, cfg.snr_db, cfg.noise_seed, interp);
}

}  // namespace pmcw
