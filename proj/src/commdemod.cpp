#include "pmcw/commdemod.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "pmcw/fft.hpp"

namespace pmcw {

namespace {

double median_of(RVector v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<long>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// c(tau) = (1/N) sum_j C[j] exp(j 2 pi s_j tau / N), s_j the signed bin index.
Complex evaluate_at(std::span<const Complex> spectrum, double tau) {
    const std::size_t n = spectrum.size();
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j)
        acc += spectrum[j] * std::polar(1.0, kTwoPi * static_cast<double>(signed_bin(j, n)) * tau / static_cast<double>(n));
    return acc / static_cast<double>(n);
}

void apply_delay(std::span<Complex> spectrum, double delay) {
    const std::size_t n = spectrum.size();
    for (std::size_t j = 0; j < n; ++j)
        spectrum[j] *= std::polar(1.0, -kTwoPi * static_cast<double>(signed_bin(j, n)) * delay / static_cast<double>(n));
}

std::size_t argmax_abs(std::span<const Complex> x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::norm(x[i]) > std::norm(x[best])) best = i;
    return best;
}

ChannelEstimate cfr_from_spectra(const std::vector<CVector>& spectra, const std::vector<std::size_t>& pilots,
                                 const CVector& ref_spectrum, std::size_t repetitions, double floor) {
    const std::size_t n = ref_spectrum.size();
    double mean_ref = 0.0;
    for (const auto& v : ref_spectrum) mean_ref += std::norm(v);
    mean_ref /= static_cast<double>(n);

    ChannelEstimate est;
    est.response.assign(n, Complex{});
    est.used.assign(n, false);
    const double scale = static_cast<double>(repetitions - 1) * static_cast<double>(pilots.size());
    for (std::size_t j = 0; j < n; ++j) {
        if (std::norm(ref_spectrum[j]) < floor * mean_ref) continue;
        est.used[j] = true;
        Complex acc{};
        for (auto k : pilots) acc += spectra[k][j];
        est.response[j] = acc / (scale * ref_spectrum[j]);
    }
    return est;
}

}  // namespace

BlockMatrix accumulate_blocks(std::span<const Complex> payload, const FramePlan& plan) {
    const std::size_t n = plan.prbs_length, a = plan.repetitions, m = plan.blocks;
    if (a < 2) throw ArgumentError("accumulation needs A >= 2 repetitions per block");
    if (payload.size() < m * n * a)
        throw ArgumentError("payload holds " + std::to_string(payload.size()) + " samples, plan needs " +
                            std::to_string(m * n * a));
    BlockMatrix bm;
    bm.rows = m;
    bm.cols = n;
    bm.data.assign(m * n, Complex{});
    bm.pilots = plan.pilot_indices();
    for (std::size_t k = 0; k < m; ++k) {
        auto row = bm.row(k);
        for (std::size_t rep = 1; rep < a; ++rep) {
            const Complex* src = payload.data() + k * n * a + rep * n;
            for (std::size_t i = 0; i < n; ++i) row[i] += src[i];
        }
    }
    return bm;
}

BlockMatrix correlate_blocks(const BlockMatrix& bm, const ChipSequence& ref) {
    if (ref.size() != bm.cols) throw ArgumentError("reference length differs from the block matrix width");
    BlockMatrix out = bm;
    for (std::size_t k = 0; k < bm.rows; ++k) {
        const CVector c = circular_correlate(bm.row(k), ref.view());
        std::copy(c.begin(), c.end(), out.row(k).begin());
    }
    return out;
}

std::size_t main_path_lag(const BlockMatrix& correlated) {
    RVector sum(correlated.cols, 0.0);
    for (auto k : correlated.pilots) {
        const auto r = correlated.row(k);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += std::abs(r[i]);
    }
    return static_cast<std::size_t>(std::max_element(sum.begin(), sum.end()) - sum.begin());
}

double wrap_frequency(double f, double f_max) {
    const double span = 2.0 * f_max;
    double w = std::fmod(f + f_max, span);
    if (w < 0.0) w += span;
    return w - f_max;
}

double estimate_pilot_doppler(const BlockMatrix& correlated, std::size_t lag, const FramePlan& plan) {
    const auto& p = correlated.pilots;
    if (p.size() < 2) throw ArgumentError("pilot Doppler needs at least two pilots");
    Complex acc{};
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        acc += std::conj(correlated.row(p[i])[lag]) * correlated.row(p[i + 1])[lag];
    if (acc == Complex{}) return 0.0;
    const double interval = static_cast<double>(plan.pilot_spacing * plan.block_length()) / plan.sample_rate;
    return std::arg(acc) / (kTwoPi * interval);
}

double subsample_peak(std::span<const Complex> correlation, std::size_t lag) {
    const std::size_t n = correlation.size();
    const CVector spectrum = dft(correlation);
    constexpr int kSteps = 8;
    std::array<double, 2 * kSteps + 1> mag{};
    for (int q = -kSteps; q <= kSteps; ++q)
        mag[q + kSteps] = std::abs(evaluate_at(spectrum, static_cast<double>(lag) + static_cast<double>(q) / kSteps));
    int best = static_cast<int>(std::max_element(mag.begin(), mag.end()) - mag.begin());
    best = std::clamp(best, 1, 2 * kSteps - 1);
    const double a = mag[best - 1], b = mag[best], c = mag[best + 1];
    const double den = a - 2.0 * b + c;
    const double frac = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
    double pos = static_cast<double>(lag) + (static_cast<double>(best - kSteps) + frac) / kSteps;
    if (pos > static_cast<double>(n) / 2.0) pos -= static_cast<double>(n);
    return pos;
}

SfoFit estimate_residual_sfo(std::span<const double> block_index, std::span<const double> position,
                             const FramePlan& plan) {
    if (block_index.size() != position.size()) throw ArgumentError("block index and position counts differ");
    SfoFit fit;
    const std::size_t n = position.size();
    if (n == 0) return fit;
    const double mx = std::accumulate(block_index.begin(), block_index.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(position.begin(), position.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (block_index[i] - mx) * (block_index[i] - mx);
        sxy += (block_index[i] - mx) * (position[i] - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    fit.ppm = fit.slope / static_cast<double>(plan.block_length()) * 1e6;
    return fit;
}

void delay_row(std::span<Complex> row, double delay) {
    CVector spectrum = dft(row);
    apply_delay(spectrum, delay);
    const CVector back = idft(spectrum);
    std::copy(back.begin(), back.end(), row.begin());
}

ChannelEstimate estimate_cfr(const BlockMatrix& accumulated, const ChipSequence& ref, std::size_t repetitions,
                             double floor) {
    if (ref.size() != accumulated.cols) throw ArgumentError("reference length differs from the block matrix width");
    if (accumulated.pilots.empty()) throw ArgumentError("channel estimate needs at least one pilot");
    std::vector<CVector> spectra(accumulated.rows);
    for (auto k : accumulated.pilots) spectra[k] = dft(accumulated.row(k));
    CVector x(ref.chips.begin(), ref.chips.end());
    return cfr_from_spectra(spectra, accumulated.pilots, dft(x), repetitions, floor);
}

DemodReport demodulate(std::span<const Complex> payload, const FramePlan& plan, const ChipSequence& ref,
                       const Bits* truth, const DemodOptions& opt) {
    const BlockMatrix bm = accumulate_blocks(payload, plan);
    const std::size_t n = bm.cols, m = bm.rows;
    if (ref.size() != n) throw ArgumentError("reference length differs from N");
    if (bm.pilots.empty()) throw ArgumentError("demodulation needs at least one pilot block");

    CVector x(ref.chips.begin(), ref.chips.end());
    const CVector ref_spec = dft(x);
    std::vector<CVector> spectra(m);
    for (std::size_t k = 0; k < m; ++k) spectra[k] = dft(bm.row(k));

    auto correlation_of = [&](std::size_t k) {
        CVector c(n);
        for (std::size_t j = 0; j < n; ++j) c[j] = spectra[k][j] * std::conj(ref_spec[j]);
        idft_inplace(c);
        return c;
    };

    DemodReport rep;

    // Residual SFO: pilot peak positions drift linearly with the block index.
    RVector index, pos;
    double previous = 0.0;
    for (std::size_t i = 0; i < bm.pilots.size(); ++i) {
        const std::size_t k = bm.pilots[i];
        const CVector c = correlation_of(k);
        double p = subsample_peak(c, argmax_abs(c));
        if (i > 0) p = previous + std::remainder(p - previous, static_cast<double>(n));
        previous = p;
        index.push_back(static_cast<double>(k));
        pos.push_back(p);
    }
    rep.pilot_positions = pos;
    SfoFit fit;
    if (pos.size() >= 2) fit = estimate_residual_sfo(index, pos, plan);
    rep.residual_sfo_ppm = fit.ppm;
    if (opt.correct_residual_sfo && fit.slope != 0.0)
        for (std::size_t k = 0; k < m; ++k) apply_delay(spectra[k], -fit.slope * static_cast<double>(k));

    BlockMatrix corr = bm;
    for (std::size_t k = 0; k < m; ++k) {
        const CVector c = correlation_of(k);
        std::copy(c.begin(), c.end(), corr.row(k).begin());
    }
    rep.main_lag = opt.main_lag ? *opt.main_lag % n : main_path_lag(corr);

    rep.block_snr_db.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto r = corr.row(k);
        RVector p2(n);
        for (std::size_t i = 0; i < n; ++i) p2[i] = std::norm(r[i]);
        const double noise = median_of(p2) / std::log(2.0);
        rep.block_snr_db[k] = noise > 0.0 ? power_to_db(p2[rep.main_lag] / noise) : INFINITY;
    }

    if (bm.pilots.size() >= 2) rep.doppler_hz = estimate_pilot_doppler(corr, rep.main_lag, plan);
    if (opt.correct_doppler && rep.doppler_hz != 0.0) {
        const double step = -kTwoPi * rep.doppler_hz * plan.block_duration();
        for (std::size_t k = 0; k < m; ++k) {
            const Complex rot = std::polar(1.0, step * static_cast<double>(k));
            for (auto& v : spectra[k]) v *= rot;
        }
    }

    rep.cfr = cfr_from_spectra(spectra, bm.pilots, ref_spec, plan.repetitions, 0.1);

    CVector decision(m);
    for (std::size_t k = 0; k < m; ++k) {
        Complex acc{};
        if (opt.equalize) {
            for (std::size_t j = 0; j < n; ++j)
                if (rep.cfr.used[j] && rep.cfr.response[j] != Complex{})
                    acc += spectra[k][j] * std::conj(ref_spec[j]) / rep.cfr.response[j];
            acc /= static_cast<double>(n);
        } else {
            CVector c(n);
            for (std::size_t j = 0; j < n; ++j) c[j] = spectra[k][j] * std::conj(ref_spec[j]);
            acc = evaluate_at(c, static_cast<double>(rep.main_lag));
        }
        decision[k] = acc;
    }
    Complex gain{};
    for (auto k : bm.pilots) gain += decision[k];
    gain /= static_cast<double>(bm.pilots.size());

    double sig = 0.0, err = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (plan.is_pilot(k)) continue;
        const Complex s = gain != Complex{} ? decision[k] / gain : Complex{};
        rep.soft_symbols.push_back(s);
        const std::uint8_t bit = s.real() < 0.0 ? 1 : 0;
        rep.bits.push_back(bit);
    }
    if (truth) {
        if (truth->size() != rep.bits.size())
            throw ArgumentError("truth holds " + std::to_string(truth->size()) + " bits, frame carries " +
                                std::to_string(rep.bits.size()));
        rep.has_truth = true;
        for (std::size_t i = 0; i < rep.bits.size(); ++i) rep.bit_errors += rep.bits[i] != (*truth)[i];
        rep.ber = rep.bits.empty() ? 0.0 : static_cast<double>(rep.bit_errors) / static_cast<double>(rep.bits.size());
    }
    for (std::size_t i = 0; i < rep.soft_symbols.size(); ++i) {
        const std::uint8_t b = truth ? (*truth)[i] : rep.bits[i];
        const Complex ideal(b ? -1.0 : 1.0, 0.0);
        sig += std::norm(ideal);
        err += std::norm(rep.soft_symbols[i] - ideal);
    }
    rep.mer_db = rep.soft_symbols.empty() ? NAN : (err > 0.0 ? power_to_db(sig / err) : INFINITY);
    return rep;
}

std::string demod_csv_header() {
    return "data_symbols,bit_errors,ber,mer_db,doppler_hz,residual_sfo_ppm,main_lag,mean_block_snr_db";
}

std::string demod_csv_fields(const DemodReport& r) {
    double snr = 0.0;
    for (double v : r.block_snr_db) snr += v;
    if (!r.block_snr_db.empty()) snr /= static_cast<double>(r.block_snr_db.size());
    return std::to_string(r.soft_symbols.size()) + "," + std::to_string(r.bit_errors) + "," + format_double(r.ber) +
           "," + format_double(r.mer_db) + "," + format_double(r.doppler_hz) + "," +
           format_double(r.residual_sfo_ppm) + "," + std::to_string(r.main_lag) + "," + format_double(snr);
}

}  // namespace pmcw
