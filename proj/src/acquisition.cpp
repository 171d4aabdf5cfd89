#include "pmcw/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "pmcw/fft.hpp"

namespace pmcw {

namespace {

constexpr std::size_t kReseedInterval = 8192;

CVector slice(std::span<const Complex> y, long start, std::size_t len) {
    CVector out(len);
    const long n = static_cast<long>(y.size());
    for (std::size_t i = 0; i < len; ++i) {
        const long idx = start + static_cast<long>(i);
        if (idx >= 0 && idx < n) out[i] = y[static_cast<std::size_t>(idx)];
    }
    return out;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double weight = 0.0;
};

LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    LineFit f;
    f.weight = sw;
    const double det = sw * sxx - sx * sx;
    if (sw <= 0.0 || det <= 0.0) return f;
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sy - f.slope * sx) / sw;
    return f;
}

// Phase-vs-bin WLS slope of a cross spectrum, bins k != 0 in signed order.
// Unwrapping runs outward from k = +-1 against the mean of the last ten unwrapped phases,
// seeded by the weighted phase of the ten lowest bins.
LineFit phase_slope(const CVector& cross, const std::vector<double>& weight, long max_bin) {
    const std::size_t n = cross.size();
    const long half = std::min(static_cast<long>(n / 2), max_bin);
    auto bin = [&](long k) { return static_cast<std::size_t>(k >= 0 ? k : k + static_cast<long>(n)); };

    Complex seed_acc{};
    for (long k = 1; k <= std::min<long>(5, half); ++k) {
        seed_acc += weight[bin(k)] * cross[bin(k)];
        seed_acc += weight[bin(-k)] * cross[bin(-k)];
    }
    const double seed = std::arg(seed_acc);

    std::vector<double> ks, phases, ws;
    ks.reserve(n);
    phases.reserve(n);
    ws.reserve(n);
    for (int dir : {+1, -1}) {
        std::deque<double> recent;
        double ref = seed;
        const long last = (dir > 0) ? std::min(static_cast<long>((n - 1) / 2), max_bin) : half;
        for (long m = 1; m <= last; ++m) {
            const long k = dir * m;
            const double raw = std::arg(cross[bin(k)]);
            const double u = raw + kTwoPi * std::round((ref - raw) / kTwoPi);
            recent.push_back(u);
            if (recent.size() > 10) recent.pop_front();
            ref = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(recent.size());
            ks.push_back(static_cast<double>(k));
            phases.push_back(u);
            ws.push_back(weight[bin(k)]);
        }
    }
    const LineFit f = weighted_line(ks, phases, ws);
    if (std::abs(f.slope) > kPi) throw RangeError("SFO phase slope exceeds the unwrappable range");
    return f;
}

}  // namespace

ScMetric sc_metric(std::span<const Complex> y, std::size_t window) {
    if (window == 0 || y.size() < 2 * window + 1)
        throw ArgumentError("sc_metric: buffer of " + std::to_string(y.size()) + " samples is shorter than 2W + 1 = " +
                            std::to_string(2 * window + 1));
    const long len = static_cast<long>(y.size());
    const long w = static_cast<long>(window);
    auto at = [&](long i) { return (i >= 0 && i < len) ? y[static_cast<std::size_t>(i)] : Complex{}; };

    ScMetric m;
    m.window = window;
    m.first_index = -w;
    const std::size_t count = static_cast<std::size_t>(len - w + 1);
    m.gamma.resize(count);
    m.p.resize(count);

    // energies this small relative to the buffer are treated as silence
    double total = 0.0;
    for (const auto& v : y) total += std::norm(v);
    const double silence = 1e-12 * total / static_cast<double>(len) * static_cast<double>(w) + 1e-300;

    Complex p{};
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const long n = m.first_index + static_cast<long>(i);
        if (i % kReseedInterval == 0) {
            p = {};
            e1 = e2 = 0.0;
            for (long e = 0; e < w; ++e) {
                const Complex a = at(n + e), b = at(n + e + w);
                p += std::conj(a) * b;
                e1 += std::norm(a);
                e2 += std::norm(b);
            }
        } else {
            const Complex out1 = at(n - 1), mid = at(n - 1 + w), in2 = at(n - 1 + 2 * w);
            p += std::conj(mid) * in2 - std::conj(out1) * mid;
            e1 += std::norm(mid) - std::norm(out1);
            e2 += std::norm(in2) - std::norm(mid);
        }
        const double d = std::max(e1, e2);
        m.p[i] = p;
        m.gamma[i] = d > silence ? std::norm(p) / (d * d) : 0.0;
    }
    return m;
}

StoEstimate estimate_sto(const ScMetric& metric, const PlateauOptions& opt) {
    if (metric.size() == 0) throw AcquisitionError("empty S&C metric");
    const auto peak_it = std::max_element(metric.gamma.begin(), metric.gamma.end());
    const double peak = *peak_it;
    if (!(peak >= opt.absolute_floor))
        throw AcquisitionError("no S&C plateau above the floor (peak gamma " + format_double(peak, 4) + ")");
    const double thr = opt.relative_threshold * peak;

    std::size_t first = 0;
    while (metric.gamma[first] < thr) ++first;
    std::size_t last = first;
    std::size_t i = first + 1;
    while (i < metric.size()) {
        if (metric.gamma[i] >= thr) {
            last = i;
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < metric.size() && j - i < opt.gap_merge && metric.gamma[j] < thr) ++j;
        if (j < metric.size() && metric.gamma[j] >= thr && j - i <= opt.gap_merge) {
            i = j;
        } else {
            break;
        }
    }

    StoEstimate s;
    s.peak = peak;
    s.plateau_first = metric.index_of(first);
    s.plateau_width = last - first + 1;
    s.plateau_point = s.plateau_first + static_cast<long>(s.plateau_width / 2);
    s.sto = s.plateau_point - static_cast<long>((metric.window + 2) / 2);
    s.merged_plateau = s.plateau_width > 2 * metric.window;
    return s;
}

long refine_sto(std::span<const Complex> y, long coarse, std::span<const double> reference, long half_range) {
    const long len = static_cast<long>(y.size());
    const long r = static_cast<long>(reference.size());
    long best = coarse;
    double best_mag = -1.0;
    for (long d = -half_range; d <= half_range; ++d) {
        const long start = coarse + d;
        Complex acc{};
        const long lo = std::max(0L, -start), hi = std::min(r, len - start);
        for (long i = lo; i < hi; ++i) acc += y[static_cast<std::size_t>(start + i)] * reference[i];
        const double mag = std::norm(acc);
        if (mag > best_mag) {
            best_mag = mag;
            best = start;
        }
    }
    return best;
}

double estimate_cfo_fractional(Complex p, std::size_t window, double sample_rate) {
    return std::arg(p) * sample_rate / (kTwoPi * static_cast<double>(window));
}

IntegerCfoEstimate estimate_cfo_integer(std::span<const Complex> block1, std::span<const Complex> block2,
                                        const ChipSequence& seq1, const ChipSequence& seq2, double sample_rate,
                                        const IntegerCfoOptions& opt) {
    const std::size_t w = seq1.size();
    const std::size_t L = 2 * w;
    if (seq2.size() != w || block1.size() != L || block2.size() != L)
        throw ArgumentError("estimate_cfo_integer: blocks must hold two repetitions of the S&C sequences");

    CVector x1(L), x2(L);
    for (std::size_t i = 0; i < L; ++i) {
        x1[i] = seq1.chips[i % w];
        x2[i] = seq2.chips[i % w];
    }
    const CVector X1 = dft(x1), X2 = dft(x2);
    const CVector Y1 = dft(block1), Y2 = dft(block2);

    CVector ref(L), obs(L);
    double ref_norm = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
        ref[k] = X1[k] * std::conj(X2[k]);
        obs[k] = std::conj(Y1[k]) * Y2[k];
        ref_norm += std::norm(ref[k]);
    }
    double obs_norm = 0.0;
    for (const auto& v : obs) obs_norm += std::norm(v);

    IntegerCfoEstimate best;
    best.score = -1.0;
    double second = -1.0;
    for (int g = -opt.search_range; g <= opt.search_range; ++g) {
        Complex acc{};
        for (std::size_t k = 0; k < L; ++k) {
            const std::size_t kg = (k + static_cast<std::size_t>(g + static_cast<int>(L))) % L;
            acc += obs[kg] * ref[k];
        }
        const double score = (obs_norm > 0.0 && ref_norm > 0.0) ? std::norm(acc) / (obs_norm * ref_norm) : 0.0;
        if (score > best.score) {
            second = best.score;
            best.score = score;
            best.bins = g;
        } else if (score > second) {
            second = score;
        }
    }
    best.runner_up = std::max(second, 0.0);
    if (best.score < opt.min_score)
        throw RangeError("integer CFO outside the +-" + std::to_string(opt.search_range) +
                         " bin search range (best score " + format_double(best.score, 3) + ")");
    best.low_confidence = best.runner_up >= (1.0 - opt.ambiguity_ratio) * best.score;
    best.hz = best.bins * sample_rate / static_cast<double>(L);
    return best;
}

SfoEstimate estimate_sfo_tsai(std::span<const Complex> y, const ChipSequence& ref, std::size_t sfo_prbs_count,
                              double band_fraction) {
    const std::size_t n = ref.size();
    if (!(band_fraction > 0.0 && band_fraction <= 1.0)) throw ArgumentError("Tsai band fraction must be in (0, 1]");
    const long max_bin = std::max(6L, static_cast<long>(std::floor(band_fraction * static_cast<double>(n) / 2.0)));
    if (sfo_prbs_count < 3 || sfo_prbs_count % 2 == 0)
        throw ArgumentError("Tsai estimator needs an odd PRBS count >= 3 (at least one pair)");
    if (y.size() < sfo_prbs_count * n) throw ArgumentError("Tsai estimator: fewer than M_SFO N samples");
    const std::size_t pairs = (sfo_prbs_count - 1) / 2;

    const CVector X = dft(CVector(ref.chips.begin(), ref.chips.end()));
    std::vector<double> xpow(n);
    for (std::size_t k = 0; k < n; ++k) xpow[k] = std::norm(X[k]);

    std::vector<CVector> a(pairs), b(pairs);
    for (std::size_t p = 0; p < pairs; ++p) {
        a[p] = dft(y.subspan((2 * p + 1) * n, n));
        b[p] = dft(y.subspan((2 * p + 2) * n, n));
    }

    // coarse: phase slope of B conj(A) within each pair
    CVector cross(n);
    std::vector<double> w(n);
    double slope_acc = 0.0, weight_acc = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        for (std::size_t k = 0; k < n; ++k) {
            cross[k] = b[p][k] * std::conj(a[p][k]);
            w[k] = xpow[k] * std::abs(a[p][k]) * std::abs(b[p][k]);
        }
        const LineFit f = phase_slope(cross, w, max_bin);
        slope_acc += f.weight * f.slope;
        weight_acc += f.weight;
    }
    if (weight_acc <= 0.0) throw RangeError("Tsai estimator: no signal energy in the SFO preamble");
    const double eps_coarse = -(slope_acc / weight_acc) / kTwoPi;

    SfoEstimate est;
    est.pairs = pairs;
    est.coarse_ppm = eps_coarse * 1e6;
    est.ppm = est.coarse_ppm;
    if (pairs < 2) return est;

    // fine: drift of each pair against the others after removing the coarse model
    std::vector<CVector> z(pairs, CVector(n));
    CVector sum(n);
    for (std::size_t p = 0; p < pairs; ++p) {
        for (std::size_t k = 0; k < n; ++k) {
            const double ks = static_cast<double>(signed_bin(k, n));
            z[p][k] = (a[p][k] + b[p][k]) * std::polar(1.0, kTwoPi * ks * eps_coarse * 2.0 * static_cast<double>(p));
            sum[k] += z[p][k];
        }
    }
    std::vector<double> idx(pairs), slopes(pairs), weights(pairs);
    for (std::size_t p = 0; p < pairs; ++p) {
        for (std::size_t k = 0; k < n; ++k) {
            const Complex rest = sum[k] - z[p][k];
            cross[k] = z[p][k] * std::conj(rest);
            w[k] = xpow[k] * std::abs(z[p][k]) * std::abs(rest);
        }
        const LineFit f = phase_slope(cross, w, max_bin);
        idx[p] = static_cast<double>(p);
        slopes[p] = f.slope;
        weights[p] = f.weight;
    }
    const LineFit drift = weighted_line(idx, slopes, weights);
    // leave-one-out reference: slope_p = -4 pi delta (p - mean of the others) = -4 pi delta P/(P-1) (p - mean)
    const double scale = static_cast<double>(pairs) / static_cast<double>(pairs - 1);
    const double delta = -drift.slope / (2.0 * kTwoPi * scale);
    est.ppm = (eps_coarse + delta) * 1e6;
    return est;
}

double estimate_cfo_preamble(std::span<const Complex> y, const ChipSequence& ref, std::size_t periods,
                             double sample_rate) {
    const std::size_t n = ref.size();
    if (periods < 2 || y.size() < periods * n) throw ArgumentError("CFO refinement needs two full preamble periods");
    std::vector<double> idx(periods), phase(periods), w(periods);
    double prev = 0.0;
    for (std::size_t i = 0; i < periods; ++i) {
        Complex acc{};
        for (std::size_t j = 0; j < n; ++j) acc += y[i * n + j] * ref.chips[j];
        const double raw = std::arg(acc);
        const double u = (i == 0) ? raw : raw + kTwoPi * std::round((prev - raw) / kTwoPi);
        prev = u;
        idx[i] = static_cast<double>(i);
        phase[i] = u;
        w[i] = std::norm(acc);
    }
    const LineFit f = weighted_line(idx, phase, w);
    return f.slope * sample_rate / (kTwoPi * static_cast<double>(n));
}

IqBuffer correct_sfo(const IqBuffer& y, double ppm, double origin, const FractionalInterpolator& interp) {
    if (ppm == 0.0 && origin == 0.0) return y;
    const double step = 1.0 + ppm * 1e-6;
    const double span = static_cast<double>(y.size()) - 1.0 - origin;
    if (span < 0.0) return {CVector{}, y.sample_rate};
    const auto count = static_cast<std::size_t>(std::floor(span / step)) + 1;
    return {interp.resample(y.samples, origin, step, count), y.sample_rate};
}

AcquisitionResult acquire(const IqBuffer& y, const FramePlan& plan, const FrameSequences& seqs,
                          const AcquisitionOptions& opt) {
    plan.validate();
    const auto& interp = opt.interpolator ? *opt.interpolator : default_interpolator();
    const double fs = y.sample_rate;
    const std::size_t w = plan.sc_length;

    AcquisitionResult res;
    SyncReport& r = res.report;
    CVector work = y.samples;
    long n0 = 0;

    if (opt.enable_sc) {
        const ScMetric metric = sc_metric(work, w);
        const StoEstimate sto = estimate_sto(metric, opt.plateau);
        r.sto_coarse = sto.sto;
        r.plateau_peak = sto.peak;
        r.plateau_width = sto.plateau_width;
        r.merged_plateau = sto.merged_plateau;
        if (sto.merged_plateau) throw AcquisitionError("S&C plateaus merged; the two preamble blocks are not distinct");
        n0 = sto.sto;

        const double frac = estimate_cfo_fractional(metric.p[metric.position_of(sto.plateau_point)], w, fs);
        rotate_inplace(work, -frac, fs);

        const long wl = static_cast<long>(w);
        const CVector b1 = slice(work, n0 + wl, 2 * w);
        const CVector b2 = slice(work, n0 + 4 * wl, 2 * w);
        const IntegerCfoEstimate ic = estimate_cfo_integer(b1, b2, seqs.sc_first, seqs.sc_second, fs, opt.integer_cfo);
        rotate_inplace(work, -ic.hz, fs);
        r.integer_cfo_score = ic.score;
        r.integer_cfo_low_confidence = ic.low_confidence;

        r.cfo_sc_hz = frac + ic.hz;

        if (opt.refine_timing) {
            const CVector pre = build_sc_preamble(seqs.sc_first, seqs.sc_second);
            std::vector<double> ref(pre.size());
            for (std::size_t i = 0; i < pre.size(); ++i) ref[i] = pre[i].real();
            n0 = refine_sto(work, n0, ref, wl / 2);
        }
    } else {
        n0 = opt.genie_sto.value_or(0);
        r.sto_coarse = n0;
    }
    r.sto = n0;

    double eps = 0.0;
    if (opt.enable_sfo) {
        const CVector pre = slice(work, n0 + static_cast<long>(plan.sc_preamble_length()), plan.sfo_preamble_length());
        const SfoEstimate s = estimate_sfo_tsai(pre, seqs.payload, plan.sfo_prbs_count, opt.sfo_band_fraction);
        r.sfo_ppm = s.ppm;
        r.sfo_coarse_ppm = s.coarse_ppm;
        eps = s.ppm * 1e-6;
    }

    res.aligned.sample_rate = fs;
    res.aligned.samples = interp.resample(work, static_cast<double>(n0), 1.0 + eps, plan.frame_length());

    if (opt.enable_sc) {
        if (opt.refine_cfo) {
            const auto pre = std::span<const Complex>(res.aligned.samples).subspan(plan.sc_preamble_length());
            r.cfo_refine_hz = estimate_cfo_preamble(pre, seqs.payload, plan.sfo_prbs_count, fs);
            rotate_inplace(res.aligned.samples, -r.cfo_refine_hz, fs);
        }
        const double bin = fs / (2.0 * static_cast<double>(w));
        r.cfo_total_hz = r.cfo_sc_hz * (1.0 + eps) + r.cfo_refine_hz;
        r.cfo_integer_bins = static_cast<int>(std::lround(r.cfo_total_hz / bin));
        r.cfo_integer_hz = r.cfo_integer_bins * bin;
        r.cfo_fractional_hz = r.cfo_total_hz - r.cfo_integer_hz;
    }
    return res;
}

std::string sync_csv_header() {
    return "sto,sto_coarse,cfo_fractional_hz,cfo_integer_bins,cfo_integer_hz,cfo_total_hz,cfo_sc_hz,cfo_refine_hz,"
           "sfo_ppm,sfo_coarse_ppm,"
           "plateau_peak,plateau_width,integer_cfo_score,integer_cfo_low_confidence,merged_plateau";
}

std::string sync_csv_fields(const SyncReport& r) {
    std::ostringstream os;
    os << r.sto << ',' << r.sto_coarse << ',' << format_double(r.cfo_fractional_hz) << ',' << r.cfo_integer_bins << ','
       << format_double(r.cfo_integer_hz) << ',' << format_double(r.cfo_total_hz) << ',' << format_double(r.cfo_sc_hz)
       << ',' << format_double(r.cfo_refine_hz) << ',' << format_double(r.sfo_ppm)
       << ',' << format_double(r.sfo_coarse_ppm) << ',' << format_double(r.plateau_peak) << ',' << r.plateau_width
       << ',' << format_double(r.integer_cfo_score) << ',' << (r.integer_cfo_low_confidence ? 1 : 0) << ','
       << (r.merged_plateau ? 1 : 0);
    return os.str();
}

}  // namespace pmcw
