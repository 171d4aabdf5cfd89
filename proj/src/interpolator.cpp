#include "pmcw/interpolator.hpp"

#include <cmath>
#include <cstdio>

namespace pmcw {

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

double kaiser(double u, double beta) {
    const double arg = 1.0 - u * u;
    if (arg <= 0.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(arg)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace

FractionalInterpolator::FractionalInterpolator(int taps, double kaiser_beta, int phases)
    : taps_(taps), beta_(kaiser_beta), phases_(phases) {
    if (taps_ < 2 || taps_ > 64 || taps_ % 2 != 0) throw ConfigError("interpolator tap count must be even, 2..64");
    if (phases_ < 16) throw ConfigError("interpolator needs at least 16 phases");
    const int half = taps_ / 2;
    table_.resize(static_cast<std::size_t>(phases_ + 1) * taps_);
    for (int p = 0; p <= phases_; ++p) {
        const double mu = static_cast<double>(p) / phases_;
        double* row = &table_[static_cast<std::size_t>(p) * taps_];
        double sum = 0.0;
        // tap j sits at offset (j - half + 1) from floor(t)
        for (int j = 0; j < taps_; ++j) {
            const double u = static_cast<double>(j - half + 1) - mu;
            row[j] = sinc(u) * kaiser(u / half, beta_);
            sum += row[j];
        }
        for (int j = 0; j < taps_; ++j) row[j] /= sum;
    }
}

std::string FractionalInterpolator::description() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "windowed-sinc taps=%d window=kaiser beta=%g phases=%d", taps_, beta_,
                  phases_);
    return buf;
}

void FractionalInterpolator::weights(double mu, double* w) const {
    const double pos = mu * phases_;
    int p = static_cast<int>(pos);
    if (p >= phases_) p = phases_ - 1;
    const double f = pos - p;
    const double* a = &table_[static_cast<std::size_t>(p) * taps_];
    const double* b = a + taps_;
    for (int j = 0; j < taps_; ++j) w[j] = a[j] + f * (b[j] - a[j]);
}

Complex FractionalInterpolator::at(std::span<const Complex> x, double t) const {
    const double base = std::floor(t);
    const double mu = t - base;
    const long b = static_cast<long>(base);
    const long n = static_cast<long>(x.size());
    if (mu == 0.0) return (b >= 0 && b < n) ? x[static_cast<std::size_t>(b)] : Complex{};

    double w[64];
    weights(mu, w);
    const long first = b - taps_ / 2 + 1;
    Complex acc{};
    if (first >= 0 && first + taps_ <= n) {
        const Complex* p = x.data() + first;
        for (int j = 0; j < taps_; ++j) acc += p[j] * w[j];
    } else {
        for (int j = 0; j < taps_; ++j) {
            const long idx = first + j;
            if (idx >= 0 && idx < n) acc += x[static_cast<std::size_t>(idx)] * w[j];
        }
    }
    return acc;
}

CVector FractionalInterpolator::resample(std::span<const Complex> x, double start, double step,
                                         std::size_t count) const {
    CVector out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = at(x, start + static_cast<double>(i) * step);
    return out;
}

const FractionalInterpolator& default_interpolator() {
    static const FractionalInterpolator instance;
    return instance;
}

void rotate_inplace(std::span<Complex> x, double frequency, double sample_rate, double phase0,
                    double index_offset) {
    if (frequency == 0.0 && phase0 == 0.0) return;
    const double cycles_per_sample = frequency / sample_rate;
    const Complex step = std::polar(1.0, kTwoPi * cycles_per_sample);
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < x.size(); start += kChunk) {
        const double cycles = cycles_per_sample * (static_cast<double>(start) + index_offset);
        Complex ph = std::polar(1.0, kTwoPi * (cycles - std::floor(cycles)) + phase0);
        const std::size_t end = std::min(x.size(), start + kChunk);
        for (std::size_t n = start; n < end; ++n) {
            x[n] *= ph;
            ph *= step;
        }
    }
}

}  // namespace pmcw
