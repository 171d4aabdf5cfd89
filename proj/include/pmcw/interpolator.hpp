#pragma once

#include <span>
#include <string>
#include <vector>

#include "pmcw/common.hpp"

namespace pmcw {

// Kaiser-windowed sinc fractional-delay interpolator backed by a polyphase table.
// Coefficients between table phases are linearly interpolated; samples outside the input are zero.
class FractionalInterpolator {
public:
    explicit FractionalInterpolator(int taps = 32, double kaiser_beta = 10.0, int phases = 2048);

    int taps() const { return taps_; }
    double kaiser_beta() const { return beta_; }
    std::string description() const;

    // x evaluated at fractional index t.
    Complex at(std::span<const Complex> x, double t) const;

    // out[n] = x(start + n * step) for n in [0, count).
    CVector resample(std::span<const Complex> x, double start, double step, std::size_t count) const;

private:
    void weights(double mu, double* w) const;

    int taps_;
    double beta_;
    int phases_;
    std::vector<double> table_;  // (phases_ + 1) rows of taps_ coefficients
};

const FractionalInterpolator& default_interpolator();

// y[n] = x[n] * exp(j (2 pi f n / fs + phase0)); one exact phasor every 256 samples.
void rotate_inplace(std::span<Complex> x, double frequency, double sample_rate, double phase0 = 0.0,
                    double index_offset = 0.0);

}  // namespace pmcw
