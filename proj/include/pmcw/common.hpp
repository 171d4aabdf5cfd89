#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmcw {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, exact

// Complex baseband sample stream tagged with its sample rate.
struct IqBuffer {
    CVector samples;
    double sample_rate = 0.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// Invalid structural parameters (polynomial, plan, channel, scenario).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed call arguments (length mismatches, wrong bit counts, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed files on disk.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Synchronization could not lock onto a preamble.
class AcquisitionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An estimate fell outside the estimator's unambiguous range.
class RangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double power_to_db(double p) { return 10.0 * std::log10(p); }
inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

// Mean |x|^2; zero for an empty span.
double mean_power(const CVector& x);

// printf "%.*g" with the given significant digits; used for every CSV and report field.
std::string format_double(double v, int digits = 10);

}  // namespace pmcw
