#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmcw/common.hpp"

namespace pmcw {

inline constexpr int kMinDegree = 3;
inline constexpr int kMaxDegree = 11;

// Fibonacci LFSR description. Taps are polynomial exponents, e.g. {7, 3} for x^7 + x^3 + 1.
// Seed bit i (LSB = stage 1) initializes stage i + 1; zero selects the all-ones default.
struct LfsrSpec {
    int degree = 0;
    std::vector<int> taps;
    std::uint32_t seed = 0;

    std::uint32_t effective_seed() const;
    bool operator==(const LfsrSpec& other) const;
};

// Built-in table: two primitive polynomials per degree in [3, 11]. Index 0 drives the payload
// sequence, indices 0 and 1 at degree m - 1 drive the two synchronization blocks. The pair at each
// degree was chosen for the lowest peak circular cross-correlation.
LfsrSpec builtin_lfsr(int degree, int index = 0);

// Throws ConfigError if the taps are not in the built-in table or the seed is zero-valued.
void validate(const LfsrSpec& spec);

// ±1 chips of one period of an m-sequence (register bit 0 -> +1, bit 1 -> -1).
struct ChipSequence {
    std::vector<double> chips;
    LfsrSpec spec;

    std::size_t size() const { return chips.size(); }
    std::span<const double> view() const { return chips; }
};

ChipSequence generate_mls(const LfsrSpec& spec);

// out[l] = sum_k a[(k + l) mod L] * b[k], computed as a length-L DFT product.
CVector circular_correlate(std::span<const Complex> a, std::span<const double> b);

// Peak circular cross-correlation magnitude normalized by the length.
double cross_correlation_bound(const ChipSequence& a, const ChipSequence& b);

// Reusable correlator against one fixed reference: caches conj(DFT(ref)).
class Correlator {
public:
    explicit Correlator(std::span<const double> reference);

    std::size_t size() const { return ref_spectrum_conj_.size(); }
    // DFT(ref), not conjugated.
    const CVector& reference_spectrum() const { return ref_spectrum_; }

    CVector correlate(std::span<const Complex> a) const;
    // Same correlation from a precomputed DFT of the input.
    CVector correlate_spectrum(std::span<const Complex> a_spectrum) const;

private:
    CVector ref_spectrum_;
    CVector ref_spectrum_conj_;
};

bool is_mls_length(std::size_t n);

}  // namespace pmcw
