#include "pmcw/seqgen.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "pmcw/fft.hpp"

namespace pmcw {

namespace {

struct PolynomialPair {
    std::vector<int> first;
    std::vector<int> second;
};

const std::array<PolynomialPair, kMaxDegree - kMinDegree + 1>& table() {
    static const std::array<PolynomialPair, kMaxDegree - kMinDegree + 1> t = {{
        {{3, 2}, {3, 1}},
        {{4, 3}, {4, 1}},
        {{5, 2}, {5, 4, 3, 1}},
        {{6, 5, 2, 1}, {6, 5, 4, 1}},
        {{7, 3}, {7, 3, 2, 1}},
        {{8, 6, 3, 2}, {8, 6, 5, 2}},
        {{9, 4}, {9, 7, 5, 2}},
        {{10, 6, 5, 2}, {10, 8, 5, 4}},
        {{11, 2}, {11, 7, 5, 3}},
    }};
    return t;
}

std::vector<int> sorted_desc(std::vector<int> taps) {
    std::sort(taps.begin(), taps.end(), std::greater<>());
    return taps;
}

}  // namespace

std::uint32_t LfsrSpec::effective_seed() const {
    return seed == 0 ? ((1u << degree) - 1u) : seed;
}

bool LfsrSpec::operator==(const LfsrSpec& other) const {
    return degree == other.degree && sorted_desc(taps) == sorted_desc(other.taps) &&
           effective_seed() == other.effective_seed();
}

LfsrSpec builtin_lfsr(int degree, int index) {
    if (degree < kMinDegree || degree > kMaxDegree)
        throw ConfigError("no built-in LFSR for degree " + std::to_string(degree) + " (supported: 3..11)");
    if (index != 0 && index != 1) throw ConfigError("built-in LFSR index must be 0 or 1");
    const auto& pair = table()[degree - kMinDegree];
    return LfsrSpec{degree, index == 0 ? pair.first : pair.second, 0};
}

void validate(const LfsrSpec& spec) {
    if (spec.degree < kMinDegree || spec.degree > kMaxDegree)
        throw ConfigError("LFSR degree " + std::to_string(spec.degree) + " outside supported range 3..11");
    const auto taps = sorted_desc(spec.taps);
    const auto& pair = table()[spec.degree - kMinDegree];
    if (taps != pair.first && taps != pair.second)
        throw ConfigError("LFSR taps are not a known primitive polynomial of degree " +
                          std::to_string(spec.degree));
    const std::uint32_t mask = (1u << spec.degree) - 1u;
    if ((spec.effective_seed() & mask) == 0 || (spec.seed & ~mask) != 0)
        throw ConfigError("LFSR seed must be a nonzero " + std::to_string(spec.degree) + "-bit value");
}

ChipSequence generate_mls(const LfsrSpec& spec) {
    validate(spec);
    const int m = spec.degree;
    const std::size_t n = (std::size_t{1} << m) - 1;

    std::uint32_t feedback_mask = 0;
    for (int t : spec.taps) feedback_mask |= 1u << (t - 1);

    // bit i holds stage i + 1; output is stage m, new bit enters stage 1
    std::uint32_t state = spec.effective_seed();
    ChipSequence seq;
    seq.spec = spec;
    seq.chips.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t out = (state >> (m - 1)) & 1u;
        seq.chips[i] = out ? -1.0 : 1.0;
        const std::uint32_t fb = static_cast<std::uint32_t>(std::popcount(state & feedback_mask)) & 1u;
        state = ((state << 1) | fb) & ((1u << m) - 1u);
    }
    return seq;
}

Correlator::Correlator(std::span<const double> reference) {
    CVector ref(reference.begin(), reference.end());
    ref_spectrum_ = dft(ref);
    ref_spectrum_conj_.resize(ref_spectrum_.size());
    std::transform(ref_spectrum_.begin(), ref_spectrum_.end(), ref_spectrum_conj_.begin(),
                   [](const Complex& v) { return std::conj(v); });
}

CVector Correlator::correlate(std::span<const Complex> a) const {
    if (a.size() != size()) throw ArgumentError("correlation length mismatch");
    CVector spec = dft(a);
    return correlate_spectrum(spec);
}

CVector Correlator::correlate_spectrum(std::span<const Complex> a_spectrum) const {
    if (a_spectrum.size() != size()) throw ArgumentError("correlation length mismatch");
    CVector out(size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a_spectrum[k] * ref_spectrum_conj_[k];
    idft_inplace(out);
    return out;
}

CVector circular_correlate(std::span<const Complex> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ArgumentError("circular_correlate: lengths differ (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    if (a.empty()) return {};
    return Correlator(b).correlate(a);
}

double cross_correlation_bound(const ChipSequence& a, const ChipSequence& b) {
    if (a.size() != b.size()) throw ArgumentError("cross_correlation_bound: lengths differ");
    CVector ac(a.chips.begin(), a.chips.end());
    const CVector c = circular_correlate(ac, b.chips);
    double peak = 0.0;
    for (const auto& v : c) peak = std::max(peak, std::abs(v));
    return peak / static_cast<double>(a.size());
}

bool is_mls_length(std::size_t n) {
    // n = 2^m - 1 with m >= 2
    return n >= 3 && ((n + 1) & n) == 0;
}

}  // namespace pmcw
