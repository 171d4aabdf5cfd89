#pragma once

#include <span>

#include "pmcw/common.hpp"

namespace pmcw {

// Arbitrary-length complex DFTs (odd and prime lengths included, no padding).
// Plans are cached per length and shared across threads; execution is reentrant.
//
//   forward:  X[k] = sum_n x[n] exp(-j 2 pi k n / L)
//   inverse:  x[n] = (1/L) sum_k X[k] exp(+j 2 pi k n / L)
CVector dft(std::span<const Complex> x);
CVector idft(std::span<const Complex> X);

void dft_inplace(std::span<Complex> x);
void idft_inplace(std::span<Complex> X);

// Signed frequency index of bin k for a length-L transform: k for k <= L/2, k - L otherwise.
inline long signed_bin(std::size_t k, std::size_t L) {
    return (2 * k <= L) ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(L);
}

}  // namespace pmcw
