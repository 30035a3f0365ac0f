#pragma once

#include <complex>
#include <span>

namespace qtd::detail {

// Unnormalised in-place FFT over `howmany` contiguous blocks of n^d points.
// sign = -1 forward (e^{-2 pi i mk/N}), +1 backward.
void fft_inplace(std::span<std::complex<double>> data, int d, int n, int howmany, int sign);

}  // namespace qtd::detail
