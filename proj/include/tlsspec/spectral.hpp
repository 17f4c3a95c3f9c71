// spectral.hpp — thin FFTW wrappers

#pragma once

#include <cstddef>
#include <vector>

#include "tlsspec/core.hpp"

namespace tlsspec::spectral {

std::size_t next_pow2(std::size_t n);

// Forward DFT X_k = sum_j x_j e^{-2 pi i jk/n} of a real sequence
// zero-padded to n; returns bins 0..n/2.
std::vector<cplx> real_forward(const std::vector<double>& x, std::size_t n);

// Symmetric Hann window of the given length (endpoints zero).
std::vector<double> hann(std::size_t length);

}  // namespace tlsspec::spectral
