#pragma once

#include <complex>
#include <vector>

namespace flowscale {

using cvec = std::vector<std::complex<double>>;

// In-place complex FFT. Radix-2 for power-of-two lengths, Bluestein otherwise.
// Forward uses exp(-2*pi*i*k*n/N); inverse applies 1/N scaling.
void fft(cvec& a, bool inverse);

// 2D transform of an h x w row-major complex field, in place.
void fft2(cvec& a, int h, int w, bool inverse);

}  // namespace flowscale
