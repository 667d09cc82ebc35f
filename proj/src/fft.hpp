#pragma once

// Thin wrapper over FFTW plans for the n x n real <-> complex transforms used
// by the pseudospectral products. Plans are cached per resolution and built
// with FFTW_ESTIMATE so that results are bit-reproducible between runs.

#include <complex>
#include <vector>

namespace detform::fft {

// Unnormalised inverse transform: the half-spectrum coefficients (n x (n/2+1))
// are summed into physical samples. `spec` is not modified.
void to_physical(const std::complex<double>* spec, double* phys, int n);
// Unnormalised forward transform of n x n physical samples.
void to_spectral(const double* phys, std::complex<double>* spec, int n);

}  // namespace detform::fft
