#pragma once

#include <complex>
#include <vector>

namespace beamlab {

// Real<->complex FFT pair for power-of-two sizes, backed by FFTW.
// Plans are cached per size; execution is thread-safe, plan creation is
// serialized internally.
void rfft(const double* in, std::complex<double>* out, int n);
void irfft(const std::complex<double>* in, double* out, int n);

std::vector<std::complex<double>> rfft(const std::vector<double>& in);
std::vector<double> irfft(const std::vector<std::complex<double>>& in, int n);

// Linear convolution via FFT overlap-add. Output length = x.size() + h.size() - 1.
std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h);

int next_pow2(int n);

}  // namespace beamlab
