#include "beamlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace beamlab {

namespace {

struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

std::mutex g_plan_mutex;
std::map<int, PlanPair>& plan_cache() {
  static std::map<int, PlanPair> cache;
  return cache;
}

PlanPair& plans_for(int n) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<double> re(n);
  std::vector<std::complex<double>> cx(n / 2 + 1);
  PlanPair p;
  p.fwd = fftw_plan_dft_r2c_1d(n, re.data(),
                               reinterpret_cast<fftw_complex*>(cx.data()),
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.inv = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(cx.data()),
                               re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p.fwd || !p.inv) throw std::runtime_error("fftw plan creation failed");
  return cache.emplace(n, p).first->second;
}

}  // namespace

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

void rfft(const double* in, std::complex<double>* out, int n) {
  auto& p = plans_for(n);
  fftw_execute_dft_r2c(p.fwd, const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void irfft(const std::complex<double>* in, double* out, int n) {
  auto& p = plans_for(n);
  // c2r destroys its input, work on a copy
  std::vector<std::complex<double>> tmp(in, in + n / 2 + 1);
  fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(tmp.data()), out);
  const double scale = 1.0 / n;
  for (int i = 0; i < n; ++i) out[i] *= scale;
}

std::vector<std::complex<double>> rfft(const std::vector<double>& in) {
  std::vector<std::complex<double>> out(in.size() / 2 + 1);
  rfft(in.data(), out.data(), static_cast<int>(in.size()));
  return out;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& in, int n) {
  std::vector<double> out(n);
  irfft(in.data(), out.data(), n);
  return out;
}

std::vector<double> fft_convolve(const std::vector<double>& x,
                                 const std::vector<double>& h) {
  if (x.empty() || h.empty()) return {};
  const int lh = static_cast<int>(h.size());
  const int lx = static_cast<int>(x.size());
  const int nfft = next_pow2(std::max(2 * lh, 4096));
  const int block = nfft - lh + 1;
  const int nb = nfft / 2 + 1;

  std::vector<std::complex<double>> H(nb);
  {
    std::vector<double> hp(nfft, 0.0);
    std::copy(h.begin(), h.end(), hp.begin());
    rfft(hp.data(), H.data(), nfft);
  }

  std::vector<double> out(lx + lh - 1, 0.0);
  std::vector<double> buf(nfft);
  std::vector<std::complex<double>> X(nb);
  for (int start = 0; start < lx; start += block) {
    const int len = std::min(block, lx - start);
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(x.begin() + start, x.begin() + start + len, buf.begin());
    rfft(buf.data(), X.data(), nfft);
    for (int i = 0; i < nb; ++i) X[i] *= H[i];
    irfft(X.data(), buf.data(), nfft);
    const int out_len = std::min(len + lh - 1, static_cast<int>(out.size()) - start);
    for (int i = 0; i < out_len; ++i) out[start + i] += buf[i];
  }
  return out;
}

}  // namespace beamlab
