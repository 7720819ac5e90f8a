#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include "eispec/common.hpp"

namespace eispec {

// FFTW plan creation/destruction is not thread safe; execution is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

namespace detail {

class FftwPlan {
 public:
  FftwPlan(fftw_plan p) : plan_(p) {
    if (!plan_) throw numeric_error("fft: plan creation failed");
  }
  ~FftwPlan() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan_);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace detail

// Forward complex DFT, unnormalized (matches the usual convention).
inline std::vector<std::complex<double>> fft(
    std::vector<std::complex<double>> x) {
  if (x.empty()) throw data_error("fft: empty input");
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(x.size());
  auto* in_ptr = reinterpret_cast<fftw_complex*>(x.data());
  auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan raw;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    raw = fftw_plan_dft_1d(n, in_ptr, out_ptr, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  detail::FftwPlan plan(raw);
  plan.execute();
  return out;
}

// Inverse complex DFT, scaled by 1/N so ifft(fft(x)) == x.
inline std::vector<std::complex<double>> ifft(
    std::vector<std::complex<double>> x) {
  if (x.empty()) throw data_error("fft: empty input");
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(x.size());
  auto* in_ptr = reinterpret_cast<fftw_complex*>(x.data());
  auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan raw;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    raw = fftw_plan_dft_1d(n, in_ptr, out_ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  detail::FftwPlan plan(raw);
  plan.execute();
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

// Real-input forward DFT, returns the N/2+1 non-negative frequency bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  if (x.empty()) throw data_error("fft: empty input");
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x);
  std::vector<std::complex<double>> out(x.size() / 2 + 1);
  auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan raw;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    raw = fftw_plan_dft_r2c_1d(n, in.data(), out_ptr, FFTW_ESTIMATE);
  }
  detail::FftwPlan plan(raw);
  plan.execute();
  return out;
}

// Frequency grid matching rfft output: k * fs / n for k in [0, n/2].
inline std::vector<double> rfft_freqs(std::size_t n, double fs) {
  if (n == 0) throw data_error("fft: zero-length grid");
  std::vector<double> f(n / 2 + 1);
  for (std::size_t k = 0; k < f.size(); ++k)
    f[k] = static_cast<double>(k) * fs / static_cast<double>(n);
  return f;
}

}  // namespace eispec
