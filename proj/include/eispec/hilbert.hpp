#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/fft.hpp"
#include "eispec/timeseries.hpp"

namespace eispec {

// FFT-based analytic signal: zero the negative frequencies, double the
// positive ones, keep DC (and Nyquist for even length) unscaled.  The
// real part of the result equals the input.
inline std::vector<std::complex<double>> analytic_signal(
    const std::vector<double>& x) {
  if (x.size() < 16)
    throw data_error("hilbert: need at least 16 samples per channel");
  if (!all_finite(x)) throw data_error("hilbert: non-finite input");
  const std::size_t n = x.size();
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
  auto spec = fft(std::move(buf));
  // DC stays, strictly positive frequencies double, Nyquist (even n)
  // stays, negative frequencies vanish.
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
  return ifft(std::move(spec));
}

// Instantaneous phase in (-pi, pi], per sample.
inline std::vector<double> instantaneous_phase(
    const std::vector<std::complex<double>>& analytic) {
  std::vector<double> ph(analytic.size());
  for (std::size_t i = 0; i < analytic.size(); ++i)
    ph[i] = std::arg(analytic[i]);
  return ph;
}

// Removes 2*pi jumps so the phase sequence is continuous.
inline std::vector<double> unwrap_phase(std::vector<double> ph) {
  const double pi = std::acos(-1.0);
  double offset = 0.0;
  for (std::size_t i = 1; i < ph.size(); ++i) {
    double diff = ph[i] + offset - ph[i - 1];
    while (diff > pi) {
      offset -= 2.0 * pi;
      diff -= 2.0 * pi;
    }
    while (diff < -pi) {
      offset += 2.0 * pi;
      diff += 2.0 * pi;
    }
    ph[i] += offset;
  }
  return ph;
}

// Per-channel analytic signal of a multichannel series.
inline std::vector<std::vector<std::complex<double>>> analytic_signal(
    const TimeSeries& ts) {
  ts.validate();
  std::vector<std::vector<std::complex<double>>> out(ts.n_channels());
  for (std::size_t c = 0; c < ts.n_channels(); ++c)
    out[c] = analytic_signal(ts.data[c]);
  return out;
}

}  // namespace eispec
