#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/fft.hpp"
#include "eispec/spectrum.hpp"
#include "eispec/timeseries.hpp"

namespace eispec {

// Welch power spectral density of one channel.  Hann window, per-segment
// mean removal, plain mean over segments, one-sided density scaling
// 2*|X|^2 / (fs * sum(w^2)) with DC and Nyquist not doubled.  The grid
// is restricted to [fmin, fmax] after the density is computed.
inline Spectrum welch_psd(const std::vector<double>& x, double fs,
                          std::size_t nperseg, double overlap_frac,
                          double fmin, double fmax) {
  if (!(fs > 0.0)) throw config_error("welch: fs must be positive");
  if (nperseg < 8) throw config_error("welch: nperseg too small");
  if (!(overlap_frac >= 0.0 && overlap_frac < 1.0))
    throw config_error("welch: overlap must be in [0, 1)");
  if (!(fmin >= 0.0 && fmin < fmax))
    throw config_error("welch: need 0 <= fmin < fmax");
  if (x.size() < nperseg)
    throw data_error("welch: signal shorter than one segment");
  if (!all_finite(x)) throw data_error("welch: non-finite input");

  std::size_t step = nperseg -
      static_cast<std::size_t>(std::floor(overlap_frac *
                                          static_cast<double>(nperseg)));
  if (step == 0) step = 1;

  const double pi = std::acos(-1.0);
  std::vector<double> window(nperseg);
  double wss = 0.0;  // sum of squared window values
  for (std::size_t i = 0; i < nperseg; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * pi * static_cast<double>(i) /
                                      static_cast<double>(nperseg)));
    wss += window[i] * window[i];
  }

  const std::size_t n_bins = nperseg / 2 + 1;
  std::vector<double> acc(n_bins, 0.0);
  std::size_t n_segments = 0;
  std::vector<double> seg(nperseg);
  for (std::size_t start = 0; start + nperseg <= x.size(); start += step) {
    double mean = 0.0;
    for (std::size_t i = 0; i < nperseg; ++i) mean += x[start + i];
    mean /= static_cast<double>(nperseg);
    for (std::size_t i = 0; i < nperseg; ++i)
      seg[i] = (x[start + i] - mean) * window[i];
    const auto spec = rfft(seg);
    for (std::size_t k = 0; k < n_bins; ++k) acc[k] += std::norm(spec[k]);
    ++n_segments;
  }

  const double scale = 1.0 / (fs * wss * static_cast<double>(n_segments));
  Spectrum out;
  const auto grid = rfft_freqs(nperseg, fs);
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (grid[k] < fmin || grid[k] > fmax) continue;
    double p = acc[k] * scale;
    const bool is_dc = (k == 0);
    const bool is_nyquist = (nperseg % 2 == 0 && k == nperseg / 2);
    if (!is_dc && !is_nyquist) p *= 2.0;
    out.freqs.push_back(grid[k]);
    out.power.push_back(p);
  }
  if (out.freqs.empty())
    throw data_error("welch: frequency restriction left no bins");
  out.normalized = false;
  return out;
}

// Single-channel TimeSeries convenience wrapper.
inline Spectrum welch_psd(const TimeSeries& ts, std::size_t nperseg,
                          double overlap_frac, double fmin, double fmax) {
  ts.validate();
  if (ts.n_channels() != 1)
    throw data_error("welch: expected exactly one channel");
  return welch_psd(ts.data[0], ts.fs, nperseg, overlap_frac, fmin, fmax);
}

}  // namespace eispec
