#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

// Shared test utilities: small reference implementations kept separate
// from the library so library changes cannot silently move the oracle.
namespace testref {

inline std::vector<double> tone(double freq_hz, double fs, std::size_t n,
                                double amplitude = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  const double pi = std::acos(-1.0);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amplitude *
           std::sin(2.0 * pi * freq_hz * static_cast<double>(i) / fs + phase);
  return x;
}

inline double rms(const std::vector<double>& x, std::size_t begin = 0,
                  std::size_t end = 0) {
  if (end == 0) end = x.size();
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

// Amplitude of the component at freq_hz via quadrature projection over
// [begin, end).
inline double tone_amplitude(const std::vector<double>& x, double freq_hz,
                             double fs, std::size_t begin, std::size_t end) {
  const double pi = std::acos(-1.0);
  double cs = 0.0, sn = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double arg = 2.0 * pi * freq_hz * static_cast<double>(i) / fs;
    cs += x[i] * std::cos(arg);
    sn += x[i] * std::sin(arg);
  }
  const double n = static_cast<double>(end - begin);
  return 2.0 * std::sqrt(cs * cs + sn * sn) / n;
}

// Magnitude response of an analog-prototype Butterworth band-pass of
// prototype order N at digital frequency f, accounting for bilinear
// prewarping.  Derived from |Hp(jw)|^2 = 1/(1 + W^(2N)) with
// W = (w^2 - w0^2)/(bw*w) and w = 2*fs*tan(pi*f/fs).
inline double butter_bandpass_gain(int order, double lo_hz, double hi_hz,
                                   double fs, double f_hz) {
  const double pi = std::acos(-1.0);
  const double fs2 = 2.0 * fs;
  const double wlo = fs2 * std::tan(pi * lo_hz / fs);
  const double whi = fs2 * std::tan(pi * hi_hz / fs);
  const double w0sq = wlo * whi;
  const double bw = whi - wlo;
  const double w = fs2 * std::tan(pi * f_hz / fs);
  const double W = (w * w - w0sq) / (bw * w);
  return 1.0 / std::sqrt(1.0 + std::pow(W * W, order));
}

inline double mean(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

// Reference unequal-variance t-statistic, written straight from the
// textbook formula with n-1 variances.
inline double welch_t(const std::vector<double>& a,
                      const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double va = 0.0, vb = 0.0;
  for (double v : a) va += (v - ma) * (v - ma);
  for (double v : b) vb += (v - mb) * (v - mb);
  va /= static_cast<double>(a.size() - 1);
  vb /= static_cast<double>(b.size() - 1);
  const double se2 = va / static_cast<double>(a.size()) +
                     vb / static_cast<double>(b.size());
  if (se2 <= 0.0) return 0.0;
  return (ma - mb) / std::sqrt(se2);
}

// Edge count of the largest connected component of a boolean adjacency
// matrix, by label propagation (independent of the library's BFS).
inline std::size_t max_component_edges(
    const std::vector<std::vector<bool>>& adj) {
  const std::size_t n = adj.size();
  std::vector<std::size_t> comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (adj[i][j] && comp[j] > comp[i]) {
          comp[j] = comp[i];
          changed = true;
        }
  }
  std::size_t best = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t edges = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (comp[i] == c && comp[j] == c && adj[i][j]) ++edges;
    best = edges > best ? edges : best;
  }
  return best;
}

// Enumerates every k-subset of {0..n-1} in lexicographic order.
template <typename Fn>
inline void for_each_subset(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  while (true) {
    fn(pick);
    // advance to the next lexicographic k-subset
    std::size_t i = k;
    while (i > 0) {
      --i;
      if (pick[i] != i + n - k) break;
      if (i == 0) return;
    }
    if (pick[i] == i + n - k) return;
    ++pick[i];
    for (std::size_t j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
}

inline double sample_variance(const std::vector<double>& x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size() - 1);
}

inline double sample_sd(const std::vector<double>& x) {
  return std::sqrt(sample_variance(x));
}

}  // namespace testref
