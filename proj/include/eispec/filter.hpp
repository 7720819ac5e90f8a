#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/timeseries.hpp"

namespace eispec {

// Second-order section, denominator normalized so a0 == 1.
struct Sos {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Butterworth band-pass as cascaded biquads.  `order` is the analog
// prototype order (even, >= 2); the digital filter has 2*order poles,
// i.e. `order` sections.  Design path: prototype poles, lowpass-to-
// bandpass transform, bilinear transform with frequency prewarping.
inline std::vector<Sos> butter_bandpass(int order, double lo_hz, double hi_hz,
                                        double fs) {
  if (!(fs > 0.0)) throw config_error("filter: fs must be positive");
  if (!(lo_hz > 0.0 && lo_hz < hi_hz && hi_hz < fs / 2.0))
    throw config_error("filter: band edges must satisfy 0 < lo < hi < fs/2");
  if (order < 2 || order % 2 != 0)
    throw config_error("filter: order must be even and >= 2");

  using cd = std::complex<double>;
  const double pi = std::acos(-1.0);

  // Prewarped analog edge frequencies (rad/s up to the bilinear scale).
  const double fs2 = 2.0 * fs;
  const double wlo = fs2 * std::tan(pi * lo_hz / fs);
  const double whi = fs2 * std::tan(pi * hi_hz / fs);
  const double w0 = std::sqrt(wlo * whi);
  const double bw = whi - wlo;

  // Upper-half-plane prototype poles; conjugates are implied.
  std::vector<cd> proto;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = pi * (2.0 * k + order + 1.0) / (2.0 * order);
    proto.emplace_back(std::cos(theta), std::sin(theta));
  }

  // Lowpass-to-bandpass: each prototype pole p yields the two roots of
  // s^2 - p*bw*s + w0^2.  Together with their conjugates from p-bar this
  // gives 2*order analog poles and `order` zeros at s = 0.
  std::vector<cd> analog_poles;
  for (const cd& p : proto) {
    const cd a = p * (bw / 2.0);
    const cd disc = std::sqrt(a * a - cd(w0 * w0, 0.0));
    analog_poles.push_back(a + disc);
    analog_poles.push_back(a - disc);
  }

  // Bilinear transform.  Gain: bw^order * fs2^order / prod(fs2 - s_i),
  // where the conjugate poles contribute the conjugate factors.
  std::vector<cd> zpoles;
  cd denom(1.0, 0.0);
  for (const cd& s : analog_poles) {
    zpoles.push_back((cd(fs2, 0.0) + s) / (cd(fs2, 0.0) - s));
    denom *= (cd(fs2, 0.0) - s) * (cd(fs2, 0.0) - std::conj(s));
  }
  double gain = 1.0;
  for (int k = 0; k < order; ++k) gain *= bw * fs2;
  gain /= denom.real();

  for (const cd& z : zpoles) {
    if (!(std::abs(z) < 1.0))
      throw numeric_error("filter: unstable design (pole outside unit circle)");
  }

  // Sections farthest from the unit circle first; gain folded into the
  // first section.  Each section takes one zero at +1 and one at -1.
  std::sort(zpoles.begin(), zpoles.end(), [](const cd& a, const cd& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma < mb;
    return a.real() < b.real();
  });

  std::vector<Sos> sos(zpoles.size());
  for (std::size_t i = 0; i < zpoles.size(); ++i) {
    const cd& z = zpoles[i];
    const double g = (i == 0) ? gain : 1.0;
    sos[i].b0 = g;
    sos[i].b1 = 0.0;
    sos[i].b2 = -g;
    sos[i].a1 = -2.0 * z.real();
    sos[i].a2 = std::norm(z);
  }
  return sos;
}

// Single-pass cascade, direct form II transposed.  `state` holds two
// values per section and is updated in place.
inline void sosfilt_inplace(const std::vector<Sos>& sos, std::vector<double>& x,
                            std::vector<std::array<double, 2>>& state) {
  for (std::size_t n = 0; n < x.size(); ++n) {
    double v = x[n];
    for (std::size_t s = 0; s < sos.size(); ++s) {
      const Sos& c = sos[s];
      auto& w = state[s];
      const double y = c.b0 * v + w[0];
      w[0] = c.b1 * v - c.a1 * y + w[1];
      w[1] = c.b2 * v - c.a2 * y;
      v = y;
    }
    x[n] = v;
  }
}

// Steady-state section states for a unit-amplitude constant input,
// used to suppress start-up transients.  Scale the result by the first
// sample before filtering.
inline std::vector<std::array<double, 2>> sos_steady_state(
    const std::vector<Sos>& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;  // DC gain accumulated through earlier sections
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Sos& c = sos[s];
    const double a_sum = 1.0 + c.a1 + c.a2;
    const double b_sum = c.b0 + c.b1 + c.b2;
    if (std::abs(a_sum) < 1e-300)
      throw numeric_error("filter: section has a pole at z = 1");
    const double dc = b_sum / a_sum;
    zi[s][0] = scale * ((c.b1 + c.b2) - (c.a1 + c.a2) * dc);
    zi[s][1] = scale * (c.b2 - c.a2 * dc);
    scale *= dc;
  }
  return zi;
}

namespace detail {

inline void run_padded_pass(const std::vector<Sos>& sos,
                            std::vector<double>& x) {
  auto zi = sos_steady_state(sos);
  for (auto& w : zi) {
    w[0] *= x[0];
    w[1] *= x[0];
  }
  sosfilt_inplace(sos, x, zi);
}

}  // namespace detail

// Zero-phase filtering: odd-symmetric extension of pad samples at each
// end, forward pass, time reversal, second pass, reversal, trim.
inline std::vector<double> sosfiltfilt(const std::vector<Sos>& sos,
                                       const std::vector<double>& x,
                                       std::size_t pad) {
  if (sos.empty()) throw config_error("filter: empty section list");
  if (x.size() <= pad)
    throw data_error("filter: signal must be longer than the edge padding");
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  const std::size_t n = x.size();
  for (std::size_t i = 2; i <= pad + 1; ++i)
    ext.push_back(2.0 * x.back() - x[n - i]);

  detail::run_padded_pass(sos, ext);
  std::reverse(ext.begin(), ext.end());
  detail::run_padded_pass(sos, ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

// Zero-phase Butterworth band-pass per channel.  Output length equals
// input length.
inline TimeSeries bandpass(const TimeSeries& ts, double lo_hz, double hi_hz,
                           int order = 4) {
  ts.validate();
  const auto sos = butter_bandpass(order, lo_hz, hi_hz, ts.fs);
  const std::size_t pad = static_cast<std::size_t>(3 * order);
  TimeSeries out;
  out.fs = ts.fs;
  out.labels = ts.labels;
  out.data.resize(ts.n_channels());
  for (std::size_t c = 0; c < ts.n_channels(); ++c)
    out.data[c] = sosfiltfilt(sos, ts.data[c], pad);
  return out;
}

}  // namespace eispec
