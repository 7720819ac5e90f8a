#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/timeseries.hpp"

namespace eispec {

// Power spectrum on an ascending frequency grid.  When normalized is set
// the power values are relative (unitless, summing to 1 over the grid);
// otherwise they are a density in units^2/Hz.
struct Spectrum {
  std::vector<double> freqs;  // Hz, strictly ascending
  std::vector<double> power;  // >= 0, same length as freqs
  bool normalized = false;

  std::size_t size() const { return freqs.size(); }

  void validate() const {
    if (freqs.size() != power.size())
      throw data_error("spectrum: freqs/power length mismatch");
    if (freqs.empty()) throw data_error("spectrum: empty");
    if (!all_finite(freqs) || !all_finite(power))
      throw data_error("spectrum: non-finite value");
    for (std::size_t i = 1; i < freqs.size(); ++i) {
      if (!(freqs[i] > freqs[i - 1]))
        throw data_error("spectrum: freqs not strictly ascending");
    }
    for (double p : power) {
      if (p < 0.0) throw data_error("spectrum: negative power");
    }
  }

  // Restricts to bins with lo <= f <= hi (closed: a display/fit range,
  // not a partition).  Errors if nothing survives.
  Spectrum slice(double lo, double hi) const {
    validate();
    Spectrum out;
    out.normalized = normalized;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      if (freqs[i] >= lo && freqs[i] <= hi) {
        out.freqs.push_back(freqs[i]);
        out.power.push_back(power[i]);
      }
    }
    if (out.freqs.empty())
      throw data_error("spectrum: slice [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "] contains no bins");
    return out;
  }
};

// Normalizes power to sum 1 over the retained grid.  Idempotent:
// re-normalizing an already relative spectrum is a no-op up to rounding.
inline Spectrum to_relative(const Spectrum& s) {
  s.validate();
  double total = 0.0;
  for (double p : s.power) total += p;
  if (total <= 0.0)
    throw numeric_error("spectrum: total power is zero, cannot normalize");
  Spectrum out = s;
  for (double& p : out.power) p /= total;
  out.normalized = true;
  return out;
}

// Sum of relative power over band [lo, hi).  Input may be absolute;
// it is normalized over its own grid first.
inline double band_power(const Spectrum& s, const Band& band) {
  const Spectrum rel = s.normalized ? s : to_relative(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (band.contains(rel.freqs[i])) acc += rel.power[i];
  }
  return acc;
}

}  // namespace eispec
