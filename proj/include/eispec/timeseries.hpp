#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eispec/common.hpp"

namespace eispec {

// Frequency band, half-open interval [lo, hi) in Hz.
struct Band {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double f) const { return f >= lo && f < hi; }
};

// Canonical analysis bands.  Half-open so adjacent bands partition the axis.
inline const std::vector<Band>& canonical_bands() {
  static const std::vector<Band> bands = {
      {"delta", 0.5, 4.0},  {"theta", 4.0, 8.0},  {"alpha", 8.0, 13.0},
      {"beta", 13.0, 30.0}, {"gamma", 30.0, 45.0}};
  return bands;
}

inline const Band& band_by_name(const std::string& name) {
  for (const auto& b : canonical_bands()) {
    if (b.name == name) return b;
  }
  throw config_error("timeseries: unknown band '" + name + "'");
}

// Standard 10-20 montage labels, row order used throughout.
inline const std::vector<std::string>& standard_channel_labels() {
  static const std::vector<std::string> labels = {
      "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
      "C4",  "T4",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2"};
  return labels;
}

// Multichannel signal, one row per channel, uniform sampling.
struct TimeSeries {
  std::vector<std::vector<double>> data;  // [channel][sample]
  double fs = 0.0;                        // Hz
  std::vector<std::string> labels;        // empty or one per channel

  std::size_t n_channels() const { return data.size(); }
  std::size_t n_samples() const { return data.empty() ? 0 : data[0].size(); }

  void validate() const {
    if (!(fs > 0.0)) throw data_error("timeseries: fs must be positive");
    if (data.empty()) throw data_error("timeseries: no channels");
    const std::size_t n = data[0].size();
    if (n == 0) throw data_error("timeseries: empty channel");
    for (std::size_t c = 0; c < data.size(); ++c) {
      if (data[c].size() != n)
        throw data_error("timeseries: ragged channel lengths");
      if (!all_finite(data[c]))
        throw data_error("timeseries: non-finite sample in channel " +
                         std::to_string(c));
    }
    if (!labels.empty() && labels.size() != data.size())
      throw data_error("timeseries: label count does not match channels");
  }

  const std::string& label(std::size_t c) const {
    static const std::string unnamed = "?";
    if (c < labels.size()) return labels[c];
    return unnamed;
  }
};

// Splits each channel into consecutive non-overlapping epochs of
// epoch_samples.  The tail shorter than one epoch is dropped.
inline std::vector<TimeSeries> split_epochs(const TimeSeries& ts,
                                            std::size_t epoch_samples) {
  ts.validate();
  if (epoch_samples == 0)
    throw config_error("timeseries: epoch length must be positive");
  const std::size_t n = ts.n_samples();
  const std::size_t n_epochs = n / epoch_samples;
  if (n_epochs == 0)
    throw data_error("timeseries: signal shorter than one epoch");
  std::vector<TimeSeries> out;
  out.reserve(n_epochs);
  for (std::size_t e = 0; e < n_epochs; ++e) {
    TimeSeries ep;
    ep.fs = ts.fs;
    ep.labels = ts.labels;
    ep.data.resize(ts.n_channels());
    const std::size_t off = e * epoch_samples;
    for (std::size_t c = 0; c < ts.n_channels(); ++c) {
      ep.data[c].assign(ts.data[c].begin() + static_cast<std::ptrdiff_t>(off),
                        ts.data[c].begin() +
                            static_cast<std::ptrdiff_t>(off + epoch_samples));
    }
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace eispec
