#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/filter.hpp"
#include "eispec/hilbert.hpp"
#include "eispec/spectrum.hpp"
#include "eispec/timeseries.hpp"
#include "eispec/welch.hpp"

namespace eispec {

enum class GroupLabel { HC = 0, AD = 1 };

inline std::string to_string(GroupLabel g) {
  return g == GroupLabel::HC ? "HC" : "AD";
}

inline GroupLabel group_label_from_string(const std::string& s) {
  if (s == "HC") return GroupLabel::HC;
  if (s == "AD") return GroupLabel::AD;
  throw config_error("features: unknown group label '" + s + "'");
}

// Symmetric connectivity matrix with unit diagonal, entries in [0, 1].
struct ConnMatrix {
  std::vector<std::vector<double>> values;
  Band band;
  std::string subject_id;

  std::size_t size() const { return values.size(); }

  void validate() const {
    const std::size_t n = values.size();
    if (n < 2) throw data_error("connmatrix: need at least 2 nodes");
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i].size() != n) throw data_error("connmatrix: not square");
      if (std::abs(values[i][i] - 1.0) > 1e-9)
        throw data_error("connmatrix: diagonal must be 1");
      for (std::size_t j = 0; j < n; ++j) {
        const double v = values[i][j];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
          throw data_error("connmatrix: entry out of [0, 1]");
        if (std::abs(v - values[j][i]) > 1e-9)
          throw data_error("connmatrix: not symmetric");
      }
    }
  }

  double off_diagonal_mean(std::size_t row) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < size(); ++j)
      if (j != row) acc += values[row][j];
    return acc / static_cast<double>(size() - 1);
  }
};

// Aperiodic (1/f) component of a power spectrum in log-log space.
struct AperiodicFit {
  double offset = 0.0;    // intercept, log10 power units
  double exponent = 0.0;  // negated slope; steeper decay -> larger value
  double fit_lo_hz = 0.0;
  double fit_hi_hz = 0.0;
  double r_squared = 0.0;
};

// Sum of relative power within [band.lo, band.hi).
inline double band_relative_power(const Spectrum& spec, const Band& band) {
  spec.validate();
  if (!spec.normalized)
    throw data_error("features: spectrum must be normalized (relative power)");
  bool any = false;
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (band.contains(spec.freqs[i])) {
      acc += spec.power[i];
      any = true;
    }
  }
  if (!any)
    throw data_error("features: band '" + band.name +
                     "' covers no spectrum bins");
  return acc;
}

// Sample standard deviation (n-1 denominator) of a single channel.
inline double channel_std(const std::vector<double>& x) {
  if (x.size() < 2) throw data_error("features: need at least 2 samples");
  return stddev_of(x);
}

inline double channel_std(const TimeSeries& ts_1ch) {
  ts_1ch.validate();
  if (ts_1ch.n_channels() != 1)
    throw data_error("features: channel_std expects one channel");
  return channel_std(ts_1ch.data[0]);
}

// Phase-locking value matrix over one band.  Channels are band-passed,
// phases extracted via the analytic signal, and each pair scored as the
// magnitude of the time-averaged unit phase-difference phasor.  The
// average skips edge_frac of the samples at each end: filter and Hilbert
// edge transients otherwise contaminate the phase estimate.
inline ConnMatrix plv(const TimeSeries& ts, const Band& band,
                      int filter_order = 4, double edge_frac = 0.1,
                      const std::string& subject_id = "") {
  ts.validate();
  if (ts.n_channels() < 2) throw data_error("plv: need at least 2 channels");
  if (static_cast<double>(ts.n_samples()) < ts.fs)
    throw data_error("plv: need at least 1 second of samples");
  if (!(edge_frac >= 0.0 && edge_frac < 0.5))
    throw config_error("plv: edge_frac must be in [0, 0.5)");

  const TimeSeries filtered = bandpass(ts, band.lo, band.hi, filter_order);
  const std::size_t nc = ts.n_channels();
  const std::size_t nt = ts.n_samples();
  const std::size_t margin =
      static_cast<std::size_t>(edge_frac * static_cast<double>(nt));
  const std::size_t t0 = margin, t1 = nt - margin;

  std::vector<std::vector<std::complex<double>>> phasors(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    if (stddev_of(filtered.data[c]) < 1e-12)
      throw data_error("plv: channel '" + ts.label(c) +
                       "' is flat in band '" + band.name +
                       "', phase undefined");
    const auto a = analytic_signal(filtered.data[c]);
    phasors[c].resize(nt);
    for (std::size_t t = t0; t < t1; ++t) {
      const double mag = std::abs(a[t]);
      if (mag < 1e-300)
        throw data_error("plv: channel '" + ts.label(c) +
                         "' has zero analytic magnitude, phase undefined");
      phasors[c][t] = a[t] / mag;
    }
  }

  ConnMatrix cm;
  cm.band = band;
  cm.subject_id = subject_id;
  cm.values.assign(nc, std::vector<double>(nc, 0.0));
  for (std::size_t i = 0; i < nc; ++i) {
    cm.values[i][i] = 1.0;
    for (std::size_t j = i + 1; j < nc; ++j) {
      std::complex<double> acc(0.0, 0.0);
      for (std::size_t t = t0; t < t1; ++t)
        acc += phasors[i][t] * std::conj(phasors[j][t]);
      const double v = std::min(1.0, std::abs(acc) /
                                          static_cast<double>(t1 - t0));
      cm.values[i][j] = v;
      cm.values[j][i] = v;
    }
  }
  return cm;
}

// Two-pass robust log-log fit of the aperiodic component: ordinary least
// squares, exclusion of bins whose residual exceeds one standard
// deviation above zero (putative oscillatory peaks), one refit.
inline AperiodicFit fit_aperiodic(const Spectrum& spec, double fit_lo,
                                  double fit_hi) {
  spec.validate();
  if (!(fit_lo > 0.0 && fit_lo < fit_hi))
    throw config_error("features: fit range must satisfy 0 < lo < hi");

  std::vector<double> lf, lp;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double f = spec.freqs[i];
    if (f < fit_lo || f > fit_hi) continue;
    if (!(spec.power[i] > 0.0))
      throw data_error("features: non-positive power inside fit range");
    lf.push_back(std::log10(f));
    lp.push_back(std::log10(spec.power[i]));
  }
  if (lf.size() < 10)
    throw stats_error("features: fewer than 10 bins in aperiodic fit range");

  auto ols = [](const std::vector<double>& xs, const std::vector<double>& ys,
                double& slope, double& intercept) {
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30)
      throw stats_error("features: degenerate frequency grid in fit");
    slope = (n * sxy - sx * sy) / denom;
    intercept = (sy - slope * sx) / n;
  };

  double slope = 0.0, intercept = 0.0;
  ols(lf, lp, slope, intercept);

  std::vector<double> resid(lf.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < lf.size(); ++i) {
    resid[i] = lp[i] - (intercept + slope * lf[i]);
    ss += resid[i] * resid[i];
  }
  const double sd = std::sqrt(ss / static_cast<double>(lf.size()));

  std::vector<double> lf2, lp2;
  for (std::size_t i = 0; i < lf.size(); ++i) {
    if (resid[i] <= sd) {
      lf2.push_back(lf[i]);
      lp2.push_back(lp[i]);
    }
  }
  if (lf2.size() < 10)
    throw stats_error("features: fewer than 10 usable bins after peak "
                      "exclusion");
  ols(lf2, lp2, slope, intercept);

  double ss_res = 0.0, ss_tot = 0.0;
  const double my = mean_of(lp2);
  for (std::size_t i = 0; i < lf2.size(); ++i) {
    const double pred = intercept + slope * lf2[i];
    ss_res += (lp2[i] - pred) * (lp2[i] - pred);
    ss_tot += (lp2[i] - my) * (lp2[i] - my);
  }

  AperiodicFit fit;
  fit.offset = intercept;
  fit.exponent = -slope;
  fit.fit_lo_hz = fit_lo;
  fit.fit_hi_hz = fit_hi;
  fit.r_squared = ss_tot < 1e-30
                      ? 1.0
                      : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return fit;
}

// Settings for per-epoch feature extraction.
struct FeatureConfig {
  std::size_t welch_nperseg = 256;
  double welch_overlap = 0.5;
  double spec_lo_hz = 0.5;
  double spec_hi_hz = 45.0;
  double fit_lo_hz = 1.0;
  double fit_hi_hz = 40.0;
  int filter_order = 4;
  std::vector<std::string> degree_bands = {"theta", "alpha", "beta"};
};

// Fixed-length per-epoch feature vector with a named layout.
struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
  GroupLabel label = GroupLabel::HC;
  std::string subject_id;
  std::size_t epoch_index = 0;

  void validate() const {
    if (values.size() != names.size())
      throw data_error("features: layout/value length mismatch");
    if (!all_finite(values))
      throw data_error("features: non-finite feature value");
  }
};

// Layout names for a given channel set: 5 bands x channels relative
// power, per-channel std, per-channel aperiodic exponent, per-channel
// PLV degree in the configured degree bands, then mean/max PLV per band.
inline std::vector<std::string> feature_layout_names(
    const std::vector<std::string>& channels, const FeatureConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& b : canonical_bands())
    for (const auto& ch : channels) names.push_back("relpow_" + b.name + "_" + ch);
  for (const auto& ch : channels) names.push_back("std_" + ch);
  for (const auto& ch : channels) names.push_back("aperiodic_" + ch);
  for (const auto& bname : cfg.degree_bands)
    for (const auto& ch : channels)
      names.push_back("plvdeg_" + bname + "_" + ch);
  for (const auto& b : canonical_bands()) names.push_back("plvmean_" + b.name);
  for (const auto& b : canonical_bands()) names.push_back("plvmax_" + b.name);
  return names;
}

// Deterministic assembly of one epoch's features.  `fcs` maps band name
// to the connectivity matrix used for PLV-derived features (computed on
// the epoch or the whole recording, per caller policy).
inline FeatureVector assemble_features(
    const TimeSeries& epoch, const std::map<std::string, ConnMatrix>& fcs,
    const FeatureConfig& cfg = FeatureConfig{}) {
  epoch.validate();
  const std::size_t nc = epoch.n_channels();
  const std::vector<std::string> channels =
      epoch.labels.empty()
          ? [&] {
              std::vector<std::string> v;
              for (std::size_t c = 0; c < nc; ++c)
                v.push_back("ch" + std::to_string(c));
              return v;
            }()
          : epoch.labels;

  for (const auto& b : canonical_bands()) {
    auto it = fcs.find(b.name);
    if (it == fcs.end())
      throw config_error("features: missing connectivity matrix for band '" +
                         b.name + "'");
    it->second.validate();
    if (it->second.size() != nc)
      throw config_error("features: connectivity size does not match epoch");
  }

  const std::size_t nperseg = std::min<std::size_t>(cfg.welch_nperseg,
                                                    epoch.n_samples());
  std::vector<Spectrum> rel(nc);
  for (std::size_t c = 0; c < nc; ++c)
    rel[c] = to_relative(welch_psd(epoch.data[c], epoch.fs, nperseg,
                                   cfg.welch_overlap, cfg.spec_lo_hz,
                                   cfg.spec_hi_hz));

  FeatureVector fv;
  fv.names = feature_layout_names(channels, cfg);
  fv.values.reserve(fv.names.size());

  for (const auto& b : canonical_bands())
    for (std::size_t c = 0; c < nc; ++c)
      fv.values.push_back(band_relative_power(rel[c], b));
  for (std::size_t c = 0; c < nc; ++c)
    fv.values.push_back(channel_std(epoch.data[c]));
  for (std::size_t c = 0; c < nc; ++c)
    fv.values.push_back(
        fit_aperiodic(rel[c], cfg.fit_lo_hz, cfg.fit_hi_hz).exponent);
  for (const auto& bname : cfg.degree_bands) {
    const ConnMatrix& cm = fcs.at(bname);
    for (std::size_t c = 0; c < nc; ++c)
      fv.values.push_back(cm.off_diagonal_mean(c));
  }
  for (const auto& b : canonical_bands()) {
    const ConnMatrix& cm = fcs.at(b.name);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t j = i + 1; j < nc; ++j) {
        acc += cm.values[i][j];
        ++cnt;
      }
    fv.values.push_back(acc / static_cast<double>(cnt));
  }
  for (const auto& b : canonical_bands()) {
    const ConnMatrix& cm = fcs.at(b.name);
    double mx = 0.0;
    for (std::size_t i = 0; i < nc; ++i)
      for (std::size_t j = i + 1; j < nc; ++j)
        mx = std::max(mx, cm.values[i][j]);
    fv.values.push_back(mx);
  }

  fv.validate();
  return fv;
}

}  // namespace eispec
