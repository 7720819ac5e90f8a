#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "eispec/classify.hpp"
#include "eispec/common.hpp"
#include "eispec/fft.hpp"
#include "eispec/filter.hpp"
#include "eispec/io.hpp"
#include "eispec/rng.hpp"
#include "eispec/timeseries.hpp"

namespace eispec {

// Group-wise generator settings for synthetic EEG.  HC carries the
// steeper aperiodic exponent and the stronger alpha rhythm; coupling
// mixes one shared narrowband source into every channel.
struct SynthProfile {
  double chi_ad = 1.2;
  double chi_hc = 2.0;
  double alpha_power_ad = 0.2;   // alpha component SD relative to background
  double alpha_power_hc = 0.5;
  double coupling = 0.0;         // shared-source mixing weight in [0, 1]
  double chi_jitter = 0.05;      // per-subject uniform jitter on chi
  double power_jitter = 0.1;     // relative jitter on alpha power
  double fs = 500.0;
  std::size_t n_channels = 19;
  std::size_t n_samples = 60000;  // 120 s at 500 Hz

  void validate() const {
    for (double v : {chi_ad, chi_hc, alpha_power_ad, alpha_power_hc, coupling,
                     chi_jitter, power_jitter, fs})
      if (!std::isfinite(v)) throw config_error("synth: non-finite profile");
    if (chi_ad < 0.0 || chi_hc < 0.0)
      throw config_error("synth: exponents must be non-negative");
    if (alpha_power_ad < 0.0 || alpha_power_hc < 0.0)
      throw config_error("synth: alpha power must be non-negative");
    if (coupling < 0.0 || coupling > 1.0)
      throw config_error("synth: coupling must be in [0, 1]");
    if (chi_jitter < 0.0 || power_jitter < 0.0 || power_jitter >= 1.0)
      throw config_error("synth: invalid jitter");
    if (!(fs > 0.0)) throw config_error("synth: fs must be positive");
    if (n_channels < 2) throw config_error("synth: need >= 2 channels");
    if (n_samples < 1000) throw config_error("synth: need >= 1000 samples");
  }
};

namespace detail {

// Gaussian white noise spectrally reshaped to amplitude f^(-chi/2),
// i.e. power 1/f^chi, then scaled to unit standard deviation.
inline std::vector<double> shaped_noise(std::size_t n, double fs, double chi,
                                        Rng& rng) {
  std::vector<std::complex<double>> white(n);
  for (auto& v : white) v = {rng.normal(), 0.0};
  std::vector<std::complex<double>> spec = fft(white);
  spec[0] = 0.0;  // no DC
  for (std::size_t k = 1; k < n; ++k) {
    const double f = (k <= n / 2 ? static_cast<double>(k)
                                 : static_cast<double>(n - k)) *
                     fs / static_cast<double>(n);
    spec[k] *= std::pow(f, -chi / 2.0);
  }
  const std::vector<std::complex<double>> shaped = ifft(spec);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = shaped[i].real();
  const double sd = stddev_of(x);
  if (!(sd > 0.0)) throw numeric_error("synth: degenerate shaped noise");
  for (double& v : x) v /= sd;
  return x;
}

// Unit-SD narrowband alpha process (8-13 Hz filtered noise); phase
// evolves stochastically, so independent draws stay phase-incoherent.
inline std::vector<double> alpha_process(std::size_t n, double fs, Rng& rng) {
  std::vector<double> white(n);
  for (auto& v : white) v = rng.normal();
  const auto sos = butter_bandpass(4, 8.0, 13.0, fs);
  std::vector<double> x = sosfiltfilt(sos, white, 12);
  const double sd = stddev_of(x);
  if (!(sd > 0.0)) throw numeric_error("synth: degenerate alpha process");
  for (double& v : x) v /= sd;
  return x;
}

}  // namespace detail

// One subject's 19-channel signal: per-channel shaped background plus
// its own alpha component, plus the shared coupled source.
inline TimeSeries synth_subject(double chi, double alpha_power,
                                const SynthProfile& profile,
                                std::uint64_t seed) {
  profile.validate();
  if (!(std::isfinite(chi)) || chi < 0.0 || alpha_power < 0.0)
    throw config_error("synth: invalid subject parameters");
  TimeSeries ts;
  ts.fs = profile.fs;
  ts.labels.assign(standard_channel_labels().begin(),
                   standard_channel_labels().begin() +
                       static_cast<std::ptrdiff_t>(profile.n_channels));
  ts.data.resize(profile.n_channels);

  Rng shared_rng(derive_seed(seed, 1));
  const std::vector<double> shared =
      detail::alpha_process(profile.n_samples, profile.fs, shared_rng);

  for (std::size_t c = 0; c < profile.n_channels; ++c) {
    Rng rng(derive_seed(seed, 2, c));
    std::vector<double> x =
        detail::shaped_noise(profile.n_samples, profile.fs, chi, rng);
    const std::vector<double> alpha =
        detail::alpha_process(profile.n_samples, profile.fs, rng);
    for (std::size_t i = 0; i < profile.n_samples; ++i)
      x[i] += alpha_power * alpha[i] + profile.coupling * shared[i];
    ts.data[c] = std::move(x);
  }
  ts.validate();
  return ts;
}

struct SynthEeg {
  Manifest manifest;  // paths are "<subject_id>.csv", relative
  std::vector<TimeSeries> signals;
};

// Two balanced groups of synthetic subjects with per-subject jitter on
// the group profile.  Deterministic in the seed.
inline SynthEeg synth_eeg(std::size_t n_per_group,
                          const SynthProfile& profile, std::uint64_t seed) {
  profile.validate();
  if (n_per_group == 0) throw config_error("synth: need n_per_group >= 1");
  SynthEeg out;
  std::size_t index = 0;
  for (int g = 0; g < 2; ++g) {
    const GroupLabel group = g == 0 ? GroupLabel::AD : GroupLabel::HC;
    const double chi0 = g == 0 ? profile.chi_ad : profile.chi_hc;
    const double pow0 = g == 0 ? profile.alpha_power_ad
                               : profile.alpha_power_hc;
    for (std::size_t s = 0; s < n_per_group; ++s, ++index) {
      char id[32];
      std::snprintf(id, sizeof(id), "synth-%s-%02zu", to_string(group).c_str(),
                    s);
      Rng jitter(derive_seed(seed, 60, index));
      const double chi =
          std::max(0.0, chi0 + jitter.uniform(-profile.chi_jitter,
                                              profile.chi_jitter));
      const double apow =
          pow0 * (1.0 + jitter.uniform(-profile.power_jitter,
                                       profile.power_jitter));
      out.signals.push_back(
          synth_subject(chi, apow, profile, derive_seed(seed, 61, index)));

      ManifestEntry e;
      e.subject_id = id;
      e.group = group;
      e.path = std::string(id) + ".csv";
      e.fs = profile.fs;
      e.channels = out.signals.back().labels;
      out.manifest.entries.push_back(std::move(e));
    }
  }
  out.manifest.validate();
  return out;
}

// ---------------------------------------------------------------------
// bundled feature-level dataset for classifier acceptance
// ---------------------------------------------------------------------

// Name of the single strongest discriminative column planted into the
// bundled dataset (global alpha synchrony, higher in HC).
inline const std::string& planted_feature_name() {
  static const std::string name = "plvmean_alpha";
  return name;
}

// Feature table over the standard layout: most columns are noise;
// aperiodic exponents and alpha powers separate the groups (HC steeper
// and stronger, as in the EEG signature), and one planted column
// separates them strongly.  Subject-level offsets make subject-disjoint
// validation meaningful.
inline Dataset synth_feature_dataset(std::size_t n_per_group,
                                     std::size_t epochs_per_subject,
                                     std::uint64_t seed) {
  if (n_per_group < 5 || epochs_per_subject == 0)
    throw config_error("synth: need >= 5 subjects per group, >= 1 epoch");
  Dataset d;
  d.feature_names =
      feature_layout_names(standard_channel_labels(), FeatureConfig{});
  const std::size_t F = d.feature_names.size();

  std::size_t planted = F, first_aperiodic = F, first_alpha = F;
  for (std::size_t j = 0; j < F; ++j) {
    const std::string& n = d.feature_names[j];
    if (n == planted_feature_name()) planted = j;
    if (first_aperiodic == F && n.rfind("aperiodic_", 0) == 0)
      first_aperiodic = j;
    if (first_alpha == F && n.rfind("relpow_alpha_", 0) == 0) first_alpha = j;
  }
  if (planted == F || first_aperiodic == F || first_alpha == F)
    throw model_error("synth: feature layout misses expected columns");

  std::size_t index = 0;
  for (int g = 0; g < 2; ++g) {
    const GroupLabel group = g == 0 ? GroupLabel::AD : GroupLabel::HC;
    for (std::size_t s = 0; s < n_per_group; ++s, ++index) {
      char id[32];
      std::snprintf(id, sizeof(id), "feat-%s-%02zu", to_string(group).c_str(),
                    s);
      Rng srng(derive_seed(seed, 70, index));
      // subject-level trait offsets around the group means
      const double subj_exp =
          (group == GroupLabel::HC ? 2.0 : 1.6) + 0.12 * srng.normal();
      const double subj_alpha =
          (group == GroupLabel::HC ? 0.45 : 0.35) + 0.04 * srng.normal();
      const double subj_planted =
          (group == GroupLabel::HC ? 0.70 : 0.40) + 0.03 * srng.normal();
      const double subj_noise = srng.normal();

      for (std::size_t e = 0; e < epochs_per_subject; ++e) {
        Rng erng(derive_seed(seed, 71, index * 10000 + e));
        std::vector<double> row(F);
        for (std::size_t j = 0; j < F; ++j)
          row[j] = 0.3 * subj_noise + erng.normal();
        for (std::size_t c = 0; c < 19; ++c) {
          row[first_aperiodic + c] = subj_exp + 0.25 * erng.normal();
          row[first_alpha + c] = subj_alpha + 0.08 * erng.normal();
        }
        row[planted] = subj_planted + 0.05 * erng.normal();
        d.x.push_back(std::move(row));
        d.y.push_back(group == GroupLabel::AD ? 1 : 0);
        d.subject.push_back(id);
      }
    }
  }
  d.validate();
  return d;
}

}  // namespace eispec
