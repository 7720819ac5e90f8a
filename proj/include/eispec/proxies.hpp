#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/netsim.hpp"
#include "eispec/rng.hpp"
#include "eispec/spectrum.hpp"
#include "eispec/timeseries.hpp"
#include "eispec/welch.hpp"

namespace eispec {

// Clinical condition mapped to its inhibition ratio g = g_I/g_E.
struct Condition {
  std::string name;   // AD, MCI, HC
  double g_ratio = 0.0;
};

inline Condition condition_by_name(const std::string& name) {
  if (name == "AD") return {"AD", 2.5};
  if (name == "MCI") return {"MCI", 3.5};
  if (name == "HC") return {"HC", 6.5};
  throw config_error("proxies: unknown condition '" + name + "'");
}

// Band-specific functional-connectivity prior for structured wiring.
struct FcPrior {
  std::vector<std::vector<double>> matrix;  // [0,1], zero diagonal
  Band band;
  std::string source = "synthetic";  // or "empirical"

  std::size_t size() const { return matrix.size(); }

  void validate() const {
    const std::size_t n = matrix.size();
    if (n < 2) throw data_error("fcprior: need at least 2 regions");
    for (std::size_t i = 0; i < n; ++i) {
      if (matrix[i].size() != n) throw data_error("fcprior: not square");
      if (matrix[i][i] != 0.0)
        throw data_error("fcprior: diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        const double v = matrix[i][j];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
          throw data_error("fcprior: entry out of [0, 1]");
        if (std::abs(v - matrix[j][i]) > 1e-9)
          throw data_error("fcprior: not symmetric");
      }
    }
  }
};

// Bundled dataset-free prior: smooth distance-like structure with a
// band-dependent level plus deterministic jitter.
inline FcPrior synthetic_fc_prior(const Band& band, std::uint64_t seed,
                                  std::size_t n = 19) {
  FcPrior prior;
  prior.band = band;
  prior.source = "synthetic";
  prior.matrix.assign(n, std::vector<double>(n, 0.0));
  const double level = band.name == "alpha" ? 0.55 : 0.35;
  Rng rng(derive_seed(seed, 6));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = static_cast<double>(j - i);
      double v = level * std::exp(-d / 6.0) + 0.08 * rng.uniform01();
      v = std::min(1.0, std::max(0.0, v));
      prior.matrix[i][j] = v;
      prior.matrix[j][i] = v;
    }
  return prior;
}

// Model 1 proxy: mean membrane potential over the sampled neurons.
inline TimeSeries model1_signal(const Recordings& rec) {
  if (rec.vm.empty() || rec.n_samples() == 0)
    throw data_error("proxies: no membrane potentials recorded");
  TimeSeries ts;
  ts.fs = rec.fs;
  ts.labels = {"model1"};
  ts.data.assign(1, std::vector<double>(rec.n_samples(), 0.0));
  const double inv = 1.0 / static_cast<double>(rec.vm.size());
  for (const auto& row : rec.vm)
    for (std::size_t t = 0; t < row.size(); ++t) ts.data[0][t] += row[t] * inv;
  return ts;
}

// Model 2 proxy: population-averaged net synaptic current,
// <g_ex (V - E_ex)> - <g_in (V - E_in)>, in pA.
inline TimeSeries model2_signal(const Recordings& rec,
                                const NeuronParams& params) {
  if (rec.vm.empty() || rec.n_samples() == 0)
    throw data_error("proxies: no conductance samples recorded");
  const std::size_t nt = rec.n_samples();
  if (rec.g_ex.size() != rec.vm.size() || rec.g_in.size() != rec.vm.size())
    throw data_error("proxies: conductance/vm sample sets differ");
  for (std::size_t s = 0; s < rec.vm.size(); ++s)
    if (rec.g_ex[s].size() != nt || rec.g_in[s].size() != nt)
      throw data_error("proxies: conductance/vm cadence mismatch");

  TimeSeries ts;
  ts.fs = rec.fs;
  ts.labels = {"model2"};
  ts.data.assign(1, std::vector<double>(nt, 0.0));
  const double inv = 1.0 / static_cast<double>(rec.vm.size());
  for (std::size_t s = 0; s < rec.vm.size(); ++s) {
    for (std::size_t t = 0; t < nt; ++t) {
      const double i_ex = rec.g_ex[s][t] * (rec.vm[s][t] - params.E_ex);
      const double i_in = rec.g_in[s][t] * (rec.vm[s][t] - params.E_in);
      ts.data[0][t] += (i_ex - i_in) * inv;
    }
  }
  return ts;
}

// Welch settings tied to each proxy model.
struct ProxyWelch {
  std::size_t nperseg;
  double overlap;
  double fmin;
  double fmax;
};

inline ProxyWelch proxy_welch_settings(int model) {
  if (model == 1) return {4096, 0.75, 0.5, 40.0};
  if (model == 2) return {8192, 0.9375, 1.0, 40.0};
  throw config_error("proxies: model must be 1 or 2");
}

inline double proxy_sample_fraction(int model) {
  if (model == 1) return 0.20;  // vm from 20% of excitatory neurons
  if (model == 2) return 0.15;  // conductances from 15% of excitatory
  throw config_error("proxies: model must be 1 or 2");
}

namespace detail {

inline Spectrum proxy_spectrum_single(int model, const NetworkConfig& cfg,
                                      const Network& net) {
  const auto ids =
      select_excitatory_sample(net, proxy_sample_fraction(model), cfg.seed);
  const Recordings rec = simulate(net, cfg, ids);
  const TimeSeries ts = model == 1 ? model1_signal(rec)
                                   : model2_signal(rec, cfg.params);
  const auto w = proxy_welch_settings(model);
  return to_relative(
      welch_psd(ts.data[0], ts.fs, w.nperseg, w.overlap, w.fmin, w.fmax));
}

}  // namespace detail

// One condition's averaged relative spectrum: n_runs independent
// networks (derived seeds), each simulated and reduced to a relative
// proxy spectrum, then averaged pointwise and renormalized.
inline Spectrum run_condition(int model, const Condition& cond,
                              NetworkConfig cfg, std::size_t n_runs,
                              std::uint64_t seed,
                              const HeterogeneityConfig& het = {}) {
  if (n_runs < 1) throw config_error("proxies: n_runs must be >= 1");
  proxy_welch_settings(model);  // validates the model id
  cfg.g_ratio = cond.g_ratio;
  cfg.validate();
  Spectrum acc;
  for (std::size_t r = 0; r < n_runs; ++r) {
    NetworkConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(seed, r);
    Spectrum s;
    try {
      const Network net =
          heterogenize(build_random_network(run_cfg), het, run_cfg.seed);
      s = detail::proxy_spectrum_single(model, run_cfg, net);
    } catch (const eispec::error& e) {
      throw model_error("proxies: run " + std::to_string(r) +
                        " failed: " + e.what());
    }
    if (r == 0) {
      acc = s;
    } else {
      if (acc.freqs != s.freqs)
        throw numeric_error("proxies: run spectra grids differ");
      for (std::size_t i = 0; i < acc.size(); ++i) acc.power[i] += s.power[i];
    }
  }
  for (double& p : acc.power) p /= static_cast<double>(n_runs);
  return to_relative(acc);
}

// Wiring controls for the FC-structured network.
struct FcConfig {
  double p_inter = 0.05;    // baseline inter-subnetwork probability
  double fc_threshold = 0.0;  // pairs with FC <= threshold stay unwired
  std::size_t subnet_size = 21;
  int model = 2;  // proxy used by fc_condition_run
};

// 19 (prior-sized) independent random subnetworks plus excitatory
// projections between excitatory populations, with probability
// p_inter*FC_ab and weight g_E*FC_ab per ordered subnetwork pair.
inline Network build_fc_network(const FcPrior& prior, const NetworkConfig& cfg,
                                const FcConfig& fc = {}) {
  prior.validate();
  cfg.validate();
  const std::size_t n_sub = prior.size();
  const std::size_t sz = fc.subnet_size;

  Network net;
  net.params = cfg.params;
  NetworkConfig sub_cfg = cfg;
  sub_cfg.n_neurons = sz;
  for (std::size_t a = 0; a < n_sub; ++a) {
    sub_cfg.seed = derive_seed(cfg.seed, 10, a);
    const Network sub = build_random_network(sub_cfg);
    const std::uint32_t off = static_cast<std::uint32_t>(net.size());
    for (std::size_t i = 0; i < sub.size(); ++i) {
      net.excitatory.push_back(sub.excitatory[i]);
      net.v_th.push_back(sub.v_th[i]);
      net.v_init.push_back(sub.v_init[i]);
      net.subnet.push_back(static_cast<std::uint32_t>(a));
      net.targets.push_back({});
      for (const auto& [tgt, w] : sub.targets[i])
        net.targets.back().emplace_back(off + tgt, w);
    }
  }

  // excitatory index lists per subnetwork
  std::vector<std::vector<std::uint32_t>> exc(n_sub);
  for (std::size_t i = 0; i < net.size(); ++i)
    if (net.excitatory[i])
      exc[net.subnet[i]].push_back(static_cast<std::uint32_t>(i));

  Rng rng(derive_seed(cfg.seed, 5));
  for (std::size_t a = 0; a < n_sub; ++a) {
    for (std::size_t b = 0; b < n_sub; ++b) {
      if (a == b) continue;
      const double fc_ab = prior.matrix[a][b];
      if (!(fc_ab > fc.fc_threshold)) continue;
      const double p = fc.p_inter * fc_ab;
      const double w = cfg.g_E * fc_ab;
      for (std::uint32_t i : exc[a])
        for (std::uint32_t j : exc[b])
          if (rng.bernoulli(p)) net.targets[i].emplace_back(j, w);
    }
  }
  return net;
}

// Synapses whose endpoints lie in different subnetworks.
inline std::size_t inter_subnet_synapse_count(const Network& net) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < net.size(); ++i)
    for (const auto& [tgt, w] : net.targets[i]) {
      (void)w;
      if (net.subnet[i] != net.subnet[tgt]) ++k;
    }
  return k;
}

// True if any inter-subnetwork synapse originates from an inhibitory
// neuron or lands on one (the FC wiring contract forbids both).
inline bool has_invalid_inter_subnet_synapse(const Network& net) {
  for (std::size_t i = 0; i < net.size(); ++i)
    for (const auto& [tgt, w] : net.targets[i]) {
      (void)w;
      if (net.subnet[i] == net.subnet[tgt]) continue;
      if (!net.excitatory[i] || !net.excitatory[tgt]) return true;
    }
  return false;
}

// Band-restricted spectrum stitching: simulate each band's FC network,
// keep that band's [lo, hi) bins of the proxy spectrum, concatenate in
// ascending order, renormalize.
inline Spectrum fc_condition_run(
    const std::map<std::string, FcPrior>& priors, const Condition& cond,
    NetworkConfig cfg, const FcConfig& fc, std::uint64_t seed,
    const std::vector<std::string>& bands = {"delta", "theta", "alpha",
                                             "beta", "gamma"},
    bool share_seed_across_bands = false,
    const HeterogeneityConfig& het = {}) {
  if (bands.empty()) throw config_error("proxies: no bands to simulate");
  cfg.g_ratio = cond.g_ratio;
  const auto w = proxy_welch_settings(fc.model);

  Spectrum composite;
  double last_f = -1.0;
  for (std::size_t bi = 0; bi < bands.size(); ++bi) {
    const Band& band = band_by_name(bands[bi]);
    auto it = priors.find(band.name);
    if (it == priors.end())
      throw config_error("proxies: missing FC prior for band '" + band.name +
                         "'");
    NetworkConfig band_cfg = cfg;
    band_cfg.seed = share_seed_across_bands ? seed : derive_seed(seed, bi);
    Network net = heterogenize(build_fc_network(it->second, band_cfg, fc), het,
                               band_cfg.seed);
    Spectrum s;
    try {
      s = detail::proxy_spectrum_single(fc.model, band_cfg, net);
    } catch (const eispec::error& e) {
      throw model_error("proxies: band '" + band.name +
                        "' run failed: " + e.what());
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!band.contains(s.freqs[i])) continue;
      if (!(s.freqs[i] > last_f))
        throw numeric_error("proxies: stitched segments overlap");
      composite.freqs.push_back(s.freqs[i]);
      composite.power.push_back(s.power[i]);
      last_f = s.freqs[i];
    }
  }
  if (composite.freqs.empty())
    throw data_error("proxies: stitching kept no bins");
  return to_relative(composite);
}

}  // namespace eispec
