#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/rng.hpp"

namespace eispec {

// Single-neuron constants.  Units: ms, mV, pF, nS, pA throughout, so
// g*(V - E) is directly in pA and C*dV/dt in pA as well.
struct NeuronParams {
  double tau_m = 20.0;      // ms
  double E_L = -60.0;       // mV
  double V_th = -50.0;      // mV
  double V_reset = -60.0;   // mV
  double t_ref = 5.0;       // ms
  double C_m = 200.0;       // pF
  double E_ex = 0.0;        // mV
  double E_in = -80.0;      // mV
  double tau_syn_ex = 5.0;  // ms
  double tau_syn_in = 10.0; // ms

  double g_leak() const { return C_m / tau_m; }  // nS

  void validate() const {
    if (!(tau_m > 0.0 && tau_syn_ex > 0.0 && tau_syn_in > 0.0 && t_ref >= 0.0))
      throw config_error("netsim: time constants must be positive");
    if (!(C_m > 0.0)) throw config_error("netsim: C_m must be positive");
    if (!(V_reset <= E_L && E_L < V_th))
      throw config_error("netsim: need V_reset <= E_L < V_th");
    if (!(E_in < E_L && E_L < E_ex))
      throw config_error("netsim: need E_in < E_L < E_ex");
  }
};

struct NetworkConfig {
  std::size_t n_neurons = 400;
  double frac_excitatory = 0.8;
  double p_connect = 0.2;
  double g_E = 2.0;          // nS, excitatory synaptic weight
  double g_ratio = 6.5;      // g_I = g_ratio * g_E
  // Hz Poisson drive per neuron.  Calibrated with the default 2 mV
  // threshold spread: g_ratio = 2.5 runs hot but desynchronized,
  // g_ratio = 6.5 stays sparse (sub-Hz), and rates fall monotonically
  // with g_ratio in between.
  double drive_rate = 30.0;
  double drive_rate_jitter_frac = 0.0;  // per-neuron rate spread, off by default
  double duration_ms = 61000.0;  // total, including warmup
  double warmup_ms = 1000.0;
  double dt_ms = 0.1;
  double delay_ms = 1.5;
  double tonic_current_pA = 0.0;  // constant injected current, for testing
  std::uint64_t seed = 0;
  NeuronParams params;

  void validate() const {
    params.validate();
    if (n_neurons == 0) throw config_error("netsim: need at least one neuron");
    if (!(frac_excitatory >= 0.0 && frac_excitatory <= 1.0))
      throw config_error("netsim: frac_excitatory must be in [0, 1]");
    if (!(p_connect >= 0.0 && p_connect <= 1.0))
      throw config_error("netsim: p_connect must be in [0, 1]");
    if (!(g_E >= 0.0)) throw config_error("netsim: g_E must be >= 0");
    if (!(g_ratio > 0.0)) throw config_error("netsim: g_ratio must be > 0");
    if (!(dt_ms > 0.0)) throw config_error("netsim: dt must be positive");
    if (!(delay_ms >= dt_ms))
      throw config_error("netsim: delay must be at least one step");
    if (!(warmup_ms >= 0.0 && warmup_ms < duration_ms))
      throw config_error("netsim: need 0 <= warmup < duration");
    if (drive_rate < 0.0) throw config_error("netsim: drive rate must be >= 0");
    // per-step Bernoulli approximation of the Poisson drive
    if (drive_rate * dt_ms / 1000.0 > 0.1)
      throw config_error("netsim: rate*dt > 0.1, Bernoulli approximation "
                         "invalid");
  }

  std::size_t n_excitatory() const {
    return static_cast<std::size_t>(
        std::lround(frac_excitatory * static_cast<double>(n_neurons)));
  }
};

// Directed synapse table plus per-neuron state templates.  Weights in
// nS; a presynaptic neuron's type decides which conductance its
// synapses feed (excitatory -> g_ex, inhibitory -> g_in).
struct Network {
  NeuronParams params;
  std::vector<std::uint8_t> excitatory;  // 1 = excitatory
  std::vector<std::vector<std::pair<std::uint32_t, double>>> targets;
  std::vector<double> v_th;       // per neuron, jitterable
  std::vector<double> v_init;     // per neuron
  std::vector<std::uint32_t> subnet;  // subnetwork id, 0 for plain nets

  std::size_t size() const { return excitatory.size(); }

  std::size_t n_excitatory() const {
    std::size_t k = 0;
    for (auto e : excitatory) k += e;
    return k;
  }

  std::size_t n_synapses() const {
    std::size_t k = 0;
    for (const auto& t : targets) k += t.size();
    return k;
  }
};

// Randomly wired E/I network: the first round(frac*n) neurons are
// excitatory; every ordered pair (i, j), i != j, connects independently
// with probability p.  Deterministic from cfg.seed.
inline Network build_random_network(const NetworkConfig& cfg) {
  cfg.validate();
  Network net;
  net.params = cfg.params;
  const std::size_t n = cfg.n_neurons;
  const std::size_t n_exc = cfg.n_excitatory();
  net.excitatory.assign(n, 0);
  for (std::size_t i = 0; i < n_exc; ++i) net.excitatory[i] = 1;
  net.v_th.assign(n, cfg.params.V_th);
  net.v_init.assign(n, cfg.params.E_L);
  net.subnet.assign(n, 0);
  net.targets.assign(n, {});

  const double g_I = cfg.g_ratio * cfg.g_E;
  Rng rng(derive_seed(cfg.seed, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const double w = net.excitatory[i] ? cfg.g_E : g_I;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (rng.bernoulli(cfg.p_connect))
        net.targets[i].emplace_back(static_cast<std::uint32_t>(j), w);
    }
  }
  return net;
}

struct HeterogeneityConfig {
  bool randomize_v_init = true;  // uniform in [V_reset, V_th]
  double v_th_sigma_mv = 2.0;    // zero-mean Gaussian threshold jitter
};

// Per-neuron heterogeneity: initial potentials spread over the
// subthreshold range, thresholds jittered around V_th.  Jittered
// thresholds are clamped to stay above V_reset so the reset always
// re-arms the neuron.
inline Network heterogenize(Network net, const HeterogeneityConfig& het,
                            std::uint64_t seed) {
  if (het.v_th_sigma_mv < 0.0)
    throw config_error("netsim: threshold jitter must be >= 0");
  Rng rng(derive_seed(seed, 1));
  const NeuronParams& p = net.params;
  const double v_th_floor = p.V_reset + 0.1;
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (het.v_th_sigma_mv > 0.0) {
      net.v_th[i] =
          std::max(v_th_floor, p.V_th + het.v_th_sigma_mv * rng.normal());
    }
    if (het.randomize_v_init)
      net.v_init[i] = rng.uniform(p.V_reset, net.v_th[i]);
  }
  return net;
}

// Event times (ms) of one Poisson train via the per-step Bernoulli
// approximation, p = rate*dt.
inline std::vector<double> poisson_drive(double rate_hz, double duration_ms,
                                         double dt_ms, std::uint64_t seed) {
  if (rate_hz < 0.0) throw config_error("netsim: rate must be >= 0");
  if (!(dt_ms > 0.0)) throw config_error("netsim: dt must be positive");
  const double p = rate_hz * dt_ms / 1000.0;
  if (p > 0.1)
    throw config_error("netsim: rate*dt > 0.1, Bernoulli approximation "
                       "invalid");
  std::vector<double> events;
  Rng rng(seed);
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(duration_ms / dt_ms));
  for (std::size_t k = 0; k < steps; ++k)
    if (rng.bernoulli(p)) events.push_back(static_cast<double>(k + 1) * dt_ms);
  return events;
}

// Samples recorded at 1 ms cadence after warmup, plus trimmed spikes.
struct Recordings {
  std::vector<std::uint32_t> sample_ids;
  std::vector<std::vector<double>> vm;    // [sample][t], mV
  std::vector<std::vector<double>> g_ex;  // [sample][t], nS
  std::vector<std::vector<double>> g_in;  // [sample][t], nS
  std::vector<std::pair<std::uint32_t, double>> spikes;  // (id, time_ms)
  double fs = 1000.0;
  double recorded_ms = 0.0;  // span covered by the samples

  std::size_t n_samples() const { return vm.empty() ? 0 : vm[0].size(); }
};

// Deterministic sample of excitatory neuron ids (at least one).
inline std::vector<std::uint32_t> select_excitatory_sample(
    const Network& net, double frac, std::uint64_t seed) {
  if (!(frac > 0.0 && frac <= 1.0))
    throw config_error("netsim: sample fraction must be in (0, 1]");
  std::vector<std::uint32_t> exc;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (net.excitatory[i]) exc.push_back(static_cast<std::uint32_t>(i));
  if (exc.empty()) throw data_error("netsim: no excitatory neurons");
  std::size_t k = static_cast<std::size_t>(
      std::lround(frac * static_cast<double>(exc.size())));
  k = std::max<std::size_t>(1, std::min(k, exc.size()));
  Rng rng(derive_seed(seed, 3));
  rng.shuffle(exc);
  exc.resize(k);
  std::sort(exc.begin(), exc.end());
  return exc;
}

// Advances the network with an exponential-Euler membrane update (exact
// between synaptic events for constant conductances) and exact
// exponential conductance decay.  Per step: deliver delayed spikes,
// draw Poisson drive, integrate, detect threshold crossings, decay.
// Records vm/g_ex/g_in for record_ids at 1 ms cadence after warmup.
inline Recordings simulate(const Network& net, const NetworkConfig& cfg,
                           const std::vector<std::uint32_t>& record_ids) {
  cfg.validate();
  if (net.size() == 0) throw data_error("netsim: empty network");
  for (auto id : record_ids)
    if (id >= net.size())
      throw config_error("netsim: record id out of range");

  const NeuronParams& p = net.params;
  const std::size_t n = net.size();
  const double dt = cfg.dt_ms;
  const double g_L = p.g_leak();
  const double decay_ex = std::exp(-dt / p.tau_syn_ex);
  const double decay_in = std::exp(-dt / p.tau_syn_in);
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(cfg.duration_ms / dt));
  const std::size_t ref_steps =
      static_cast<std::size_t>(std::llround(p.t_ref / dt));
  const std::size_t delay_steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.delay_ms / dt)));
  const std::size_t record_every =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.0 / dt)));

  std::vector<double> v(net.v_init);
  std::vector<double> g_ex(n, 0.0), g_in(n, 0.0);
  std::vector<std::size_t> ref_until(n, 0);

  const std::size_t ring_len = delay_steps + 1;
  std::vector<std::vector<double>> ring_ex(ring_len, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> ring_in(ring_len, std::vector<double>(n, 0.0));

  // per-neuron drive probability (optionally jittered around the mean)
  std::vector<double> p_drive(n, cfg.drive_rate * dt / 1000.0);
  if (cfg.drive_rate_jitter_frac > 0.0) {
    Rng jrng(derive_seed(cfg.seed, 4));
    for (auto& q : p_drive)
      q *= 1.0 + cfg.drive_rate_jitter_frac * jrng.uniform(-1.0, 1.0);
  }

  Rng drive_rng(derive_seed(cfg.seed, 2));

  Recordings rec;
  rec.sample_ids = record_ids;
  rec.fs = 1000.0 / (static_cast<double>(record_every) * dt);
  const std::size_t warmup_steps =
      static_cast<std::size_t>(std::llround(cfg.warmup_ms / dt));
  const std::size_t n_rec_t = (steps - warmup_steps) / record_every;
  rec.recorded_ms = static_cast<double>(n_rec_t * record_every) * dt;
  rec.vm.assign(record_ids.size(), {});
  rec.g_ex.assign(record_ids.size(), {});
  rec.g_in.assign(record_ids.size(), {});
  for (std::size_t s = 0; s < record_ids.size(); ++s) {
    rec.vm[s].reserve(n_rec_t);
    rec.g_ex[s].reserve(n_rec_t);
    rec.g_in[s].reserve(n_rec_t);
  }

  for (std::size_t k = 0; k < steps; ++k) {
    // delayed synaptic arrivals scheduled for this step
    auto& slot_ex = ring_ex[k % ring_len];
    auto& slot_in = ring_in[k % ring_len];
    for (std::size_t i = 0; i < n; ++i) {
      g_ex[i] += slot_ex[i];
      g_in[i] += slot_in[i];
      slot_ex[i] = 0.0;
      slot_in[i] = 0.0;
    }

    // external excitatory Poisson drive
    for (std::size_t i = 0; i < n; ++i)
      if (drive_rng.bernoulli(p_drive[i])) g_ex[i] += cfg.g_E;

    // membrane update and threshold detection
    for (std::size_t i = 0; i < n; ++i) {
      if (k < ref_until[i]) continue;  // clamped at V_reset
      const double g_tot = g_L + g_ex[i] + g_in[i];
      const double v_inf = (g_L * p.E_L + g_ex[i] * p.E_ex +
                            g_in[i] * p.E_in + cfg.tonic_current_pA) /
                           g_tot;
      v[i] = v_inf + (v[i] - v_inf) * std::exp(-dt * g_tot / p.C_m);
      if (v[i] >= net.v_th[i]) {
        const double t_spike = static_cast<double>(k + 1) * dt;
        if (t_spike > cfg.warmup_ms)
          rec.spikes.emplace_back(static_cast<std::uint32_t>(i), t_spike);
        v[i] = p.V_reset;
        ref_until[i] = k + 1 + ref_steps;
        auto& out_ex = ring_ex[(k + delay_steps) % ring_len];
        auto& out_in = ring_in[(k + delay_steps) % ring_len];
        if (net.excitatory[i]) {
          for (const auto& [tgt, w] : net.targets[i]) out_ex[tgt] += w;
        } else {
          for (const auto& [tgt, w] : net.targets[i]) out_in[tgt] += w;
        }
      }
    }

    // sample at 1 ms cadence once past warmup (g before decay: these are
    // the values that shaped this step's update)
    if (!record_ids.empty() && (k + 1) > warmup_steps &&
        (k + 1 - warmup_steps) % record_every == 0 &&
        rec.vm[0].size() < n_rec_t) {
      for (std::size_t s = 0; s < record_ids.size(); ++s) {
        const std::size_t i = record_ids[s];
        if (!std::isfinite(v[i]) || v[i] < p.E_in || v[i] > p.E_ex)
          throw numeric_error(
              "netsim: membrane potential out of [E_in, E_ex] at step " +
              std::to_string(k) + ", neuron " + std::to_string(i));
        rec.vm[s].push_back(v[i]);
        rec.g_ex[s].push_back(g_ex[i]);
        rec.g_in[s].push_back(g_in[i]);
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      g_ex[i] *= decay_ex;
      g_in[i] *= decay_in;
    }
  }
  return rec;
}

inline Recordings simulate(const Network& net, const NetworkConfig& cfg) {
  std::vector<std::uint32_t> all;
  for (std::size_t i = 0; i < net.size(); ++i)
    all.push_back(static_cast<std::uint32_t>(i));
  return simulate(net, cfg, all);
}

// Mean firing rate (Hz) over the recorded window; excitatory_only
// restricts both the spike count and the population size.
inline double population_rate_hz(const Recordings& rec, const Network& net,
                                 bool excitatory_only = true) {
  if (rec.recorded_ms <= 0.0) throw data_error("netsim: nothing recorded");
  std::size_t pop = 0;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (!excitatory_only || net.excitatory[i]) ++pop;
  if (pop == 0) throw data_error("netsim: empty population");
  std::size_t count = 0;
  for (const auto& [id, t] : rec.spikes) {
    (void)t;
    if (!excitatory_only || net.excitatory[id]) ++count;
  }
  return static_cast<double>(count) /
         (static_cast<double>(pop) * rec.recorded_ms / 1000.0);
}

}  // namespace eispec
