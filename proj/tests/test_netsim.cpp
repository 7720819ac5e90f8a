#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "eispec/netsim.hpp"
#include "helpers.hpp"

using namespace eispec;

namespace {

// Closed-form steady firing rate of a leaky integrate-and-fire neuron
// under constant injected current I0 (pA): the membrane relaxes toward
// E_L + I0/g_L with time constant tau_m, so the interspike interval is
// t_ref + tau_m * ln((dV + E_L - V_reset) / (dV + E_L - V_th)).
double lif_rate_hz(const NeuronParams& p, double i0_pA) {
  const double dv = i0_pA / p.g_leak();
  const double den = dv + p.E_L - p.V_th;
  if (den <= 0.0) return 0.0;
  const double num = dv + p.E_L - p.V_reset;
  return 1000.0 / (p.t_ref + p.tau_m * std::log(num / den));
}

NetworkConfig isolated_config(double i0_pA) {
  NetworkConfig cfg;
  cfg.n_neurons = 4;
  cfg.frac_excitatory = 1.0;
  cfg.p_connect = 0.0;
  cfg.drive_rate = 0.0;
  cfg.tonic_current_pA = i0_pA;
  cfg.duration_ms = 11000.0;
  cfg.warmup_ms = 1000.0;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("tonic current reproduces the closed-form rate", "[netsim]") {
  const NetworkConfig cfg = isolated_config(150.0);
  const Network net = build_random_network(cfg);
  const Recordings rec = simulate(net, cfg, {});

  const double expected = lif_rate_hz(cfg.params, 150.0);
  REQUIRE(expected == Catch::Approx(37.0751).margin(0.01));
  const double measured = population_rate_hz(rec, net);
  REQUIRE(std::abs(measured - expected) / expected < 0.02);
}

TEST_CASE("subthreshold current never fires", "[netsim]") {
  // I0/g_L = 9 mV < V_th - E_L = 10 mV
  const NetworkConfig cfg = isolated_config(90.0);
  const Network net = build_random_network(cfg);
  const Recordings rec = simulate(net, cfg, {});
  REQUIRE(rec.spikes.empty());
}

TEST_CASE("quiescent network stays at the resting potential", "[netsim]") {
  NetworkConfig cfg = isolated_config(0.0);
  cfg.duration_ms = 1500.0;
  cfg.warmup_ms = 500.0;
  const Network net = build_random_network(cfg);
  const Recordings rec = simulate(net, cfg);
  REQUIRE(rec.spikes.empty());
  REQUIRE(rec.n_samples() > 0);
  for (const auto& row : rec.vm)
    for (double v : row) REQUIRE(v == Catch::Approx(cfg.params.E_L).margin(1e-12));
  for (const auto& row : rec.g_ex)
    for (double g : row) REQUIRE(g == 0.0);
}

TEST_CASE("simulation is bit-identical for a fixed seed", "[netsim]") {
  NetworkConfig cfg;
  cfg.n_neurons = 100;
  cfg.duration_ms = 1500.0;
  cfg.warmup_ms = 300.0;
  cfg.drive_rate = 800.0;
  cfg.seed = 42;
  const Network net = build_random_network(cfg);
  const Recordings a = simulate(net, cfg);
  const Recordings b = simulate(net, cfg);
  REQUIRE(a.spikes == b.spikes);
  REQUIRE(a.vm == b.vm);
  REQUIRE(a.g_ex == b.g_ex);
  REQUIRE(a.g_in == b.g_in);

  NetworkConfig other = cfg;
  other.seed = 43;
  const Recordings c = simulate(net, other);
  REQUIRE(a.spikes != c.spikes);
}

TEST_CASE("random network structure matches its parameters", "[netsim]") {
  NetworkConfig cfg;
  cfg.seed = 3;
  const Network net = build_random_network(cfg);

  REQUIRE(net.size() == 400);
  REQUIRE(cfg.n_excitatory() == 320);
  REQUIRE(net.n_excitatory() == 320);
  for (std::size_t i = 0; i < net.size(); ++i)
    REQUIRE(static_cast<bool>(net.excitatory[i]) == (i < 320));

  // ordered-pair Bernoulli wiring: mean 0.2*400*399, sd ~160
  const double mean = 0.2 * 400.0 * 399.0;
  const double sd = std::sqrt(400.0 * 399.0 * 0.2 * 0.8);
  const double count = static_cast<double>(net.n_synapses());
  REQUIRE(std::abs(count - mean) < 4.0 * sd);

  const double g_I = cfg.g_ratio * cfg.g_E;
  for (std::size_t i = 0; i < net.size(); ++i)
    for (const auto& [tgt, w] : net.targets[i]) {
      REQUIRE(tgt != i);
      REQUIRE(tgt < net.size());
      REQUIRE(w == (net.excitatory[i] ? cfg.g_E : g_I));
    }

  NetworkConfig empty_cfg = cfg;
  empty_cfg.p_connect = 0.0;
  REQUIRE(build_random_network(empty_cfg).n_synapses() == 0);

  NetworkConfig full_cfg = cfg;
  full_cfg.n_neurons = 10;
  full_cfg.p_connect = 1.0;
  REQUIRE(build_random_network(full_cfg).n_synapses() == 90);
}

TEST_CASE("heterogeneity jitters thresholds and initial potentials", "[netsim]") {
  NetworkConfig cfg;
  cfg.seed = 9;
  const Network base = build_random_network(cfg);

  SECTION("disabled heterogeneity is the identity") {
    HeterogeneityConfig het;
    het.randomize_v_init = false;
    het.v_th_sigma_mv = 0.0;
    const Network same = heterogenize(base, het, 1);
    REQUIRE(same.v_th == base.v_th);
    REQUIRE(same.v_init == base.v_init);
  }

  SECTION("default jitter has sigma-ish sample spread") {
    const double sigma = HeterogeneityConfig{}.v_th_sigma_mv;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Network het = heterogenize(base, HeterogeneityConfig{}, seed);
      const double sd = testref::sample_sd(het.v_th);
      REQUIRE(sd > 0.8 * sigma);
      REQUIRE(sd < 1.2 * sigma);
      const double m = testref::mean(het.v_th);
      REQUIRE(std::abs(m - cfg.params.V_th) < 0.3 * sigma);
      for (std::size_t i = 0; i < het.size(); ++i) {
        REQUIRE(het.v_init[i] >= cfg.params.V_reset);
        REQUIRE(het.v_init[i] <= het.v_th[i]);
      }
    }
  }

  SECTION("excessive jitter clamps above V_reset instead of crossing") {
    HeterogeneityConfig het;
    het.v_th_sigma_mv = 20.0;
    const Network wide = heterogenize(base, het, 0);
    double lowest = 0.0;
    for (std::size_t i = 0; i < wide.size(); ++i) {
      REQUIRE(wide.v_th[i] > cfg.params.V_reset);
      lowest = std::min(lowest, wide.v_th[i] - cfg.params.V_th);
    }
    REQUIRE(lowest <= -9.85);  // 20 mV sigma over 400 draws hits the clamp
    het.v_th_sigma_mv = -1.0;
    REQUIRE_THROWS_AS(heterogenize(base, het, 0), config_error);
  }
}

TEST_CASE("poisson drive hits its expected count", "[netsim]") {
  // 1000 Hz for 10 s at dt = 0.1 ms: binomial(1e5, 0.1), sd ~ 94.9
  const auto events = poisson_drive(1000.0, 10000.0, 0.1, 5);
  const double c = static_cast<double>(events.size());
  REQUIRE(std::abs(c - 10000.0) < 400.0);
  for (std::size_t k = 1; k < events.size(); ++k)
    REQUIRE(events[k] > events[k - 1]);
  REQUIRE(events.front() > 0.0);
  REQUIRE(events.back() <= 10000.0);

  const auto half = poisson_drive(500.0, 10000.0, 0.1, 5);
  REQUIRE(std::abs(static_cast<double>(half.size()) - 5000.0) < 300.0);

  REQUIRE(poisson_drive(0.0, 1000.0, 0.1, 1).empty());
  REQUIRE_THROWS_AS(poisson_drive(2000.0, 1000.0, 0.1, 1), config_error);
  REQUIRE_THROWS_AS(poisson_drive(-1.0, 1000.0, 0.1, 1), config_error);
}

TEST_CASE("driven network respects membrane bounds and refractoriness",
          "[netsim]") {
  NetworkConfig cfg;
  cfg.n_neurons = 200;
  cfg.duration_ms = 3000.0;
  cfg.warmup_ms = 500.0;
  cfg.seed = 11;
  const Network net = heterogenize(build_random_network(cfg),
                                   HeterogeneityConfig{}, cfg.seed);
  const Recordings rec = simulate(net, cfg);

  REQUIRE(rec.n_samples() == 2500);
  REQUIRE(rec.recorded_ms == Catch::Approx(2500.0));
  for (const auto& row : rec.vm)
    for (double v : row) {
      REQUIRE(v >= cfg.params.E_in);
      REQUIRE(v <= cfg.params.E_ex);
    }

  REQUIRE_FALSE(rec.spikes.empty());
  std::map<std::uint32_t, double> last_spike;
  double prev_t = 0.0;
  for (const auto& [id, t] : rec.spikes) {
    REQUIRE(t >= prev_t);  // streamed in time order
    prev_t = t;
    REQUIRE(t > cfg.warmup_ms);
    REQUIRE(t <= cfg.duration_ms);
    auto it = last_spike.find(id);
    if (it != last_spike.end())
      REQUIRE(t - it->second >= cfg.params.t_ref);
    last_spike[id] = t;
  }
}

TEST_CASE("excitatory sampling is deterministic and well-formed", "[netsim]") {
  NetworkConfig cfg;
  cfg.seed = 21;
  const Network net = build_random_network(cfg);

  const auto a = select_excitatory_sample(net, 0.20, 5);
  const auto b = select_excitatory_sample(net, 0.20, 5);
  REQUIRE(a == b);
  REQUIRE(a.size() == 64);  // 20% of 320
  REQUIRE(std::is_sorted(a.begin(), a.end()));
  for (auto id : a) REQUIRE(net.excitatory[id] == 1);

  const auto c = select_excitatory_sample(net, 0.20, 6);
  REQUIRE(a != c);

  REQUIRE(select_excitatory_sample(net, 1e-9, 1).size() == 1);
  REQUIRE_THROWS_AS(select_excitatory_sample(net, 0.0, 1), config_error);
  REQUIRE_THROWS_AS(select_excitatory_sample(net, 1.5, 1), config_error);
}

TEST_CASE("simulator configuration is validated", "[netsim]") {
  NetworkConfig cfg;

  NetworkConfig bad = cfg;
  bad.warmup_ms = bad.duration_ms;
  REQUIRE_THROWS_AS(bad.validate(), config_error);

  bad = cfg;
  bad.delay_ms = 0.05;
  REQUIRE_THROWS_AS(bad.validate(), config_error);

  bad = cfg;
  bad.n_neurons = 0;
  REQUIRE_THROWS_AS(bad.validate(), config_error);

  bad = cfg;
  bad.frac_excitatory = 1.5;
  REQUIRE_THROWS_AS(bad.validate(), config_error);

  bad = cfg;
  bad.drive_rate = 1500.0;  // rate*dt = 0.15 > 0.1
  REQUIRE_THROWS_AS(bad.validate(), config_error);

  bad = cfg;
  bad.params.V_reset = -40.0;  // above threshold
  REQUIRE_THROWS_AS(bad.validate(), config_error);

  cfg.n_neurons = 10;
  cfg.duration_ms = 200.0;
  cfg.warmup_ms = 100.0;
  const Network net = build_random_network(cfg);
  REQUIRE_THROWS_AS(simulate(net, cfg, {99}), config_error);
}

TEST_CASE("stronger inhibition lowers the excitatory rate", "[netsim]") {
  NetworkConfig cfg;
  cfg.duration_ms = 4000.0;
  cfg.warmup_ms = 1000.0;
  cfg.seed = 2;

  std::vector<double> rates;
  for (double g : {2.5, 3.5, 6.5}) {
    NetworkConfig run = cfg;
    run.g_ratio = g;
    const Network net = heterogenize(build_random_network(run),
                                     HeterogeneityConfig{}, run.seed);
    const Recordings rec = simulate(net, run, {});
    rates.push_back(population_rate_hz(rec, net));
  }
  CAPTURE(rates[0], rates[1], rates[2]);
  REQUIRE(rates[0] > rates[1]);
  REQUIRE(rates[1] > rates[2]);
  REQUIRE(rates[2] > 0.5);   // healthy-control network stays active
  REQUIRE(rates[2] < 20.0);  // but not runaway
}
