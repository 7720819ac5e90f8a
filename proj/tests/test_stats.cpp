#include <cmath>
#include <cstdlib>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "eispec/stats.hpp"
#include "helpers.hpp"

using namespace eispec;

TEST_CASE("effect size follows the pooled-SD formula", "[stats]") {
  SECTION("hand example with unit pooled SD") {
    const EffectReport r = cohens_d("hand", {1.0, 2.0, 3.0}, {2.0, 3.0, 4.0});
    REQUIRE(r.mean_ad == Catch::Approx(2.0));
    REQUIRE(r.mean_hc == Catch::Approx(3.0));
    REQUIRE(r.s_pooled == Catch::Approx(1.0));
    REQUIRE(r.cohens_d == Catch::Approx(-1.0));
    REQUIRE(r.n_ad == 3);
    REQUIRE(r.n_hc == 3);
  }

  SECTION("identical groups give d = 0") {
    const EffectReport r = cohens_d("same", {1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
    REQUIRE(r.cohens_d == 0.0);
  }

  SECTION("antisymmetric under group swap") {
    const std::vector<double> a{0.4, 0.5, 0.35, 0.61};
    const std::vector<double> b{0.7, 0.8, 0.75};
    const EffectReport ab = cohens_d("ab", a, b);
    const EffectReport ba = cohens_d("ba", b, a);
    REQUIRE(ab.cohens_d == -ba.cohens_d);
    REQUIRE(ab.s_pooled == ba.s_pooled);
  }

  SECTION("invariant under common positive affine maps") {
    const std::vector<double> a{0.4, 0.5, 0.35, 0.61};
    const std::vector<double> b{0.7, 0.8, 0.75};
    std::vector<double> a2 = a, b2 = b;
    for (double& v : a2) v = 3.7 * v - 2.0;
    for (double& v : b2) v = 3.7 * v - 2.0;
    const double d1 = cohens_d("raw", a, b).cohens_d;
    const double d2 = cohens_d("affine", a2, b2).cohens_d;
    REQUIRE(d2 == Catch::Approx(d1).margin(1e-12));
  }

  SECTION("degenerate inputs are rejected") {
    REQUIRE_THROWS_AS(cohens_d("x", {1.0, 1.0}, {1.0, 1.0}), stats_error);
    REQUIRE_THROWS_AS(cohens_d("x", {1.0}, {1.0, 2.0}), stats_error);
    REQUIRE_THROWS_AS(cohens_d_from_summary("x", 1.0, 2.0, 0.0, 3, 3),
                      stats_error);
  }
}

TEST_CASE("published effect rows are self-consistent", "[stats]") {
  const auto& rows = published_effect_table();
  REQUIRE(rows.size() == 5);

  for (const auto& row : rows) {
    const double raw = (row.mean_ad - row.mean_hc) / row.s_pooled;
    // published d values are table-rounded
    REQUIRE(std::abs(raw - row.published_d) < 0.01);
  }

  const double d_eeg = rows.back().published_d;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    REQUIRE(std::abs(rows[i].published_d - d_eeg) ==
            Catch::Approx(rows[i].published_abs_delta).margin(1e-9));

  const EffectReport eeg = eeg_reference_effect();
  REQUIRE(eeg.n_ad == 36);
  REQUIRE(eeg.n_hc == 29);
  REQUIRE(eeg.cohens_d == Catch::Approx(-0.1438).margin(5e-4));
}

TEST_CASE("effect comparison orders by distance to the reference",
          "[stats]") {
  const EffectReport ref =
      cohens_d_from_summary("ref", 2.166, 2.187, 0.146, 36, 29);

  EffectReport same = ref;
  same.name = "clone";
  EffectReport strong = cohens_d_from_summary("strong", 0.430, 0.752, 0.242,
                                              30, 30);
  EffectReport flipped = cohens_d_from_summary("flipped", 2.0, 1.5, 1.0, 5, 5);

  const auto table = compare_effects({strong, same, flipped}, ref);
  REQUIRE(table.size() == 3);
  REQUIRE(table[0].name == "clone");
  REQUIRE(table[0].abs_delta_d == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(table[0].sign_agrees);

  REQUIRE(table[1].name == "flipped");
  REQUIRE_FALSE(table[1].sign_agrees);

  REQUIRE(table[2].name == "strong");
  REQUIRE(table[2].sign_agrees);
  REQUIRE(table[2].abs_delta_d ==
          Catch::Approx(std::abs(strong.cohens_d - ref.cohens_d)).margin(1e-12));

  REQUIRE_THROWS_AS(compare_effects({}, ref), stats_error);
}

TEST_CASE("exponent populations are deterministic seeded runs", "[stats]") {
  NetworkConfig cfg;
  cfg.n_neurons = 40;
  cfg.duration_ms = 5300.0;
  cfg.warmup_ms = 1000.0;
  cfg.tonic_current_pA = 120.0;
  const Condition hc = condition_by_name("HC");

  const auto a = exponent_population(1, hc, cfg, 2, 17);
  REQUIRE(a.size() == 2);
  for (double v : a) REQUIRE(std::isfinite(v));

  const auto b = exponent_population(1, hc, cfg, 2, 17);
  REQUIRE(a == b);

  setenv("EISPEC_WORKERS", "3", 1);
  const auto c = exponent_population(1, hc, cfg, 2, 17);
  setenv("EISPEC_WORKERS", "1", 1);
  REQUIRE(a == c);

  const auto d = exponent_population(1, hc, cfg, 2, 18);
  REQUIRE(a != d);

  REQUIRE_THROWS_AS(exponent_population(1, hc, cfg, 1, 17), stats_error);
  NetworkConfig bad = cfg;
  bad.duration_ms = 2000.0;
  REQUIRE_THROWS_AS(exponent_population(1, hc, bad, 2, 17), model_error);
}
