#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "eispec/nbs.hpp"
#include "eispec/rng.hpp"

#include "helpers.hpp"

using namespace eispec;

namespace {

ConnMatrix conn_from_upper(std::size_t n,
                           const std::vector<std::vector<double>>& upper) {
  ConnMatrix cm;
  cm.band = band_by_name("alpha");
  cm.values.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) cm.values[i][i] = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      cm.values[i][j] = upper[i][j];
      cm.values[j][i] = upper[i][j];
    }
  return cm;
}

// Subject matrices with iid uniform edges, optionally boosting a clique.
GroupStack uniform_group(std::size_t n_subj, std::size_t n_nodes,
                         GroupLabel g, std::uint64_t seed,
                         const std::vector<std::size_t>& boosted_clique = {},
                         double boost = 0.0) {
  GroupStack gs;
  gs.group = g;
  gs.band = band_by_name("alpha");
  for (std::size_t s = 0; s < n_subj; ++s) {
    Rng rng(derive_seed(seed, s));
    std::vector<std::vector<double>> u(n_nodes,
                                       std::vector<double>(n_nodes, 0.0));
    for (std::size_t i = 0; i < n_nodes; ++i)
      for (std::size_t j = i + 1; j < n_nodes; ++j)
        u[i][j] = 0.4 + 0.05 * rng.normal();
    for (std::size_t a = 0; a < boosted_clique.size(); ++a)
      for (std::size_t b = a + 1; b < boosted_clique.size(); ++b)
        u[boosted_clique[a]][boosted_clique[b]] += boost;
    for (auto& row : u)
      for (double& v : row) v = std::min(0.95, std::max(0.05, v));
    gs.matrices.push_back(conn_from_upper(n_nodes, u));
  }
  return gs;
}

}  // namespace

TEST_CASE("edge t-statistic matches the hand-evaluated formula") {
  GroupStack hc, ad;
  hc.group = GroupLabel::HC;
  ad.group = GroupLabel::AD;
  hc.band = ad.band = band_by_name("alpha");
  for (double v : {0.8, 0.9, 1.0}) {
    std::vector<std::vector<double>> u(2, std::vector<double>(2, 0.0));
    u[0][1] = v;
    hc.matrices.push_back(conn_from_upper(2, u));
  }
  for (double v : {0.2, 0.3, 0.4}) {
    std::vector<std::vector<double>> u(2, std::vector<double>(2, 0.0));
    u[0][1] = v;
    ad.matrices.push_back(conn_from_upper(2, u));
  }
  const auto t = edge_tstats(hc, ad);
  // 0.6 / sqrt(0.01/3 + 0.01/3)
  REQUIRE_THAT(t[0][1], Catch::Matchers::WithinAbs(7.348, 1e-3));
  REQUIRE(t[0][0] == 0.0);
  REQUIRE(t[1][1] == 0.0);
  REQUIRE_THAT(t[0][1],
               Catch::Matchers::WithinAbs(
                   testref::welch_t({0.8, 0.9, 1.0}, {0.2, 0.3, 0.4}), 1e-12));

  SECTION("swapping groups negates t") {
    const auto t2 = edge_tstats(ad, hc);
    REQUIRE_THAT(t2[0][1], Catch::Matchers::WithinAbs(-t[0][1], 1e-12));
  }
}

TEST_CASE("identical groups give an all-zero t matrix") {
  auto g1 = uniform_group(4, 5, GroupLabel::HC, 10);
  auto g2 = g1;
  g2.group = GroupLabel::AD;
  const auto t = edge_tstats(g1, g2);
  for (const auto& row : t)
    for (double v : row) REQUIRE(v == 0.0);
}

TEST_CASE("zero variance in both groups yields t=0 plus a warning") {
  auto hc = uniform_group(3, 3, GroupLabel::HC, 1);
  auto ad = uniform_group(3, 3, GroupLabel::AD, 2);
  for (auto& m : hc.matrices) m.values[0][1] = m.values[1][0] = 0.5;
  for (auto& m : ad.matrices) m.values[0][1] = m.values[1][0] = 0.5;
  std::vector<std::string> warnings;
  const auto t = edge_tstats(hc, ad, &warnings);
  REQUIRE(t[0][1] == 0.0);
  REQUIRE(warnings.size() == 1);
  REQUIRE(warnings[0].find("(0,1)") != std::string::npos);
}

TEST_CASE("suprathreshold components match hand constructions") {
  const std::size_t n = 8;
  std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));

  SECTION("no edge above threshold gives an empty list") {
    REQUIRE(suprathreshold_components(t, 3.0, NbsTail::left).empty());
  }

  SECTION("a planted 4-clique forms one component with 6 edges") {
    const std::vector<std::size_t> clique = {1, 3, 4, 6};
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a + 1; b < 4; ++b)
        t[clique[a]][clique[b]] = t[clique[b]][clique[a]] = 10.0;
    const auto comps = suprathreshold_components(t, 3.0, NbsTail::left);
    REQUIRE(comps.size() == 1);
    REQUIRE(comps[0].size() == 6);
    REQUIRE(comps[0].nodes == clique);

    // independent check through the boolean-adjacency oracle
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) adj[i][j] = t[i][j] > 3.0;
    REQUIRE(testref::max_component_edges(adj) == 6);

    // the right tail sees nothing (all suprathreshold t are positive)
    REQUIRE(suprathreshold_components(t, 3.0, NbsTail::right).empty());
  }

  SECTION("two disjoint suprathreshold pairs give two 1-edge components") {
    t[0][1] = t[1][0] = 5.0;
    t[5][7] = t[7][5] = 4.0;
    const auto comps = suprathreshold_components(t, 3.0, NbsTail::left);
    REQUIRE(comps.size() == 2);
    REQUIRE(comps[0].size() == 1);
    REQUIRE(comps[1].size() == 1);
  }

  SECTION("negative t shows up only in the right tail") {
    t[2][3] = t[3][2] = -6.0;
    REQUIRE(suprathreshold_components(t, 3.0, NbsTail::left).empty());
    const auto comps = suprathreshold_components(t, 3.0, NbsTail::right);
    REQUIRE(comps.size() == 1);
  }
}

TEST_CASE("raising the threshold never grows components") {
  Rng rng(77);
  const std::size_t n = 12;
  std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      t[i][j] = t[j][i] = 4.0 * rng.normal();
  std::size_t prev_max = SIZE_MAX, prev_edges = SIZE_MAX;
  for (double thr : {1.0, 2.0, 3.0, 4.0}) {
    const auto comps = suprathreshold_components(t, thr, NbsTail::left);
    std::size_t mx = 0, total = 0;
    for (const auto& c : comps) {
      mx = std::max(mx, c.size());
      total += c.size();
    }
    REQUIRE(mx <= prev_max);
    REQUIRE(total <= prev_edges);
    prev_max = mx;
    prev_edges = total;
  }
}

TEST_CASE("nbs_test is deterministic and worker-count independent") {
  auto hc = uniform_group(6, 6, GroupLabel::HC, 100);
  auto ad = uniform_group(6, 6, GroupLabel::AD, 200, {0, 1, 2}, -0.12);

  setenv("EISPEC_WORKERS", "1", 1);
  const auto r1 = nbs_test(hc, ad, 2.0, 0.05, 500, NbsTail::left, 42);
  setenv("EISPEC_WORKERS", "3", 1);
  const auto r2 = nbs_test(hc, ad, 2.0, 0.05, 500, NbsTail::left, 42);
  unsetenv("EISPEC_WORKERS");

  REQUIRE(r1.t_matrix == r2.t_matrix);
  REQUIRE(r1.components.size() == r2.components.size());
  for (std::size_t i = 0; i < r1.components.size(); ++i) {
    REQUIRE(r1.components[i].edges == r2.components[i].edges);
    REQUIRE(r1.components[i].fwe_p == r2.components[i].fwe_p);
  }
}

TEST_CASE("permutation p-values obey the +1 convention bounds") {
  auto hc = uniform_group(5, 5, GroupLabel::HC, 11, {0, 1, 2}, 0.3);
  auto ad = uniform_group(5, 5, GroupLabel::AD, 22);
  const auto res = nbs_test(hc, ad, 2.5, 0.05, 200, NbsTail::left, 7);
  for (const auto& c : res.components) {
    REQUIRE(c.fwe_p >= 1.0 / 201.0);
    REQUIRE(c.fwe_p <= 1.0);
  }
}

TEST_CASE("a planted strong subnetwork is recovered as significant") {
  const std::vector<std::size_t> clique = {2, 4, 7, 9};
  // boost 0.15 on edges with sd 0.05 -> d = 3
  auto hc = uniform_group(10, 10, GroupLabel::HC, 1000, clique, 0.15);
  auto ad = uniform_group(10, 10, GroupLabel::AD, 2000);
  const auto res = nbs_test(hc, ad, 3.0, 0.01, 1000, NbsTail::left, 5);
  REQUIRE_FALSE(res.components.empty());
  bool found = false;
  for (const auto& c : res.components) {
    if (c.fwe_p < 0.01) {
      found = true;
      for (std::size_t node : c.nodes)
        REQUIRE(std::find(clique.begin(), clique.end(), node) != clique.end());
    }
  }
  REQUIRE(found);
}

TEST_CASE("null data rarely produces significant components") {
  int reps_with_sig = 0;
  const int reps = 30;
  for (int r = 0; r < reps; ++r) {
    auto hc = uniform_group(8, 8, GroupLabel::HC, derive_seed(3000, r));
    auto ad = uniform_group(8, 8, GroupLabel::AD, derive_seed(4000, r));
    const auto res = nbs_test(hc, ad, 3.0, 0.01, 1000, NbsTail::left,
                              derive_seed(5000, r));
    for (const auto& c : res.components)
      if (c.significant) {
        ++reps_with_sig;
        break;
      }
  }
  REQUIRE(reps_with_sig <= 2);
}

TEST_CASE("exhaustive mode equals brute-force enumeration over 70 splits") {
  const std::size_t n_nodes = 5;
  auto hc = uniform_group(4, n_nodes, GroupLabel::HC, 31, {0, 1, 2}, 0.2);
  auto ad = uniform_group(4, n_nodes, GroupLabel::AD, 32);
  const double t_primary = 2.0;
  const auto res =
      nbs_test(hc, ad, t_primary, 0.05, 0, NbsTail::left, 0, true);
  REQUIRE(res.n_perm == 70);
  REQUIRE_FALSE(res.components.empty());

  // independent enumeration: pool subjects, walk all C(8,4) splits
  std::vector<const ConnMatrix*> pool;
  for (const auto& m : hc.matrices) pool.push_back(&m);
  for (const auto& m : ad.matrices) pool.push_back(&m);
  std::vector<std::size_t> null_max;
  testref::for_each_subset(8, 4, [&](const std::vector<std::size_t>& pick) {
    std::vector<bool> in_g1(8, false);
    for (std::size_t i : pick) in_g1[i] = true;
    std::vector<std::vector<bool>> adj(n_nodes,
                                       std::vector<bool>(n_nodes, false));
    for (std::size_t i = 0; i < n_nodes; ++i)
      for (std::size_t j = i + 1; j < n_nodes; ++j) {
        std::vector<double> a, b;
        for (std::size_t s = 0; s < 8; ++s)
          (in_g1[s] ? a : b).push_back(pool[s]->values[i][j]);
        const bool kept = testref::welch_t(a, b) > t_primary;
        adj[i][j] = adj[j][i] = kept;
      }
    null_max.push_back(testref::max_component_edges(adj));
  });
  REQUIRE(null_max.size() == 70);

  for (const auto& c : res.components) {
    std::size_t count = 0;
    for (std::size_t m : null_max)
      if (m >= c.size()) ++count;
    const double oracle_p = static_cast<double>(count) / 70.0;
    REQUIRE_THAT(c.fwe_p, Catch::Matchers::WithinAbs(oracle_p, 1e-12));
  }
}

TEST_CASE("label-swap duality holds exactly in exhaustive mode") {
  auto hc = uniform_group(4, 5, GroupLabel::HC, 51, {0, 1}, 0.15);
  auto ad = uniform_group(4, 5, GroupLabel::AD, 52);
  const auto left = nbs_test(hc, ad, 2.0, 0.05, 0, NbsTail::left, 0, true);
  const auto right = nbs_test(ad, hc, 2.0, 0.05, 0, NbsTail::right, 0, true);
  REQUIRE(left.components.size() == right.components.size());
  for (std::size_t i = 0; i < left.components.size(); ++i) {
    REQUIRE(left.components[i].edges == right.components[i].edges);
    REQUIRE_THAT(left.components[i].fwe_p,
                 Catch::Matchers::WithinAbs(right.components[i].fwe_p, 1e-12));
  }
}

TEST_CASE("nbs_test validates its configuration") {
  auto hc = uniform_group(4, 4, GroupLabel::HC, 61);
  auto ad = uniform_group(4, 4, GroupLabel::AD, 62);
  REQUIRE_THROWS_AS(nbs_test(hc, ad, 3.0, 0.01, 50), config_error);
  REQUIRE_THROWS_AS(nbs_test(hc, ad, -1.0, 0.01, 500), config_error);
  REQUIRE_THROWS_AS(nbs_test(hc, ad, 3.0, 1.5, 500), config_error);
  GroupStack tiny;
  tiny.matrices.push_back(hc.matrices[0]);
  REQUIRE_THROWS_AS(nbs_test(tiny, ad, 3.0, 0.01, 500), stats_error);
}
