#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/features.hpp"
#include "eispec/parallel.hpp"
#include "eispec/rng.hpp"

namespace eispec {

// One group's connectivity matrices, one per subject.
struct GroupStack {
  std::vector<ConnMatrix> matrices;
  GroupLabel group = GroupLabel::HC;
  Band band;

  std::size_t n_subjects() const { return matrices.size(); }
  std::size_t n_nodes() const {
    return matrices.empty() ? 0 : matrices[0].size();
  }

  void validate() const {
    if (matrices.size() < 2)
      throw stats_error("nbs: need at least 2 subjects per group");
    const std::size_t n = matrices[0].size();
    for (const auto& m : matrices) {
      m.validate();
      if (m.size() != n) throw data_error("nbs: mixed matrix sizes in group");
    }
  }
};

enum class NbsTail { left, right };  // left: HC > AD; right: AD > HC

struct NbsComponent {
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j
  std::vector<std::size_t> nodes;
  double fwe_p = 1.0;
  bool significant = false;
  std::size_t size() const { return edges.size(); }
};

struct NbsResult {
  NbsTail tail = NbsTail::left;
  std::vector<std::vector<double>> t_matrix;
  std::vector<NbsComponent> components;
  double t_primary = 3.0;
  double alpha = 0.01;
  std::size_t n_perm = 0;  // relabelings actually evaluated
  bool exhaustive = false;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// Unequal-variance two-sample t per edge over raw per-subject values.
inline double welch_t(const std::vector<double>& a,
                      const std::vector<double>& b, bool& degenerate) {
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = variance_of(a), vb = variance_of(b);
  const double se2 = va / static_cast<double>(a.size()) +
                     vb / static_cast<double>(b.size());
  if (se2 <= 0.0) {
    degenerate = true;
    return 0.0;
  }
  degenerate = false;
  return (ma - mb) / std::sqrt(se2);
}

// Edge-wise t over an index split of the pooled stack.
inline std::vector<std::vector<double>> tstats_for_split(
    const std::vector<const ConnMatrix*>& pool,
    const std::vector<std::size_t>& hc_idx,
    const std::vector<std::size_t>& ad_idx, std::vector<std::string>* warnings) {
  const std::size_t n = pool[0]->size();
  std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));
  std::vector<double> a(hc_idx.size()), b(ad_idx.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < hc_idx.size(); ++k)
        a[k] = pool[hc_idx[k]]->values[i][j];
      for (std::size_t k = 0; k < ad_idx.size(); ++k)
        b[k] = pool[ad_idx[k]]->values[i][j];
      bool degenerate = false;
      const double v = welch_t(a, b, degenerate);
      if (degenerate && warnings)
        warnings->push_back("nbs: zero variance in both groups at edge (" +
                            std::to_string(i) + "," + std::to_string(j) +
                            "), t set to 0");
      t[i][j] = v;
      t[j][i] = v;
    }
  }
  return t;
}

}  // namespace detail

// Observed edge-wise t matrix, T = (mean_HC - mean_AD) / sqrt(s1^2/n1 +
// s2^2/n2) with n-1 variances.  Diagonal zero.  Degenerate edges (zero
// variance in both groups) get t = 0 and a warning entry.
inline std::vector<std::vector<double>> edge_tstats(
    const GroupStack& hc, const GroupStack& ad,
    std::vector<std::string>* warnings = nullptr) {
  hc.validate();
  ad.validate();
  if (hc.n_nodes() != ad.n_nodes())
    throw data_error("nbs: group matrix sizes do not match");
  std::vector<const ConnMatrix*> pool;
  std::vector<std::size_t> hc_idx, ad_idx;
  for (const auto& m : hc.matrices) {
    hc_idx.push_back(pool.size());
    pool.push_back(&m);
  }
  for (const auto& m : ad.matrices) {
    ad_idx.push_back(pool.size());
    pool.push_back(&m);
  }
  return detail::tstats_for_split(pool, hc_idx, ad_idx, warnings);
}

// Connected components of the graph keeping edges that pass the primary
// threshold in the requested tail.  Only components with at least one
// edge are reported.
inline std::vector<NbsComponent> suprathreshold_components(
    const std::vector<std::vector<double>>& t, double t_primary,
    NbsTail tail) {
  const std::size_t n = t.size();
  for (const auto& row : t)
    if (row.size() != n) throw data_error("nbs: t matrix not square");

  auto keep = [&](std::size_t i, std::size_t j) {
    const double v = tail == NbsTail::left ? t[i][j] : -t[i][j];
    return v > t_primary;
  };

  std::vector<int> comp_of(n, -1);
  std::vector<NbsComponent> comps;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp_of[s] != -1) continue;
    // breadth-first sweep over suprathreshold adjacency
    std::vector<std::size_t> members;
    std::queue<std::size_t> q;
    q.push(s);
    comp_of[s] = static_cast<int>(comps.size());
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      members.push_back(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (v == u || !keep(u, v)) continue;
        if (comp_of[v] == -1) {
          comp_of[v] = comp_of[s];
          q.push(v);
        }
      }
    }
    NbsComponent c;
    c.nodes = members;
    std::sort(c.nodes.begin(), c.nodes.end());
    for (std::size_t a = 0; a < c.nodes.size(); ++a)
      for (std::size_t b = a + 1; b < c.nodes.size(); ++b)
        if (keep(c.nodes[a], c.nodes[b]))
          c.edges.emplace_back(c.nodes[a], c.nodes[b]);
    // single-node sweeps have no kept edges and are not reported
    if (!c.edges.empty()) comps.push_back(std::move(c));
  }
  std::sort(comps.begin(), comps.end(),
            [](const NbsComponent& a, const NbsComponent& b) {
              return a.size() > b.size();
            });
  return comps;
}

namespace detail {

inline std::size_t max_component_size(
    const std::vector<std::vector<double>>& t, double t_primary,
    NbsTail tail) {
  std::size_t best = 0;
  for (const auto& c : suprathreshold_components(t, t_primary, tail))
    best = std::max(best, c.size());
  return best;
}

}  // namespace detail

// Full NBS test.  Null distribution: maximum suprathreshold component
// size over relabelings of the pooled subjects into the original group
// sizes.  Random mode draws n_perm relabelings with the +1 p-value
// convention; exhaustive mode enumerates every C(n, n_HC) split and
// reports exact enumeration fractions.
inline NbsResult nbs_test(const GroupStack& hc, const GroupStack& ad,
                          double t_primary = 3.0, double alpha = 0.01,
                          std::size_t n_perm = 5000,
                          NbsTail tail = NbsTail::left, std::uint64_t seed = 0,
                          bool exhaustive = false) {
  hc.validate();
  ad.validate();
  if (hc.n_nodes() != ad.n_nodes())
    throw data_error("nbs: group matrix sizes do not match");
  if (!exhaustive && n_perm < 100)
    throw config_error("nbs: need n_perm >= 100 (or exhaustive mode)");
  if (!(t_primary > 0.0)) throw config_error("nbs: t_primary must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw config_error("nbs: alpha must be in (0, 1)");

  NbsResult res;
  res.tail = tail;
  res.t_primary = t_primary;
  res.alpha = alpha;
  res.seed = seed;
  res.exhaustive = exhaustive;

  res.t_matrix = edge_tstats(hc, ad, &res.warnings);
  res.components = suprathreshold_components(res.t_matrix, t_primary, tail);

  const std::size_t n1 = hc.n_subjects();
  const std::size_t n2 = ad.n_subjects();
  const std::size_t n = n1 + n2;
  std::vector<const ConnMatrix*> pool;
  for (const auto& m : hc.matrices) pool.push_back(&m);
  for (const auto& m : ad.matrices) pool.push_back(&m);

  std::vector<std::size_t> null_max;
  if (exhaustive) {
    // enumerate all subject splits via a sorted selection mask
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n1),
              true);
    std::sort(mask.begin(), mask.end());  // canonical start for permutations
    do {
      std::vector<std::size_t> g1, g2;
      for (std::size_t i = 0; i < n; ++i)
        (mask[i] ? g1 : g2).push_back(i);
      const auto t = detail::tstats_for_split(pool, g1, g2, nullptr);
      null_max.push_back(detail::max_component_size(t, t_primary, tail));
    } while (std::next_permutation(mask.begin(), mask.end()));
    res.n_perm = null_max.size();
  } else {
    null_max.assign(n_perm, 0);
    parallel_for(n_perm, [&](std::size_t p) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      rng.shuffle(idx);
      std::vector<std::size_t> g1(idx.begin(),
                                  idx.begin() + static_cast<std::ptrdiff_t>(n1));
      std::vector<std::size_t> g2(idx.begin() + static_cast<std::ptrdiff_t>(n1),
                                  idx.end());
      const auto t = detail::tstats_for_split(pool, g1, g2, nullptr);
      null_max[p] = detail::max_component_size(t, t_primary, tail);
    });
    res.n_perm = n_perm;
  }

  for (auto& comp : res.components) {
    std::size_t count = 0;
    for (std::size_t m : null_max)
      if (m >= comp.size()) ++count;
    if (exhaustive) {
      comp.fwe_p = static_cast<double>(count) /
                   static_cast<double>(null_max.size());
      if (comp.fwe_p == 0.0)
        comp.fwe_p = 1.0 / static_cast<double>(null_max.size());
    } else {
      comp.fwe_p = (1.0 + static_cast<double>(count)) /
                   (1.0 + static_cast<double>(n_perm));
    }
    comp.significant = comp.fwe_p < alpha;
  }
  return res;
}

}  // namespace eispec
