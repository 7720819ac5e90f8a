#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace eispec {

// Error taxonomy. Every failure surfaces as one of these so callers (and the
// CLI) can distinguish bad configuration from bad data from numerical trouble.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, layouts, schemas, or option combinations.
class config_error : public error {
 public:
  using error::error;
};

// Malformed, missing, or degenerate input data (flat channels, cadence
// mismatches, non-finite samples).
class data_error : public error {
 public:
  using error::error;
};

// Numerical failures: unstable filters, integration blow-up, impossible
// normalization, fits with too few usable points.
class numeric_error : public error {
 public:
  using error::error;
};

// Degenerate statistics (zero pooled variance, too few permutations).
class stats_error : public error {
 public:
  using error::error;
};

// Classifier misuse or training divergence.
class model_error : public error {
 public:
  using error::error;
};

// File-level problems: missing paths, unparseable cells.
class io_error : public error {
 public:
  using error::error;
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sample variance, n-1 denominator.
inline double variance_of(const std::vector<double>& v) {
  const size_t n = v.size();
  if (n < 2) throw stats_error("variance_of: need at least 2 values");
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) {
    const double d = x - m;
    s += d * d;
  }
  return s / static_cast<double>(n - 1);
}

inline double stddev_of(const std::vector<double>& v) {
  return std::sqrt(variance_of(v));
}

}  // namespace eispec
