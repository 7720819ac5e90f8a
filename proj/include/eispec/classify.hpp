#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eispec/common.hpp"
#include "eispec/features.hpp"
#include "eispec/parallel.hpp"
#include "eispec/rng.hpp"

namespace eispec {

// Window-level classification table: one row per epoch, labels 0 = HC,
// 1 = AD, subject ids for leakage-free splitting.
struct Dataset {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  std::vector<std::string> subject;
  std::vector<std::string> feature_names;

  std::size_t size() const { return x.size(); }
  std::size_t n_features() const { return x.empty() ? 0 : x[0].size(); }

  void validate() const {
    if (x.empty()) throw data_error("classify: empty dataset");
    if (y.size() != x.size() || subject.size() != x.size())
      throw data_error("classify: row/label/subject count mismatch");
    const std::size_t f = x[0].size();
    if (f == 0) throw data_error("classify: zero-width feature rows");
    if (!feature_names.empty() && feature_names.size() != f)
      throw data_error("classify: feature name count mismatch");
    std::map<std::string, int> subject_label;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].size() != f) throw data_error("classify: ragged feature rows");
      if (!all_finite(x[i]))
        throw data_error("classify: non-finite feature value");
      if (y[i] != 0 && y[i] != 1)
        throw data_error("classify: labels must be 0 (HC) or 1 (AD)");
      auto [it, inserted] = subject_label.emplace(subject[i], y[i]);
      if (!inserted && it->second != y[i])
        throw data_error("classify: subject '" + subject[i] +
                         "' appears with both labels");
    }
  }
};

inline Dataset dataset_from_features(const std::vector<FeatureVector>& fvs) {
  Dataset d;
  for (const auto& fv : fvs) {
    fv.validate();
    d.x.push_back(fv.values);
    d.y.push_back(fv.label == GroupLabel::AD ? 1 : 0);
    d.subject.push_back(fv.subject_id);
    if (d.feature_names.empty()) d.feature_names = fv.names;
  }
  d.validate();
  return d;
}

// Min-max normalization to [0, 1] with training-set statistics;
// constant features map to 0.5.
struct MinMaxScaler {
  std::vector<double> lo, hi;

  static MinMaxScaler fit(const Dataset& d,
                          const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw data_error("classify: scaler needs rows");
    MinMaxScaler s;
    const std::size_t f = d.n_features();
    s.lo.assign(f, std::numeric_limits<double>::infinity());
    s.hi.assign(f, -std::numeric_limits<double>::infinity());
    for (std::size_t r : rows)
      for (std::size_t j = 0; j < f; ++j) {
        s.lo[j] = std::min(s.lo[j], d.x[r][j]);
        s.hi[j] = std::max(s.hi[j], d.x[r][j]);
      }
    return s;
  }

  std::vector<double> transform_row(const std::vector<double>& row,
                                    std::size_t* clipped = nullptr) const {
    if (row.size() != lo.size())
      throw data_error("classify: scaler width mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double span = hi[j] - lo[j];
      double v = span > 0.0 ? (row[j] - lo[j]) / span : 0.5;
      if (v < 0.0 || v > 1.0) {
        if (clipped) ++*clipped;
        v = std::min(1.0, std::max(0.0, v));
      }
      out[j] = v;
    }
    return out;
  }

  std::vector<std::vector<double>> transform(
      const Dataset& d, const std::vector<std::size_t>& rows,
      std::size_t* clipped = nullptr) const {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(transform_row(d.x[r], clipped));
    return out;
  }
};

// Binary spike train block: T time steps x B rows x F features.
struct SpikeTensor {
  std::size_t T = 0, B = 0, F = 0;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(std::size_t t, std::size_t b, std::size_t f) const {
    return bits[(t * B + b) * F + f];
  }

  void validate() const {
    if (bits.size() != T * B * F)
      throw data_error("classify: spike tensor shape mismatch");
    for (auto v : bits)
      if (v > 1) throw data_error("classify: spike entries must be 0/1");
  }
};

// Bernoulli rate encoding: each (t, row, feature) spikes independently
// with probability equal to the normalized feature value.  Values
// outside [0, 1] are clipped and reported as warnings.
inline SpikeTensor rate_encode(const std::vector<std::vector<double>>& rows,
                               std::size_t T, std::uint64_t seed,
                               std::vector<std::string>* warnings = nullptr) {
  if (rows.empty() || rows[0].empty())
    throw data_error("classify: nothing to encode");
  if (T == 0) throw config_error("classify: need T >= 1 time steps");
  SpikeTensor s;
  s.T = T;
  s.B = rows.size();
  s.F = rows[0].size();
  s.bits.assign(s.T * s.B * s.F, 0);
  std::size_t clipped = 0;
  Rng rng(derive_seed(seed, 0xEC0DE));
  for (std::size_t t = 0; t < s.T; ++t)
    for (std::size_t b = 0; b < s.B; ++b) {
      const auto& row = rows[b];
      if (row.size() != s.F) throw data_error("classify: ragged encode batch");
      for (std::size_t f = 0; f < s.F; ++f) {
        double p = row[f];
        if (!std::isfinite(p)) throw data_error("classify: non-finite value");
        if (p < 0.0 || p > 1.0) {
          ++clipped;
          p = std::min(1.0, std::max(0.0, p));
        }
        s.bits[(t * s.B + b) * s.F + f] = rng.bernoulli(p) ? 1 : 0;
      }
    }
  if (clipped > 0 && warnings)
    warnings->push_back("rate_encode: clipped " + std::to_string(clipped) +
                        " values outside [0, 1]");
  return s;
}

struct SnnHyper {
  std::size_t epochs = 40;
  std::size_t T = 25;
  std::size_t B = 128;
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 64;
  double lr = 1e-3;
  double k = 25.0;  // surrogate sigmoid steepness
  double beta = 0.9;
  double threshold = 1.0;
  std::uint64_t seed = 0;
};

// Three weight layers of leaky integrate-and-fire units; spikes reset
// the membrane by threshold subtraction.
struct SnnModel {
  Eigen::MatrixXd W1, W2, W3;  // H1 x F, H2 x H1, 2 x H2
  double beta = 0.9;
  double threshold = 1.0;
  double k = 25.0;

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0))
      throw model_error("classify: beta must be in (0, 1)");
    if (!(threshold > 0.0) || !(k > 0.0))
      throw model_error("classify: threshold and k must be positive");
    if (W1.size() == 0 || W2.size() == 0 || W3.size() == 0 ||
        W2.cols() != W1.rows() || W3.cols() != W2.rows())
      throw model_error("classify: inconsistent layer shapes");
    if (!W1.allFinite() || !W2.allFinite() || !W3.allFinite())
      throw model_error("classify: non-finite weights");
  }
};

namespace detail {

// Per-layer state history of one forward pass (needed for BPTT).
struct SnnTrace {
  // u[t] is the pre-reset membrane at step t; s[t] the emitted spikes
  // (binary, or sigmoid activations on the smoothed twin).
  std::vector<Eigen::MatrixXd> u1, s1, u2, s2, u3, s3;
  Eigen::MatrixXd counts;  // B x 2 accumulated output activity
};

// Forward pass; `smooth` replaces the hard spike by the surrogate
// sigmoid itself (the differentiable twin used in gradient checks).
inline SnnTrace snn_run(const SpikeTensor& in, const SnnModel& m,
                        bool smooth) {
  m.validate();
  if (static_cast<std::size_t>(m.W1.cols()) != in.F)
    throw model_error("classify: input width does not match layer 1");
  const std::size_t T = in.T, B = in.B, F = in.F;
  const auto H1 = m.W1.rows(), H2 = m.W2.rows(), C = m.W3.rows();
  SnnTrace tr;
  Eigen::MatrixXd u1 = Eigen::MatrixXd::Zero(B, H1);
  Eigen::MatrixXd u2 = Eigen::MatrixXd::Zero(B, H2);
  Eigen::MatrixXd u3 = Eigen::MatrixXd::Zero(B, C);
  tr.counts = Eigen::MatrixXd::Zero(B, C);

  auto fire = [&](const Eigen::MatrixXd& u) {
    if (smooth)
      return Eigen::MatrixXd(u.unaryExpr([&](double v) {
        const double x = v - m.threshold;
        return x / (1.0 + m.k * std::abs(x));
      }));
    return Eigen::MatrixXd(
        u.unaryExpr([&](double v) { return v > m.threshold ? 1.0 : 0.0; }));
  };

  Eigen::MatrixXd xt(B, F);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < F; ++f)
        xt(b, f) = static_cast<double>(in.at(t, b, f));

    u1 = m.beta * u1 + xt * m.W1.transpose();
    Eigen::MatrixXd s1t = fire(u1);
    tr.u1.push_back(u1);
    tr.s1.push_back(s1t);
    u1 -= m.threshold * s1t;

    u2 = m.beta * u2 + s1t * m.W2.transpose();
    Eigen::MatrixXd s2t = fire(u2);
    tr.u2.push_back(u2);
    tr.s2.push_back(s2t);
    u2 -= m.threshold * s2t;

    u3 = m.beta * u3 + s2t * m.W3.transpose();
    Eigen::MatrixXd s3t = fire(u3);
    tr.u3.push_back(u3);
    tr.s3.push_back(s3t);
    u3 -= m.threshold * s3t;

    tr.counts += s3t;
  }
  return tr;
}

struct SnnGrads {
  Eigen::MatrixXd dW1, dW2, dW3;
};

// Backpropagation through time with the sigmoidal surrogate standing in
// for the spike nonlinearity: dS/du = 1 / (1 + k|u - th|)^2, the slope
// of the fast sigmoid (u - th) / (1 + k|u - th|).  Its polynomial tail
// keeps gradients alive away from threshold, where the logistic slope
// at k = 25 underflows.  On the smoothed twin this gradient is exact.
inline SnnGrads snn_backward(const SpikeTensor& in, const SnnModel& m,
                             const SnnTrace& tr,
                             const Eigen::MatrixXd& dcounts) {
  const std::size_t T = in.T, B = in.B, F = in.F;
  SnnGrads g;
  g.dW1 = Eigen::MatrixXd::Zero(m.W1.rows(), m.W1.cols());
  g.dW2 = Eigen::MatrixXd::Zero(m.W2.rows(), m.W2.cols());
  g.dW3 = Eigen::MatrixXd::Zero(m.W3.rows(), m.W3.cols());

  auto surrogate = [&](const Eigen::MatrixXd& u) {
    return Eigen::MatrixXd(u.unaryExpr([&](double v) {
      const double a = 1.0 + m.k * std::abs(v - m.threshold);
      return 1.0 / (a * a);
    }));
  };

  Eigen::MatrixXd du1_next = Eigen::MatrixXd::Zero(B, m.W1.rows());
  Eigen::MatrixXd du2_next = Eigen::MatrixXd::Zero(B, m.W2.rows());
  Eigen::MatrixXd du3_next = Eigen::MatrixXd::Zero(B, m.W3.rows());
  Eigen::MatrixXd xt(B, F);

  for (std::size_t ti = T; ti-- > 0;) {
    const Eigen::MatrixXd sg3 = surrogate(tr.u3[ti]);
    // dL/dS3 = dcounts; reset path contributes (1 - th*sg) via u_post
    Eigen::MatrixXd du3 =
        dcounts.cwiseProduct(sg3) +
        (m.beta * du3_next).cwiseProduct(
            Eigen::MatrixXd::Ones(B, sg3.cols()) - m.threshold * sg3);
    g.dW3 += du3.transpose() * tr.s2[ti];

    Eigen::MatrixXd ds2 = du3 * m.W3;
    const Eigen::MatrixXd sg2 = surrogate(tr.u2[ti]);
    Eigen::MatrixXd du2 =
        ds2.cwiseProduct(sg2) +
        (m.beta * du2_next).cwiseProduct(
            Eigen::MatrixXd::Ones(B, sg2.cols()) - m.threshold * sg2);
    g.dW2 += du2.transpose() * tr.s1[ti];

    Eigen::MatrixXd ds1 = du2 * m.W2;
    const Eigen::MatrixXd sg1 = surrogate(tr.u1[ti]);
    Eigen::MatrixXd du1 =
        ds1.cwiseProduct(sg1) +
        (m.beta * du1_next).cwiseProduct(
            Eigen::MatrixXd::Ones(B, sg1.cols()) - m.threshold * sg1);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < F; ++f)
        xt(b, f) = static_cast<double>(in.at(ti, b, f));
    g.dW1 += du1.transpose() * xt;

    du1_next = du1;
    du2_next = du2;
    du3_next = du3;
  }
  return g;
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = z;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// mean cross-entropy of softmax(logits) against labels; dlogits out.
inline double ce_loss_grad(const Eigen::MatrixXd& logits,
                           const std::vector<int>& labels,
                           Eigen::MatrixXd& dlogits) {
  const Eigen::MatrixXd p = softmax_rows(logits);
  const double nb = static_cast<double>(logits.rows());
  double loss = 0.0;
  dlogits = p;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int yi = labels[static_cast<std::size_t>(i)];
    loss -= std::log(std::max(p(i, yi), 1e-300));
    dlogits(i, yi) -= 1.0;
  }
  dlogits /= nb;
  return loss / nb;
}

struct AdamState {
  Eigen::MatrixXd m, v;
  void init(const Eigen::MatrixXd& w) {
    m = Eigen::MatrixXd::Zero(w.rows(), w.cols());
    v = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  }
  void step(Eigen::MatrixXd& w, const Eigen::MatrixXd& g, double lr,
            std::size_t t) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    w -= (lr / bc1) * m.cwiseQuotient(
                          ((v / bc2).cwiseSqrt().array() + eps).matrix());
  }
};

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     double scale, Rng& rng) {
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      w(i, j) = rng.uniform(-scale, scale);
  return w;
}

}  // namespace detail

// Output spike counts per class (B x 2), the classification scores.
inline Eigen::MatrixXd snn_forward(const SpikeTensor& in, const SnnModel& m) {
  return detail::snn_run(in, m, false).counts;
}

// Probability of the AD class per row, averaged over n_eval independent
// encodings (the encoding itself is stochastic).
inline std::vector<double> snn_scores(
    const SnnModel& m, const std::vector<std::vector<double>>& rows,
    std::size_t T, std::uint64_t seed, std::size_t n_eval = 3) {
  if (n_eval == 0) throw config_error("classify: n_eval must be >= 1");
  std::vector<double> out(rows.size(), 0.0);
  for (std::size_t e = 0; e < n_eval; ++e) {
    const SpikeTensor spikes = rate_encode(rows, T, derive_seed(seed, e));
    const Eigen::MatrixXd p = detail::softmax_rows(snn_forward(spikes, m));
    for (std::size_t i = 0; i < rows.size(); ++i)
      out[i] += p(static_cast<Eigen::Index>(i), 1);
  }
  for (double& v : out) v /= static_cast<double>(n_eval);
  return out;
}

// Surrogate-gradient training over mini-batches; rows must already be
// normalized to [0, 1].
inline SnnModel train_snn(const std::vector<std::vector<double>>& rows,
                          const std::vector<int>& labels,
                          const SnnHyper& hyper) {
  if (rows.empty() || rows.size() != labels.size())
    throw data_error("classify: bad training set");
  bool has0 = false, has1 = false;
  for (int v : labels) (v == 0 ? has0 : has1) = true;
  if (!has0 || !has1)
    throw data_error("classify: training set needs both classes");

  const std::size_t F = rows[0].size();
  SnnModel m;
  m.beta = hyper.beta;
  m.threshold = hyper.threshold;
  m.k = hyper.k;
  Rng wrng(derive_seed(hyper.seed, 1));
  m.W1 = detail::random_matrix(hyper.hidden1, F,
                               1.0 / std::sqrt(static_cast<double>(F)), wrng);
  m.W2 = detail::random_matrix(
      hyper.hidden2, hyper.hidden1,
      1.0 / std::sqrt(static_cast<double>(hyper.hidden1)), wrng);
  m.W3 = detail::random_matrix(
      2, hyper.hidden2, 1.0 / std::sqrt(static_cast<double>(hyper.hidden2)),
      wrng);

  detail::AdamState a1, a2, a3;
  a1.init(m.W1);
  a2.init(m.W2);
  a3.init(m.W3);
  std::size_t adam_t = 0;

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng erng(derive_seed(hyper.seed, 2, epoch));
    erng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += hyper.B) {
      const std::size_t stop = std::min(order.size(), start + hyper.B);
      std::vector<std::vector<double>> bx;
      std::vector<int> by;
      for (std::size_t i = start; i < stop; ++i) {
        bx.push_back(rows[order[i]]);
        by.push_back(labels[order[i]]);
      }
      const SpikeTensor spikes =
          rate_encode(bx, hyper.T, derive_seed(hyper.seed, 3, epoch * 1000 +
                                                               start));
      const detail::SnnTrace tr = detail::snn_run(spikes, m, false);
      Eigen::MatrixXd dcounts;
      const double loss = detail::ce_loss_grad(tr.counts, by, dcounts);
      if (!std::isfinite(loss))
        throw model_error("classify: training diverged at epoch " +
                          std::to_string(epoch));
      const detail::SnnGrads g = detail::snn_backward(spikes, m, tr, dcounts);
      ++adam_t;
      a1.step(m.W1, g.dW1, hyper.lr, adam_t);
      a2.step(m.W2, g.dW2, hyper.lr, adam_t);
      a3.step(m.W3, g.dW3, hyper.lr, adam_t);
      if (!m.W1.allFinite() || !m.W2.allFinite() || !m.W3.allFinite())
        throw model_error("classify: training diverged at epoch " +
                          std::to_string(epoch));
    }
  }
  m.validate();
  return m;
}

struct AnnHyper {
  std::size_t epochs = 60;
  std::size_t B = 128;
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

// Dense rectifier baseline trained on the same features.
struct AnnModel {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;

  void validate() const {
    if (W1.size() == 0 || W2.cols() != W1.rows() || W3.cols() != W2.rows())
      throw model_error("classify: inconsistent layer shapes");
    if (!W1.allFinite() || !W2.allFinite() || !W3.allFinite() ||
        !b1.allFinite() || !b2.allFinite() || !b3.allFinite())
      throw model_error("classify: non-finite weights");
  }
};

inline Eigen::MatrixXd ann_logits(const AnnModel& m,
                                  const std::vector<std::vector<double>>& rows) {
  m.validate();
  if (rows.empty()) throw data_error("classify: nothing to score");
  if (static_cast<Eigen::Index>(rows[0].size()) != m.W1.cols())
    throw model_error("classify: input width does not match layer 1");
  Eigen::MatrixXd x(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
  Eigen::MatrixXd h1 =
      ((x * m.W1.transpose()).rowwise() + m.b1.transpose()).cwiseMax(0.0);
  Eigen::MatrixXd h2 =
      ((h1 * m.W2.transpose()).rowwise() + m.b2.transpose()).cwiseMax(0.0);
  return (h2 * m.W3.transpose()).rowwise() + m.b3.transpose();
}

inline std::vector<double> ann_scores(
    const AnnModel& m, const std::vector<std::vector<double>>& rows) {
  const Eigen::MatrixXd p = detail::softmax_rows(ann_logits(m, rows));
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = p(static_cast<Eigen::Index>(i), 1);
  return out;
}

inline AnnModel train_ann(const std::vector<std::vector<double>>& rows,
                          const std::vector<int>& labels,
                          const AnnHyper& hyper) {
  if (rows.empty() || rows.size() != labels.size())
    throw data_error("classify: bad training set");
  bool has0 = false, has1 = false;
  for (int v : labels) (v == 0 ? has0 : has1) = true;
  if (!has0 || !has1)
    throw data_error("classify: training set needs both classes");

  const std::size_t F = rows[0].size();
  AnnModel m;
  Rng wrng(derive_seed(hyper.seed, 11));
  m.W1 = detail::random_matrix(hyper.hidden1, F,
                               std::sqrt(2.0 / static_cast<double>(F)), wrng);
  m.W2 = detail::random_matrix(
      hyper.hidden2, hyper.hidden1,
      std::sqrt(2.0 / static_cast<double>(hyper.hidden1)), wrng);
  m.W3 = detail::random_matrix(
      2, hyper.hidden2, std::sqrt(2.0 / static_cast<double>(hyper.hidden2)),
      wrng);
  m.b1 = Eigen::VectorXd::Zero(hyper.hidden1);
  m.b2 = Eigen::VectorXd::Zero(hyper.hidden2);
  m.b3 = Eigen::VectorXd::Zero(2);

  detail::AdamState a1, a2, a3;
  a1.init(m.W1);
  a2.init(m.W2);
  a3.init(m.W3);
  detail::AdamState ab1, ab2, ab3;
  ab1.init(m.b1.transpose());
  ab2.init(m.b2.transpose());
  ab3.init(m.b3.transpose());
  std::size_t adam_t = 0;

  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    Rng erng(derive_seed(hyper.seed, 12, epoch));
    erng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += hyper.B) {
      const std::size_t stop = std::min(order.size(), start + hyper.B);
      const std::size_t nb = stop - start;
      Eigen::MatrixXd x(nb, F);
      std::vector<int> by(nb);
      for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j < F; ++j) x(i, j) = rows[order[start + i]][j];
        by[i] = labels[order[start + i]];
      }
      const Eigen::MatrixXd z1 =
          (x * m.W1.transpose()).rowwise() + m.b1.transpose();
      const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
      const Eigen::MatrixXd z2 =
          (h1 * m.W2.transpose()).rowwise() + m.b2.transpose();
      const Eigen::MatrixXd h2 = z2.cwiseMax(0.0);
      const Eigen::MatrixXd z3 =
          (h2 * m.W3.transpose()).rowwise() + m.b3.transpose();

      Eigen::MatrixXd dz3;
      const double loss = detail::ce_loss_grad(z3, by, dz3);
      if (!std::isfinite(loss))
        throw model_error("classify: training diverged at epoch " +
                          std::to_string(epoch));

      const Eigen::MatrixXd dW3 = dz3.transpose() * h2;
      const Eigen::VectorXd db3 = dz3.colwise().sum();
      Eigen::MatrixXd dh2 = dz3 * m.W3;
      Eigen::MatrixXd dz2 =
          dh2.cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
      const Eigen::MatrixXd dW2 = dz2.transpose() * h1;
      const Eigen::VectorXd db2 = dz2.colwise().sum();
      Eigen::MatrixXd dh1 = dz2 * m.W2;
      Eigen::MatrixXd dz1 =
          dh1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
      const Eigen::MatrixXd dW1 = dz1.transpose() * x;
      const Eigen::VectorXd db1 = dz1.colwise().sum();

      ++adam_t;
      a1.step(m.W1, dW1, hyper.lr, adam_t);
      a2.step(m.W2, dW2, hyper.lr, adam_t);
      a3.step(m.W3, dW3, hyper.lr, adam_t);
      Eigen::MatrixXd tb;
      tb = m.b1.transpose();
      ab1.step(tb, db1.transpose(), hyper.lr, adam_t);
      m.b1 = tb.transpose();
      tb = m.b2.transpose();
      ab2.step(tb, db2.transpose(), hyper.lr, adam_t);
      m.b2 = tb.transpose();
      tb = m.b3.transpose();
      ab3.step(tb, db3.transpose(), hyper.lr, adam_t);
      m.b3 = tb.transpose();
      if (!m.W1.allFinite() || !m.W2.allFinite() || !m.W3.allFinite())
        throw model_error("classify: training diverged at epoch " +
                          std::to_string(epoch));
    }
  }
  m.validate();
  return m;
}

// Area under the ROC curve by the rank statistic with tie averaging.
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw stats_error("classify: score/label size mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (int v : labels) {
    if (v == 1)
      ++n_pos;
    else if (v == 0)
      ++n_neg;
    else
      throw stats_error("classify: labels must be 0/1");
  }
  if (n_pos == 0 || n_neg == 0)
    throw stats_error("classify: AUC needs both classes");

  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // average ranks over tie groups
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) +
                       1.0;
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = avg;
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  for (std::size_t r = 0; r < scores.size(); ++r)
    if (labels[r] == 1) rank_sum_pos += rank[r];
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Subject-level stratified k-fold: subjects (not epochs) are dealt into
// folds per class, so no subject's epochs appear in both sides.
struct FoldSplit {
  std::vector<std::size_t> train_rows, test_rows;
};

inline std::vector<FoldSplit> subject_folds(const Dataset& d, std::size_t k,
                                            std::uint64_t seed) {
  d.validate();
  if (k < 2) throw config_error("classify: need k >= 2 folds");
  std::map<std::string, int> subj_label;
  for (std::size_t i = 0; i < d.size(); ++i) subj_label[d.subject[i]] = d.y[i];

  std::vector<std::string> subj0, subj1;
  for (const auto& [s, lab] : subj_label) (lab == 0 ? subj0 : subj1).push_back(s);
  if (subj0.size() < k || subj1.size() < k)
    throw data_error("classify: need at least k subjects per class");

  std::map<std::string, std::size_t> fold_of;
  Rng rng(derive_seed(seed, 21));
  rng.shuffle(subj0);
  rng.shuffle(subj1);
  for (std::size_t i = 0; i < subj0.size(); ++i) fold_of[subj0[i]] = i % k;
  for (std::size_t i = 0; i < subj1.size(); ++i) fold_of[subj1[i]] = i % k;

  std::vector<FoldSplit> folds(k);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const std::size_t f = fold_of[d.subject[i]];
    for (std::size_t fi = 0; fi < k; ++fi)
      (fi == f ? folds[fi].test_rows : folds[fi].train_rows).push_back(i);
  }
  return folds;
}

struct CvResult {
  std::vector<double> fold_aucs;
  double mean_auc = 0.0;
};

enum class ModelKind { snn, ann };

// Subject-disjoint stratified cross-validation; scaler statistics come
// from each fold's training rows only.
inline CvResult cross_validate(ModelKind kind, const Dataset& d,
                               const SnnHyper& snn_hyper,
                               const AnnHyper& ann_hyper, std::size_t k,
                               std::uint64_t seed) {
  const auto folds = subject_folds(d, k, seed);
  CvResult res;
  res.fold_aucs.assign(k, 0.0);
  parallel_for(k, [&](std::size_t f) {
    const auto& fold = folds[f];
    const MinMaxScaler scaler = MinMaxScaler::fit(d, fold.train_rows);
    const auto xtr = scaler.transform(d, fold.train_rows);
    const auto xte = scaler.transform(d, fold.test_rows);
    std::vector<int> ytr, yte;
    for (std::size_t r : fold.train_rows) ytr.push_back(d.y[r]);
    for (std::size_t r : fold.test_rows) yte.push_back(d.y[r]);

    std::vector<double> scores;
    if (kind == ModelKind::snn) {
      SnnHyper h = snn_hyper;
      h.seed = derive_seed(seed, 31, f);
      const SnnModel m = train_snn(xtr, ytr, h);
      scores = snn_scores(m, xte, h.T, derive_seed(seed, 32, f));
    } else {
      AnnHyper h = ann_hyper;
      h.seed = derive_seed(seed, 31, f);
      const AnnModel m = train_ann(xtr, ytr, h);
      scores = ann_scores(m, xte);
    }
    res.fold_aucs[f] = roc_auc(scores, yte);
  });
  for (double a : res.fold_aucs) res.mean_auc += a;
  res.mean_auc /= static_cast<double>(k);
  return res;
}

// Feature attribution over a generic batch scorer (positive-class
// score per row).
using ScoreFn =
    std::function<std::vector<double>(const std::vector<std::vector<double>>&)>;

struct AttributionReport {
  std::string method;
  std::vector<double> scores;        // per feature
  std::vector<std::size_t> ranking;  // descending by score
  std::vector<std::string> feature_names;

  void validate() const {
    if (ranking.size() != scores.size())
      throw data_error("classify: ranking/score size mismatch");
    std::vector<bool> seen(ranking.size(), false);
    for (std::size_t r : ranking) {
      if (r >= ranking.size() || seen[r])
        throw data_error("classify: ranking is not a permutation");
      seen[r] = true;
    }
  }
};

namespace detail {

inline std::vector<std::size_t> rank_descending(
    const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  return order;
}

}  // namespace detail

// Batch scorers bound to trained models; constructing one from an
// untrained (empty) model fails.
inline ScoreFn snn_score_fn(const SnnModel& m, std::size_t T,
                            std::uint64_t seed, std::size_t n_eval = 3) {
  m.validate();
  return [m, T, seed, n_eval](const std::vector<std::vector<double>>& rows) {
    return snn_scores(m, rows, T, seed, n_eval);
  };
}

inline ScoreFn ann_score_fn(const AnnModel& m) {
  m.validate();
  return [m](const std::vector<std::vector<double>>& rows) {
    return ann_scores(m, rows);
  };
}

// AUC drop when one feature column is shuffled, averaged over repeats.
inline AttributionReport permutation_importance(
    const ScoreFn& score_fn, const std::vector<std::vector<double>>& x,
    const std::vector<int>& y, const std::vector<std::string>& names,
    std::size_t repeats, std::uint64_t seed) {
  if (x.empty()) throw data_error("classify: empty attribution set");
  if (repeats == 0) throw config_error("classify: need repeats >= 1");
  const std::size_t F = x[0].size();
  if (!names.empty() && names.size() != F)
    throw data_error("classify: feature name count mismatch");
  const double base = roc_auc(score_fn(x), y);

  AttributionReport rep;
  rep.method = "permutation";
  rep.feature_names = names;
  rep.scores.assign(F, 0.0);
  parallel_for(F, [&](std::size_t j) {
    double drop = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::vector<std::size_t> perm(x.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      Rng rng(derive_seed(seed, j, r));
      rng.shuffle(perm);
      std::vector<std::vector<double>> shuffled = x;
      for (std::size_t i = 0; i < x.size(); ++i)
        shuffled[i][j] = x[perm[i]][j];
      drop += base - roc_auc(score_fn(shuffled), y);
    }
    rep.scores[j] = drop / static_cast<double>(repeats);
  });
  rep.ranking = detail::rank_descending(rep.scores);
  rep.validate();
  return rep;
}

// Monte Carlo Shapley values with a mean-imputation baseline: random
// feature orders, marginal score change when each feature's true value
// replaces its baseline.  Importance is the mean |contribution|.
inline AttributionReport sampled_shapley(
    const ScoreFn& score_fn, const std::vector<std::vector<double>>& x,
    const std::vector<std::string>& names, std::size_t n_samples,
    std::uint64_t seed) {
  if (x.empty()) throw data_error("classify: empty attribution set");
  if (n_samples == 0) throw config_error("classify: need n_samples >= 1");
  const std::size_t F = x[0].size();
  if (!names.empty() && names.size() != F)
    throw data_error("classify: feature name count mismatch");

  std::vector<double> baseline(F, 0.0);
  for (const auto& row : x)
    for (std::size_t j = 0; j < F; ++j) baseline[j] += row[j];
  for (double& v : baseline) v /= static_cast<double>(x.size());

  std::vector<double> acc(F, 0.0);
  std::vector<std::size_t> order(F);
  for (std::size_t s = 0; s < n_samples; ++s) {
    Rng rng(derive_seed(seed, 41, s));
    const std::size_t row = rng.uniform_index(x.size());
    for (std::size_t j = 0; j < F; ++j) order[j] = j;
    rng.shuffle(order);

    // batch of F+1 prefixes of the permutation
    std::vector<std::vector<double>> batch(F + 1, baseline);
    std::vector<double> cur = baseline;
    for (std::size_t step = 0; step < F; ++step) {
      cur[order[step]] = x[row][order[step]];
      batch[step + 1] = cur;
    }
    const std::vector<double> vals = score_fn(batch);
    for (std::size_t step = 0; step < F; ++step)
      acc[order[step]] += std::abs(vals[step + 1] - vals[step]);
  }

  AttributionReport rep;
  rep.method = "sampled-shapley";
  rep.feature_names = names;
  rep.scores.assign(F, 0.0);
  for (std::size_t j = 0; j < F; ++j)
    rep.scores[j] = acc[j] / static_cast<double>(n_samples);
  rep.ranking = detail::rank_descending(rep.scores);
  rep.validate();
  return rep;
}

}  // namespace eispec
