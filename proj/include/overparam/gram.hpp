#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overparam/csv.hpp"
#include "overparam/dataset.hpp"
#include "overparam/errors.hpp"
#include "overparam/parallel.hpp"
#include "overparam/rng.hpp"
#include "overparam/spectral.hpp"

namespace overparam {

enum class GramKind { Cts, SingleW, Dis, AtStep, Perp };

inline const char* to_string(GramKind k) {
  switch (k) {
    case GramKind::Cts: return "cts";
    case GramKind::SingleW: return "single_w";
    case GramKind::Dis: return "dis";
    case GramKind::AtStep: return "at_step";
    case GramKind::Perp: return "perp";
  }
  return "?";
}

/// Tagged symmetric Gram matrix. For the Perp kind the row-indexed raw matrix
/// is asymmetric; `raw_frobenius` keeps its Frobenius norm (the quantity the
/// analysis actually bounds) while `mat` stores the symmetrized version.
struct GramMatrix {
  GramKind kind;
  SymMatrix mat;
  double raw_frobenius;

  Eigen::Index order() const { return mat.order(); }
};

namespace detail {

// Active-pattern vector 1[w^T x_i >= 0]. The boundary w^T x = 0 counts as
// active; the network module uses the same convention.
inline Eigen::VectorXd activation_pattern(const Dataset& ds,
                                          const Eigen::VectorXd& w) {
  Eigen::VectorXd z = ds.X * w;
  Eigen::VectorXd act(ds.n());
  for (Eigen::Index i = 0; i < ds.n(); ++i) act[i] = (z[i] >= 0.0) ? 1.0 : 0.0;
  return act;
}

// Entry value of H^cts. The diagonal is pinned to 1/2: inputs are validated
// unit-norm, and arccos amplifies last-ulp noise in x^T x near 1 into ~1e-8
// errors if evaluated literally.
inline double hcts_entry(double inner, bool diagonal) {
  if (diagonal) return 0.5;
  double z = std::clamp(inner, -1.0, 1.0);
  return z * (std::numbers::pi - std::acos(z)) / (2.0 * std::numbers::pi);
}

}  // namespace detail

/// Continuous Gram matrix: entry (i,j) = x_i^T x_j (pi - arccos(x_i^T x_j)) / (2 pi),
/// the closed form of E_w[ x_i^T x_j 1{w^T x_i >= 0, w^T x_j >= 0} ] for unit inputs.
inline GramMatrix hcts(const Dataset& ds) {
  Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  Eigen::MatrixXd h(ds.n(), ds.n());
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index j = 0; j < ds.n(); ++j)
      h(i, j) = detail::hcts_entry(gram(i, j), i == j);
  SymMatrix m(std::move(h));
  double frob = m.frobenius_norm();
  return {GramKind::Cts, std::move(m), frob};
}

/// Single-weight Gram matrix H(w)_{i,j} = x_i^T x_j 1{w^T x_i >= 0, w^T x_j >= 0}.
inline GramMatrix h_of_w(const Dataset& ds, const Eigen::VectorXd& w) {
  if (w.size() != ds.dim())
    throw InputError("h_of_w: weight length " + std::to_string(w.size()) +
                     " does not match dimension " + std::to_string(ds.dim()));
  Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  Eigen::VectorXd act = detail::activation_pattern(ds, w);
  Eigen::MatrixXd h = gram.cwiseProduct(act * act.transpose());
  SymMatrix m(std::move(h));
  double frob = m.frobenius_norm();
  return {GramKind::SingleW, std::move(m), frob};
}

namespace detail {

// Joint activation counts C_{i,j} = #{r : both i and j active under w_r}.
// Integer accumulation makes the result independent of summation order, so
// parallel evaluation is bit-identical to serial for any thread count.
inline Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>
activation_counts(const Dataset& ds, const Eigen::MatrixXd& weights) {
  using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
  const long m = weights.rows();
  const Eigen::Index n = ds.n();
  constexpr long kBlock = 512;
  const long blocks = (m + kBlock - 1) / kBlock;
  std::vector<CountMatrix> partial(static_cast<std::size_t>(blocks),
                                   CountMatrix::Zero(n, n));
  parallel_blocks(m, kBlock, [&](long b, long lo, long hi) {
    CountMatrix& acc = partial[static_cast<std::size_t>(b)];
    for (long r = lo; r < hi; ++r) {
      Eigen::VectorXd z = ds.X * weights.row(r).transpose();
      std::vector<Eigen::Index> active;
      for (Eigen::Index i = 0; i < n; ++i)
        if (z[i] >= 0.0) active.push_back(i);
      for (Eigen::Index i : active)
        for (Eigen::Index j : active) acc(i, j) += 1;
    }
  });
  CountMatrix total = CountMatrix::Zero(n, n);
  for (const auto& p : partial) total += p;
  return total;
}

}  // namespace detail

/// Discrete Gram matrix H^dis = (1/m) sum_r H(w_r), one weight vector per row.
inline GramMatrix hdis(const Dataset& ds, const Eigen::MatrixXd& weights,
                       GramKind kind = GramKind::Dis) {
  if (weights.rows() < 1) throw InputError("hdis: need at least one weight row");
  if (weights.cols() != ds.dim())
    throw InputError("hdis: weight dimension " + std::to_string(weights.cols()) +
                     " does not match data dimension " + std::to_string(ds.dim()));
  const auto m = static_cast<double>(weights.rows());
  Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  auto counts = detail::activation_counts(ds, weights);
  Eigen::MatrixXd h(ds.n(), ds.n());
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index j = 0; j < ds.n(); ++j)
      h(i, j) = gram(i, j) * (static_cast<double>(counts(i, j)) / m);
  SymMatrix sym(std::move(h));
  double frob = sym.frobenius_norm();
  return {kind, std::move(sym), frob};
}

/// Gram matrix at a training step, H(k): same construction as H^dis evaluated
/// at the current weights.
inline GramMatrix h_at_step(const Dataset& ds, const Eigen::MatrixXd& weights) {
  return hdis(ds, weights, GramKind::AtStep);
}

/// H(k)^perp: the part of H(k) carried by neurons whose pattern on x_i is at
/// risk, S-bar_i = { r : |w_r(0)^T x_i| < R }. The raw matrix is row-indexed
/// and generally asymmetric; we keep its Frobenius norm and symmetrize.
inline GramMatrix h_perp(const Dataset& ds, const Eigen::MatrixXd& w_step,
                         const Eigen::MatrixXd& w_init, double radius) {
  if (w_step.rows() != w_init.rows() || w_step.cols() != w_init.cols())
    throw InputError("h_perp: W(k) and W(0) shapes differ");
  if (w_step.cols() != ds.dim())
    throw InputError("h_perp: weight dimension does not match data dimension");
  if (radius < 0) throw InputError("h_perp: radius must be >= 0");

  const Eigen::Index n = ds.n();
  const long m = w_step.rows();
  Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  for (long r = 0; r < m; ++r) {
    Eigen::VectorXd z0 = ds.X * w_init.row(r).transpose();
    Eigen::VectorXd zk = ds.X * w_step.row(r).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(std::abs(z0[i]) < radius)) continue;  // r in S-bar_i only
      if (!(zk[i] >= 0.0)) continue;
      for (Eigen::Index j = 0; j < n; ++j)
        if (zk[j] >= 0.0) raw(i, j) += gram(i, j);
    }
  }
  raw /= static_cast<double>(m);
  double raw_frob = raw.norm();
  return {GramKind::Perp, SymMatrix(raw), raw_frob};
}

/// Estimates of the data-dependent constants. `gamma` is reported as 0 (the
/// alpha estimate is a sample maximum); `alpha_q95` / `alpha_q99` are
/// empirical quantiles kept for diagnostics only and never fed to the
/// theorem calculators. `degenerate` flags lambda <= 0.
struct AssumptionConstants {
  double lambda = 0.0;
  double alpha = 0.0;
  double beta_var = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  long sample_count = 0;
  bool degenerate = false;
  double alpha_q95 = 0.0;
  double alpha_q99 = 0.0;
};

inline AssumptionConstants estimate_constants(const Dataset& ds, long samples,
                                              RngSeed seed) {
  if (samples < 1) throw InputError("estimate_constants: need samples >= 1");
  const Eigen::Index n = ds.n();
  GramMatrix cts = hcts(ds);

  AssumptionConstants out;
  out.sample_count = samples;
  out.lambda = min_eigenvalue(cts.mat);
  out.degenerate = !(out.lambda > 0.0);
  out.theta = ds.n() >= 2 ? theta(ds) : 0.0;
  out.gamma = 0.0;

  std::vector<double> deviations(static_cast<std::size_t>(samples), 0.0);
  constexpr long kBlock = 64;
  const long blocks = (samples + kBlock - 1) / kBlock;
  std::vector<Eigen::MatrixXd> sq_partial(static_cast<std::size_t>(blocks),
                                          Eigen::MatrixXd::Zero(n, n));
  parallel_blocks(samples, kBlock, [&](long b, long lo, long hi) {
    Eigen::MatrixXd& acc = sq_partial[static_cast<std::size_t>(b)];
    for (long s = lo; s < hi; ++s) {
      SplitRng rng(seed.derive(static_cast<std::uint64_t>(s)));
      Eigen::VectorXd w = rng.gaussian_vector(ds.dim());
      Eigen::MatrixXd dev = h_of_w(ds, w).mat.mat() - cts.mat.mat();
      deviations[static_cast<std::size_t>(s)] = spectral_norm(SymMatrix(dev));
      acc += dev * dev.transpose();
    }
  });
  Eigen::MatrixXd sq_sum = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : sq_partial) sq_sum += p;
  out.beta_var =
      spectral_norm(SymMatrix(sq_sum / static_cast<double>(samples)));

  std::vector<double> sorted = deviations;
  std::sort(sorted.begin(), sorted.end());
  out.alpha = sorted.back();
  auto quantile = [&](double q) {
    auto idx = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(samples))) - 1;
    return sorted[std::min(idx, sorted.size() - 1)];
  };
  out.alpha_q95 = quantile(0.95);
  out.alpha_q99 = quantile(0.99);
  return out;
}

/// Labels from the eigenvector of H^cts with the j-th largest eigenvalue
/// (j = 0 is the top). The sign is fixed so the largest-magnitude component
/// is positive.
inline Eigen::VectorXd eigvec_labels(const Dataset& ds, Eigen::Index j) {
  if (j < 0 || j >= ds.n())
    throw InputError("eigvec_labels: index out of range");
  EigenSystem es = sym_eig(hcts(ds).mat);
  Eigen::VectorXd v = es.vectors.col(ds.n() - 1 - j);
  Eigen::Index argmax = 0;
  v.cwiseAbs().maxCoeff(&argmax);
  if (v[argmax] < 0) v = -v;
  return v;
}

/// n x n numeric grid, no header.
inline void save_gram_csv(const GramMatrix& g, const std::string& path) {
  auto out = open_output(path);
  for (Eigen::Index i = 0; i < g.order(); ++i) {
    for (Eigen::Index j = 0; j < g.order(); ++j) {
      if (j) out << ",";
      out << fmt_double(g.mat(i, j));
    }
    out << "\n";
  }
}

}  // namespace overparam
