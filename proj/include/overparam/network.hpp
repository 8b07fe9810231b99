#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overparam/csv.hpp"
#include "overparam/dataset.hpp"
#include "overparam/errors.hpp"
#include "overparam/rng.hpp"

namespace overparam {

/// Two-layer ReLU network f(W, x, a) = (1/sqrt(m)) sum_r a_r max(w_r^T x, 0).
/// Only W trains; the signs a and the init snapshot W0 are fixed after init.
struct NetworkState {
  Eigen::MatrixXd W;   // m x d, row r = w_r
  Eigen::MatrixXd W0;  // init snapshot, immutable
  Eigen::VectorXd a;   // m signs in {-1, +1}
  double kappa = 1.0;

  Eigen::Index width() const { return W.rows(); }
  Eigen::Index dim() const { return W.cols(); }
};

/// w_r(0) ~ N(0, kappa^2 I_d) i.i.d., a_r uniform on {-1, +1}.
inline NetworkState init_network(Eigen::Index m, Eigen::Index d, double kappa,
                                 RngSeed seed) {
  if (m < 1) throw InputError("init_network: width must be >= 1");
  if (d < 1) throw InputError("init_network: dimension must be >= 1");
  if (!(kappa > 0)) throw InputError("init_network: kappa must be > 0");
  SplitRng rng(seed);
  NetworkState net;
  net.kappa = kappa;
  net.W = rng.gaussian_rows(m, d, kappa);
  net.a.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) net.a[r] = rng.sign();
  net.W0 = net.W;
  return net;
}

namespace detail {

inline void check_dims(const NetworkState& net, const Dataset& ds) {
  if (net.dim() != ds.dim())
    throw InputError("network dimension " + std::to_string(net.dim()) +
                     " does not match data dimension " +
                     std::to_string(ds.dim()));
}

// Pre-activations z = X W^T (n x m); everything else derives from it.
inline Eigen::MatrixXd preactivations(const NetworkState& net,
                                      const Dataset& ds) {
  return ds.X * net.W.transpose();
}

inline Eigen::VectorXd predictions_from(const Eigen::MatrixXd& z,
                                        const Eigen::VectorXd& a) {
  double scale = 1.0 / std::sqrt(static_cast<double>(a.size()));
  return scale * (z.cwiseMax(0.0) * a);
}

// Indicator mask 1[z >= 0]; the boundary counts as active, matching the
// gram module (load-bearing for the no-flip step identity).
inline Eigen::MatrixXd active_mask(const Eigen::MatrixXd& z) {
  return (z.array() >= 0.0).cast<double>().matrix();
}

// H at the current weights from an n x m mask: gram .* (mask mask^T) / m.
inline Eigen::MatrixXd h_from_mask(const Dataset& ds,
                                   const Eigen::MatrixXd& mask) {
  Eigen::MatrixXd gram = ds.X * ds.X.transpose();
  return gram.cwiseProduct((mask * mask.transpose()) /
                           static_cast<double>(mask.cols()));
}

inline Eigen::MatrixXd gradient_from(const NetworkState& net, const Dataset& ds,
                                     const Eigen::VectorXd& residual,
                                     const Eigen::MatrixXd& mask,
                                     double reg_beta) {
  const auto m = static_cast<double>(net.width());
  // B_{i,r} = residual_i * a_r * 1[w_r^T x_i >= 0]
  Eigen::MatrixXd b = mask.array().colwise() * residual.array();
  b = b.array().rowwise() * net.a.transpose().array();
  Eigen::MatrixXd grad = (b.transpose() * ds.X) / std::sqrt(m);
  if (reg_beta > 0) grad += (reg_beta / m) * (net.W - net.W0);
  return grad;
}

}  // namespace detail

/// Prediction vector u_i = f(W, x_i, a).
inline Eigen::VectorXd forward(const NetworkState& net, const Dataset& ds) {
  detail::check_dims(net, ds);
  return detail::predictions_from(detail::preactivations(net, ds), net.a);
}

/// Exact gradient, row r = (1/sqrt(m)) sum_i (u_i - y_i) a_r x_i 1[w_r^T x_i >= 0],
/// plus (reg_beta/m)(w_r - w_r(0)) when reg_beta > 0.
inline Eigen::MatrixXd gradient(const NetworkState& net, const Dataset& ds,
                                const Eigen::VectorXd& y, double reg_beta = 0.0) {
  detail::check_dims(net, ds);
  if (y.size() != ds.n())
    throw InputError("gradient: label length does not match dataset");
  Eigen::MatrixXd z = detail::preactivations(net, ds);
  Eigen::VectorXd residual = detail::predictions_from(z, net.a) - y;
  return detail::gradient_from(net, ds, residual, detail::active_mask(z),
                               reg_beta);
}

/// L(W) = (1/2) sum_i (y_i - u_i)^2, plus (reg_beta/(2m)) ||W - W0||_F^2 when
/// regularization is enabled.
inline double loss(const NetworkState& net, const Dataset& ds,
                   const Eigen::VectorXd& y, double reg_beta = 0.0) {
  Eigen::VectorXd u = forward(net, ds);
  double value = 0.5 * (y - u).squaredNorm();
  if (reg_beta > 0)
    value += reg_beta / (2.0 * static_cast<double>(net.width())) *
             (net.W - net.W0).squaredNorm();
  return value;
}

/// Per-sample |S-bar_i| = #{ r : |w_r(0)^T x_i| < R }.
inline std::vector<long> count_at_risk(const NetworkState& net,
                                       const Dataset& ds, double radius) {
  detail::check_dims(net, ds);
  if (radius < 0) throw InputError("count_at_risk: radius must be >= 0");
  Eigen::MatrixXd z0 = ds.X * net.W0.transpose();
  std::vector<long> counts(static_cast<std::size_t>(ds.n()), 0);
  for (Eigen::Index i = 0; i < ds.n(); ++i)
    for (Eigen::Index r = 0; r < net.width(); ++r)
      if (std::abs(z0(i, r)) < radius) ++counts[static_cast<std::size_t>(i)];
  return counts;
}

struct TrainConfig {
  double eta = 1e-3;
  long steps = 0;
  double reg_beta = 0.0;      // 0 disables regularization
  long record_every = 1;
  RngSeed seed;               // owned by callers that also init the network
  bool record_step_residual = false;  // costs O(n^2 m) per recorded step
};

struct TraceRecord {
  long k = 0;
  double loss_sq = 0.0;    // ||y - u(k)||^2
  double max_move = 0.0;   // max_r ||w_r(k) - w_r(0)||
  double frob_move = 0.0;  // ||W(k) - W(0)||_F
  double z_move = 0.0;     // ||Z(k) - Z(0)||_F = sqrt(flips / m)
  long flips = 0;          // activation-pattern changes vs init
  double step_residual = 0.0;  // ||u(k+1) - u(k) + eta H(k)(u(k) - y)||
  bool has_step_residual = false;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;

  const TraceRecord& back() const { return records.back(); }
};

/// Gradient descent W(k+1) = W(k) - eta * grad, recording the trace at the
/// configured stride (step 0 and the final step are always recorded).
/// The residual u(k) - y is computed once per step; all rows update
/// simultaneously. Aborts with DivergenceError when the loss exceeds 1e12 or
/// leaves the finite range.
inline TrainingTrace train(NetworkState& net, const Dataset& ds,
                           const Eigen::VectorXd& y, const TrainConfig& cfg) {
  detail::check_dims(net, ds);
  if (y.size() != ds.n())
    throw InputError("train: label length does not match dataset");
  if (!(cfg.eta >= 0) || !std::isfinite(cfg.eta))
    throw InputError("train: eta must be finite and >= 0");
  if (cfg.steps < 0) throw InputError("train: steps must be >= 0");
  if (cfg.record_every < 1) throw InputError("train: record_every must be >= 1");
  if (cfg.reg_beta < 0) throw InputError("train: reg_beta must be >= 0");

  const auto m = static_cast<double>(net.width());
  Eigen::MatrixXd mask0 =
      detail::active_mask(ds.X * net.W0.transpose());

  TrainingTrace trace;
  // Set while a recorded step awaits u(k+1) for its step residual.
  bool pending_residual = false;
  Eigen::VectorXd expected_next;

  for (long k = 0;; ++k) {
    Eigen::MatrixXd z = detail::preactivations(net, ds);
    Eigen::MatrixXd mask = detail::active_mask(z);
    Eigen::VectorXd u = detail::predictions_from(z, net.a);
    double loss_sq = (y - u).squaredNorm();
    if (!std::isfinite(loss_sq) || loss_sq > 1e12)
      throw DivergenceError("training diverged: ||y - u||^2 = " +
                                std::to_string(loss_sq),
                            k);

    if (pending_residual) {
      trace.records.back().step_residual = (u - expected_next).norm();
      trace.records.back().has_step_residual = true;
      pending_residual = false;
    }

    bool record = (k % cfg.record_every == 0) || k == cfg.steps;
    if (record) {
      TraceRecord rec;
      rec.k = k;
      rec.loss_sq = loss_sq;
      Eigen::MatrixXd delta = net.W - net.W0;
      rec.max_move = delta.rowwise().norm().maxCoeff();
      rec.frob_move = delta.norm();
      rec.flips = static_cast<long>(
          (mask.array() != mask0.array()).count());
      rec.z_move = std::sqrt(static_cast<double>(rec.flips) / m);
      trace.records.push_back(rec);
    }

    if (k == cfg.steps) break;

    Eigen::VectorXd residual = u - y;
    if (record && cfg.record_step_residual) {
      Eigen::MatrixXd h_k = detail::h_from_mask(ds, mask);
      expected_next = u - cfg.eta * (h_k * residual);
      pending_residual = true;
    }
    net.W -= cfg.eta *
             detail::gradient_from(net, ds, residual, mask, cfg.reg_beta);
  }
  return trace;
}

/// Trace CSV columns: k,loss_sq,max_move,frob_move,z_move,flips,step_residual
/// (the last field is empty when step residuals were not recorded).
inline void save_trace_csv(const TrainingTrace& trace, const std::string& path) {
  auto out = open_output(path);
  out << "k,loss_sq,max_move,frob_move,z_move,flips,step_residual\n";
  for (const auto& r : trace.records) {
    out << r.k << "," << fmt_double(r.loss_sq) << "," << fmt_double(r.max_move)
        << "," << fmt_double(r.frob_move) << "," << fmt_double(r.z_move) << ","
        << r.flips << ",";
    if (r.has_step_residual) out << fmt_double(r.step_residual);
    out << "\n";
  }
}

}  // namespace overparam
