#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overparam/csv.hpp"
#include "overparam/errors.hpp"
#include "overparam/gram.hpp"
#include "overparam/spectral.hpp"

namespace overparam {

/// Which convergence theorem's constants to use. Quartic needs only lambda;
/// cubic adds the spectral deviation bound alpha; quadratic additionally uses
/// the separation theta; regularized is the quartic analysis with the
/// distance penalty.
enum class TheoremVariant { Quartic, Cubic, Quadratic, Regularized };

inline const char* to_string(TheoremVariant v) {
  switch (v) {
    case TheoremVariant::Quartic: return "quartic";
    case TheoremVariant::Cubic: return "cubic";
    case TheoremVariant::Quadratic: return "quadratic";
    case TheoremVariant::Regularized: return "regularized";
  }
  return "?";
}

namespace detail {

inline void require_lambda(const AssumptionConstants& c) {
  if (!(c.lambda > 0))
    throw InputError(
        "lambda (min eigenvalue of the continuous Gram matrix) must be "
        "positive; the data is degenerate");
}

inline void require_alpha(const AssumptionConstants& c, const char* where) {
  if (!(c.alpha > 0))
    throw InputError(std::string(where) +
                     " requires a positive alpha (per-weight spectral "
                     "deviation bound); estimate the constants first");
}

}  // namespace detail

/// The proof's explicit step-size choice per variant:
/// quartic lambda/(4 n^2), cubic and quadratic lambda/(4 alpha n),
/// regularized lambda/(16 n^2).
inline double step_size(TheoremVariant v, const AssumptionConstants& c, long n) {
  if (n < 1) throw InputError("step_size: n must be >= 1");
  detail::require_lambda(c);
  double nn = static_cast<double>(n);
  switch (v) {
    case TheoremVariant::Quartic:
      return c.lambda / (4.0 * nn * nn);
    case TheoremVariant::Cubic:
    case TheoremVariant::Quadratic:
      detail::require_alpha(c, "cubic/quadratic step size");
      return c.lambda / (4.0 * c.alpha * nn);
    case TheoremVariant::Regularized:
      return c.lambda / (16.0 * nn * nn);
  }
  throw InputError("step_size: unknown variant");
}

/// Maximal tolerated weight movement R per variant. Quartic, cubic and
/// regularized use lambda/(64 n); quadratic tightens to
/// (lambda / (64 sqrt(n))) * min{ 1/sqrt(1 + theta^2), 1/sqrt(alpha) }.
inline double radius(TheoremVariant v, const AssumptionConstants& c, long n) {
  if (n < 1) throw InputError("radius: n must be >= 1");
  detail::require_lambda(c);
  double nn = static_cast<double>(n);
  if (v == TheoremVariant::Quadratic) {
    detail::require_alpha(c, "quadratic radius");
    double by_theta = 1.0 / std::sqrt(1.0 + c.theta * c.theta);
    double by_alpha = 1.0 / std::sqrt(c.alpha);
    return c.lambda / (64.0 * std::sqrt(nn)) * std::min(by_theta, by_alpha);
  }
  return c.lambda / (64.0 * nn);
}

/// Bound on the actual weight movement:
/// D = 4 sqrt(n) ||y - u(0)|| / (sqrt(m) lambda) for quartic,
/// with sqrt(alpha) in place of sqrt(n) for cubic/quadratic and a leading 8
/// for the regularized analysis.
inline double movement_bound(TheoremVariant v, const AssumptionConstants& c,
                             long n, double residual0_norm, double m) {
  if (m < 1) throw InputError("movement_bound: m must be >= 1");
  detail::require_lambda(c);
  double scale = 4.0 * std::sqrt(static_cast<double>(n));
  switch (v) {
    case TheoremVariant::Quartic:
      break;
    case TheoremVariant::Cubic:
    case TheoremVariant::Quadratic:
      detail::require_alpha(c, "cubic/quadratic movement bound");
      scale = 4.0 * std::sqrt(c.alpha);
      break;
    case TheoremVariant::Regularized:
      scale = 8.0 * std::sqrt(static_cast<double>(n));
      break;
  }
  return scale * residual0_norm / (std::sqrt(m) * c.lambda);
}

/// Convergence-rate bound (1 - eta lambda / 2)^k * ||u(0) - y||^2.
inline double rate_bound(double loss0_sq, double eta, double lambda, long k) {
  if (!(eta * lambda >= 0) || eta * lambda >= 2.0)
    throw InputError("rate_bound: eta * lambda / 2 must lie in [0, 1)");
  if (k < 0) throw InputError("rate_bound: k must be >= 0");
  return std::pow(1.0 - eta * lambda / 2.0, static_cast<double>(k)) * loss0_sq;
}

/// Additive excess of the regularized bound: 8 beta D^2 / (m eta lambda).
inline double regularized_rate_excess(double reg_beta, double movement_d,
                                      double m, double eta, double lambda) {
  if (!(m >= 1) || !(eta > 0) || !(lambda > 0))
    throw InputError("regularized_rate_excess: need m >= 1, eta > 0, lambda > 0");
  return 8.0 * reg_beta * movement_d * movement_d / (m * eta * lambda);
}

/// Admissible regularization factor for a K-step run:
/// beta <= min{ m^2 lambda / (128 K^2 n eta), m / (4 K eta) }.
inline double max_admissible_reg_beta(double m, double lambda, long steps,
                                      long n, double eta) {
  if (steps < 1 || !(eta > 0))
    throw InputError("max_admissible_reg_beta: need steps >= 1 and eta > 0");
  double k = static_cast<double>(steps);
  double first = m * m * lambda / (128.0 * k * k * static_cast<double>(n) * eta);
  double second = m / (4.0 * k * eta);
  return std::min(first, second);
}

/// Predicted curve per step: residual norms ||u(k) - y|| from
/// eigen_prediction, or squared-loss bounds when used as a rate-bound curve.
struct PredictionCurve {
  std::vector<long> steps;
  std::vector<double> values;
  // Set when eta * max eigenvalue > 1: some factors |1 - eta lambda_i|
  // exceed 1 and the curve can grow.
  bool factor_overflow = false;
};

/// Closed-form loss curve from the eigendecomposition of H^cts:
/// value(k) = ( sum_i (1 - eta lambda_i)^{2k} (v_i^T y)^2 )^{1/2}.
inline PredictionCurve eigen_prediction(const SymMatrix& h_cts,
                                        const Eigen::VectorXd& y, double eta,
                                        const std::vector<long>& ks) {
  if (y.size() != h_cts.order())
    throw InputError("eigen_prediction: label length does not match order");
  EigenSystem es = sym_eig(h_cts);
  Eigen::VectorXd coeffs = (es.vectors.transpose() * y).array().square();
  PredictionCurve curve;
  curve.steps = ks;
  curve.values.reserve(ks.size());
  curve.factor_overflow =
      eta * es.values[es.values.size() - 1] > 1.0;
  for (long k : ks) {
    if (k < 0) throw InputError("eigen_prediction: steps must be >= 0");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
      double factor = 1.0 - eta * es.values[i];
      sum += std::pow(factor * factor, static_cast<double>(k)) * coeffs[i];
    }
    curve.values.push_back(std::sqrt(sum));
  }
  return curve;
}

namespace detail {

inline double log_cubed(double x) {
  double l = std::log(x);
  return l * l * l;
}

inline void check_delta(double delta) {
  if (!(delta > 0) || !(delta < 1))
    throw InputError("delta must lie in (0, 1)");
}

}  // namespace detail

/// Required width per variant, hidden constants set to 1 and natural logs.
/// Order-of-magnitude guidance, not a guarantee:
///   quartic/regularized  lambda^-4 n^4 log^3(n/delta)
///   cubic                lambda^-4 n^3 log^3(n/delta) alpha
///   quadratic            lambda^-4 n^2 log^3(n/delta) alpha (alpha + theta^2)
inline double required_width(TheoremVariant v, const AssumptionConstants& c,
                             long n, double delta) {
  if (n < 1) throw InputError("required_width: n must be >= 1");
  detail::check_delta(delta);
  detail::require_lambda(c);
  double nn = static_cast<double>(n);
  double base = std::pow(c.lambda, -4.0) *
                detail::log_cubed(nn / delta);
  switch (v) {
    case TheoremVariant::Quartic:
    case TheoremVariant::Regularized:
      return base * nn * nn * nn * nn;
    case TheoremVariant::Cubic:
      detail::require_alpha(c, "cubic required width");
      return base * nn * nn * nn * c.alpha;
    case TheoremVariant::Quadratic:
      detail::require_alpha(c, "quadratic required width");
      return base * nn * nn * c.alpha * (c.alpha + c.theta * c.theta);
  }
  throw InputError("required_width: unknown variant");
}

/// Width for Gram concentration alone:
/// (lambda^-2 beta + lambda^-1 alpha) log(n/delta).
inline double required_width_concentration(const AssumptionConstants& c, long n,
                                           double delta) {
  if (n < 1) throw InputError("required_width_concentration: n must be >= 1");
  detail::check_delta(delta);
  detail::require_lambda(c);
  return (c.beta_var / (c.lambda * c.lambda) + c.alpha / c.lambda) *
         std::log(static_cast<double>(n) / delta);
}

struct GeneralizationBound {
  double value = 0.0;     // sqrt(2 y^T (H^cts)^-1 y / n)
  double additive = 0.0;  // sqrt(log(n / (lambda delta)) / (2n)), constant 1
};

/// Population-loss bound from the kernel regression view. The additive
/// sampling term is reported separately.
inline GeneralizationBound generalization_bound(const SymMatrix& h_cts,
                                                const Eigen::VectorXd& y,
                                                double delta = 0.1) {
  detail::check_delta(delta);
  auto n = static_cast<double>(h_cts.order());
  double lambda = min_eigenvalue(h_cts);
  Eigen::VectorXd solved = solve_spd(h_cts, y);  // throws when singular
  GeneralizationBound out;
  out.value = std::sqrt(2.0 * y.dot(solved) / n);
  out.additive = std::sqrt(std::log(n / (lambda * delta)) / (2.0 * n));
  return out;
}

/// Initialization scale that keeps the eigen-prediction error near eps,
/// eps / (sqrt(2 n log(2mn/delta)) * log(4n/delta)), hidden constant set
/// to 1. Guidance only.
inline double suggested_kappa(double eps, long n, double m, double delta) {
  detail::check_delta(delta);
  double nn = static_cast<double>(n);
  return eps / (std::sqrt(2.0 * nn * std::log(2.0 * m * nn / delta)) *
                std::log(4.0 * nn / delta));
}

/// CSV columns: k,predicted.
inline void save_prediction_csv(const PredictionCurve& curve,
                                const std::string& path) {
  auto out = open_output(path);
  out << "k,predicted\n";
  for (std::size_t i = 0; i < curve.steps.size(); ++i)
    out << curve.steps[i] << "," << fmt_double(curve.values[i]) << "\n";
}

}  // namespace overparam
