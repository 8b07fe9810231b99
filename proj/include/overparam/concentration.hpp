#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overparam/csv.hpp"
#include "overparam/dataset.hpp"
#include "overparam/errors.hpp"
#include "overparam/gram.hpp"
#include "overparam/parallel.hpp"
#include "overparam/rng.hpp"
#include "overparam/spectral.hpp"

namespace overparam {

/// One statistic per trial plus the threshold the lemma asserts.
struct TrialReport {
  long trials = 0;
  std::vector<double> values;
  double threshold = 0.0;
  long violation_count = 0;
  double predicted_failure_prob = 0.0;
};

inline void finalize_violations(TrialReport& report) {
  report.violation_count = 0;
  for (double v : report.values)
    if (v > report.threshold) ++report.violation_count;
}

/// Matrix Bernstein tail (n1 + n2) exp(-t^2/2 / (var + M t / 3)), clamped to
/// a valid probability.
inline double matrix_bernstein_tail(double n1, double n2, double var, double m,
                                    double t) {
  if (var < 0 || !(m > 0) || t < 0)
    throw InputError("matrix_bernstein_tail: need var >= 0, M > 0, t >= 0");
  if (t == 0.0) return std::min(1.0, n1 + n2);
  double exponent = -(t * t / 2.0) / (var + m * t / 3.0);
  return std::min(1.0, (n1 + n2) * std::exp(exponent));
}

/// Gram concentration statistics: per trial, m fresh Gaussian weights and the
/// deviation of H^dis from H^cts in Frobenius norm (primary statistic,
/// threshold lambda/4), spectral norm, and the minimum eigenvalue of H^dis.
struct GramConcentrationReport {
  TrialReport frobenius;            // primary: ||H^dis - H^cts||_F vs lambda/4
  std::vector<double> spectral;     // ||H^dis - H^cts||_2 per trial
  std::vector<double> min_eig_dis;  // lambda_min(H^dis) per trial
  double lambda = 0.0;
  long spectral_violations = 0;     // ||.||_2 > lambda/4
  long min_eig_violations = 0;      // lambda_min(H^dis) < (3/4) lambda
};

inline GramConcentrationReport gram_concentration_trial(
    const Dataset& ds, long m, long trials, RngSeed seed,
    const AssumptionConstants* constants = nullptr) {
  if (m < 1) throw InputError("gram_concentration_trial: m must be >= 1");
  if (trials < 1) throw InputError("gram_concentration_trial: trials must be >= 1");
  GramMatrix cts = hcts(ds);
  double lambda = min_eigenvalue(cts.mat);

  GramConcentrationReport report;
  report.lambda = lambda;
  report.frobenius.trials = trials;
  report.frobenius.threshold = lambda / 4.0;
  report.frobenius.values.assign(static_cast<std::size_t>(trials), 0.0);
  report.spectral.assign(static_cast<std::size_t>(trials), 0.0);
  report.min_eig_dis.assign(static_cast<std::size_t>(trials), 0.0);

  parallel_indices(trials, [&](long t) {
    SplitRng rng(seed.derive(static_cast<std::uint64_t>(t)));
    Eigen::MatrixXd weights = rng.gaussian_rows(m, ds.dim());
    GramMatrix dis = hdis(ds, weights);
    Eigen::MatrixXd dev = dis.mat.mat() - cts.mat.mat();
    auto idx = static_cast<std::size_t>(t);
    report.frobenius.values[idx] = dev.norm();
    report.spectral[idx] = spectral_norm(SymMatrix(dev));
    report.min_eig_dis[idx] = min_eigenvalue(dis.mat);
  });

  finalize_violations(report.frobenius);
  for (double s : report.spectral)
    if (s > lambda / 4.0) ++report.spectral_violations;
  for (double e : report.min_eig_dis)
    if (e < 0.75 * lambda) ++report.min_eig_violations;

  // Failure probability from the Matrix Bernstein tail on sum_r (H(w_r) - H^cts)
  // with Var <= m beta and per-term bound alpha.
  AssumptionConstants local;
  if (constants == nullptr) {
    local = estimate_constants(ds, 200, seed.derive(1u << 20));
    constants = &local;
  }
  auto n = static_cast<double>(ds.n());
  report.frobenius.predicted_failure_prob = matrix_bernstein_tail(
      n, n, static_cast<double>(m) * constants->beta_var, constants->alpha,
      static_cast<double>(m) * lambda / 4.0);
  return report;
}

/// Perturbation stability: sample w-tilde with Gaussian rows, move every row
/// by exactly R along an independent uniform direction (the adversarial
/// boundary of ||w - w_tilde|| <= R), and record ||H(w) - H(w_tilde)||_F.
/// Threshold 2 n R, predicted failure n^2 exp(-m R / 10).
inline TrialReport perturbation_trial(const Dataset& ds, long m, double radius,
                                      long trials, RngSeed seed) {
  if (m < 1) throw InputError("perturbation_trial: m must be >= 1");
  if (trials < 1) throw InputError("perturbation_trial: trials must be >= 1");
  if (radius < 0 || radius >= 1)
    throw InputError("perturbation_trial: R must lie in [0, 1)");

  auto n = static_cast<double>(ds.n());
  TrialReport report;
  report.trials = trials;
  report.threshold = 2.0 * n * radius;
  report.values.assign(static_cast<std::size_t>(trials), 0.0);
  report.predicted_failure_prob =
      std::min(1.0, n * n * std::exp(-static_cast<double>(m) * radius / 10.0));

  parallel_indices(trials, [&](long t) {
    SplitRng rng(seed.derive(static_cast<std::uint64_t>(t)));
    Eigen::MatrixXd base = rng.gaussian_rows(m, ds.dim());
    Eigen::MatrixXd moved = base;
    if (radius > 0)
      for (long r = 0; r < m; ++r)
        moved.row(r) += radius * rng.unit_vector(ds.dim()).transpose();
    Eigen::MatrixXd diff = hdis(ds, moved).mat.mat() - hdis(ds, base).mat.mat();
    report.values[static_cast<std::size_t>(t)] = diff.norm();
  });
  finalize_violations(report);
  return report;
}

/// Monte-Carlo estimate of Pr[|N(0, sigma^2)| <= t] against the
/// anti-concentration interval (2t/(3 sigma), 4t/(5 sigma)). Restricted to
/// t/sigma <= 0.2: the lemma's interval is only valid in the small-t regime.
struct AntiConcentrationResult {
  double empirical = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

inline AntiConcentrationResult anti_concentration_trial(double sigma, double t,
                                                        long samples,
                                                        RngSeed seed) {
  if (!(sigma > 0)) throw InputError("anti_concentration_trial: sigma must be > 0");
  if (t < 0) throw InputError("anti_concentration_trial: t must be >= 0");
  if (t / sigma > 0.2)
    throw InputError("anti_concentration_trial: t/sigma must be <= 0.2 "
                     "(small-t regime of the interval)");
  if (samples < 100000)
    throw InputError("anti_concentration_trial: need at least 1e5 samples");

  constexpr long kBlock = 1L << 16;
  const long blocks = (samples + kBlock - 1) / kBlock;
  std::vector<long> hits(static_cast<std::size_t>(blocks), 0);
  parallel_blocks(samples, kBlock, [&](long b, long lo, long hi) {
    SplitRng rng(seed.derive(static_cast<std::uint64_t>(b)));
    long count = 0;
    for (long s = lo; s < hi; ++s)
      if (std::abs(sigma * rng.gaussian()) <= t) ++count;
    hits[static_cast<std::size_t>(b)] = count;
  });
  long total = 0;
  for (long h : hits) total += h;

  AntiConcentrationResult out;
  out.samples = samples;
  out.empirical = static_cast<double>(total) / static_cast<double>(samples);
  out.lower = 2.0 * t / (3.0 * sigma);
  out.upper = 4.0 * t / (5.0 * sigma);
  out.std_error = std::sqrt(out.empirical * (1.0 - out.empirical) /
                            static_cast<double>(samples));
  return out;
}

/// CSV columns: trial,statistic,violated.
inline void save_trial_csv(const TrialReport& report, const std::string& path) {
  auto out = open_output(path);
  out << "trial,statistic,violated\n";
  for (std::size_t i = 0; i < report.values.size(); ++i)
    out << i << "," << fmt_double(report.values[i]) << ","
        << (report.values[i] > report.threshold ? 1 : 0) << "\n";
}

}  // namespace overparam
