// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Each criterion also enforces its runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overparam/concentration.hpp"
#include "overparam/csv.hpp"
#include "overparam/dataset.hpp"
#include "overparam/experiments.hpp"
#include "overparam/gram.hpp"
#include "overparam/network.hpp"
#include "overparam/rng.hpp"
#include "overparam/spectral.hpp"
#include "overparam/theory.hpp"

using namespace overparam;
namespace fs = std::filesystem;

namespace {

struct Harness {
  int failures = 0;

  void criterion(int id, const std::string& name, double budget_seconds,
                 const std::function<bool(std::string&)>& body) {
    auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = body(detail);
    } catch (const std::exception& e) {
      pass = false;
      detail = std::string("exception: ") + e.what();
    }
    double seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    if (seconds >= budget_seconds) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("over budget ") +
                fmt_double(budget_seconds) + " s";
    }
    if (!pass) ++failures;
    std::printf("criterion %2d %-22s %s  (%5.1f s)  %s\n", id, name.c_str(),
                pass ? "PASS" : "FAIL", seconds, detail.c_str());
    std::fflush(stdout);
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool check(bool ok, const std::string& msg, std::string& detail) {
  if (!ok && detail.size() < 400)
    detail += (detail.empty() ? "" : "; ") + msg;
  return ok;
}

// --- criterion 1: orthogonal-data oracle ---------------------------------
bool orthogonal_oracle(std::string& detail) {
  bool ok = true;
  for (long samples : {1L, 7L, 64L})
    for (std::uint64_t seed : {1ULL, 99ULL}) {
      Dataset ds = gen_orthogonal(8, {seed, 0});
      AssumptionConstants c = estimate_constants(ds, samples, {seed, 5});
      ok &= check(std::abs(c.lambda - 0.5) <= 1e-12,
                  "lambda " + fmt_double(c.lambda), detail);
      ok &= check(std::abs(c.theta) <= 1e-12, "theta " + fmt_double(c.theta),
                  detail);
      ok &= check(c.alpha == 0.5, "alpha " + fmt_double(c.alpha), detail);
      ok &= check(c.beta_var == 0.25, "beta " + fmt_double(c.beta_var), detail);
    }
  return ok;
}

// --- criterion 2: closed-form vs Monte-Carlo Gram -------------------------
bool gram_vs_monte_carlo(std::string& detail) {
  Dataset ds = gen_gaussian_sphere(10, 20, {202, 0});
  GramMatrix cts = hcts(ds);
  bool ok = true;

  double worst_entry = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SplitRng rng({202, 10 + seed});
    Eigen::MatrixXd dev =
        hdis(ds, rng.gaussian_rows(100000, 20)).mat.mat() - cts.mat.mat();
    worst_entry = std::max(worst_entry, dev.cwiseAbs().maxCoeff());
  }
  ok &= check(worst_entry <= 0.02,
              "max entry dev " + fmt_double(worst_entry), detail);

  auto mean_frob = [&](long m) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SplitRng rng({202, 1000 + seed});
      total += (hdis(ds, rng.gaussian_rows(m, 20)).mat.mat() - cts.mat.mat())
                   .norm();
    }
    return total / 20.0;
  };
  // One quadrupling ratio per listed width.
  std::string ratios;
  for (long m : {1000L, 4000L, 16000L}) {
    double ratio = mean_frob(4 * m) / mean_frob(m);
    ok &= check(ratio >= 0.33 && ratio <= 0.75,
                "quadrupling ratio " + fmt_double(ratio) + " at m = " +
                    std::to_string(m),
                detail);
    ratios += (ratios.empty() ? "" : " / ") + fmt_double(ratio);
  }
  if (ok)
    detail = "max entry dev " + fmt_double(worst_entry) + ", ratios " + ratios;
  return ok;
}

// --- criterion 3: no-flip step identity ------------------------------------
bool no_flip_identity(std::string& detail) {
  long flip_free_steps = 0;
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    SplitRng pick({303, trial});
    auto n = static_cast<Eigen::Index>(2 + pick.below(7));   // n <= 8
    auto m = static_cast<Eigen::Index>(8 + pick.below(57));  // m <= 64
    auto d = static_cast<Eigen::Index>(2 + pick.below(7));
    Dataset ds = gen_gaussian_sphere(n, d, {304, trial});
    NetworkState net = init_network(m, d, 1.0, {305, trial});
    double eta = 0.002 * (1.0 + pick.uniform01());

    for (int step = 0; step < 6; ++step) {
      Eigen::MatrixXd z = ds.X * net.W.transpose();
      Eigen::MatrixXd mask = (z.array() >= 0.0).cast<double>().matrix();
      Eigen::VectorXd u =
          (z.cwiseMax(0.0) * net.a) / std::sqrt(static_cast<double>(m));
      Eigen::MatrixXd h_k =
          (ds.X * ds.X.transpose())
              .cwiseProduct((mask * mask.transpose()) /
                            static_cast<double>(m));
      net.W -= eta * gradient(net, ds, ds.y, 0.0);
      Eigen::MatrixXd z_next = ds.X * net.W.transpose();
      Eigen::MatrixXd mask_next = (z_next.array() >= 0.0).cast<double>().matrix();
      if ((mask_next.array() != mask.array()).count() != 0) continue;
      Eigen::VectorXd u_next =
          (z_next.cwiseMax(0.0) * net.a) / std::sqrt(static_cast<double>(m));
      double residual = (u_next - u + eta * (h_k * (u - ds.y))).norm();
      worst = std::max(worst, residual / (1.0 + ds.y.norm()));
      ++flip_free_steps;
    }
  }
  bool ok = check(worst <= 1e-8, "residual ratio " + fmt_double(worst), detail);
  ok &= check(flip_free_steps >= 100,
              "only " + std::to_string(flip_free_steps) + " flip-free steps",
              detail);
  if (ok)
    detail = std::to_string(flip_free_steps) + " flip-free steps, worst " +
             fmt_double(worst);
  return ok;
}

// --- criterion 4: gradient vs finite differences ---------------------------
bool gradient_oracle(std::string& detail) {
  const double h = 1e-6;
  long checked = 0;
  double worst = 0.0;
  for (std::uint64_t trial = 0; checked < 100 && trial < 400; ++trial) {
    SplitRng pick({404, trial});
    auto n = static_cast<Eigen::Index>(2 + pick.below(4));
    auto d = static_cast<Eigen::Index>(2 + pick.below(3));
    auto m = static_cast<Eigen::Index>(3 + pick.below(6));
    Dataset ds = gen_gaussian_sphere(n, d, {405, trial});
    NetworkState net = init_network(m, d, 1.0, {406, trial});
    double reg_beta = trial % 2 ? 1.3 : 0.0;
    if (reg_beta > 0) net.W *= 1.02;  // make the distance term active
    if ((ds.X * net.W.transpose()).cwiseAbs().minCoeff() <= 1e-3) continue;
    ++checked;

    Eigen::MatrixXd analytic = gradient(net, ds, ds.y, reg_beta);
    Eigen::MatrixXd numeric(m, d);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < d; ++c) {
        double saved = net.W(r, c);
        net.W(r, c) = saved + h;
        double up = loss(net, ds, ds.y, reg_beta);
        net.W(r, c) = saved - h;
        double down = loss(net, ds, ds.y, reg_beta);
        net.W(r, c) = saved;
        numeric(r, c) = (up - down) / (2.0 * h);
      }
    worst = std::max(worst, (analytic - numeric).norm() /
                                std::max(1e-12, numeric.norm()));
  }
  bool ok = check(checked == 100,
                  "only " + std::to_string(checked) + " configs", detail);
  ok &= check(worst <= 1e-4, "worst rel err " + fmt_double(worst), detail);
  if (ok) detail = "100 configs, worst rel err " + fmt_double(worst);
  return ok;
}

// --- criterion 5: convergence verdict --------------------------------------
bool convergence_verdict(std::string& detail) {
  bool ok = true;
  double worst_ratio_vs_bound = 0.0, worst_final_fraction = 0.0;
  for (std::uint64_t seed = 42; seed < 47; ++seed) {
    ExperimentConfig cfg;
    cfg.name = "convergence";
    cfg.dataset_kind = "orthogonal";
    cfg.n = 8;
    cfg.m = 2048;
    cfg.kappa = 1.0;
    cfg.eta = "auto:quartic";
    cfg.steps = 200;
    cfg.samples = 100;
    cfg.seed = {seed, 0};
    ExperimentReport rep = run_convergence(cfg);

    double loss0 = rep.trace.records.front().loss_sq;
    for (std::size_t i = 0; i < rep.trace.records.size(); ++i) {
      double bound =
          2.0 * rate_bound(loss0, rep.eta, rep.constants.lambda,
                           rep.trace.records[i].k);
      worst_ratio_vs_bound =
          std::max(worst_ratio_vs_bound, rep.trace.records[i].loss_sq / bound);
    }
    worst_final_fraction =
        std::max(worst_final_fraction, rep.trace.back().loss_sq / loss0);
  }
  ok &= check(worst_ratio_vs_bound <= 1.0,
              "loss exceeds 2x rate bound: ratio " +
                  fmt_double(worst_ratio_vs_bound),
              detail);
  ok &= check(worst_final_fraction < 1e-2,
              "final/initial " + fmt_double(worst_final_fraction) +
                  " (needs < 0.01; unreachable at eta = lambda/(4n^2) in "
                  "200 steps, see ledger)",
              detail);
  return ok;
}

// --- criterion 6: eigen-prediction ------------------------------------------
bool eigen_prediction_criterion(std::string& detail) {
  ExperimentConfig cfg;
  cfg.name = "eigen-prediction";
  cfg.dataset_kind = "gaussian";
  cfg.n = 16;
  cfg.d = 32;
  cfg.m = 8192;
  cfg.kappa = 0.01;
  cfg.eta = "0.05";
  cfg.steps = 200;
  cfg.samples = 100;
  cfg.seed = {12, 0};
  ExperimentReport rep = run_eigen_prediction(cfg);
  bool ok = true;
  for (const auto& v : rep.verdicts)
    ok &= check(v.pass,
                v.check + " measured " + fmt_double(v.measured) +
                    " vs threshold " + fmt_double(v.threshold),
                detail);
  if (ok)
    detail = "tracking " + fmt_double(rep.verdicts[0].measured) + " / " +
             fmt_double(rep.verdicts[1].measured) + ", decay ratio " +
             fmt_double(rep.verdicts[2].measured);
  return ok;
}

// --- criterion 7: regularized bound ----------------------------------------
bool regularized_criterion(std::string& detail) {
  ExperimentConfig cfg;
  cfg.name = "regularized";
  cfg.dataset_kind = "orthogonal";
  cfg.n = 8;
  cfg.m = 2048;
  cfg.kappa = 1.0;
  cfg.eta = "auto:quartic";
  cfg.steps = 200;
  cfg.samples = 100;
  cfg.seed = {42, 0};

  bool ok = true;

  cfg.reg_beta = 10.0;
  double cap = max_admissible_reg_beta(2048.0, 0.5, 200, 8, 0.5 / 256.0);
  ok &= check(cfg.reg_beta <= cap, "chosen beta not admissible", detail);
  ExperimentReport reg = run_regularized(cfg);
  for (const auto& v : reg.verdicts)
    if (v.check == "loss_le_bound")
      ok &= check(v.pass, "regularized bound ratio " + fmt_double(v.measured),
                  detail);

  cfg.reg_beta = 0.0;
  ExperimentReport zero = run_regularized(cfg);
  ExperimentConfig conv = cfg;
  conv.name = "convergence";
  ExperimentReport base = run_convergence(conv);
  ok &= check(zero.trace.records.size() == base.trace.records.size(),
              "trace lengths differ", detail);
  for (std::size_t i = 0; i < zero.trace.records.size() && ok; ++i) {
    const auto& a = zero.trace.records[i];
    const auto& b = base.trace.records[i];
    bool same = a.k == b.k && a.loss_sq == b.loss_sq &&
                a.max_move == b.max_move && a.frob_move == b.frob_move &&
                a.z_move == b.z_move && a.flips == b.flips;
    ok &= check(same, "beta=0 trace differs at record " + std::to_string(i),
                detail);
  }

  // The regularization must actually bite on this preset.
  ok &= check(reg.trace.back().loss_sq != zero.trace.back().loss_sq,
              "reg run identical to unregularized", detail);
  if (ok)
    detail = "bound ratio " + fmt_double(reg.verdicts.front().measured) +
             ", beta=0 trace bit-identical";
  return ok;
}

// --- criterion 8: anti-concentration ----------------------------------------
bool anti_concentration_criterion(std::string& detail) {
  bool ok = true;
  std::string measured;
  for (double t : {0.01, 0.05, 0.1}) {
    AntiConcentrationResult r = anti_concentration_trial(1.0, t, 1000000, {1, 0});
    double truth = std::erf(t / std::sqrt(2.0));
    ok &= check(r.empirical > r.lower && r.empirical < r.upper,
                "t=" + fmt_double(t) + " empirical " + fmt_double(r.empirical) +
                    " outside (" + fmt_double(r.lower) + ", " +
                    fmt_double(r.upper) + ")",
                detail);
    ok &= check(std::abs(r.empirical - truth) <= 3.0 * r.std_error,
                "t=" + fmt_double(t) + " further than 3 SE from erf oracle",
                detail);
    measured += (measured.empty() ? "" : ", ") + fmt_double(r.empirical);
  }
  if (ok) detail = "empirical " + measured + ", all strictly inside";
  return ok;
}

// --- criterion 9: perturbation lemma ----------------------------------------
bool perturbation_criterion(std::string& detail) {
  Dataset ds = gen_gaussian_sphere(10, 20, {909, 0});
  TrialReport r = perturbation_trial(ds, 2048, 0.05, 100, {909, 1});
  bool ok = check(r.violation_count == 0,
                  std::to_string(r.violation_count) + " violations", detail);
  ok &= check(r.predicted_failure_prob <= 0.004,
              "predicted failure " + fmt_double(r.predicted_failure_prob),
              detail);
  if (ok)
    detail = "0 violations in 100 trials, predicted failure " +
             fmt_double(r.predicted_failure_prob);
  return ok;
}

// --- criterion 10: synthetic-data figures -----------------------------------
bool synthetic_figures_criterion(std::string& detail) {
  std::vector<long> n_list;
  for (long n = 50; n <= 1000; n += 50) n_list.push_back(n);
  ExperimentReport rep = run_synthetic_figures(n_list, 500, {1010, 0});
  bool ok = true;
  for (const auto& v : rep.verdicts)
    ok &= check(v.pass, v.check + " measured " + fmt_double(v.measured),
                detail);
  if (ok) {
    double min_lambda = rep.verdicts[0].measured;
    double max_dev = rep.verdicts[2].measured;
    detail = "min lambda " + fmt_double(min_lambda) + ", max spectral dev " +
             fmt_double(max_dev);
  }
  return ok;
}

// --- criterion 11: CLI determinism ------------------------------------------
struct CliCase {
  std::string args;          // with {out} placeholder
  std::vector<std::string> outputs;  // relative to the scratch dir
};

bool cli_determinism(std::string& detail) {
  const std::string binary = CLI_BINARY_PATH;
  fs::path scratch = fs::temp_directory_path() / "overparam_acceptance_cli";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  std::string dir = scratch.string();

  int rc = std::system((binary + " gen-data --kind gaussian --n 10 --d 20 "
                        "--seed 5 --out " + dir + "/data.csv >/dev/null 2>&1")
                           .c_str());
  if (WEXITSTATUS(rc) != 0) {
    detail = "dataset generation failed";
    return false;
  }

  std::vector<CliCase> cases = {
      {"gen-data --kind orthogonal --n 8 --seed 1 --out {dir}/gen.csv",
       {"gen.csv"}},
      {"constants --data {dir}/data.csv --samples 40 --seed 2 --out "
       "{dir}/constants.json",
       {"constants.json"}},
      {"train --data {dir}/data.csv --m 256 --kappa 1 --eta 0.05 --steps 20 "
       "--seed 3 --trace {dir}/trace.csv",
       {"trace.csv"}},
      {"predict --data {dir}/data.csv --eta 0.05 --k-max 20 --seed 4 --out "
       "{dir}/pred.csv",
       {"pred.csv"}},
      {"concentration --mode perturb --data {dir}/data.csv --m 256 --r 0.05 "
       "--trials 10 --seed 6 --out {dir}/perturb.csv",
       {"perturb.csv"}},
      {"experiment --preset convergence --n 8 --m 512 --eta auto:quartic "
       "--steps 30 --samples 50 --seed 42 --out-dir {dir}/run",
       {"run/config.json", "run/constants.json", "run/trace.csv",
        "run/bound.csv", "run/verdicts.csv"}},
      {"report --run-dir {dir}/run --svg", {"run/loss_vs_bound.svg"}},
  };

  bool ok = true;
  for (const auto& c : cases) {
    std::string args = c.args;
    while (args.find("{dir}") != std::string::npos)
      args.replace(args.find("{dir}"), 5, dir);

    std::vector<std::string> first;
    for (const char* env : {"OVERPARAM_THREADS=1 ", "OVERPARAM_THREADS=3 "}) {
      int status = std::system(
          (std::string(env) + binary + " " + args + " >/dev/null 2>&1").c_str());
      if (WEXITSTATUS(status) != 0) {
        ok = check(false, "nonzero exit for: " + c.args, detail);
        break;
      }
      if (first.empty()) {
        for (const auto& out : c.outputs) first.push_back(slurp(dir + "/" + out));
      } else {
        for (std::size_t i = 0; i < c.outputs.size(); ++i)
          ok &= check(slurp(dir + "/" + c.outputs[i]) == first[i],
                      c.outputs[i] + " differs across thread counts", detail);
      }
    }
  }
  fs::remove_all(scratch);
  if (ok) detail = std::to_string(cases.size()) + " invocations byte-stable";
  return ok;
}

}  // namespace

int main() {
  Harness h;
  h.criterion(1, "orthogonal-oracle", 1.0, orthogonal_oracle);
  h.criterion(2, "gram-vs-monte-carlo", 60.0, gram_vs_monte_carlo);
  h.criterion(3, "no-flip-identity", 5.0, no_flip_identity);
  h.criterion(4, "gradient-oracle", 10.0, gradient_oracle);
  h.criterion(5, "convergence-verdict", 30.0, convergence_verdict);
  h.criterion(6, "eigen-prediction", 60.0, eigen_prediction_criterion);
  h.criterion(7, "regularized-bound", 30.0, regularized_criterion);
  h.criterion(8, "anti-concentration", 5.0, anti_concentration_criterion);
  h.criterion(9, "perturbation-lemma", 30.0, perturbation_criterion);
  h.criterion(10, "synthetic-figures", 120.0, synthetic_figures_criterion);
  h.criterion(11, "cli-determinism", 120.0, cli_determinism);

  if (h.failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", h.failures);
  return 1;
}
