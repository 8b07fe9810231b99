// Command-line front end: dataset generation, constant estimation, training,
// closed-form prediction, concentration trials, experiment presets, and SVG
// reports. Exit codes: 0 success, 1 validation error, 2 runtime/divergence
// error, 3 experiment verdict failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "overparam/concentration.hpp"
#include "overparam/csv.hpp"
#include "overparam/dataset.hpp"
#include "overparam/errors.hpp"
#include "overparam/experiments.hpp"
#include "overparam/gram.hpp"
#include "overparam/network.hpp"
#include "overparam/rng.hpp"
#include "overparam/svg.hpp"
#include "overparam/theory.hpp"

namespace {

using namespace overparam;
using nlohmann::ordered_json;

struct SeedFlags {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  RngSeed get() const { return {seed, stream}; }
};

void add_seed_flags(CLI::App* cmd, SeedFlags& s) {
  cmd->add_option("--seed", s.seed, "base RNG seed (64-bit unsigned)")
      ->required();
  cmd->add_option("--stream", s.stream,
                  "RNG stream / trial index (default 0)");
}

Eigen::VectorXd labels_for_mode(const Dataset& ds, const std::string& mode) {
  if (mode == "pm1") return ds.y;
  if (mode == "ones") return Eigen::VectorXd::Ones(ds.n());
  if (mode.rfind("eigvec:", 0) == 0) {
    long j = std::stol(mode.substr(7));
    return eigvec_labels(ds, j);
  }
  throw InputError("unknown label mode '" + mode +
                   "'; expected pm1, ones, or eigvec:<j>");
}

int cmd_gen_data(const std::string& kind, long n, long d, SeedFlags seed,
                 const std::string& labels, const std::string& out) {
  Dataset ds;
  if (kind == "orthogonal") {
    ds = gen_orthogonal(n, seed.get());
  } else if (kind == "gaussian") {
    if (d < 1) throw InputError("--kind gaussian requires --d >= 1");
    ds = gen_gaussian_sphere(n, d, seed.get());
  } else {
    throw InputError("unknown --kind '" + kind + "'");
  }
  if (labels != "pm1") ds.y = labels_for_mode(ds, labels);
  save_csv(ds, out);
  std::cout << "wrote " << ds.n() << " samples (d = " << ds.dim() << ") to "
            << out << "\n";
  return 0;
}

ordered_json constants_to_json(const AssumptionConstants& c) {
  ordered_json j;
  j["lambda"] = c.lambda;
  j["alpha"] = c.alpha;
  j["beta_var"] = c.beta_var;
  j["gamma"] = c.gamma;
  j["theta"] = c.theta;
  j["sample_count"] = c.sample_count;
  j["degenerate"] = c.degenerate;
  j["alpha_q95"] = c.alpha_q95;
  j["alpha_q99"] = c.alpha_q99;
  return j;
}

int cmd_constants(const std::string& data, long samples, SeedFlags seed,
                  const std::string& out) {
  Dataset ds = load_csv(data);
  AssumptionConstants c = estimate_constants(ds, samples, seed.get());
  ordered_json j = constants_to_json(c);
  if (!out.empty()) {
    auto f = open_output(out);
    f << j.dump(2) << "\n";
  }
  std::cout << j.dump() << "\n";
  if (c.degenerate)
    std::cerr << "warning: lambda <= 0, the data is degenerate for the "
                 "convergence analysis\n";
  return 0;
}

int cmd_train(const std::string& data, long m, double kappa,
              const std::string& eta_rule, long steps, double reg_beta,
              SeedFlags seed, const std::string& trace_path, long record_every,
              bool step_residual, long samples, bool normalize) {
  Dataset ds = load_csv(data, normalize);
  AssumptionConstants constants;
  double eta = 0.0;
  if (eta_rule.rfind("auto:", 0) == 0) {
    constants = estimate_constants(ds, samples, seed.get().derive(1));
    auto choice = overparam::resolve_eta(eta_rule, constants, ds.n());
    eta = choice.eta;
    std::cout << "step size " << choice.description << "\n";
  } else {
    eta = overparam::resolve_eta(eta_rule, constants, ds.n()).eta;
  }

  NetworkState net = init_network(m, ds.dim(), kappa, seed.get().derive(2));
  TrainConfig cfg;
  cfg.eta = eta;
  cfg.steps = steps;
  cfg.reg_beta = reg_beta;
  cfg.record_every = record_every;
  cfg.seed = seed.get();
  cfg.record_step_residual = step_residual;
  TrainingTrace trace = train(net, ds, ds.y, cfg);
  save_trace_csv(trace, trace_path);
  std::cout << "final loss_sq = " << fmt_double(trace.back().loss_sq) << "\n";
  return 0;
}

int cmd_predict(const std::string& data, const std::string& eta_rule,
                long k_max, double delta, long samples, SeedFlags seed,
                const std::string& out) {
  Dataset ds = load_csv(data);
  GramMatrix cts = hcts(ds);
  double eta = 0.0;
  if (eta_rule.rfind("auto:", 0) == 0) {
    AssumptionConstants constants =
        estimate_constants(ds, samples, seed.get().derive(1));
    auto choice = overparam::resolve_eta(eta_rule, constants, ds.n());
    eta = choice.eta;
    std::cout << "step size " << choice.description << "\n";
  } else {
    AssumptionConstants unused;
    eta = overparam::resolve_eta(eta_rule, unused, ds.n()).eta;
  }
  if (k_max < 0) throw InputError("--k-max must be >= 0");

  std::vector<long> ks;
  for (long k = 0; k <= k_max; ++k) ks.push_back(k);
  PredictionCurve curve = eigen_prediction(cts.mat, ds.y, eta, ks);
  if (curve.factor_overflow)
    std::cerr << "warning: eta exceeds 1 / max eigenvalue; some decay "
                 "factors exceed 1 in magnitude\n";
  save_prediction_csv(curve, out);

  GeneralizationBound bound = generalization_bound(cts.mat, ds.y, delta);
  ordered_json j;
  j["generalization_bound"] = bound.value;
  j["additive_term"] = bound.additive;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_concentration(const std::string& mode, const std::string& data, long m,
                      double radius, double sigma, double t, long samples,
                      long trials, SeedFlags seed, const std::string& out) {
  ordered_json summary;
  summary["mode"] = mode;
  if (mode == "anti") {
    AntiConcentrationResult r =
        anti_concentration_trial(sigma, t, samples, seed.get());
    {
      auto f = open_output(out);
      f << "trial,statistic,violated\n0," << fmt_double(r.empirical) << ","
        << ((r.empirical > r.lower && r.empirical < r.upper) ? 0 : 1) << "\n";
    }
    summary["empirical"] = r.empirical;
    summary["lower"] = r.lower;
    summary["upper"] = r.upper;
    summary["std_error"] = r.std_error;
    summary["samples"] = r.samples;
    summary["inside"] = r.empirical > r.lower && r.empirical < r.upper;
  } else if (mode == "gram") {
    if (data.empty()) throw InputError("--mode gram requires --data");
    Dataset ds = load_csv(data);
    GramConcentrationReport r =
        gram_concentration_trial(ds, m, trials, seed.get());
    save_trial_csv(r.frobenius, out);
    summary["lambda"] = r.lambda;
    summary["threshold"] = r.frobenius.threshold;
    summary["violations"] = r.frobenius.violation_count;
    summary["spectral_violations"] = r.spectral_violations;
    summary["min_eig_violations"] = r.min_eig_violations;
    summary["predicted_failure_prob"] = r.frobenius.predicted_failure_prob;
  } else if (mode == "perturb") {
    if (data.empty()) throw InputError("--mode perturb requires --data");
    Dataset ds = load_csv(data);
    TrialReport r = perturbation_trial(ds, m, radius, trials, seed.get());
    save_trial_csv(r, out);
    summary["threshold"] = r.threshold;
    summary["violations"] = r.violation_count;
    summary["predicted_failure_prob"] = r.predicted_failure_prob;
  } else {
    throw InputError("unknown --mode '" + mode + "'");
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

std::vector<long> parse_n_list(const std::string& arg) {
  std::vector<long> out;
  std::string field;
  std::stringstream ss(arg);
  while (std::getline(ss, field, ',')) out.push_back(std::stol(field));
  if (out.empty()) throw InputError("--n-list must not be empty");
  return out;
}

int cmd_experiment(const std::string& preset, ExperimentConfig cfg,
                   const std::string& n_list_arg) {
  ExperimentReport report;
  cfg.name = preset;
  if (preset == "synthetic-figures") {
    std::vector<long> n_list;
    if (!n_list_arg.empty()) {
      n_list = parse_n_list(n_list_arg);
    } else {
      for (long n = 50; n <= 1000; n += 50) n_list.push_back(n);
    }
    long d = cfg.d >= 1 ? cfg.d : 500;
    report = run_synthetic_figures(n_list, d, cfg.seed, cfg.out_dir);
  } else if (preset == "convergence") {
    report = run_convergence(cfg);
  } else if (preset == "eigen-prediction") {
    report = run_eigen_prediction(cfg);
  } else if (preset == "regularized") {
    report = run_regularized(cfg);
  } else {
    throw InputError("unknown --preset '" + preset + "'");
  }

  if (!report.eta_description.empty())
    std::cout << "step size " << report.eta_description << "\n";
  for (const auto& v : report.verdicts)
    std::cout << v.check << ": " << (v.pass ? "pass" : "FAIL")
              << " (measured = " << fmt_double(v.measured)
              << ", threshold = " << fmt_double(v.threshold) << ")\n";
  return report.all_pass() ? 0 : 3;
}

int cmd_report(const std::string& run_dir, bool svg) {
  if (!svg) {
    std::cout << "nothing to do: pass --svg to render plots\n";
    return 0;
  }
  auto written = render_run_dir(run_dir);
  for (const auto& path : written) std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"over-parametrized two-layer ReLU network toolkit"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  std::string gen_kind, gen_out, gen_labels = "pm1";
  long gen_n = 0, gen_d = 0;
  SeedFlags gen_seed;
  gen->add_option("--kind", gen_kind, "orthogonal | gaussian")->required();
  gen->add_option("--n", gen_n, "number of samples")->required();
  gen->add_option("--d", gen_d, "dimension (gaussian only; orthogonal uses n)");
  gen->add_option("--labels", gen_labels,
                  "label mode: pm1 (default), ones, eigvec:<j>");
  add_seed_flags(gen, gen_seed);
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // constants
  auto* con = app.add_subcommand("constants",
                                 "estimate the data-dependent constants");
  std::string con_data, con_out;
  long con_samples = 0;
  SeedFlags con_seed;
  con->add_option("--data", con_data, "dataset CSV")->required();
  con->add_option("--samples", con_samples,
                  "Monte-Carlo weight samples M (M >= 1)")->required();
  add_seed_flags(con, con_seed);
  con->add_option("--out", con_out, "also write the JSON summary here");

  // train
  auto* tr = app.add_subcommand("train", "gradient-descent training run");
  std::string tr_data, tr_eta = "auto:quartic", tr_trace;
  long tr_m = 2048, tr_steps = 100, tr_every = 1, tr_samples = 200;
  double tr_kappa = 1.0, tr_reg = 0.0;
  bool tr_residual = false, tr_normalize = false;
  SeedFlags tr_seed;
  tr->add_option("--data", tr_data, "dataset CSV")->required();
  tr->add_option("--m", tr_m, "hidden width (default 2048)");
  tr->add_option("--kappa", tr_kappa, "init std-dev (default 1.0)");
  tr->add_option("--eta", tr_eta,
                 "step size: number or auto:{quartic,cubic,quadratic,reg} "
                 "(default auto:quartic)");
  tr->add_option("--steps", tr_steps, "gradient steps T (default 100)");
  tr->add_option("--reg-beta", tr_reg,
                 "distance regularization factor (0 disables, default 0)");
  add_seed_flags(tr, tr_seed);
  tr->add_option("--trace", tr_trace, "trace CSV output path")->required();
  tr->add_option("--record-every", tr_every, "trace stride (default 1)");
  tr->add_flag("--step-residual", tr_residual,
               "record the per-step kernel residual (O(n^2 m) per step)");
  tr->add_option("--samples", tr_samples,
                 "constant-estimation samples for auto eta (default 200)");
  tr->add_flag("--normalize", tr_normalize,
               "rescale rows whose norm deviates from 1 by more than 1e-6");

  // predict
  auto* pr = app.add_subcommand("predict",
                                "closed-form loss curve and generalization bound");
  std::string pr_data, pr_eta, pr_out;
  long pr_kmax = 100, pr_samples = 200;
  double pr_delta = 0.1;
  SeedFlags pr_seed;
  pr->add_option("--data", pr_data, "dataset CSV")->required();
  pr->add_option("--eta", pr_eta, "step size: number or auto:<variant>")
      ->required();
  pr->add_option("--k-max", pr_kmax, "predict k = 0..k-max (default 100)");
  pr->add_option("--delta", pr_delta,
                 "failure probability for the additive term (default 0.1)");
  pr->add_option("--samples", pr_samples,
                 "constant-estimation samples for auto eta (default 200)");
  add_seed_flags(pr, pr_seed);
  pr->add_option("--out", pr_out, "prediction CSV output path")->required();

  // concentration
  auto* cc = app.add_subcommand("concentration", "Monte-Carlo lemma harnesses");
  std::string cc_mode, cc_data, cc_out;
  long cc_m = 2048, cc_trials = 20, cc_samples = 1000000;
  double cc_r = 0.05, cc_sigma = 1.0, cc_t = 0.1;
  SeedFlags cc_seed;
  cc->add_option("--mode", cc_mode, "gram | perturb | anti")->required();
  cc->add_option("--data", cc_data, "dataset CSV (gram/perturb modes)");
  cc->add_option("--m", cc_m, "weights per trial (default 2048)");
  cc->add_option("--r", cc_r, "perturbation radius in [0,1) (default 0.05)");
  cc->add_option("--sigma", cc_sigma, "Gaussian std-dev (anti mode, default 1)");
  cc->add_option("--t", cc_t, "anti-concentration threshold (default 0.1)");
  cc->add_option("--samples", cc_samples,
                 "samples for anti mode (default 1e6, min 1e5)");
  cc->add_option("--trials", cc_trials, "independent trials (default 20)");
  add_seed_flags(cc, cc_seed);
  cc->add_option("--out", cc_out, "trial CSV output path")->required();

  // experiment
  auto* ex = app.add_subcommand("experiment", "named reproducible presets");
  std::string ex_preset, ex_nlist, ex_data;
  ExperimentConfig ex_cfg;
  SeedFlags ex_seed;
  ex_seed.seed = 42;
  ex->add_option("--preset", ex_preset,
                 "synthetic-figures | convergence | eigen-prediction | regularized")
      ->required();
  ex->add_option("--out-dir", ex_cfg.out_dir, "run output directory")->required();
  ex->add_option("--dataset", ex_cfg.dataset_kind,
                 "orthogonal (default) | gaussian | csv");
  ex->add_option("--data", ex_data, "dataset CSV when --dataset csv");
  ex->add_option("--n", ex_cfg.n, "samples (default 8)");
  ex->add_option("--d", ex_cfg.d, "dimension (gaussian; synthetic-figures default 500)");
  ex->add_option("--m", ex_cfg.m, "hidden width (default 2048)");
  ex->add_option("--kappa", ex_cfg.kappa, "init std-dev (default 1.0)");
  ex->add_option("--eta", ex_cfg.eta,
                 "number or auto:<variant> (default auto:quartic)");
  ex->add_option("--steps", ex_cfg.steps, "gradient steps (default 200)");
  ex->add_option("--reg-beta", ex_cfg.reg_beta,
                 "regularization factor (regularized preset)");
  ex->add_option("--delta", ex_cfg.delta, "failure probability (default 0.1)");
  ex->add_option("--trials", ex_cfg.trials, "trial count (default 20)");
  ex->add_option("--samples", ex_cfg.samples,
                 "constant-estimation samples (default 200)");
  ex->add_option("--record-every", ex_cfg.record_every, "trace stride");
  ex->add_option("--n-list", ex_nlist,
                 "comma-separated n values (synthetic-figures; default 50..1000)");
  add_seed_flags(ex, ex_seed);
  ex->get_option("--seed")->required(false);

  // report
  auto* rp = app.add_subcommand("report", "render SVG plots for a run directory");
  std::string rp_dir;
  bool rp_svg = false;
  rp->add_option("--run-dir", rp_dir, "experiment output directory")->required();
  rp->add_flag("--svg", rp_svg, "write one SVG per curve pair");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen_data(gen_kind, gen_n, gen_d, gen_seed, gen_labels, gen_out);
    if (con->parsed()) {
      if (con_samples < 1) throw InputError("--samples must be >= 1");
      return cmd_constants(con_data, con_samples, con_seed, con_out);
    }
    if (tr->parsed())
      return cmd_train(tr_data, tr_m, tr_kappa, tr_eta, tr_steps, tr_reg,
                       tr_seed, tr_trace, tr_every, tr_residual, tr_samples,
                       tr_normalize);
    if (pr->parsed())
      return cmd_predict(pr_data, pr_eta, pr_kmax, pr_delta, pr_samples,
                         pr_seed, pr_out);
    if (cc->parsed())
      return cmd_concentration(cc_mode, cc_data, cc_m, cc_r, cc_sigma, cc_t,
                               cc_samples, cc_trials, cc_seed, cc_out);
    if (ex->parsed()) {
      ex_cfg.seed = ex_seed.get();
      ex_cfg.csv_path = ex_data;
      return cmd_experiment(ex_preset, ex_cfg, ex_nlist);
    }
    if (rp->parsed()) return cmd_report(rp_dir, rp_svg);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
