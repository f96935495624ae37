/*
 Copyright 2026 The lqmhpe Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.
//
//   acceptance [--trials N] [--nmhpe-trials N] [--out DIR]
//
// --trials sets the size of the cost batteries (default 100); smaller values
// are for quick local runs and are reported as such.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lqmhpe/dynamics.hpp"
#include "lqmhpe/mhpe.hpp"
#include "lqmhpe/monte_carlo.hpp"
#include "lqmhpe/nmpc.hpp"
#include "lqmhpe/relaxation.hpp"
#include "lqmhpe/report.hpp"
#include "lqmhpe/validate.hpp"

namespace {

using namespace lqmhpe;
using Clock = std::chrono::steady_clock;

struct Options {
  int trials = 100;
  int nmhpe_trials = 20;
  int timing_windows = 100;
  std::filesystem::path out = "acceptance_out";
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// Runs the given checks, passes when all pass and total time is within budget.
void check_group(const std::string& name, double budget_s,
                 const std::vector<std::function<CheckResult()>>& checks) {
  const auto t0 = Clock::now();
  bool pass = true;
  double threshold = 0.0;
  std::ostringstream os;
  for (const auto& run : checks) {
    const CheckResult r = run();
    pass = pass && r.passed;
    threshold = r.threshold;
    os << r.name << " worst=" << fmt("%.3e", r.worst) << " n=" << r.samples
       << (r.detail.empty() ? "" : " (" + r.detail + ")") << "; ";
  }
  const double t = seconds_since(t0);
  pass = pass && t < budget_s;
  os << "threshold " << fmt("%.0e", threshold)
     << ", runtime " << fmt("%.2f", t) << " s (budget " << fmt("%.0f", budget_s) << " s)";
  report(pass, name, os.str());
}

// Estimator windows from the closed loop: M steps of the planner under the
// nominal model on each trial's scenario, then both estimators from their
// nominal priors on the same window.
void solve_time_ratio(const Options& opt) {
  const auto t0 = Clock::now();
  const TrialConfig base = TrialConfig::for_model("crazyflie");
  const ModelSpec spec = model_by_name(base.model);
  const EstimatorSettings settings = base.estimator_settings(spec);
  const EstimatorState lq_state =
      lq_estimator_state(spec.params, base.param_lower_factor, base.param_upper_factor);
  const EstimatorState nl_state =
      nonlinear_estimator_state(spec.params, base.param_lower_factor, base.param_upper_factor);
  const ParamVector nominal_vt = relax(spec.params).to_vector();

  double lq_total = 0.0, nl_total = 0.0;
  int lq_fail = 0, nl_fail = 0;
  for (int k = 0; k < opt.timing_windows; ++k) {
    TrialConfig cfg = base;
    cfg.seed = static_cast<std::uint64_t>(k);
    const TrialScenario sc = draw_scenario(cfg, spec);
    NmpcConfig nmpc = cfg.nmpc_config(spec);
    nmpc.u_ref = hover_input(nominal_vt, spec.gravity);
    const ParamVector truth = sc.true_params.to_vector();

    HorizonWindow window(cfg.horizon_m, cfg.dt);
    StateVector x = sc.initial_state;
    window.start(x);
    std::optional<PlannedTrajectory> warm;
    for (int j = 0; j < cfg.horizon_m; ++j) {
      const PlannedTrajectory p = plan(x, nominal_vt, nmpc, warm);
      const InputVector u = apply_first(p, nmpc);
      const Disturbance& w = sc.disturbances[j];
      x = rk4_kernel<double>(x, u, truth, spec.gravity, cfg.dt) + cfg.dt * w;
      window.push_step(u, w, x);
      warm = p;
    }
    const Estimate el = estimate_lq(window, lq_state, settings);
    const Estimate en = estimate_nonlinear(window, nl_state, settings);
    lq_total += el.solve_time;
    nl_total += en.solve_time;
    lq_fail += el.status != EstimateStatus::kSolved;
    nl_fail += en.status != EstimateStatus::kSolved;
  }
  const double lq_mean = lq_total / opt.timing_windows;
  const double nl_mean = nl_total / opt.timing_windows;
  const double ratio = lq_mean / nl_mean;
  const double t = seconds_since(t0);
  std::ostringstream os;
  os << opt.timing_windows << " paired Crazyflie windows, mean LQ-MHPE " << fmt("%.3e", lq_mean)
     << " s, mean NMHPE " << fmt("%.3e", nl_mean) << " s, ratio " << fmt("%.3f", ratio)
     << " (need <= 0.2; speedup " << fmt("%.1f", 1.0 / ratio) << "x), failures LQ " << lq_fail
     << " NMHPE " << nl_fail << ", runtime " << fmt("%.1f", t) << " s (budget 600 s)";
  report(ratio <= 0.2 && t < 600.0, "solve_time_ratio", os.str());
}

struct Battery {
  BatteryResult result;
  double seconds = 0.0;
};

Battery run_and_save(const std::string& model, const std::vector<Scheme>& schemes, int trials,
                     const std::filesystem::path& dir) {
  BatteryConfig cfg;
  cfg.base = TrialConfig::for_model(model);
  cfg.schemes = schemes;
  cfg.trials = trials;
  cfg.first_seed = 0;
  cfg.jobs = 1;
  const auto t0 = Clock::now();
  Battery b;
  b.result = run_battery(cfg);
  b.seconds = seconds_since(t0);
  write_outputs(b.result, dir);
  return b;
}

const SchemeSummary& summary_of(const BatteryResult& r, Scheme s) {
  for (const SchemeSummary& x : r.summaries) {
    if (x.scheme == s) return x;
  }
  throw std::logic_error("scheme missing from battery");
}

// Mean cost over the first n seeds of a scheme.
double mean_cost(const BatteryResult& r, Scheme s, int n) {
  double sum = 0.0;
  int count = 0;
  for (const TrialRecord& rec : r.records) {
    if (rec.scheme == s && static_cast<int>(rec.seed) < n) {
      sum += rec.cost;
      ++count;
    }
  }
  return count ? sum / count : 0.0;
}

std::string cost_line(const std::string& model, const BatteryResult& r, double target) {
  const SchemeSummary& none = summary_of(r, Scheme::kNone);
  const SchemeSummary& lq = summary_of(r, Scheme::kLqMhpe);
  const double margin = 1.0 - lq.cost_mean / none.cost_mean;
  std::ostringstream os;
  os << model << " " << none.trials << " paired trials: mean cost none " << fmt("%.4e", none.cost_mean)
     << ", lq_mhpe " << fmt("%.4e", lq.cost_mean) << ", reduction " << fmt("%.1f", 100.0 * margin)
     << "% (target " << fmt("%.0f", 100.0 * target) << "%: " << (margin >= target ? "met" : "NOT met")
     << "), diverged none " << none.diverged << " lq_mhpe " << lq.diverged;
  return os.str();
}

void nmhpe_report(const std::string& model, const BatteryResult& paired, const Battery& nl) {
  const SchemeSummary& s = summary_of(nl.result, Scheme::kNmhpe);
  const int n = s.trials;
  const double lq = mean_cost(paired, Scheme::kLqMhpe, n);
  const double none = mean_cost(paired, Scheme::kNone, n);
  const SchemeSummary& lqs = summary_of(paired, Scheme::kLqMhpe);
  std::printf(
      "INFO nmhpe_%s: first %d seeds, mean cost nmhpe %.4e vs lq_mhpe %.4e vs none %.4e "
      "(lq/nmhpe %.3f); closed-loop mean estimator time nmhpe %.3e s vs lq_mhpe %.3e s; "
      "nmhpe failures diverged %d; runtime %.1f s\n",
      model.c_str(), n, s.cost_mean, lq, none, lq / s.cost_mean, s.estimator_mean,
      lqs.estimator_mean, s.diverged, nl.seconds);
  std::fflush(stdout);
}

void determinism(const std::filesystem::path& out) {
  BatteryConfig cfg;
  cfg.base = TrialConfig::for_model("crazyflie");
  cfg.base.record_timing = false;
  cfg.base.duration = 2.0;
  cfg.schemes = {Scheme::kNone, Scheme::kLqMhpe, Scheme::kNmhpe};
  cfg.trials = 3;
  cfg.first_seed = 100;
  const auto t0 = Clock::now();
  std::ostringstream a, b;
  write_records_csv(run_battery(cfg).records, a);
  write_records_csv(run_battery(cfg).records, b);
  std::filesystem::create_directories(out);
  std::ofstream(out / "determinism_records.csv") << a.str();
  const bool same = a.str() == b.str() && !a.str().empty();
  report(same, "determinism",
         std::string("two batteries (3 schemes x 3 seeds, timing off) ") +
             (same ? "produced byte-identical" : "produced DIFFERENT") + " records.csv (" +
             std::to_string(a.str().size()) + " bytes), runtime " + fmt("%.1f", seconds_since(t0)) +
             " s");
}

Options parse(int argc, char** argv) {
  Options o;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "missing value for %s\n", a.c_str());
        std::exit(1);
      }
      return argv[++i];
    };
    if (a == "--trials") {
      o.trials = std::stoi(next());
    } else if (a == "--nmhpe-trials") {
      o.nmhpe_trials = std::stoi(next());
    } else if (a == "--timing-windows") {
      o.timing_windows = std::stoi(next());
    } else if (a == "--out") {
      o.out = next();
    } else {
      std::fprintf(stderr, "unknown argument %s\n", a.c_str());
      std::exit(1);
    }
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const Options opt = parse(argc, argv);
  const std::uint64_t seed = 7001;
  const ModelSpec cf = crazyflie(), f1 = fusion1();

  check_group("affine_equivalence", 5.0,
              {[&] { return check_affine_equivalence(cf, 10000, seed); },
               [&] { return check_affine_equivalence(f1, 10000, seed + 1); }});
  check_group("gradient_suite", 30.0,
              {[&] { return check_rk4_jacobian(cf, 100, seed + 2); },
               [&] { return check_rk4_jacobian(f1, 100, seed + 3); }});
  check_group("qp_oracle", 60.0, {[&] { return check_qp_oracle(200, seed + 4); }});
  check_group("estimator_fixed_points", 600.0,
              {[&] { return check_estimator_fixed_point(cf, EstimatorKind::kNonlinear, 50, seed + 5); },
               [&] { return check_estimator_fixed_point(cf, EstimatorKind::kLq, 50, seed + 6); },
               [&] { return check_estimator_fixed_point(f1, EstimatorKind::kNonlinear, 50, seed + 7); },
               [&] { return check_estimator_fixed_point(f1, EstimatorKind::kLq, 50, seed + 8); }});
  check_group("bound_soundness", 600.0,
              {[&] { return check_bound_soundness(cf, 100000, seed + 9); },
               [&] { return check_bound_soundness(f1, 100000, seed + 10); }});

  solve_time_ratio(opt);

  const std::vector<Scheme> paired = {Scheme::kNone, Scheme::kLqMhpe};
  const Battery cfb = run_and_save("crazyflie", paired, opt.trials, opt.out / "crazyflie");
  const Battery f1b = run_and_save("fusion1", paired, opt.trials, opt.out / "fusion1");
  {
    const double none_cf = summary_of(cfb.result, Scheme::kNone).cost_mean;
    const double lq_cf = summary_of(cfb.result, Scheme::kLqMhpe).cost_mean;
    const double none_f1 = summary_of(f1b.result, Scheme::kNone).cost_mean;
    const double lq_f1 = summary_of(f1b.result, Scheme::kLqMhpe).cost_mean;
    const double t = cfb.seconds + f1b.seconds;
    const bool pass = lq_cf < none_cf && lq_f1 < none_f1 && t < 1800.0 && opt.trials >= 100;
    report(pass, "trajectory_cost_order",
           cost_line("crazyflie", cfb.result, 0.20) + "; " + cost_line("fusion1", f1b.result, 0.15) +
               "; runtime " + fmt("%.0f", t) + " s (budget 1800 s)" +
               (opt.trials < 100 ? "; reduced trial count" : ""));
  }
  {
    const SchemeSummary& lq = summary_of(f1b.result, Scheme::kLqMhpe);
    const double frac = static_cast<double>(lq.converged) / lq.trials;
    report(frac >= 0.8 && opt.trials >= 100, "convergence_basin",
           "fusion1 lq_mhpe: " + std::to_string(lq.converged) + "/" + std::to_string(lq.trials) +
               " trials end with |p| < 1 m (" + fmt("%.0f", 100.0 * frac) + "%, need >= 80%)");
  }

  determinism(opt.out);

  if (opt.nmhpe_trials > 0) {
    const Battery cfn =
        run_and_save("crazyflie", {Scheme::kNmhpe}, opt.nmhpe_trials, opt.out / "crazyflie_nmhpe");
    nmhpe_report("crazyflie", cfb.result, cfn);
    const Battery f1n =
        run_and_save("fusion1", {Scheme::kNmhpe}, opt.nmhpe_trials, opt.out / "fusion1_nmhpe");
    nmhpe_report("fusion1", f1b.result, f1n);
  }

  std::printf("%s: %d criteria failed\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures);
  return g_failures == 0 ? 0 : 1;
}
