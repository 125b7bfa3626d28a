// pricelab: conjectural-variations equilibria and switchback learning runs
// driven by JSON experiment plans.
//
// Subcommands:
//   solve     fixed point of the damped CV update, with contraction report
//   sweep     conjecture-path sweep, or rho sweep when the plan declares one
//   simulate  single SLDL trace
//   rate      replication harness + log-log rate fit
//   gmv       joint-revenue benchmark price
//   check     validate the plan, scan regularity, print verdicts, run nothing
//
// Exit codes: 0 ok, 2 validation error, 3 solver non-convergence, 4 runtime.

#include <cinttypes>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pricelab/errors.hpp"
#include "pricelab/harness.hpp"
#include "pricelab/plan.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pricelab;

namespace {

constexpr const char* kVersion = "pricelab 0.1.0";

struct CliOptions {
  std::string plan_path;
  std::string out_dir;
  std::string format;
  uint64_t seed = 0;
  bool seed_set = false;
  int reps = 0;
  bool quiet = false;
};

bool g_quiet = false;

void say(const char* fmt, ...) {
  if (g_quiet) return;
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stdout, fmt, args);
  va_end(args);
  std::fputc('\n', stdout);
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write(const fs::path& base, const std::string& format) const {
    if (format == "json") {
      json arr = json::array();
      for (const auto& row : rows) {
        json obj;
        for (size_t c = 0; c < header.size(); ++c) obj[header[c]] = row[c];
        arr.push_back(std::move(obj));
      }
      std::ofstream out(base.string() + ".json");
      out << arr.dump(2) << "\n";
    } else {
      std::ofstream out(base.string() + ".csv");
      for (size_t c = 0; c < header.size(); ++c)
        out << (c ? "," : "") << header[c];
      out << "\n";
      for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c)
          out << (c ? "," : "") << row[c];
        out << "\n";
      }
    }
  }
};

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

json to_json(const Vec& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

json to_json(const Matrix& m) {
  json arr = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    arr.push_back(std::move(row));
  }
  return arr;
}

json result_json(const FixedPointResult& r) {
  json j;
  j["price"] = to_json(r.price);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["residual_map"] = r.residual_map;
  j["residual_foc"] = to_json(r.residual_foc);
  json flags = json::array();
  for (uint8_t b : r.boundary_flags) flags.push_back(b != 0);
  j["boundary_flags"] = std::move(flags);
  j["certified_interior"] = r.certified_interior;
  return j;
}

json contraction_json(const ContractionReport& rep) {
  json j;
  j["norm_sup"] = rep.norm_sup;
  j["gamma"] = rep.gamma;
  j["satisfied"] = rep.satisfied;
  j["grid_resolution"] = rep.grid_resolution;
  if (rep.sufficient_linear) j["sufficient_linear"] = *rep.sufficient_linear;
  if (rep.sufficient_mnl) {
    j["sufficient_mnl"] = *rep.sufficient_mnl;
    j["max_share"] = rep.max_share;
  }
  if (rep.decomposition_available) {
    j["l_comp"] = to_json(rep.l_comp);
    j["l_curv"] = to_json(rep.l_curv);
    j["query_point"] = to_json(rep.query_point);
  }
  return j;
}

// Applies command-line overrides and returns the effective plan.
LoadedPlan load_effective_plan(const CliOptions& opt) {
  LoadedPlan plan = load_plan_file(opt.plan_path);
  if (opt.seed_set && plan.sldl) plan.sldl->seed = opt.seed;
  if (opt.reps > 0) plan.replications = opt.reps;
  if (!opt.out_dir.empty()) plan.outputs.dir = opt.out_dir;
  if (!opt.format.empty()) {
    if (opt.format != "csv" && opt.format != "json")
      throw ValidationError("--format", "expected csv or json");
    plan.outputs.format = opt.format;
  }
  return plan;
}

fs::path prepare_out_dir(const LoadedPlan& plan, const CliOptions& opt,
                         const char* subcommand) {
  fs::path dir(plan.outputs.dir);
  fs::create_directories(dir);
  json manifest;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64,
                fnv1a64(plan.canonical_text));
  manifest["plan_hash"] = hash;
  manifest["seed"] =
      plan.sldl ? plan.sldl->seed : (opt.seed_set ? opt.seed : 0);
  manifest["version"] = kVersion;
  manifest["subcommand"] = subcommand;
  manifest["format"] = plan.outputs.format;
  write_json_file(dir / "manifest.json", manifest);
  return dir;
}

int cmd_solve(const CliOptions& opt) {
  const LoadedPlan plan = load_effective_plan(opt);
  const ConjectureMatrix a = plan.resolve_conjecture();
  const Vec u = plan.learning_rates();
  const ContractionReport rep = contraction_report(
      plan.demand, a, u, plan.demand.box(), plan.solve_options.contraction_grid);
  SolveOptions opts = plan.solve_options;
  opts.check_contraction = false;  // already certified above
  if (!rep.satisfied) {
    std::fprintf(stderr, "solve: contraction not certified (||Dz||_inf = %g)\n",
                 rep.norm_sup);
    return 3;
  }
  const FixedPointResult res = solve_fixed_point(
      plan.demand, a, u, plan.demand.box(), plan.demand.box().midpoint(), opts);

  const fs::path dir = prepare_out_dir(plan, opt, "solve");
  json j = result_json(res);
  j["conjecture"] = to_json(a.matrix());
  j["contraction"] = contraction_json(rep);
  write_json_file(dir / "solve.json", j);

  say("price = %s", to_json(res.price).dump().c_str());
  say("contraction: ||Dz||_inf = %g < 1, gamma = %g", rep.norm_sup, rep.gamma);
  if (!res.converged) {
    std::fprintf(stderr,
                 "solve: no convergence after %d iterations (residual %g)\n",
                 res.iterations, res.residual_map);
    return 3;
  }
  return 0;
}

int cmd_gmv(const CliOptions& opt) {
  const LoadedPlan plan = load_effective_plan(opt);
  const Vec p = gmv_optimize(plan.demand, plan.demand.box());
  const fs::path dir = prepare_out_dir(plan, opt, "gmv");
  json j;
  j["price"] = to_json(p);
  j["value"] = gmv_value(plan.demand, p);
  write_json_file(dir / "gmv.json", j);
  say("gmv price = %s value = %s", to_json(p).dump().c_str(),
      fmt_full(gmv_value(plan.demand, p)).c_str());
  return 0;
}

int cmd_sweep(const CliOptions& opt) {
  const LoadedPlan plan = load_effective_plan(opt);

  if (plan.design_sweep) {
    const ExperimentPlan base = plan.experiment_plan_for_sweep();
    const CorrelationSweepResult sweep = correlation_sweep(
        base, plan.design_sweep->q, plan.design_sweep->rho_values);
    const fs::path dir = prepare_out_dir(plan, opt, "sweep");
    Table t;
    t.header = {"rho", "a_star"};
    const int n = plan.demand.n();
    for (int i = 0; i < n; ++i) t.header.push_back("limit_" + std::to_string(i));
    for (int i = 0; i < n; ++i)
      t.header.push_back("final_mean_" + std::to_string(i));
    t.header.push_back("gap");
    t.header.push_back("solved");
    for (const CorrelationRow& row : sweep.rows) {
      std::vector<std::string> r{fmt_full(row.rho), fmt_full(row.a_star_offdiag)};
      for (int i = 0; i < n; ++i)
        r.push_back(row.solved ? fmt_full(row.limit_price[i]) : "");
      for (int i = 0; i < n; ++i)
        r.push_back(row.solved ? fmt_full(row.final_mean[i]) : "");
      r.push_back(row.solved ? fmt_full(row.gap) : "");
      r.push_back(row.solved ? "1" : "0");
      t.rows.push_back(std::move(r));
    }
    t.write(dir / "rho_sweep", plan.outputs.format);
    json j;
    j["monotone_limits"] = sweep.monotone_limits;
    write_json_file(dir / "sweep.json", j);
    say("rho sweep: %zu rows, monotone limits = %s", sweep.rows.size(),
        sweep.monotone_limits ? "yes" : "no");
    for (const CorrelationRow& row : sweep.rows)
      if (!row.solved)
        std::fprintf(stderr, "sweep: rho = %g failed: %s\n", row.rho,
                     row.error.c_str());
    return 0;
  }

  const std::vector<ConjectureMatrix> path = plan.resolve_conjecture_path();
  const Vec u = plan.learning_rates();
  const SweepResult sweep = sweep_conjecture(plan.demand, u, plan.demand.box(),
                                             path, plan.solve_options);
  const fs::path dir = prepare_out_dir(plan, opt, "sweep");
  const int n = plan.demand.n();
  Table t;
  t.header = {"index"};
  for (int i = 0; i < n; ++i)
    for (int j2 = 0; j2 < n; ++j2)
      t.header.push_back("a_" + std::to_string(i) + std::to_string(j2));
  for (int i = 0; i < n; ++i) t.header.push_back("price_" + std::to_string(i));
  for (int i = 0; i < n; ++i) t.header.push_back("foc_" + std::to_string(i));
  t.header.push_back("residual_map");
  t.header.push_back("solved");
  for (size_t idx = 0; idx < sweep.points.size(); ++idx) {
    const SweepPoint& pt = sweep.points[idx];
    std::vector<std::string> r{std::to_string(idx)};
    for (int i = 0; i < n; ++i)
      for (int j2 = 0; j2 < n; ++j2) r.push_back(fmt_full(pt.a(i, j2)));
    for (int i = 0; i < n; ++i)
      r.push_back(pt.solved ? fmt_full(pt.result.price[i]) : "");
    for (int i = 0; i < n; ++i)
      r.push_back(pt.solved ? fmt_full(pt.result.residual_foc[i]) : "");
    r.push_back(pt.solved ? fmt_full(pt.result.residual_map) : "");
    r.push_back(pt.solved ? "1" : "0");
    t.rows.push_back(std::move(r));
  }
  t.write(dir / "sweep", plan.outputs.format);
  json j;
  j["monotone"] = sweep.monotone;
  json arr = json::array();
  for (const SweepPoint& pt : sweep.points) {
    json pj;
    pj["solved"] = pt.solved;
    if (pt.solved) pj["result"] = result_json(pt.result);
    if (!pt.error.empty()) pj["error"] = pt.error;
    arr.push_back(std::move(pj));
  }
  j["points"] = std::move(arr);
  write_json_file(dir / "sweep.json", j);
  say("conjecture sweep: %zu points, monotone = %s", sweep.points.size(),
      sweep.monotone ? "yes" : "no");
  bool any_failed = false;
  for (const SweepPoint& pt : sweep.points)
    if (!pt.solved) {
      any_failed = true;
      std::fprintf(stderr, "sweep: point failed: %s\n", pt.error.c_str());
    }
  return any_failed ? 3 : 0;
}

int cmd_simulate(const CliOptions& opt) {
  const LoadedPlan plan = load_effective_plan(opt);
  if (!plan.design) throw ValidationError("design", "missing section");
  if (!plan.sldl) throw ValidationError("sldl", "missing section");

  Vec target;
  if (plan.has_harness) {
    ExperimentPlan ep = plan.experiment_plan();
    target = solve_target(ep).price;
  }

  const SimulationTrace trace = run_sldl(*plan.sldl, plan.demand, plan.noise,
                                         DesignSchedule(*plan.design));
  const fs::path dir = prepare_out_dir(plan, opt, "simulate");

  Table t;
  t.header = {"run_id",   "batch",      "seller",      "p_hat",
              "alpha_hat", "beta_hat",  "arms_high",   "arms_low",
              "skipped",  "clamped_low", "clamped_high", "err_inf_vs_target"};
  for (const BatchRecord& b : trace.batches) {
    const double err =
        target.empty() ? 0.0 : inf_dist(b.p_after, target);
    for (size_t i = 0; i < b.sellers.size(); ++i) {
      const SellerBatchOutcome& s = b.sellers[i];
      t.rows.push_back({"0", std::to_string(b.k), std::to_string(i),
                        fmt_full(b.p_after[i]), fmt_full(s.alpha_hat),
                        fmt_full(s.beta_hat), std::to_string(s.arms_high),
                        std::to_string(s.arms_low), s.skipped ? "1" : "0",
                        s.clamped_low ? "1" : "0", s.clamped_high ? "1" : "0",
                        target.empty() ? "" : fmt_full(err)});
    }
  }
  t.write(dir / "trace", plan.outputs.format);

  if (plan.sldl->log_periods) {
    Table pt;
    pt.header = {"t", "outcome"};
    const int n = plan.demand.n();
    for (int i = 0; i < n; ++i) pt.header.push_back("price_" + std::to_string(i));
    for (int i = 0; i < n; ++i)
      pt.header.push_back("demand_" + std::to_string(i));
    for (const PeriodRecord& pr : trace.periods) {
      std::vector<std::string> r{std::to_string(pr.t), std::to_string(pr.outcome)};
      for (int i = 0; i < n; ++i) r.push_back(fmt_full(pr.price[i]));
      for (int i = 0; i < n; ++i) r.push_back(fmt_full(pr.demand[i]));
      pt.rows.push_back(std::move(r));
    }
    pt.write(dir / "periods", plan.outputs.format);
  }

  json j;
  j["final_price"] = to_json(trace.final_price);
  j["total_periods"] = trace.total_periods;
  j["batches"] = static_cast<int>(trace.batches.size());
  j["seed"] = plan.sldl->seed;
  if (!target.empty()) {
    j["target"] = to_json(target);
    j["final_err_inf"] = inf_dist(trace.final_price, target);
  }
  write_json_file(dir / "summary.json", j);
  say("simulate: %lld periods, final price %s",
      static_cast<long long>(trace.total_periods),
      to_json(trace.final_price).dump().c_str());
  return 0;
}

int cmd_rate(const CliOptions& opt) {
  const LoadedPlan plan = load_effective_plan(opt);
  const ExperimentPlan ep = plan.experiment_plan();
  const ReplicationStats stats = run_replications(ep);
  const RateFit fit = fit_rate(stats, ep.tail_fraction, ep.bootstrap_resamples,
                               ep.sldl.seed);
  const fs::path dir = prepare_out_dir(plan, opt, "rate");

  Table t;
  t.header = {"batch", "T", "mean_err", "mean_sq_err", "q10", "q90"};
  for (const BatchStats& s : stats.per_batch)
    t.rows.push_back({std::to_string(s.k), std::to_string(s.T),
                      fmt_full(s.mean_err), fmt_full(s.mean_sq_err),
                      fmt_full(s.q10), fmt_full(s.q90)});
  t.write(dir / "stats", plan.outputs.format);

  json j;
  j["slope"] = fit.slope;
  j["ci"] = json::array({fit.ci_lo, fit.ci_hi});
  j["window"] = fit.window;
  j["target"] = to_json(stats.target_price);
  j["final_mean_err"] = stats.per_batch.back().mean_err;
  j["total_periods"] = stats.total_periods;
  write_json_file(dir / "ratefit.json", j);
  say("rate: slope = %.4f ci = [%.4f, %.4f] over last %d batches", fit.slope,
      fit.ci_lo, fit.ci_hi, fit.window);
  return 0;
}

int cmd_check(const CliOptions& opt) {
  const LoadedPlan plan = load_effective_plan(opt);
  say("plan ok: schema_version %d, n = %d", plan.schema_version,
      plan.demand.n());

  const BoundsScan scan = scan_bounds(plan.demand, plan.demand.box(),
                                      default_scan_resolution(plan.demand.n()));
  say("demand bounds (grid %d): m0 = %g, m1 = %g, M1 = %g, M2 = %g",
      scan.bounds.grid_resolution, scan.bounds.m0, scan.bounds.m1,
      scan.bounds.M1, scan.bounds.M2);
  if (scan.regular()) {
    say("demand regularity: ok on the scan grid");
  } else {
    say("demand regularity: %zu violations (showing up to 5)",
        scan.violations.size());
    for (size_t i = 0; i < scan.violations.size() && i < 5; ++i) {
      const RegularityViolation& v = scan.violations[i];
      say("  %s seller %d partner %d value %g", v.kind.c_str(), v.seller,
          v.partner, v.value);
    }
  }

  const ConjectureMatrix a = plan.resolve_conjecture();
  const Vec u = plan.learning_rates();
  const ContractionReport rep = contraction_report(
      plan.demand, a, u, plan.demand.box(), plan.solve_options.contraction_grid);
  say("contraction: ||Dz||_inf = %g %s 1, gamma = %g%s", rep.norm_sup,
      rep.satisfied ? "<" : ">=", rep.gamma,
      rep.satisfied ? " (certified)" : " (NOT certified)");
  if (rep.sufficient_linear)
    say("linear sufficient condition: %s",
        *rep.sufficient_linear ? "holds" : "fails");
  if (rep.sufficient_mnl)
    say("mnl share condition (< 3/5): %s (max share %g)",
        *rep.sufficient_mnl ? "holds" : "fails", rep.max_share);

  if (plan.sldl) {
    const ResolvedSchedules sched = resolve_schedules(
        plan.sldl->batches, plan.sldl->deltas, plan.demand.n(),
        plan.demand.box());
    int64_t total = 0;
    for (int64_t l : sched.lengths) total += l;
    say("schedules: %zu batches, %lld periods, delta_1 = %g, delta_K = %g",
        sched.lengths.size(), static_cast<long long>(total),
        sched.deltas.front()[0], sched.deltas[sched.lengths.size() - 1][0]);
    for (const std::string& w : sched.warnings) say("warning: %s", w.c_str());
    if (plan.sldl->batches.kind == BatchSchedule::Kind::Geometric &&
        rep.satisfied) {
      const double bound = std::pow(rep.gamma, -4.0);
      if (plan.sldl->batches.growth > bound)
        say("warning: batch growth %g exceeds the admissible bound "
            "gamma^-4 = %g estimated from the contraction report",
            plan.sldl->batches.growth, bound);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conjectural-variations equilibria and switchback demand "
               "learning, driven by JSON experiment plans"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("plan", opt.plan_path, "experiment plan file")->required();
    sub->add_option("--seed", opt.seed, "override the plan seed")
        ->each([&](const std::string&) { opt.seed_set = true; });
    sub->add_option("--reps", opt.reps, "override harness replications");
    sub->add_option("--out-dir", opt.out_dir, "override the output directory");
    sub->add_option("--format", opt.format, "table format: csv or json");
    sub->add_flag("--quiet", opt.quiet, "suppress stdout logging");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve the CV fixed point");
  CLI::App* sweep = app.add_subcommand("sweep", "conjecture or rho sweep");
  CLI::App* simulate = app.add_subcommand("simulate", "single SLDL trace");
  CLI::App* rate = app.add_subcommand("rate", "replication harness + rate fit");
  CLI::App* gmv = app.add_subcommand("gmv", "joint-revenue benchmark");
  CLI::App* check = app.add_subcommand("check", "validate and report, run nothing");
  for (CLI::App* sub : {solve, sweep, simulate, rate, gmv, check})
    add_common(sub);

  CLI11_PARSE(app, argc, argv);
  g_quiet = opt.quiet;

  try {
    if (solve->parsed()) return cmd_solve(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
    if (simulate->parsed()) return cmd_simulate(opt);
    if (rate->parsed()) return cmd_rate(opt);
    if (gmv->parsed()) return cmd_gmv(opt);
    if (check->parsed()) return cmd_check(opt);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  } catch (const AssumptionError& e) {
    std::fprintf(stderr, "assumption violated: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
