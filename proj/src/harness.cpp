#include "pricelab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "pricelab/errors.hpp"
#include "pricelab/rng.hpp"

namespace pricelab {

namespace {

double quantile_sorted(const Vec& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

FixedPointResult solve_target(const ExperimentPlan& plan) {
  const DemandSystem& d = plan.demand;
  ConjectureMatrix a = ConjectureMatrix::zero(d.n());
  switch (plan.target.kind) {
    case TargetSpec::Kind::Nash:
      break;
    case TargetSpec::Kind::CvFromDesign:
      a = conjecture_matrix(plan.design);
      break;
    case TargetSpec::Kind::ExplicitPrice: {
      FixedPointResult r;
      if (static_cast<int>(plan.target.price.size()) != d.n())
        throw ValidationError("harness.target.price", "dimension mismatch");
      r.price = plan.target.price;
      r.converged = true;
      r.residual_foc = foc_residual(d, a, r.price);
      return r;
    }
  }
  const Vec init = d.box().midpoint();
  FixedPointResult r =
      solve_fixed_point(d, a, plan.sldl.u, d.box(), init, plan.solve_options);
  if (!r.converged)
    throw SolverError("target equilibrium did not converge: residual " +
                      std::to_string(r.residual_map) + " after " +
                      std::to_string(r.iterations) + " iterations");
  return r;
}

ReplicationStats run_replications(const ExperimentPlan& plan) {
  if (plan.replications < 1)
    throw ValidationError("harness.replications", "need at least 1");

  ReplicationStats out;
  out.target = solve_target(plan);
  out.target_price = out.target.price;

  const int reps = plan.replications;
  const int big_k = plan.sldl.batches.batches();
  out.err_by_rep.assign(reps, Vec(big_k, 0.0));
  out.final_price_by_rep.assign(reps, {});

  SldlConfig cfg = plan.sldl;
  cfg.log_periods = false;
  cfg.record_empirical_tables = false;
  const DesignSchedule schedule(plan.design);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      try {
        const SimulationTrace tr =
            run_sldl(cfg, plan.demand, plan.noise, schedule,
                     static_cast<uint64_t>(r));
        for (int k = 0; k < big_k; ++k)
          out.err_by_rep[r][k] =
              inf_dist(tr.batches[k].p_after, out.target_price);
        out.final_price_by_rep[r] = tr.final_price;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers = std::max(1, std::min<int>(hw ? hw : 1, reps));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  const ResolvedSchedules sched = resolve_schedules(
      plan.sldl.batches, plan.sldl.deltas, plan.demand.n(), plan.demand.box());
  out.per_batch.resize(big_k);
  int64_t cum = 0;
  for (int k = 0; k < big_k; ++k) {
    cum += sched.lengths[k];
    BatchStats& s = out.per_batch[k];
    s.k = k + 1;
    s.T = cum;
    Vec errs(reps);
    double mean = 0.0, mean_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      errs[r] = out.err_by_rep[r][k];
      mean += errs[r];
      mean_sq += errs[r] * errs[r];
    }
    mean /= reps;
    mean_sq /= reps;
    double var = 0.0;
    for (int r = 0; r < reps; ++r) var += (errs[r] - mean) * (errs[r] - mean);
    s.mean_err = mean;
    s.mean_sq_err = mean_sq;
    s.var_err = reps > 1 ? var / (reps - 1) : 0.0;
    std::sort(errs.begin(), errs.end());
    s.q10 = quantile_sorted(errs, 0.10);
    s.q90 = quantile_sorted(errs, 0.90);
  }
  out.total_periods = cum;

  out.final_price_mean.assign(plan.demand.n(), 0.0);
  for (int r = 0; r < reps; ++r)
    for (int i = 0; i < plan.demand.n(); ++i)
      out.final_price_mean[i] += out.final_price_by_rep[r][i];
  for (double& v : out.final_price_mean) v /= reps;
  return out;
}

double loglog_slope(const std::vector<std::pair<double, double>>& points) {
  const size_t m = points.size();
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    sx += std::log(x);
    sy += std::log(y);
  }
  const double xbar = sx / static_cast<double>(m);
  const double ybar = sy / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - xbar;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - ybar);
  }
  return sxy / sxx;
}

RateFit fit_rate(const ReplicationStats& stats, double tail_fraction,
                 int bootstrap_resamples, uint64_t bootstrap_seed) {
  const int big_k = static_cast<int>(stats.per_batch.size());
  RateFit fit;
  fit.points.reserve(big_k);
  for (const BatchStats& s : stats.per_batch)
    fit.points.emplace_back(static_cast<double>(s.T), s.mean_sq_err);

  const int window = std::max(
      4, static_cast<int>(std::ceil(tail_fraction * static_cast<double>(big_k))));
  if (window > big_k)
    throw ValidationError("harness.tail_fraction",
                          "need at least 4 tail points to fit a rate");
  fit.window = window;
  const int begin = big_k - window;

  std::vector<std::pair<double, double>> tail(fit.points.begin() + begin,
                                              fit.points.end());
  fit.slope = loglog_slope(tail);

  const int reps = static_cast<int>(stats.err_by_rep.size());
  if (bootstrap_resamples > 0 && reps > 1) {
    RngStream rng(bootstrap_seed, 0xb00757);
    Vec slopes(bootstrap_resamples);
    std::vector<std::pair<double, double>> resampled(window);
    for (int b = 0; b < bootstrap_resamples; ++b) {
      for (int k = 0; k < window; ++k)
        resampled[k] = {fit.points[begin + k].first, 0.0};
      for (int r = 0; r < reps; ++r) {
        const int pick = static_cast<int>(rng.uniform() * reps);
        for (int k = 0; k < window; ++k) {
          const double e = stats.err_by_rep[pick][begin + k];
          resampled[k].second += e * e;
        }
      }
      for (int k = 0; k < window; ++k) resampled[k].second /= reps;
      slopes[b] = loglog_slope(resampled);
    }
    std::sort(slopes.begin(), slopes.end());
    fit.ci_lo = quantile_sorted(slopes, 0.025);
    fit.ci_hi = quantile_sorted(slopes, 0.975);
  } else {
    fit.ci_lo = fit.ci_hi = fit.slope;
  }
  return fit;
}

CorrelationSweepResult correlation_sweep(const ExperimentPlan& base, double q,
                                         const Vec& rho_values) {
  CorrelationSweepResult out;
  Vec prev_limit;
  for (double rho : rho_values) {
    CorrelationRow row;
    row.rho = rho;
    try {
      ExperimentPlan plan = base;
      plan.design = ExperimentDesign::common_shock_mixture(base.demand.n(),
                                                           rho, q);
      plan.target.kind = TargetSpec::Kind::CvFromDesign;
      const ConjectureMatrix a_star = conjecture_matrix(plan.design);
      row.a_star_offdiag = base.demand.n() > 1 ? a_star(0, 1) : 0.0;
      const ReplicationStats stats = run_replications(plan);
      row.limit_price = stats.target_price;
      row.final_mean = stats.final_price_mean;
      row.gap = inf_dist(row.final_mean, row.limit_price);
      row.solved = true;
      if (!prev_limit.empty()) {
        for (size_t i = 0; i < prev_limit.size(); ++i)
          if (row.limit_price[i] < prev_limit[i] - 1e-9)
            out.monotone_limits = false;
      }
      prev_limit = row.limit_price;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace pricelab
