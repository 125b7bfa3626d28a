#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pricelab/demand.hpp"
#include "pricelab/design.hpp"
#include "pricelab/equilibrium.hpp"
#include "pricelab/sldl.hpp"

namespace pricelab {

struct TargetSpec {
  enum class Kind { Nash, CvFromDesign, ExplicitPrice };
  Kind kind = Kind::Nash;
  Vec price;  // ExplicitPrice only
};

// Full parameterization of a Monte Carlo experiment.
struct ExperimentPlan {
  DemandSystem demand;
  NoiseSpec noise;
  ExperimentDesign design;
  SldlConfig sldl;
  int replications = 1;
  TargetSpec target;
  double tail_fraction = 0.5;
  int bootstrap_resamples = 1000;
  SolveOptions solve_options;
};

struct BatchStats {
  int k = 0;
  int64_t T = 0;  // cumulative periods at batch end
  double mean_err = 0.0;
  double var_err = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  double mean_sq_err = 0.0;
};

struct ReplicationStats {
  FixedPointResult target;      // solved limit point
  Vec target_price;
  std::vector<BatchStats> per_batch;
  // err[rep][batch] = ||p_hat - p*||_inf after the batch update.
  std::vector<Vec> err_by_rep;
  std::vector<Vec> final_price_by_rep;
  Vec final_price_mean;
  int64_t total_periods = 0;
};

// Solves the target, then runs the replications concurrently with streams
// derived from (seed, replication index). Aggregation is in replication
// order, so results are independent of thread count.
ReplicationStats run_replications(const ExperimentPlan& plan);

// Resolves the plan's target equilibrium without simulating.
FixedPointResult solve_target(const ExperimentPlan& plan);

struct RateFit {
  std::vector<std::pair<double, double>> points;  // (T, mse), all batches
  int window = 0;        // tail points used
  double slope = 0.0;    // OLS slope of log mse on log T over the window
  double ci_lo = 0.0;    // bootstrap percentile interval over replications
  double ci_hi = 0.0;
};

RateFit fit_rate(const ReplicationStats& stats, double tail_fraction,
                 int bootstrap_resamples, uint64_t bootstrap_seed);

// Pure least-squares slope of log y on log x; exposed for direct use on
// synthetic curves.
double loglog_slope(const std::vector<std::pair<double, double>>& points);

struct CorrelationRow {
  double rho = 0.0;
  double a_star_offdiag = 0.0;
  Vec limit_price;
  Vec final_mean;
  double gap = 0.0;  // ||final_mean - limit_price||_inf
  bool solved = false;
  std::string error;
};

struct CorrelationSweepResult {
  std::vector<CorrelationRow> rows;
  bool monotone_limits = true;
};

// Re-runs the plan with a common-shock mixture design per rho. The mixture
// marginal q is taken from `q`; failures are recorded per row and the sweep
// continues.
CorrelationSweepResult correlation_sweep(const ExperimentPlan& base, double q,
                                         const Vec& rho_values);

}  // namespace pricelab
