#include "pricelab/sldl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pricelab/errors.hpp"
#include "pricelab/rng.hpp"

namespace pricelab {

BatchSchedule BatchSchedule::geometric(int64_t first, double growth,
                                       int count) {
  BatchSchedule s;
  s.kind = Kind::Geometric;
  s.first = first;
  s.growth = growth;
  s.count = count;
  return s;
}

BatchSchedule BatchSchedule::explicit_lengths_of(std::vector<int64_t> lengths) {
  BatchSchedule s;
  s.kind = Kind::Explicit;
  s.explicit_lengths = std::move(lengths);
  return s;
}

int BatchSchedule::batches() const {
  return kind == Kind::Geometric ? count
                                 : static_cast<int>(explicit_lengths.size());
}

std::vector<int64_t> BatchSchedule::lengths_with_extension() const {
  std::vector<int64_t> out;
  if (kind == Kind::Geometric) {
    if (first < 2)
      throw ValidationError("sldl.batches.first",
                            "a two-point regression needs at least 2 periods");
    if (!(growth > 1.0))
      throw ValidationError("sldl.batches.growth", "growth must exceed 1");
    if (count < 1)
      throw ValidationError("sldl.batches.count", "need at least one batch");
    out.reserve(count + 1);
    for (int k = 1; k <= count + 1; ++k) {
      const double len = static_cast<double>(first) * std::pow(growth, k - 1);
      out.push_back(static_cast<int64_t>(std::ceil(len - 1e-9)));
    }
  } else {
    if (explicit_lengths.empty())
      throw ValidationError("sldl.batches.lengths", "need at least one batch");
    for (size_t k = 0; k < explicit_lengths.size(); ++k)
      if (explicit_lengths[k] < 2)
        throw ValidationError(
            "sldl.batches.lengths",
            "batch " + std::to_string(k + 1) +
                " is shorter than 2 periods; the regression is infeasible");
    out = explicit_lengths;
    out.push_back(explicit_lengths.back());
  }
  return out;
}

DeltaSchedule DeltaSchedule::theorem2_rate() { return {}; }

DeltaSchedule DeltaSchedule::power_law(double c, double eta) {
  DeltaSchedule s;
  s.kind = Kind::PowerLaw;
  s.c = c;
  s.eta = eta;
  return s;
}

DeltaSchedule DeltaSchedule::explicit_deltas(std::vector<Vec> per_seller) {
  DeltaSchedule s;
  s.kind = Kind::Explicit;
  s.explicit_per_seller = std::move(per_seller);
  return s;
}

ResolvedSchedules resolve_schedules(const BatchSchedule& batches,
                                    const DeltaSchedule& deltas, int n,
                                    const PriceBox& box) {
  ResolvedSchedules out;
  std::vector<int64_t> ext = batches.lengths_with_extension();
  const int big_k = batches.batches();
  out.lengths.assign(ext.begin(), ext.begin() + big_k);

  out.deltas.resize(big_k + 1);
  for (int k = 1; k <= big_k + 1; ++k) {
    Vec dlt(n);
    switch (deltas.kind) {
      case DeltaSchedule::Kind::Theorem2Rate: {
        const double ik = static_cast<double>(ext[k - 1]);
        const double v = std::pow(std::log(std::exp(1.0) * ik) / ik, 0.25);
        dlt.assign(n, v);
        break;
      }
      case DeltaSchedule::Kind::PowerLaw: {
        if (!(deltas.c > 0.0) || !(deltas.eta > 0.0))
          throw ValidationError("sldl.delta", "power law needs c > 0, eta > 0");
        dlt.assign(n, deltas.c * std::pow(static_cast<double>(k), -deltas.eta));
        break;
      }
      case DeltaSchedule::Kind::Explicit: {
        if (static_cast<int>(deltas.explicit_per_seller.size()) != n)
          throw ValidationError("sldl.delta.per_seller",
                                "need one delta list per seller");
        for (int i = 0; i < n; ++i) {
          const Vec& lst = deltas.explicit_per_seller[i];
          if (static_cast<int>(lst.size()) < big_k)
            throw ValidationError(
                "sldl.delta.per_seller",
                "seller " + std::to_string(i) + " lists fewer than " +
                    std::to_string(big_k) + " deltas");
          dlt[i] = lst[std::min<size_t>(k - 1, lst.size() - 1)];
        }
        break;
      }
    }
    out.deltas[k - 1] = std::move(dlt);
  }

  for (int k = 0; k <= big_k; ++k) {
    for (int i = 0; i < n; ++i) {
      const double dk = out.deltas[k][i];
      if (!(dk > 0.0))
        throw ValidationError("sldl.delta", "perturbations must be positive");
      if (!(box.upper()[i] - box.lower()[i] > 2.0 * dk))
        throw ValidationError(
            "sldl.delta", "box width for seller " + std::to_string(i) +
                              " must exceed twice the batch-" +
                              std::to_string(k + 1) + " perturbation");
      if (k > 0 && out.deltas[k][i] > out.deltas[k - 1][i] + 1e-15)
        throw ValidationError("sldl.delta",
                              "perturbation magnitudes must be nonincreasing");
    }
  }

  // Numeric check of the growth hypothesis delta * sqrt(I) / log(I) -> inf
  // over the declared horizon; advisory only.
  if (big_k >= 4) {
    auto trend = [&](int k) {
      double dmin = out.deltas[k][0];
      for (int i = 1; i < n; ++i) dmin = std::min(dmin, out.deltas[k][i]);
      const double ik = static_cast<double>(ext[k]);
      return dmin * std::sqrt(ik) / std::log(ik);
    };
    if (trend(big_k - 1) < trend(big_k / 2))
      out.warnings.push_back(
          "delta schedule: delta*sqrt(I)/log(I) is decreasing over the tail; "
          "the convergence hypothesis may fail at this horizon");
  }
  return out;
}

OlsFit ols_two_point(const Vec& prices, const Vec& demands) {
  if (prices.size() != demands.size())
    throw ValidationError("ols", "price and demand sequences differ in length");
  if (prices.size() < 2)
    throw ValidationError("ols", "need at least two observations");

  OlsFit fit;
  const double pmin = *std::min_element(prices.begin(), prices.end());
  const double pmax = *std::max_element(prices.begin(), prices.end());
  for (double p : prices) {
    if (p == pmin) ++fit.arms_low;
    if (p == pmax) ++fit.arms_high;
  }
  if (pmin == pmax) {
    fit.no_variation = true;
    return fit;
  }

  const size_t m = prices.size();
  double pbar = 0.0, dbar = 0.0;
  for (size_t t = 0; t < m; ++t) {
    pbar += prices[t];
    dbar += demands[t];
  }
  pbar /= static_cast<double>(m);
  dbar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (size_t t = 0; t < m; ++t) {
    const double dp = prices[t] - pbar;
    sxx += dp * dp;
    sxy += dp * (demands[t] - dbar);
  }
  fit.beta = -sxy / sxx;
  fit.alpha = dbar + fit.beta * pbar;
  return fit;
}

BatchRecord run_batch_with_outcomes(const DemandSystem& d,
                                    const NoiseSpec& noise,
                                    const std::vector<uint32_t>& outcomes,
                                    const Vec& p_hat, const Vec& delta_k,
                                    const Vec& delta_next, const Vec& u,
                                    double slope_tolerance, RngStream& rng,
                                    bool record_table,
                                    std::vector<PeriodRecord>* period_log,
                                    int64_t t_offset) {
  const int n = d.n();
  const int64_t periods = static_cast<int64_t>(outcomes.size());
  if (periods < 1) throw ValidationError("batch", "empty batch");

  // Prices take at most 2^n distinct vectors within a batch; cache demand.
  const size_t table_size = size_t{1} << n;
  std::vector<Vec> price_of(table_size), lambda_of(table_size);
  std::vector<uint8_t> cached(table_size, 0);

  EmpiricalDesign emp(n);
  Vec sum_high(n, 0.0), sum_low(n, 0.0), sum_all(n, 0.0);
  std::vector<int64_t> cnt_high(n, 0);
  Vec eps;

  for (int64_t t = 0; t < periods; ++t) {
    const uint32_t tau = outcomes[static_cast<size_t>(t)];
    if (!cached[tau]) {
      Vec p(n);
      for (int i = 0; i < n; ++i)
        p[i] = p_hat[i] + (((tau >> (n - 1 - i)) & 1u) ? delta_k[i] : 0.0);
      lambda_of[tau] = d.mean_demand(p);
      price_of[tau] = std::move(p);
      cached[tau] = 1;
    }
    emp.add(tau);
    noise.draw(rng, eps);
    const Vec& lam = lambda_of[tau];
    for (int i = 0; i < n; ++i) {
      const double dd = lam[i] + eps[i];
      sum_all[i] += dd;
      if ((tau >> (n - 1 - i)) & 1u) {
        sum_high[i] += dd;
        ++cnt_high[i];
      } else {
        sum_low[i] += dd;
      }
    }
    if (period_log) {
      PeriodRecord pr;
      pr.t = t_offset + t + 1;
      pr.outcome = tau;
      pr.price = price_of[tau];
      pr.demand = lam;
      for (int i = 0; i < n; ++i) pr.demand[i] += eps[i];
      period_log->push_back(std::move(pr));
    }
  }

  BatchRecord rec;
  rec.p_before = p_hat;
  rec.delta = delta_k;
  rec.periods = periods;
  rec.sellers.resize(n);
  rec.p_after.resize(n);
  if (record_table) rec.empirical_table = emp.frequency_table();
  rec.conjecture = empirical_conjecture(emp);

  const Vec& lo = d.box().lower();
  const Vec& hi = d.box().upper();
  for (int i = 0; i < n; ++i) {
    SellerBatchOutcome& s = rec.sellers[i];
    s.arms_high = cnt_high[i];
    s.arms_low = periods - cnt_high[i];
    double target;
    if (s.arms_high == 0 || s.arms_low == 0) {
      // No within-batch variation: the design matrix is singular. Skip
      // estimation and hold the baseline.
      s.skipped = true;
      s.alpha_hat = std::numeric_limits<double>::quiet_NaN();
      s.beta_hat = std::numeric_limits<double>::quiet_NaN();
      target = p_hat[i];
    } else {
      const double mean_high = sum_high[i] / static_cast<double>(s.arms_high);
      const double mean_low = sum_low[i] / static_cast<double>(s.arms_low);
      const double beta = -(mean_high - mean_low) / delta_k[i];
      const double dbar = sum_all[i] / static_cast<double>(periods);
      const double pbar =
          p_hat[i] +
          delta_k[i] * static_cast<double>(s.arms_high) / static_cast<double>(periods);
      const double alpha = dbar + beta * pbar;
      s.beta_hat = beta;
      s.alpha_hat = alpha;
      if (std::abs(beta) < slope_tolerance) {
        s.slope_degenerate = true;
        target = hi[i];  // ill-defined revenue maximizer; default to the cap
      } else {
        s.negative_slope = beta < 0.0;
        target = alpha / (2.0 * beta);
      }
    }
    s.target = target;
    const double raw =
        s.skipped ? p_hat[i] : (1.0 - u[i]) * p_hat[i] + u[i] * target;
    const double floor_next = lo[i] + delta_next[i];
    const double cap_next = hi[i] - delta_next[i];
    double next = raw;
    if (next < floor_next) {
      next = floor_next;
      s.clamped_low = true;
    }
    if (next > cap_next) {
      next = cap_next;
      s.clamped_high = true;
    }
    rec.p_after[i] = next;
  }
  return rec;
}

BatchRecord run_batch(const DemandSystem& d, const NoiseSpec& noise,
                      const ExperimentDesign& design, const Vec& p_hat,
                      const Vec& delta_k, const Vec& delta_next, const Vec& u,
                      int64_t periods, double slope_tolerance, RngStream& rng,
                      bool record_table, std::vector<PeriodRecord>* period_log,
                      int64_t t_offset) {
  if (design.n() != d.n())
    throw ValidationError("design", "dimension mismatch with demand");
  std::vector<uint32_t> outcomes(static_cast<size_t>(periods));
  for (auto& o : outcomes) o = design.sample(rng);
  return run_batch_with_outcomes(d, noise, outcomes, p_hat, delta_k,
                                 delta_next, u, slope_tolerance, rng,
                                 record_table, period_log, t_offset);
}

SimulationTrace run_sldl(const SldlConfig& cfg, const DemandSystem& d,
                         const NoiseSpec& noise, const DesignSchedule& designs,
                         uint64_t stream) {
  const int n = d.n();
  if (static_cast<int>(cfg.u.size()) != n)
    throw ValidationError("sldl.u", "need one learning rate per seller");
  for (int i = 0; i < n; ++i)
    if (!(cfg.u[i] > 0.0) || !(cfg.u[i] < 1.0))
      throw ValidationError("sldl.u", "learning rate u[" + std::to_string(i) +
                                          "] must lie strictly inside (0, 1)");
  if (noise.n() != n)
    throw ValidationError("noise.sigma", "dimension mismatch with demand");
  if (designs.designs.size() != 1 &&
      static_cast<int>(designs.designs.size()) != cfg.batches.batches())
    throw ValidationError("design", "design schedule must have 1 or K entries");

  const ResolvedSchedules sched =
      resolve_schedules(cfg.batches, cfg.deltas, n, d.box());
  const int big_k = static_cast<int>(sched.lengths.size());

  if (static_cast<int>(cfg.initial_price.size()) != n)
    throw ValidationError("sldl.initial_price", "dimension mismatch");
  const PriceBox first_box = d.box().shrink(sched.deltas[0]);
  if (!first_box.contains(cfg.initial_price))
    throw ValidationError("sldl.initial_price",
                          "must lie in the first shrunken box");

  SimulationTrace trace;
  trace.batches.reserve(big_k);
  RngStream rng(cfg.seed, stream);
  Vec p_hat = cfg.initial_price;
  int64_t t_offset = 0;
  for (int k = 1; k <= big_k; ++k) {
    BatchRecord rec = run_batch(
        d, noise, designs.for_batch(k), p_hat, sched.deltas[k - 1],
        sched.deltas[k], cfg.u, sched.lengths[k - 1], cfg.slope_tolerance, rng,
        cfg.record_empirical_tables,
        cfg.log_periods ? &trace.periods : nullptr, t_offset);
    rec.k = k;
    t_offset += rec.periods;
    p_hat = rec.p_after;
    trace.batches.push_back(std::move(rec));
  }
  trace.final_price = p_hat;
  trace.total_periods = t_offset;
  return trace;
}

}  // namespace pricelab
