#pragma once

#include <cstdint>
#include <vector>

#include "pricelab/demand.hpp"
#include "pricelab/design.hpp"
#include "pricelab/linalg.hpp"

namespace pricelab {

class RngStream;

// Batch lengths. Geometric lengths are ceil(first * growth^(k-1)).
struct BatchSchedule {
  enum class Kind { Geometric, Explicit };
  Kind kind = Kind::Geometric;
  int64_t first = 64;
  double growth = 1.35;
  int count = 20;
  std::vector<int64_t> explicit_lengths;

  static BatchSchedule geometric(int64_t first, double growth, int count);
  static BatchSchedule explicit_lengths_of(std::vector<int64_t> lengths);

  int batches() const;
  // Lengths for batches 1..K, plus one extra entry used only to size the
  // final projection box.
  std::vector<int64_t> lengths_with_extension() const;
};

// Per-batch perturbation magnitudes.
struct DeltaSchedule {
  enum class Kind { Theorem2Rate, PowerLaw, Explicit };
  Kind kind = Kind::Theorem2Rate;
  double c = 1.0;    // PowerLaw: c * k^(-eta)
  double eta = 0.25;
  std::vector<Vec> explicit_per_seller;  // [seller][batch]

  static DeltaSchedule theorem2_rate();
  static DeltaSchedule power_law(double c, double eta);
  static DeltaSchedule explicit_deltas(std::vector<Vec> per_seller);
};

struct SldlConfig {
  Vec u;             // learning rates, each in (0,1)
  Vec initial_price; // must lie in the first shrunken box
  BatchSchedule batches;
  DeltaSchedule deltas;
  double slope_tolerance = 1e-8;
  uint64_t seed = 0;
  bool log_periods = false;
  bool record_empirical_tables = true;
};

// Batch lengths and per-batch delta vectors (K+1 entries; the final one
// sizes the last projection box), validated against the box.
struct ResolvedSchedules {
  std::vector<int64_t> lengths;  // K entries
  std::vector<Vec> deltas;       // K+1 entries, deltas[k][seller]
  std::vector<std::string> warnings;
};

ResolvedSchedules resolve_schedules(const BatchSchedule& batches,
                                    const DeltaSchedule& deltas, int n,
                                    const PriceBox& box);

struct SellerBatchOutcome {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double target = 0.0;
  int64_t arms_high = 0;
  int64_t arms_low = 0;
  bool skipped = false;           // no within-batch price variation
  bool slope_degenerate = false;  // |beta_hat| below tolerance
  bool negative_slope = false;
  bool clamped_low = false;
  bool clamped_high = false;
};

struct PeriodRecord {
  int64_t t = 0;
  uint32_t outcome = 0;
  Vec price;
  Vec demand;
};

struct BatchRecord {
  int k = 0;
  Vec p_before;
  Vec p_after;
  Vec delta;
  int64_t periods = 0;
  std::vector<SellerBatchOutcome> sellers;
  Vec empirical_table;  // outcome frequencies; empty when not recorded
  EmpiricalConjecture conjecture;
};

struct SimulationTrace {
  std::vector<BatchRecord> batches;
  std::vector<PeriodRecord> periods;  // populated only when logging
  Vec final_price;
  int64_t total_periods = 0;
};

// One design per batch; a single entry is reused for every batch.
struct DesignSchedule {
  std::vector<ExperimentDesign> designs;

  explicit DesignSchedule(ExperimentDesign d) { designs.push_back(std::move(d)); }
  explicit DesignSchedule(std::vector<ExperimentDesign> ds)
      : designs(std::move(ds)) {}

  const ExperimentDesign& for_batch(int k) const {
    return designs.size() == 1 ? designs[0] : designs.at(k - 1);
  }
};

// Two-coefficient least squares for the model D = alpha - beta p.
// With exactly two posted prices beta is the negative secant slope of the
// conditional means; a single posted price raises the no-variation flag.
struct OlsFit {
  double alpha = 0.0;
  double beta = 0.0;
  int64_t arms_low = 0;   // observations at the minimum price
  int64_t arms_high = 0;  // observations at the maximum price
  bool no_variation = false;
};

OlsFit ols_two_point(const Vec& prices, const Vec& demands);

// One batch driven by a pre-drawn outcome sequence. Deterministic; the
// randomized entry point below draws the outcomes and delegates here.
BatchRecord run_batch_with_outcomes(const DemandSystem& d,
                                    const NoiseSpec& noise,
                                    const std::vector<uint32_t>& outcomes,
                                    const Vec& p_hat, const Vec& delta_k,
                                    const Vec& delta_next, const Vec& u,
                                    double slope_tolerance, RngStream& rng,
                                    bool record_table,
                                    std::vector<PeriodRecord>* period_log,
                                    int64_t t_offset = 0);

BatchRecord run_batch(const DemandSystem& d, const NoiseSpec& noise,
                      const ExperimentDesign& design, const Vec& p_hat,
                      const Vec& delta_k, const Vec& delta_next, const Vec& u,
                      int64_t periods, double slope_tolerance, RngStream& rng,
                      bool record_table = true,
                      std::vector<PeriodRecord>* period_log = nullptr,
                      int64_t t_offset = 0);

// Full run: K batches of switchback experimentation, per-seller OLS
// recalibration, damped reoptimization with shrinking-box projection.
// Deterministic given (seed, stream).
SimulationTrace run_sldl(const SldlConfig& cfg, const DemandSystem& d,
                         const NoiseSpec& noise, const DesignSchedule& designs,
                         uint64_t stream = 0);

}  // namespace pricelab
