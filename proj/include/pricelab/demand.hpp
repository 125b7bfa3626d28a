#pragma once

#include <string>
#include <vector>

#include "pricelab/linalg.hpp"

namespace pricelab {

class RngStream;

// Feasible price rectangle [lower, upper], componentwise.
class PriceBox {
 public:
  PriceBox(Vec lower, Vec upper);

  int n() const { return static_cast<int>(lower_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  bool contains(const Vec& p, double slack = 1e-9) const;
  Vec project(const Vec& p) const;
  Vec midpoint() const;

  // [lower + delta, upper - delta]; requires width > 2*delta per coordinate.
  PriceBox shrink(const Vec& delta) const;

 private:
  Vec lower_, upper_;
};

enum class DemandKind { Linear, Mnl };

// Mean-demand system with analytic first and second derivatives.
//
// Linear:  lambda_i(p) = a[i] - b(i,i) p_i + sum_{j != i} b(i,j) p_j,
//          with b(i,i) > 0 and b(i,j) >= 0 stored as magnitudes.
// MNL:     lambda_i(p) = exp(a[i] - b[i] p_i) / (1 + sum_j exp(a[j] - b[j] p_j)).
//
// The system carries its price box; evaluations outside it are domain errors.
// Linear parameters whose demand is non-positive anywhere on the box are
// rejected at construction (exact vertex check).
class DemandSystem {
 public:
  static DemandSystem linear(Vec a, Matrix b, PriceBox box);
  static DemandSystem mnl(Vec a, Vec b, PriceBox box);

  DemandKind kind() const { return kind_; }
  int n() const { return box_.n(); }
  const PriceBox& box() const { return box_; }

  const Vec& a() const { return a_; }
  const Matrix& linear_b() const { return linear_b_; }
  const Vec& mnl_b() const { return mnl_b_; }

  Vec mean_demand(const Vec& p) const;
  // (i, j) entry is d lambda_i / d p_j.
  Matrix gradient(const Vec& p) const;
  // (j, l) entry is d^2 lambda_i / d p_j d p_l for the given seller i.
  Matrix hessian_row(const Vec& p, int seller) const;

 private:
  DemandSystem(DemandKind kind, Vec a, Matrix lb, Vec mb, PriceBox box);
  void check_in_box(const Vec& p) const;
  Vec mnl_shares(const Vec& p) const;

  DemandKind kind_;
  Vec a_;
  Matrix linear_b_;  // Linear only
  Vec mnl_b_;        // MNL only
  PriceBox box_;
};

// Grid estimates of the regularity constants over a box. Not certified
// global extrema; resolution is recorded alongside.
struct DemandBounds {
  double m0 = 0.0;  // min |lambda_i|
  double m1 = 0.0;  // min |d lambda_i / d p_i|
  double M1 = 0.0;  // max |d lambda_i / d p_j| over all i, j (own included)
  double M2 = 0.0;  // max |d^2 lambda_i / d p_j d p_l|
  int grid_resolution = 0;
};

struct RegularityViolation {
  std::string kind;  // "own_price_sign", "cross_price_sign", "share_range"
  int seller = 0;
  int partner = 0;
  Vec price;
  double value = 0.0;
};

struct BoundsScan {
  DemandBounds bounds;
  std::vector<RegularityViolation> violations;
  bool regular() const { return violations.empty(); }
};

int default_scan_resolution(int n);

BoundsScan scan_bounds(const DemandSystem& d, const PriceBox& box,
                       int grid_resolution);

enum class NoiseKind { None, BoundedUniform, Gaussian };

// Zero-mean per-period demand shock law. Stochastic kinds require strictly
// positive sigma. BoundedUniform has support [-sigma*sqrt(3), sigma*sqrt(3)]
// and only supports independent shocks; Gaussian accepts a cross-seller
// correlation matrix (identity by default).
class NoiseSpec {
 public:
  static NoiseSpec none(int n);
  static NoiseSpec bounded_uniform(Vec sigma);
  static NoiseSpec gaussian(Vec sigma);
  static NoiseSpec gaussian(Vec sigma, Matrix correlation);

  NoiseKind kind() const { return kind_; }
  int n() const { return static_cast<int>(sigma_.size()); }
  const Vec& sigma() const { return sigma_; }

  // Writes one shock vector; consumes the stream only for stochastic kinds.
  void draw(RngStream& rng, Vec& eps) const;

 private:
  NoiseSpec(NoiseKind kind, Vec sigma, Matrix chol)
      : kind_(kind), sigma_(std::move(sigma)), chol_(std::move(chol)) {}

  NoiseKind kind_;
  Vec sigma_;
  Matrix chol_;  // Gaussian only: Cholesky factor of the correlation
};

Vec sample_realized_demand(const DemandSystem& d, const NoiseSpec& noise,
                           const Vec& p, RngStream& rng);

}  // namespace pricelab
