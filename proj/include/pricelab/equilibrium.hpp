#pragma once

#include <optional>
#include <vector>

#include "pricelab/demand.hpp"
#include "pricelab/design.hpp"
#include "pricelab/linalg.hpp"

namespace pricelab {

// Fitted-model coefficients induced by a conjecture matrix at a price point:
//   beta_i = -(d lambda_i/d p_i + sum_{j != i} A_ij d lambda_i/d p_j)
//   alpha_i = lambda_i + beta_i p_i
struct CvCoefficients {
  Vec beta;
  Vec alpha;
};

CvCoefficients cv_coefficients(const DemandSystem& d, const ConjectureMatrix& a,
                               const Vec& p);

// Componentwise alpha / (2 beta): the misspecified-monopoly best reply.
Vec z_map(const DemandSystem& d, const ConjectureMatrix& a, const Vec& p);

// Damped, box-projected update: proj((I-U) p + U z(p)). u_i in (0,1).
Vec f_map(const DemandSystem& d, const ConjectureMatrix& a, const Vec& p,
          const Vec& u, const PriceBox& box);

struct FixedPointResult {
  Vec price;
  int iterations = 0;
  bool converged = false;
  double residual_map = 0.0;           // ||F(p) - p||_inf at exit
  Vec residual_foc;                    // marginal-revenue values at p
  std::vector<uint8_t> boundary_flags; // projection active per coordinate
  bool certified_interior = false;     // interior and FOC within tolerance
};

struct SolveOptions {
  double map_tol = 1e-10;
  double foc_tol = 1e-8;
  int max_iter = 100000;
  // When true, certify sup||Dz||_inf < 1 before iterating and throw
  // AssumptionError if the certificate fails. Setting false is the caller's
  // override for markets it has already certified.
  bool check_contraction = true;
  int contraction_grid = 0;  // 0 = default resolution
};

FixedPointResult solve_fixed_point(const DemandSystem& d,
                                   const ConjectureMatrix& a, const Vec& u,
                                   const PriceBox& box, const Vec& init,
                                   const SolveOptions& opts = {});

// Marginal-revenue (first-order condition) values at p.
Vec foc_residual(const DemandSystem& d, const ConjectureMatrix& a,
                 const Vec& p);

struct LinearCvSolution {
  Vec price;
  bool inside_box = false;  // boundary regime when false
};

// Exact interior CV solution of the linear-demand system, by direct solve.
// Serves as the oracle for the fixed-point path on linear demand.
LinearCvSolution linear_cv_closed_form(const DemandSystem& d,
                                       const ConjectureMatrix& a);

enum class JacobianMethod { Analytic, FiniteDifference };

// Jacobian of z at p. Analytic uses the demand gradient and Hessian rows;
// FiniteDifference is central differences of z_map and exists as an
// independent route for validation.
Matrix jacobian_z(const DemandSystem& d, const ConjectureMatrix& a,
                  const Vec& p, JacobianMethod method);

struct JacobianParts {
  Matrix comp;  // cross-effect part, zero diagonal
  Matrix curv;  // curvature part
};

// Exact split Dz = comp + curv, defined for the zero-conjecture map only.
JacobianParts decompose_jacobian(const DemandSystem& d,
                                 const ConjectureMatrix& a, const Vec& p);

struct ContractionReport {
  double norm_sup = 0.0;  // sup over the sampled grid of ||Dz||_inf
  double gamma = 0.0;     // max_i (1 - u_i + u_i * norm_sup)
  bool satisfied = false; // norm_sup < 1
  std::optional<bool> sufficient_linear;  // sum (1+3A_ij) b_ij < 2 b_ii
  std::optional<bool> sufficient_mnl;     // grid-max share < 3/5
  double max_share = 0.0;                 // MNL only
  bool decomposition_available = false;   // A == 0
  Matrix l_comp, l_curv;                  // at query_point when available
  Vec query_point;
  int grid_resolution = 0;
};

ContractionReport contraction_report(const DemandSystem& d,
                                     const ConjectureMatrix& a, const Vec& u,
                                     const PriceBox& box,
                                     int grid_resolution = 0);

// Deterministic joint-revenue maximizer: coarse grid then coordinatewise
// golden-section refinement.
Vec gmv_optimize(const DemandSystem& d, const PriceBox& box,
                 int grid_resolution = 64, int refine_iters = 50);

double gmv_value(const DemandSystem& d, const Vec& p);

struct SweepPoint {
  ConjectureMatrix a;
  FixedPointResult result;
  bool solved = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  bool monotone = true;  // consecutive solved prices componentwise nondecreasing
};

SweepResult sweep_conjecture(const DemandSystem& d, const Vec& u,
                             const PriceBox& box,
                             const std::vector<ConjectureMatrix>& path,
                             const SolveOptions& opts = {});

}  // namespace pricelab
