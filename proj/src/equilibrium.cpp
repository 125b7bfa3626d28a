#include "pricelab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "pricelab/errors.hpp"
#include "pricelab/grid.hpp"
#include "pricelab/rng.hpp"

namespace pricelab {

namespace {

void check_learning_rates(const Vec& u, int n) {
  if (static_cast<int>(u.size()) != n)
    throw ValidationError("u", "learning-rate vector must have length n");
  for (int i = 0; i < n; ++i)
    if (!(u[i] > 0.0) || !(u[i] < 1.0))
      throw ValidationError("u", "learning rate u[" + std::to_string(i) +
                                     "] must lie strictly inside (0, 1)");
}

Vec cv_beta(const Matrix& g, const ConjectureMatrix& a) {
  const int n = g.rows();
  Vec beta(n);
  for (int i = 0; i < n; ++i) {
    double s = g(i, i);
    for (int j = 0; j < n; ++j)
      if (j != i) s += a(i, j) * g(i, j);
    beta[i] = -s;
  }
  return beta;
}

std::string fmt_point(const Vec& p) {
  std::string s = "(";
  for (size_t i = 0; i < p.size(); ++i)
    s += (i ? ", " : "") + std::to_string(p[i]);
  return s + ")";
}

}  // namespace

CvCoefficients cv_coefficients(const DemandSystem& d, const ConjectureMatrix& a,
                               const Vec& p) {
  if (a.n() != d.n()) throw ValidationError("conjecture", "dimension mismatch");
  const Vec lam = d.mean_demand(p);
  const Matrix g = d.gradient(p);
  CvCoefficients out;
  out.beta = cv_beta(g, a);
  out.alpha.resize(d.n());
  for (int i = 0; i < d.n(); ++i) {
    if (!(out.beta[i] > 0.0))
      throw AssumptionError("non-positive conjectured slope for seller " +
                            std::to_string(i) + " at p = " + fmt_point(p));
    out.alpha[i] = lam[i] + out.beta[i] * p[i];
  }
  return out;
}

Vec z_map(const DemandSystem& d, const ConjectureMatrix& a, const Vec& p) {
  const CvCoefficients c = cv_coefficients(d, a, p);
  Vec z(c.alpha.size());
  for (size_t i = 0; i < z.size(); ++i) z[i] = c.alpha[i] / (2.0 * c.beta[i]);
  return z;
}

Vec f_map(const DemandSystem& d, const ConjectureMatrix& a, const Vec& p,
          const Vec& u, const PriceBox& box) {
  check_learning_rates(u, d.n());
  const Vec z = z_map(d, a, p);
  Vec next(p.size());
  for (size_t i = 0; i < p.size(); ++i)
    next[i] = (1.0 - u[i]) * p[i] + u[i] * z[i];
  return box.project(next);
}

Vec foc_residual(const DemandSystem& d, const ConjectureMatrix& a,
                 const Vec& p) {
  const Vec lam = d.mean_demand(p);
  const Matrix g = d.gradient(p);
  Vec r(d.n());
  for (int i = 0; i < d.n(); ++i) {
    double s = g(i, i);
    for (int j = 0; j < d.n(); ++j)
      if (j != i) s += a(i, j) * g(i, j);
    r[i] = lam[i] + p[i] * s;
  }
  return r;
}

FixedPointResult solve_fixed_point(const DemandSystem& d,
                                   const ConjectureMatrix& a, const Vec& u,
                                   const PriceBox& box, const Vec& init,
                                   const SolveOptions& opts) {
  check_learning_rates(u, d.n());
  if (!box.contains(init))
    throw ValidationError("init", "initial price must lie in the box");
  if (opts.check_contraction) {
    const ContractionReport rep =
        contraction_report(d, a, u, box, opts.contraction_grid);
    if (!rep.satisfied)
      throw AssumptionError(
          "contraction not certified: sup||Dz||_inf = " +
          std::to_string(rep.norm_sup) +
          " >= 1 (set the override to solve anyway)");
  }

  FixedPointResult res;
  Vec p = init;
  double delta = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < opts.max_iter) {
    const Vec next = f_map(d, a, p, u, box);
    delta = inf_dist(next, p);
    p = next;
    ++it;
    if (delta <= opts.map_tol) break;
  }
  res.price = p;
  res.iterations = it;
  res.residual_map = delta;
  res.converged = delta <= opts.map_tol;
  res.residual_foc = foc_residual(d, a, p);

  // Projection activity at the solution marks a boundary fixed point.
  const Vec z = z_map(d, a, p);
  res.boundary_flags.assign(d.n(), 0);
  bool interior = true;
  for (int i = 0; i < d.n(); ++i) {
    const double raw = (1.0 - u[i]) * p[i] + u[i] * z[i];
    const double scale = 1.0 + std::abs(raw);
    if (raw < box.lower()[i] - 1e-12 * scale ||
        raw > box.upper()[i] + 1e-12 * scale) {
      res.boundary_flags[i] = 1;
      interior = false;
    }
  }
  res.certified_interior = res.converged && interior &&
                           inf_norm(res.residual_foc) <= opts.foc_tol;
  return res;
}

LinearCvSolution linear_cv_closed_form(const DemandSystem& d,
                                       const ConjectureMatrix& a) {
  if (d.kind() != DemandKind::Linear)
    throw ValidationError("demand", "closed form requires linear demand");
  const int n = d.n();
  const Matrix& b = d.linear_b();
  Matrix m(n, n);
  Vec rhs(n);
  for (int i = 0; i < n; ++i) {
    double conj = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) {
        conj += a(i, j) * b(i, j);
        m(i, j) = -b(i, j);
      }
    m(i, i) = 2.0 * b(i, i) - conj;
    rhs[i] = d.a()[i];
  }
  LinearCvSolution sol;
  sol.price = solve_dense(std::move(m), std::move(rhs));
  sol.inside_box = d.box().contains(sol.price);
  return sol;
}

Matrix jacobian_z(const DemandSystem& d, const ConjectureMatrix& a,
                  const Vec& p, JacobianMethod method) {
  const int n = d.n();
  if (method == JacobianMethod::FiniteDifference) {
    Matrix jz(n, n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
      Vec hi = p, lo = p;
      hi[j] += h;
      lo[j] -= h;
      const Vec zh = z_map(d, a, hi);
      const Vec zl = z_map(d, a, lo);
      for (int i = 0; i < n; ++i) jz(i, j) = (zh[i] - zl[i]) / (2.0 * h);
    }
    return jz;
  }

  // z_i = p_i/2 + lambda_i / (2 beta_i) with beta_i from the conjecture row;
  // differentiate with the quotient rule using analytic Hessian rows.
  const Vec lam = d.mean_demand(p);
  const Matrix g = d.gradient(p);
  const Vec beta = cv_beta(g, a);
  for (int i = 0; i < n; ++i)
    if (!(beta[i] > 0.0))
      throw AssumptionError("non-positive conjectured slope for seller " +
                            std::to_string(i) + " at p = " + fmt_point(p));
  Matrix jz(n, n);
  for (int i = 0; i < n; ++i) {
    const Matrix h = d.hessian_row(p, i);
    for (int j = 0; j < n; ++j) {
      double dbeta = h(i, j);
      for (int l = 0; l < n; ++l)
        if (l != i) dbeta += a(i, l) * h(l, j);
      dbeta = -dbeta;
      double v = 0.5 * (g(i, j) * beta[i] - lam[i] * dbeta) /
                 (beta[i] * beta[i]);
      if (i == j) v += 0.5;
      jz(i, j) = v;
    }
  }
  return jz;
}

JacobianParts decompose_jacobian(const DemandSystem& d,
                                 const ConjectureMatrix& a, const Vec& p) {
  if (!a.is_zero())
    throw ValidationError(
        "conjecture", "the comp/curv decomposition is defined only at A = 0");
  const int n = d.n();
  const Vec lam = d.mean_demand(p);
  const Matrix g = d.gradient(p);
  JacobianParts out;
  out.comp = Matrix(n, n);
  out.curv = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    const double beta = -g(i, i);
    if (!(beta > 0.0))
      throw AssumptionError("non-positive own slope for seller " +
                            std::to_string(i));
    const Matrix h = d.hessian_row(p, i);
    for (int j = 0; j < n; ++j) {
      out.comp(i, j) = (i == j) ? 0.0 : g(i, j) / (2.0 * beta);
      const double dbeta = -h(i, j);
      out.curv(i, j) = -0.5 * lam[i] * dbeta / (beta * beta);
    }
  }
  return out;
}

namespace {

// Deterministic Latin hypercube over the box; used when a tensor grid would
// be too large.
std::vector<Vec> latin_hypercube(const PriceBox& box, int samples) {
  const int n = box.n();
  RngStream rng(0x5eedc0de, 77);
  std::vector<std::vector<int>> perm(n, std::vector<int>(samples));
  for (int d0 = 0; d0 < n; ++d0) {
    for (int s = 0; s < samples; ++s) perm[d0][s] = s;
    for (int s = samples - 1; s > 0; --s) {
      const int k = static_cast<int>(rng.uniform() * (s + 1));
      std::swap(perm[d0][s], perm[d0][k]);
    }
  }
  std::vector<Vec> pts(samples, Vec(n));
  for (int s = 0; s < samples; ++s)
    for (int d0 = 0; d0 < n; ++d0) {
      const double frac = (perm[d0][s] + rng.uniform()) / samples;
      pts[s][d0] =
          box.lower()[d0] + (box.upper()[d0] - box.lower()[d0]) * frac;
    }
  return pts;
}

}  // namespace

ContractionReport contraction_report(const DemandSystem& d,
                                     const ConjectureMatrix& a, const Vec& u,
                                     const PriceBox& box,
                                     int grid_resolution) {
  check_learning_rates(u, d.n());
  const int n = d.n();
  ContractionReport rep;

  double norm_sup = 0.0;
  double max_share = 0.0;
  if (d.kind() == DemandKind::Linear) {
    // Dz is constant for linear demand; one evaluation is exact.
    rep.grid_resolution = 1;
    norm_sup = inf_norm(jacobian_z(d, a, box.midpoint(), JacobianMethod::Analytic));
  } else if (n <= 2) {
    const int res = grid_resolution > 0 ? grid_resolution : 64;
    rep.grid_resolution = res;
    for_each_grid_point(box.lower(), box.upper(), res, [&](const Vec& p) {
      norm_sup = std::max(
          norm_sup, inf_norm(jacobian_z(d, a, p, JacobianMethod::Analytic)));
      const Vec lam = d.mean_demand(p);
      max_share = std::max(max_share, inf_norm(lam));
    });
  } else {
    const int samples = grid_resolution > 0 ? grid_resolution : 4096;
    rep.grid_resolution = samples;
    for (const Vec& p : latin_hypercube(box, samples)) {
      norm_sup = std::max(
          norm_sup, inf_norm(jacobian_z(d, a, p, JacobianMethod::Analytic)));
      const Vec lam = d.mean_demand(p);
      max_share = std::max(max_share, inf_norm(lam));
    }
  }
  rep.norm_sup = norm_sup;
  rep.satisfied = norm_sup < 1.0;
  double gamma = 0.0;
  for (int i = 0; i < n; ++i)
    gamma = std::max(gamma, 1.0 - u[i] + u[i] * norm_sup);
  rep.gamma = gamma;

  if (d.kind() == DemandKind::Linear) {
    bool nonneg = true;
    for (int i = 0; i < n && nonneg; ++i)
      for (int j = 0; j < n; ++j)
        if (a(i, j) < 0.0) nonneg = false;
    if (nonneg) {
      bool ok = true;
      const Matrix& b = d.linear_b();
      for (int i = 0; i < n; ++i) {
        double lhs = 0.0;
        for (int j = 0; j < n; ++j)
          if (j != i) lhs += (1.0 + 3.0 * a(i, j)) * b(i, j);
        if (!(lhs < 2.0 * b(i, i))) ok = false;
      }
      rep.sufficient_linear = ok;
    }
  } else {
    rep.max_share = max_share;
    bool symmetric_b = true;
    for (int i = 1; i < n; ++i)
      if (std::abs(d.mnl_b()[i] - d.mnl_b()[0]) >
          1e-12 * std::abs(d.mnl_b()[0]))
        symmetric_b = false;
    if (symmetric_b && a.is_zero())
      rep.sufficient_mnl = max_share < 3.0 / 5.0;
  }

  if (a.is_zero()) {
    rep.query_point = box.midpoint();
    const JacobianParts parts = decompose_jacobian(d, a, rep.query_point);
    rep.l_comp = parts.comp;
    rep.l_curv = parts.curv;
    rep.decomposition_available = true;
  }
  return rep;
}

double gmv_value(const DemandSystem& d, const Vec& p) {
  const Vec lam = d.mean_demand(p);
  double v = 0.0;
  for (size_t i = 0; i < p.size(); ++i) v += p[i] * lam[i];
  return v;
}

namespace {

// Golden-section maximization over [lo, hi]; assumes the slice is unimodal
// near the optimum, which the preceding grid pass arranges.
double golden_max(const std::function<double(double)>& f, double lo,
                  double hi) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Vec gmv_optimize(const DemandSystem& d, const PriceBox& box,
                 int grid_resolution, int refine_iters) {
  const int n = d.n();
  const int res = clamped_resolution(n, std::max(grid_resolution, 2));
  Vec best = box.midpoint();
  double best_v = gmv_value(d, best);
  for_each_grid_point(box.lower(), box.upper(), res, [&](const Vec& p) {
    const double v = gmv_value(d, p);
    if (v > best_v) {
      best_v = v;
      best = p;
    }
  });
  for (int cycle = 0; cycle < refine_iters; ++cycle) {
    for (int i = 0; i < n; ++i) {
      Vec probe = best;
      const double xi = golden_max(
          [&](double x) {
            probe[i] = x;
            return gmv_value(d, probe);
          },
          box.lower()[i], box.upper()[i]);
      probe[i] = xi;
      const double v = gmv_value(d, probe);
      if (v > best_v) {
        best_v = v;
        best = probe;
      }
    }
  }
  return best;
}

SweepResult sweep_conjecture(const DemandSystem& d, const Vec& u,
                             const PriceBox& box,
                             const std::vector<ConjectureMatrix>& path,
                             const SolveOptions& opts) {
  SweepResult out;
  Vec init = box.midpoint();
  Vec prev_price;
  for (const ConjectureMatrix& a : path) {
    SweepPoint pt{a, {}, false, {}};
    try {
      pt.result = solve_fixed_point(d, a, u, box, init, opts);
      pt.solved = pt.result.converged;
      if (!pt.solved) pt.error = "max iterations exceeded";
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    if (pt.solved) {
      init = pt.result.price;  // warm start along the path
      if (!prev_price.empty()) {
        for (int i = 0; i < d.n(); ++i)
          if (pt.result.price[i] < prev_price[i] - 1e-9) out.monotone = false;
      }
      prev_price = pt.result.price;
    }
    out.points.push_back(std::move(pt));
  }
  return out;
}

}  // namespace pricelab
