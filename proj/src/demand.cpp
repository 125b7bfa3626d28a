#include "pricelab/demand.hpp"

#include <algorithm>
#include <cmath>

#include "pricelab/errors.hpp"
#include "pricelab/grid.hpp"
#include "pricelab/rng.hpp"

namespace pricelab {

namespace {
constexpr double kSqrt3 = 1.7320508075688772935;

std::string coord(const char* base, int i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}
}  // namespace

PriceBox::PriceBox(Vec lower, Vec upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size())
    throw ValidationError("box", "lower/upper must be nonempty and same length");
  for (size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] > 0.0))
      throw ValidationError(coord("box.lower", static_cast<int>(i)),
                            "price floor must be > 0");
    if (!(upper_[i] > lower_[i]))
      throw ValidationError(coord("box.upper", static_cast<int>(i)),
                            "price ceiling must exceed the floor");
  }
}

bool PriceBox::contains(const Vec& p, double slack) const {
  if (p.size() != lower_.size()) return false;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] < lower_[i] - slack || p[i] > upper_[i] + slack) return false;
  return true;
}

Vec PriceBox::project(const Vec& p) const {
  Vec out(p.size());
  for (size_t i = 0; i < p.size(); ++i)
    out[i] = std::clamp(p[i], lower_[i], upper_[i]);
  return out;
}

Vec PriceBox::midpoint() const {
  Vec out(lower_.size());
  for (size_t i = 0; i < lower_.size(); ++i)
    out[i] = 0.5 * (lower_[i] + upper_[i]);
  return out;
}

PriceBox PriceBox::shrink(const Vec& delta) const {
  if (delta.size() != lower_.size())
    throw ValidationError("delta", "dimension mismatch in box shrink");
  Vec lo(lower_), hi(upper_);
  for (size_t i = 0; i < lo.size(); ++i) {
    if (!(upper_[i] - lower_[i] > 2.0 * delta[i]))
      throw ValidationError(coord("delta", static_cast<int>(i)),
                            "box width must exceed twice the perturbation");
    lo[i] += delta[i];
    hi[i] -= delta[i];
  }
  return PriceBox(std::move(lo), std::move(hi));
}

DemandSystem::DemandSystem(DemandKind kind, Vec a, Matrix lb, Vec mb,
                           PriceBox box)
    : kind_(kind),
      a_(std::move(a)),
      linear_b_(std::move(lb)),
      mnl_b_(std::move(mb)),
      box_(std::move(box)) {}

DemandSystem DemandSystem::linear(Vec a, Matrix b, PriceBox box) {
  const int n = box.n();
  if (static_cast<int>(a.size()) != n)
    throw ValidationError("demand.a", "length must match box dimension");
  if (b.rows() != n || b.cols() != n)
    throw ValidationError("demand.b", "matrix must be n x n");
  for (int i = 0; i < n; ++i) {
    if (!(b(i, i) > 0.0))
      throw ValidationError("demand.b", "own-price coefficient b[" +
                                            std::to_string(i) + "][" +
                                            std::to_string(i) +
                                            "] must be > 0");
    for (int j = 0; j < n; ++j)
      if (j != i && b(i, j) < 0.0)
        throw ValidationError("demand.b", "cross coefficient b[" +
                                              std::to_string(i) + "][" +
                                              std::to_string(j) +
                                              "] must be >= 0");
  }
  // Affine demand attains its box minimum at a vertex: own price high,
  // rivals low. Reject parameters that allow non-positive demand.
  for (int i = 0; i < n; ++i) {
    double lo = a[i] - b(i, i) * box.upper()[i];
    for (int j = 0; j < n; ++j)
      if (j != i) lo += b(i, j) * box.lower()[j];
    if (!(lo > 0.0))
      throw ValidationError(coord("demand.a", i),
                            "linear demand is non-positive somewhere on the "
                            "box (min " +
                                std::to_string(lo) + ")");
  }
  return DemandSystem(DemandKind::Linear, std::move(a), std::move(b), {},
                      std::move(box));
}

DemandSystem DemandSystem::mnl(Vec a, Vec b, PriceBox box) {
  const int n = box.n();
  if (static_cast<int>(a.size()) != n)
    throw ValidationError("demand.a", "length must match box dimension");
  if (static_cast<int>(b.size()) != n)
    throw ValidationError("demand.b", "length must match box dimension");
  for (int i = 0; i < n; ++i)
    if (!(b[i] > 0.0))
      throw ValidationError(coord("demand.b", i),
                            "price sensitivity must be > 0");
  return DemandSystem(DemandKind::Mnl, std::move(a), {}, std::move(b),
                      std::move(box));
}

void DemandSystem::check_in_box(const Vec& p) const {
  if (static_cast<int>(p.size()) != n())
    throw ValidationError("price", "dimension mismatch");
  if (!box_.contains(p))
    throw AssumptionError("price outside the feasible box");
}

Vec DemandSystem::mnl_shares(const Vec& p) const {
  const int nn = n();
  Vec f(nn);
  double fmax = 0.0;  // outside option has utility 0
  for (int i = 0; i < nn; ++i) {
    f[i] = a_[i] - mnl_b_[i] * p[i];
    fmax = std::max(fmax, f[i]);
  }
  double denom = std::exp(-fmax);
  for (int i = 0; i < nn; ++i) denom += std::exp(f[i] - fmax);
  Vec lam(nn);
  for (int i = 0; i < nn; ++i) lam[i] = std::exp(f[i] - fmax) / denom;
  return lam;
}

Vec DemandSystem::mean_demand(const Vec& p) const {
  check_in_box(p);
  const int nn = n();
  if (kind_ == DemandKind::Linear) {
    Vec lam(nn);
    for (int i = 0; i < nn; ++i) {
      double v = a_[i] - linear_b_(i, i) * p[i];
      for (int j = 0; j < nn; ++j)
        if (j != i) v += linear_b_(i, j) * p[j];
      lam[i] = v;
    }
    return lam;
  }
  return mnl_shares(p);
}

Matrix DemandSystem::gradient(const Vec& p) const {
  check_in_box(p);
  const int nn = n();
  Matrix g(nn, nn);
  if (kind_ == DemandKind::Linear) {
    for (int i = 0; i < nn; ++i)
      for (int j = 0; j < nn; ++j)
        g(i, j) = (i == j) ? -linear_b_(i, i) : linear_b_(i, j);
    return g;
  }
  const Vec lam = mnl_shares(p);
  for (int i = 0; i < nn; ++i)
    for (int j = 0; j < nn; ++j)
      g(i, j) = (i == j) ? -mnl_b_[i] * lam[i] * (1.0 - lam[i])
                         : mnl_b_[j] * lam[i] * lam[j];
  return g;
}

Matrix DemandSystem::hessian_row(const Vec& p, int seller) const {
  check_in_box(p);
  const int nn = n();
  if (seller < 0 || seller >= nn)
    throw ValidationError("seller", "index out of range");
  Matrix h(nn, nn);
  if (kind_ == DemandKind::Linear) return h;  // affine map

  const Vec lam = mnl_shares(p);
  const int i = seller;
  const double li = lam[i];
  const double bi = mnl_b_[i];
  for (int j = 0; j < nn; ++j) {
    for (int l = 0; l < nn; ++l) {
      double v;
      if (j == i && l == i) {
        v = bi * bi * li * (1.0 - li) * (1.0 - 2.0 * li);
      } else if (j == i || l == i) {
        const int k = (j == i) ? l : j;
        v = -bi * mnl_b_[k] * li * lam[k] * (1.0 - 2.0 * li);
      } else if (j == l) {
        v = mnl_b_[j] * mnl_b_[j] * li * lam[j] * (2.0 * lam[j] - 1.0);
      } else {
        v = 2.0 * mnl_b_[j] * mnl_b_[l] * li * lam[j] * lam[l];
      }
      h(j, l) = v;
    }
  }
  return h;
}

int default_scan_resolution(int n) { return n <= 3 ? 64 : 16; }

BoundsScan scan_bounds(const DemandSystem& d, const PriceBox& box,
                       int grid_resolution) {
  if (grid_resolution < 2)
    throw ValidationError("grid_resolution", "need at least 2 points per axis");
  const int n = d.n();
  const int res = clamped_resolution(n, grid_resolution);

  BoundsScan out;
  out.bounds.grid_resolution = res;
  double m0 = std::numeric_limits<double>::infinity();
  double m1 = std::numeric_limits<double>::infinity();
  double M1 = 0.0, M2 = 0.0;

  for_each_grid_point(box.lower(), box.upper(), res, [&](const Vec& p) {
    const Vec lam = d.mean_demand(p);
    const Matrix g = d.gradient(p);
    for (int i = 0; i < n; ++i) {
      m0 = std::min(m0, std::abs(lam[i]));
      m1 = std::min(m1, std::abs(g(i, i)));
      for (int j = 0; j < n; ++j) M1 = std::max(M1, std::abs(g(i, j)));
      if (g(i, i) >= 0.0)
        out.violations.push_back({"own_price_sign", i, i, p, g(i, i)});
      for (int j = 0; j < n; ++j)
        if (j != i && g(i, j) <= 0.0)
          out.violations.push_back({"cross_price_sign", i, j, p, g(i, j)});
      if (d.kind() == DemandKind::Mnl && (lam[i] <= 0.0 || lam[i] >= 1.0))
        out.violations.push_back({"share_range", i, i, p, lam[i]});
      const Matrix h = d.hessian_row(p, i);
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) M2 = std::max(M2, std::abs(h(j, l)));
    }
  });

  out.bounds.m0 = m0;
  out.bounds.m1 = m1;
  out.bounds.M1 = M1;
  out.bounds.M2 = M2;
  return out;
}

NoiseSpec NoiseSpec::none(int n) {
  return NoiseSpec(NoiseKind::None, Vec(n, 0.0), {});
}

NoiseSpec NoiseSpec::bounded_uniform(Vec sigma) {
  for (size_t i = 0; i < sigma.size(); ++i)
    if (!(sigma[i] > 0.0))
      throw ValidationError(coord("noise.sigma", static_cast<int>(i)),
                            "noise must be non-degenerate (sigma > 0)");
  return NoiseSpec(NoiseKind::BoundedUniform, std::move(sigma), {});
}

NoiseSpec NoiseSpec::gaussian(Vec sigma) {
  return gaussian(std::move(sigma), Matrix::identity(0));
}

NoiseSpec NoiseSpec::gaussian(Vec sigma, Matrix correlation) {
  const int n = static_cast<int>(sigma.size());
  for (int i = 0; i < n; ++i)
    if (!(sigma[i] > 0.0))
      throw ValidationError(coord("noise.sigma", i),
                            "noise must be non-degenerate (sigma > 0)");
  if (correlation.empty()) correlation = Matrix::identity(n);
  if (correlation.rows() != n || correlation.cols() != n)
    throw ValidationError("noise.correlation", "matrix must be n x n");
  for (int i = 0; i < n; ++i) {
    if (std::abs(correlation(i, i) - 1.0) > 1e-12)
      throw ValidationError("noise.correlation", "diagonal must be 1");
    for (int j = 0; j < n; ++j)
      if (std::abs(correlation(i, j) - correlation(j, i)) > 1e-12)
        throw ValidationError("noise.correlation", "matrix must be symmetric");
  }
  Matrix chol;
  try {
    chol = cholesky(correlation);
  } catch (const SolverError&) {
    throw ValidationError("noise.correlation",
                          "matrix must be positive definite");
  }
  return NoiseSpec(NoiseKind::Gaussian, std::move(sigma), std::move(chol));
}

void NoiseSpec::draw(RngStream& rng, Vec& eps) const {
  const int nn = n();
  eps.assign(nn, 0.0);
  switch (kind_) {
    case NoiseKind::None:
      return;
    case NoiseKind::BoundedUniform:
      for (int i = 0; i < nn; ++i)
        eps[i] = sigma_[i] * kSqrt3 * (2.0 * rng.uniform() - 1.0);
      return;
    case NoiseKind::Gaussian: {
      Vec z(nn);
      for (int i = 0; i < nn; ++i) z[i] = rng.normal();
      for (int i = 0; i < nn; ++i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += chol_(i, j) * z[j];
        eps[i] = sigma_[i] * s;
      }
      return;
    }
  }
}

Vec sample_realized_demand(const DemandSystem& d, const NoiseSpec& noise,
                           const Vec& p, RngStream& rng) {
  Vec lam = d.mean_demand(p);
  Vec eps;
  noise.draw(rng, eps);
  for (size_t i = 0; i < lam.size(); ++i) lam[i] += eps[i];
  return lam;
}

}  // namespace pricelab
