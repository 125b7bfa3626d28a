#include "pricelab/design.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pricelab/errors.hpp"
#include "pricelab/rng.hpp"

namespace pricelab {

namespace {
constexpr double kMassTol = 1e-12;
}

ConjectureMatrix::ConjectureMatrix(Matrix entries) : m_(std::move(entries)) {
  const int n = m_.rows();
  if (m_.cols() != n || n == 0)
    throw ValidationError("conjecture", "matrix must be square and nonempty");
  for (int i = 0; i < n; ++i) {
    if (m_(i, i) != 0.0)
      throw ValidationError("conjecture",
                            "diagonal entry (" + std::to_string(i) + "," +
                                std::to_string(i) + ") must be exactly 0");
    for (int j = 0; j < n; ++j) {
      if (std::abs(m_(i, j)) > 1.0 + 1e-9)
        throw ValidationError("conjecture", "entry (" + std::to_string(i) +
                                                "," + std::to_string(j) +
                                                ") outside [-1, 1]");
      m_(i, j) = std::clamp(m_(i, j), -1.0, 1.0);
    }
  }
}

ConjectureMatrix ConjectureMatrix::zero(int n) {
  return ConjectureMatrix(Matrix(n, n, 0.0));
}

ConjectureMatrix ConjectureMatrix::uniform_off_diagonal(int n, double value) {
  Matrix m(n, n, value);
  for (int i = 0; i < n; ++i) m(i, i) = 0.0;
  return ConjectureMatrix(std::move(m));
}

ConjectureMatrix ConjectureMatrix::unchecked(Matrix entries) {
  ConjectureMatrix out;
  out.m_ = std::move(entries);
  const int n = out.m_.rows();
  for (int i = 0; i < n; ++i) out.m_(i, i) = 0.0;
  return out;
}

bool ConjectureMatrix::is_zero() const {
  for (int i = 0; i < n(); ++i)
    for (int j = 0; j < n(); ++j)
      if (m_(i, j) != 0.0) return false;
  return true;
}

ExperimentDesign::ExperimentDesign(int n, Vec table)
    : n_(n), table_(std::move(table)) {
  if (n_ < 1 || n_ > kMaxSellers)
    throw ValidationError("design.n", "seller count must be in [1, " +
                                          std::to_string(kMaxSellers) + "]");
  if (table_.size() != (size_t{1} << n_))
    throw ValidationError("design.table", "table must list all 2^n outcomes");
  double sum = 0.0;
  for (size_t t = 0; t < table_.size(); ++t) {
    if (table_[t] < 0.0)
      throw ValidationError("design.table",
                            "negative mass at outcome " + std::to_string(t));
    sum += table_[t];
  }
  if (std::abs(sum - 1.0) > kMassTol)
    throw ValidationError("design.table", "masses sum to " +
                                              std::to_string(sum) +
                                              ", expected 1");
  for (int i = 0; i < n_; ++i) {
    const double q = marginal_one(i);
    if (!(q > 0.0) || !(q < 1.0))
      throw ValidationError(
          "design.table", "marginal P(Y_" + std::to_string(i) +
                              "=1) = " + std::to_string(q) +
                              " is degenerate; must lie in (0, 1)");
  }
  cdf_.resize(table_.size());
  double acc = 0.0;
  for (size_t t = 0; t < table_.size(); ++t) {
    acc += table_[t];
    cdf_[t] = acc;
  }
  cdf_.back() = 1.0;
}

ExperimentDesign ExperimentDesign::independent(const Vec& q) {
  const int n = static_cast<int>(q.size());
  if (n < 1 || n > kMaxSellers)
    throw ValidationError("design.q", "need between 1 and 16 marginals");
  for (int i = 0; i < n; ++i)
    if (!(q[i] > 0.0) || !(q[i] < 1.0))
      throw ValidationError("design.q",
                            "marginal q[" + std::to_string(i) +
                                "] must lie in (0, 1)");
  Vec table(size_t{1} << n, 1.0);
  for (uint32_t t = 0; t < table.size(); ++t)
    for (int i = 0; i < n; ++i) {
      const bool on = (t >> (n - 1 - i)) & 1u;
      table[t] *= on ? q[i] : 1.0 - q[i];
    }
  return ExperimentDesign(n, std::move(table));
}

ExperimentDesign ExperimentDesign::common_shock_mixture(int n, double rho,
                                                        double q) {
  if (!(rho >= 0.0) || !(rho < 1.0))
    throw ValidationError("design.rho", "mixture weight must lie in [0, 1)");
  if (!(q > 0.0) || !(q < 1.0))
    throw ValidationError("design.q", "shared marginal must lie in (0, 1)");
  if (n < 1 || n > kMaxSellers)
    throw ValidationError("design.n", "seller count must be in [1, 16]");
  const size_t m = size_t{1} << n;
  Vec table(m, 0.0);
  for (uint32_t t = 0; t < m; ++t) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i) {
      const bool on = (t >> (n - 1 - i)) & 1u;
      prod *= on ? q : 1.0 - q;
    }
    table[t] = (1.0 - rho) * prod;
  }
  table[0] += rho * (1.0 - q);
  table[m - 1] += rho * q;
  return ExperimentDesign(n, std::move(table));
}

ExperimentDesign ExperimentDesign::explicit_table(int n, Vec table) {
  return ExperimentDesign(n, std::move(table));
}

double ExperimentDesign::marginal_one(int seller) const {
  double q = 0.0;
  for (uint32_t t = 0; t < table_.size(); ++t)
    if (seller_experiments(t, seller)) q += table_[t];
  return q;
}

uint32_t ExperimentDesign::sample(RngStream& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<uint32_t>(it - cdf_.begin());
}

namespace {

// Shared conditional-difference computation over any outcome table given as
// (mass lookup, outcome count).
template <class MassFn>
void fill_conjecture(int n, MassFn mass, size_t outcomes, const Matrix* ratio,
                     bool flag_undefined, Matrix& a,
                     std::vector<uint8_t>* defined) {
  if (ratio && (ratio->rows() != n || ratio->cols() != n))
    throw ValidationError("ratio", "ratio matrix must be n x n");
  for (int i = 0; i < n; ++i) {
    double p1 = 0.0;
    for (uint32_t t = 0; t < outcomes; ++t)
      if ((t >> (n - 1 - i)) & 1u) p1 += mass(t);
    const double p0 = 1.0 - p1;
    for (int j = 0; j < n; ++j) {
      if (j == i) {
        a(i, j) = 0.0;
        if (defined) (*defined)[static_cast<size_t>(i) * n + j] = 1;
        continue;
      }
      if (!(p1 > 0.0) || !(p0 > 0.0)) {
        if (!flag_undefined)
          throw AssumptionError(
              "conditional probabilities undefined: seller " +
              std::to_string(i) + " has a degenerate marginal");
        a(i, j) = 0.0;
        continue;
      }
      double p11 = 0.0, p01 = 0.0;
      for (uint32_t t = 0; t < outcomes; ++t) {
        const bool yi = (t >> (n - 1 - i)) & 1u;
        const bool yj = (t >> (n - 1 - j)) & 1u;
        if (yj) (yi ? p11 : p01) += mass(t);
      }
      double v = p11 / p1 - p01 / p0;
      if (ratio) v *= (*ratio)(i, j);
      a(i, j) = v;
      if (defined) (*defined)[static_cast<size_t>(i) * n + j] = 1;
    }
  }
}

}  // namespace

ConjectureMatrix conjecture_matrix(const ExperimentDesign& design,
                                   const Matrix* ratio) {
  const int n = design.n();
  Matrix a(n, n, 0.0);
  fill_conjecture(
      n, [&](uint32_t t) { return design.mass(t); }, design.outcomes(), ratio,
      /*flag_undefined=*/false, a, nullptr);
  if (ratio) return ConjectureMatrix::unchecked(std::move(a));
  return ConjectureMatrix(std::move(a));
}

EmpiricalDesign::EmpiricalDesign(int n) : n_(n) {
  if (n_ < 1 || n_ > ExperimentDesign::kMaxSellers)
    throw ValidationError("design.n", "seller count must be in [1, 16]");
  counts_.assign(size_t{1} << n_, 0);
}

EmpiricalDesign EmpiricalDesign::from_samples(
    int n, const std::vector<uint32_t>& outcomes) {
  if (outcomes.empty())
    throw ValidationError("samples", "need at least one outcome");
  EmpiricalDesign e(n);
  for (uint32_t t : outcomes) e.add(t);
  return e;
}

void EmpiricalDesign::add(uint32_t outcome) {
  ++counts_[outcome];
  ++total_;
}

double EmpiricalDesign::freq(uint32_t outcome) const {
  return total_ == 0 ? 0.0
                     : static_cast<double>(counts_[outcome]) / total_;
}

Vec EmpiricalDesign::frequency_table() const {
  Vec t(counts_.size());
  for (size_t i = 0; i < counts_.size(); ++i) t[i] = freq(static_cast<uint32_t>(i));
  return t;
}

int64_t EmpiricalDesign::arm_count(int seller, int arm) const {
  int64_t c = 0;
  for (uint32_t t = 0; t < counts_.size(); ++t) {
    const bool on = (t >> (n_ - 1 - seller)) & 1u;
    if (on == (arm == 1)) c += counts_[t];
  }
  return c;
}

EmpiricalConjecture empirical_conjecture(const EmpiricalDesign& emp,
                                         const Matrix* ratio) {
  const int n = emp.n();
  EmpiricalConjecture out;
  out.entries = Matrix(n, n, 0.0);
  out.defined.assign(static_cast<size_t>(n) * n, 0);
  if (emp.total() == 0) return out;
  fill_conjecture(
      n, [&](uint32_t t) { return emp.freq(t); }, size_t{1} << n, ratio,
      /*flag_undefined=*/true, out.entries, &out.defined);
  return out;
}

}  // namespace pricelab
