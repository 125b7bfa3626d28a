#pragma once

#include <cstdint>
#include <vector>

#include "pricelab/linalg.hpp"

namespace pricelab {

class RngStream;

// n x n conjecture matrix: zero diagonal, entries in [-1, 1].
// Ratio-scaled empirical conjectures may leave that range; they are built
// through the unchecked factory and keep only the zero-diagonal invariant.
class ConjectureMatrix {
 public:
  explicit ConjectureMatrix(Matrix entries);
  static ConjectureMatrix zero(int n);
  // Zero diagonal of a (n x n) with every off-diagonal set to `value`.
  static ConjectureMatrix uniform_off_diagonal(int n, double value);
  static ConjectureMatrix unchecked(Matrix entries);

  int n() const { return m_.rows(); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }
  bool is_zero() const;

 private:
  ConjectureMatrix() = default;
  Matrix m_;
};

// Joint experimentation law over {0,1}^n, stored as a dense probability
// table in canonical lexicographic order (seller 0 owns the most significant
// bit). n is capped at 16 so the table stays dense and exact.
class ExperimentDesign {
 public:
  static constexpr int kMaxSellers = 16;

  static ExperimentDesign independent(const Vec& q);
  // With probability rho every seller copies one common Bernoulli(q) draw,
  // otherwise draws are independent Bernoulli(q). rho in [0,1).
  static ExperimentDesign common_shock_mixture(int n, double rho, double q);
  static ExperimentDesign explicit_table(int n, Vec table);

  int n() const { return n_; }
  size_t outcomes() const { return table_.size(); }
  const Vec& table() const { return table_; }
  double mass(uint32_t outcome) const { return table_[outcome]; }
  double marginal_one(int seller) const;

  // Inverse-CDF draw over the canonical ordering.
  uint32_t sample(RngStream& rng) const;

  bool seller_experiments(uint32_t outcome, int seller) const {
    return (outcome >> (n_ - 1 - seller)) & 1u;
  }

 private:
  ExperimentDesign(int n, Vec table);

  int n_ = 0;
  Vec table_;
  Vec cdf_;
};

// Induced conjecture: entry (i, j) is
//   ratio(i,j) * (P(Y_j=1 | Y_i=1) - P(Y_j=1 | Y_i=0)),
// diagonal forced to zero. Default ratio is all-ones.
ConjectureMatrix conjecture_matrix(const ExperimentDesign& design,
                                   const Matrix* ratio = nullptr);

// Within-batch outcome frequencies plus per-seller arm counts.
class EmpiricalDesign {
 public:
  explicit EmpiricalDesign(int n);
  static EmpiricalDesign from_samples(int n,
                                      const std::vector<uint32_t>& outcomes);

  void add(uint32_t outcome);

  int n() const { return n_; }
  int64_t total() const { return total_; }
  int64_t count(uint32_t outcome) const { return counts_[outcome]; }
  double freq(uint32_t outcome) const;
  Vec frequency_table() const;
  // Number of periods with Y_seller == arm.
  int64_t arm_count(int seller, int arm) const;

 private:
  int n_;
  std::vector<int64_t> counts_;
  int64_t total_ = 0;
};

struct EmpiricalConjecture {
  Matrix entries;                 // undefined entries are 0
  std::vector<uint8_t> defined;   // row-major n*n flags
  bool is_defined(int i, int j) const {
    return defined[static_cast<size_t>(i) * entries.cols() + j] != 0;
  }
};

// Entries are computed wherever both conditioning events have positive
// empirical mass; elsewhere flagged undefined and set to zero.
EmpiricalConjecture empirical_conjecture(const EmpiricalDesign& emp,
                                         const Matrix* ratio = nullptr);

}  // namespace pricelab
