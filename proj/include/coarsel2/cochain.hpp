#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "coarsel2/window.hpp"

namespace coarsel2 {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

// Real function on a tuple space: a finite-scale model of an element of the
// coarse cochain space.
class Cochain {
 public:
  Cochain(TupleSpacePtr space, Eigen::VectorXd values);
  static Cochain zero(TupleSpacePtr space);

  const TupleSpacePtr& space() const { return space_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  TupleSpacePtr space_;
  Eigen::VectorXd values_;
};

// Linear map between tuple spaces. Rows may be flagged uncovered: the row's
// value would need data outside the domain window, so it carries no matrix
// entries and is excluded from every identity check.
class SparseOperator {
 public:
  SparseOperator(TupleSpacePtr domain, TupleSpacePtr codomain, SparseMatrix matrix,
                 std::vector<std::uint8_t> covered = {});

  const TupleSpacePtr& domain() const { return domain_; }
  const TupleSpacePtr& codomain() const { return codomain_; }
  const SparseMatrix& matrix() const { return matrix_; }

  bool fully_covered() const { return covered_.empty(); }
  bool row_covered(std::size_t row) const {
    return covered_.empty() || covered_[row] != 0;
  }
  std::size_t covered_rows() const;
  // Per-row flags, materialized.
  std::vector<std::uint8_t> coverage() const;

  Cochain apply(const Cochain& x) const;

 private:
  TupleSpacePtr domain_;
  TupleSpacePtr codomain_;
  SparseMatrix matrix_;
  std::vector<std::uint8_t> covered_;
};

// Homogeneous coboundary d^n: C(n, R, W) -> C(n+1, R, W).
SparseOperator coboundary_matrix(const TupleSpacePtr& domain,
                                 const TupleSpacePtr& codomain);
// The i-th face term d_i^n alpha(g_0..g_{n+1}) = alpha(g_0..^g_i..g_{n+1}).
SparseOperator face_operator(const TupleSpacePtr& domain,
                             const TupleSpacePtr& codomain, int i);
// Restriction of cochains at scale S to a sub-space at scale R <= S.
SparseOperator restriction(const TupleSpacePtr& from, const TupleSpacePtr& to);
SparseOperator identity_operator(const TupleSpacePtr& space);

// Adjoint with respect to the weighted inner products of domain and codomain.
SparseOperator adjoint(const SparseOperator& op);

// a o b. A row of the result is covered when the row of `a` is covered and
// every row of `b` it reads from is covered.
SparseOperator compose(const SparseOperator& a, const SparseOperator& b);
SparseOperator add(const SparseOperator& a, const SparseOperator& b,
                   double b_scale = 1.0);
SparseOperator scaled(const SparseOperator& a, double s);

// <u, v> = c^{n+1} sum u(t) v(t)
double inner_product(const Cochain& u, const Cochain& v);
// ||alpha||_{R'}^2 = c^{n+1} sum over tuples of diameter <= R' of alpha(t)^2.
double seminorm_squared(const Cochain& alpha, int scale);
double seminorm(const Cochain& alpha, int scale);

// Largest |a(t) - b(t)| over rows covered by `rows` (empty = all rows).
double max_abs_difference(const Cochain& a, const Cochain& b,
                          const std::vector<std::uint8_t>& rows = {});
double max_abs(const Cochain& a, const std::vector<std::uint8_t>& rows = {});

// Deterministic coefficients in [-1, 1]; same seed, same cochain, on every
// platform (explicit mt19937_64 bit extraction).
Cochain random_cochain(const TupleSpacePtr& space, std::uint64_t seed);

// Coordinate text format, one "row col value" line per entry.
void export_operator_coo(const SparseOperator& op, std::ostream& out);
// CSV of (tuple elements..., value).
void export_cochain_csv(const Cochain& alpha, std::ostream& out);

}  // namespace coarsel2
