#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>

#include "coarsel2/coarse_map.hpp"

namespace coarsel2 {

// Cochains of a finite group G with values in l2(G), held in their
// (n+2)-variable form b(x_0, ..., x_n, x) on G^{n+1} x G. Variables are
// positions in the canonical element order; the fibre variable x is last and
// varies fastest.
class ValuedCochain {
 public:
  ValuedCochain(GroupPtr group, int degree, Eigen::VectorXd values);
  static ValuedCochain zero(GroupPtr group, int degree);

  const GroupPtr& group() const { return group_; }
  int degree() const { return degree_; }
  std::size_t order() const { return order_; }
  const Eigen::VectorXd& values() const { return values_; }

  std::size_t index(std::span<const int> xs, int x) const;
  double at(std::span<const int> xs, int x) const { return values_[static_cast<Eigen::Index>(index(xs, x))]; }

 private:
  GroupPtr group_;
  int degree_;
  std::size_t order_;
  Eigen::VectorXd values_;
};

// Diagonally invariant valued cochain: b(g x_0, ..., g x_n, g x) = b(x, x)
// for every g. Under this convention evaluation at the identity and the
// induction M are exact mutual inverses.
class InvariantCochain {
 public:
  // ValidationError naming the first (g, tuple, x) that breaks invariance.
  explicit InvariantCochain(ValuedCochain data);

  const ValuedCochain& data() const { return data_; }
  int degree() const { return data_.degree(); }
  const GroupPtr& group() const { return data_.group(); }

 private:
  ValuedCochain data_;
};

// Homogeneous coboundary in the first n+1 variables, fibrewise in x.
ValuedCochain l2_coboundary(const ValuedCochain& b);
InvariantCochain l2_coboundary(const InvariantCochain& alpha);

// E(alpha)(x_0..x_n) = b(x_0..x_n, e) on the tuples of `space`.
Cochain evaluate_E(const InvariantCochain& alpha, const TupleSpacePtr& space);
// On the complete tuple space of the whole group.
Cochain evaluate_E(const InvariantCochain& alpha);

// M(beta)(g_0..g_n)(g) = beta(g^{-1} g_0, ..., g^{-1} g_n). Needs beta on the
// complete tuple space of the whole group; DomainError otherwise.
InvariantCochain induce_M(const Cochain& beta);

// (R f)(g_0..g_n)(x) = sum_h f(h_0..h_n)(x) prod chi(g_i^{-1} h_i) mu(h_i).
ValuedCochain smoothing_R(const SmoothingKernel& chi, const ValuedCochain& f);
// The same smoothing on scalar cochains of a whole-group tuple space.
SparseOperator smoothing_operator(const SmoothingKernel& chi, const TupleSpacePtr& space);

// mu(B(R)) ||E alpha||_R^2 = sum over G_R^{n+1} x B(R) of |b|^2
//                         <= sum over B(2R)^{n+1} x G of |b|^2
struct ENormChain {
  int degree = 0;
  int scale = 0;
  double evaluated = 0.0;  // mu(B(R)) ||E alpha||_R^2
  double local = 0.0;      // integral over G_R^{n+1} x B(R)
  double global = 0.0;     // integral over B(2R)^{n+1} x G
  bool holds(double slack = 1e-12) const;
};
ENormChain e_norm_chain(const InvariantCochain& alpha, int scale);

// mu(B(R)) ||beta||_{2R}^2 >= ||M(beta) restricted to B(R)^{n+1}||^2
struct MNormChain {
  int degree = 0;
  int scale = 0;
  double coarse = 0.0;   // mu(B(R)) ||beta||_{2R}^2
  double induced = 0.0;  // integral over B(R)^{n+1} x G of |M beta|^2
  bool holds(double slack = 1e-12) const { return induced <= coarse + slack * std::max(1.0, coarse); }
};
MNormChain m_norm_chain(const Cochain& beta, int scale);

// Exhaustive checks of the substitutions behind the norm chains:
//  - (x, x) -> (x^{-1} x_0, ..., x^{-1} x_n, x) permutes G_R^{n+1} x B(R);
//  - m(x, x) = (x, x x_0^{-1} x_1, ..., x x_0^{-1} x_n, x x_0^{-1} x) is a
//    bijection of G^{n+2} carrying G_R^{n+1} x B(R) into B(2R)^{n+1} x G and
//    preserving every invariant cochain;
//  - the variant with last coordinate x_0 is a bijection with the same image
//    property, but preserves values only for the opposite action.
struct SubstitutionCheck {
  bool automorphism = false;
  bool m_bijective = false;
  bool m_image_contained = false;
  bool m_value_preserving = false;
  bool variant_bijective = false;
  bool variant_image_contained = false;
};
SubstitutionCheck check_substitutions(const GroupPtr& group, int degree, int scale);

// CSV rows "g_0,...,g_n,g,value" with elements by their description.
void write_valued_csv(const ValuedCochain& b, std::ostream& out);
// Parses the format above; every entry of G^{n+1} x G must appear once.
ValuedCochain read_valued_csv(const GroupPtr& group, int degree, std::istream& in);

}  // namespace coarsel2
