#include "coarsel2/cochain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

namespace {

bool same_window(const TupleSpace& a, const TupleSpace& b) {
  return a.window() == b.window() ||
         a.window()->fingerprint() == b.window()->fingerprint();
}

bool same_space(const TupleSpacePtr& a, const TupleSpacePtr& b) {
  return a == b || (a->degree() == b->degree() && a->scale() == b->scale() &&
                    a->size() == b->size() && same_window(*a, *b));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_face_spaces(const TupleSpace& domain, const TupleSpace& codomain) {
  if (!same_window(domain, codomain))
    throw ConfigurationError("coboundary: domain and codomain windows differ");
  if (domain.scale() != codomain.scale())
    throw ConfigurationError("coboundary: domain scale " +
                             std::to_string(domain.scale()) + " != codomain scale " +
                             std::to_string(codomain.scale()));
  if (codomain.degree() != domain.degree() + 1)
    throw ConfigurationError("coboundary: degrees must differ by one");
}

SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols,
                           const std::vector<Triplet>& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune(0.0);
  m.makeCompressed();
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

Cochain::Cochain(TupleSpacePtr space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != space_->size())
    throw ConfigurationError("cochain length " + std::to_string(values_.size()) +
                             " != tuple count " + std::to_string(space_->size()));
  if (!values_.allFinite()) throw ValidationError("cochain has non-finite entries");
}

Cochain Cochain::zero(TupleSpacePtr space) {
  const auto n = static_cast<Eigen::Index>(space->size());
  return Cochain(std::move(space), Eigen::VectorXd::Zero(n));
}

SparseOperator::SparseOperator(TupleSpacePtr domain, TupleSpacePtr codomain,
                               SparseMatrix matrix, std::vector<std::uint8_t> covered)
    : domain_(std::move(domain)),
      codomain_(std::move(codomain)),
      matrix_(std::move(matrix)),
      covered_(std::move(covered)) {
  if (static_cast<std::size_t>(matrix_.rows()) != codomain_->size() ||
      static_cast<std::size_t>(matrix_.cols()) != domain_->size())
    throw ConfigurationError("operator matrix shape does not match its spaces");
  if (!covered_.empty() && covered_.size() != codomain_->size())
    throw ConfigurationError("coverage mask length mismatch");
  if (!covered_.empty() &&
      std::all_of(covered_.begin(), covered_.end(), [](auto c) { return c != 0; }))
    covered_.clear();
}

std::size_t SparseOperator::covered_rows() const {
  if (covered_.empty()) return codomain_->size();
  return static_cast<std::size_t>(std::count(covered_.begin(), covered_.end(), 1));
}

std::vector<std::uint8_t> SparseOperator::coverage() const {
  if (covered_.empty()) return std::vector<std::uint8_t>(codomain_->size(), 1);
  return covered_;
}

Cochain SparseOperator::apply(const Cochain& x) const {
  if (!same_space(x.space(), domain_))
    throw ConfigurationError("operator applied to a cochain on a different space");
  return Cochain(codomain_, matrix_ * x.values());
}

// ---------------------------------------------------------------------------

SparseOperator coboundary_matrix(const TupleSpacePtr& domain,
                                 const TupleSpacePtr& codomain) {
  check_face_spaces(*domain, *codomain);
  const std::size_t m = codomain->arity();
  std::vector<Triplet> triplets;
  triplets.reserve(codomain->size() * m);
  std::vector<int> sub(m - 1);
  for (std::size_t row = 0; row < codomain->size(); ++row) {
    const auto t = codomain->tuple(row);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0, p = 0; k < m; ++k)
        if (k != i) sub[p++] = t[k];
      const auto col = domain->find(sub);
      // Sub-tuples of R-bounded tuples are R-bounded.
      if (!col)
        throw InternalConsistencyError("coboundary: face of an indexed tuple missing");
      triplets.emplace_back(static_cast<int>(row), static_cast<int>(*col),
                            (i % 2 == 0) ? 1.0 : -1.0);
    }
  }
  return SparseOperator(domain, codomain,
                        from_triplets(static_cast<Eigen::Index>(codomain->size()),
                                      static_cast<Eigen::Index>(domain->size()),
                                      triplets));
}

SparseOperator face_operator(const TupleSpacePtr& domain,
                             const TupleSpacePtr& codomain, int i) {
  check_face_spaces(*domain, *codomain);
  const std::size_t m = codomain->arity();
  if (i < 0 || static_cast<std::size_t>(i) >= m)
    throw RangeError("face index out of range");
  std::vector<Triplet> triplets;
  triplets.reserve(codomain->size());
  std::vector<int> sub(m - 1);
  for (std::size_t row = 0; row < codomain->size(); ++row) {
    const auto t = codomain->tuple(row);
    for (std::size_t k = 0, p = 0; k < m; ++k)
      if (k != static_cast<std::size_t>(i)) sub[p++] = t[k];
    const auto col = domain->find(sub);
    if (!col) throw InternalConsistencyError("face of an indexed tuple missing");
    triplets.emplace_back(static_cast<int>(row), static_cast<int>(*col), 1.0);
  }
  return SparseOperator(domain, codomain,
                        from_triplets(static_cast<Eigen::Index>(codomain->size()),
                                      static_cast<Eigen::Index>(domain->size()),
                                      triplets));
}

SparseOperator restriction(const TupleSpacePtr& from, const TupleSpacePtr& to) {
  if (!same_window(*from, *to) || from->degree() != to->degree())
    throw ConfigurationError("restriction needs equal windows and degrees");
  if (to->scale() > from->scale())
    throw ScaleError("cannot restrict scale " + std::to_string(from->scale()) +
                     " to larger scale " + std::to_string(to->scale()));
  std::vector<Triplet> triplets;
  triplets.reserve(to->size());
  for (std::size_t row = 0; row < to->size(); ++row) {
    const auto col = from->find(to->tuple(row));
    if (!col) throw InternalConsistencyError("restriction: tuple missing at larger scale");
    triplets.emplace_back(static_cast<int>(row), static_cast<int>(*col), 1.0);
  }
  return SparseOperator(from, to,
                        from_triplets(static_cast<Eigen::Index>(to->size()),
                                      static_cast<Eigen::Index>(from->size()),
                                      triplets));
}

SparseOperator identity_operator(const TupleSpacePtr& space) {
  return restriction(space, space);
}

SparseOperator adjoint(const SparseOperator& op) {
  const double ratio = op.codomain()->tuple_weight() / op.domain()->tuple_weight();
  SparseMatrix t = op.matrix().transpose();
  t *= ratio;
  t.makeCompressed();
  return SparseOperator(op.codomain(), op.domain(), std::move(t));
}

SparseOperator compose(const SparseOperator& a, const SparseOperator& b) {
  if (!same_space(a.domain(), b.codomain()))
    throw ConfigurationError("compose: inner spaces differ");
  SparseMatrix product = (a.matrix() * b.matrix()).pruned(0.0);
  product.makeCompressed();
  std::vector<std::uint8_t> covered;
  if (!a.fully_covered() || !b.fully_covered()) {
    covered.assign(a.codomain()->size(), 1);
    for (Eigen::Index row = 0; row < a.matrix().outerSize(); ++row) {
      if (!a.row_covered(static_cast<std::size_t>(row))) {
        covered[row] = 0;
        continue;
      }
      for (SparseMatrix::InnerIterator it(a.matrix(), row); it; ++it) {
        if (!b.row_covered(static_cast<std::size_t>(it.col()))) {
          covered[row] = 0;
          break;
        }
      }
    }
    for (Eigen::Index row = 0; row < product.outerSize(); ++row)
      if (!covered[row])
        for (SparseMatrix::InnerIterator it(product, row); it; ++it) it.valueRef() = 0.0;
    product.prune(0.0);
  }
  return SparseOperator(b.domain(), a.codomain(), std::move(product), std::move(covered));
}

SparseOperator add(const SparseOperator& a, const SparseOperator& b, double b_scale) {
  if (!same_space(a.domain(), b.domain()) || !same_space(a.codomain(), b.codomain()))
    throw ConfigurationError("add: operators act between different spaces");
  SparseMatrix sum = (a.matrix() + b_scale * b.matrix()).pruned(0.0);
  std::vector<std::uint8_t> covered;
  if (!a.fully_covered() || !b.fully_covered()) {
    covered.resize(a.codomain()->size());
    for (std::size_t r = 0; r < covered.size(); ++r)
      covered[r] = a.row_covered(r) && b.row_covered(r);
  }
  sum.makeCompressed();
  return SparseOperator(a.domain(), a.codomain(), std::move(sum), std::move(covered));
}

SparseOperator scaled(const SparseOperator& a, double s) {
  SparseMatrix m = a.matrix() * s;
  return SparseOperator(a.domain(), a.codomain(), std::move(m), a.coverage());
}

// ---------------------------------------------------------------------------

double inner_product(const Cochain& u, const Cochain& v) {
  if (!same_space(u.space(), v.space()))
    throw ConfigurationError("inner product of cochains on different spaces");
  return u.space()->tuple_weight() * u.values().dot(v.values());
}

double seminorm_squared(const Cochain& alpha, int scale) {
  const auto& space = *alpha.space();
  if (scale < 0) throw ScaleError("semi-norm scale must be non-negative");
  if (scale > space.scale())
    throw ScaleError("semi-norm at scale " + std::to_string(scale) +
                     " exceeds the cochain's scale " + std::to_string(space.scale()));
  double total = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.max_pairwise_distance(space.tuple(i)) <= scale)
      total += alpha[i] * alpha[i];
  return space.tuple_weight() * total;
}

double seminorm(const Cochain& alpha, int scale) {
  return std::sqrt(seminorm_squared(alpha, scale));
}

double max_abs_difference(const Cochain& a, const Cochain& b,
                          const std::vector<std::uint8_t>& rows) {
  if (!same_space(a.space(), b.space()))
    throw ConfigurationError("comparing cochains on different spaces");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (rows.empty() || rows[i]) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const Cochain& a, const std::vector<std::uint8_t>& rows) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (rows.empty() || rows[i]) m = std::max(m, std::abs(a[i]));
  return m;
}

Cochain random_cochain(const TupleSpacePtr& space, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Eigen::VectorXd v(static_cast<Eigen::Index>(space->size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    v[i] = 2.0 * unit - 1.0;
  }
  return Cochain(space, std::move(v));
}

void export_operator_coo(const SparseOperator& op, std::ostream& out) {
  out << "% " << op.matrix().rows() << " " << op.matrix().cols() << " "
      << op.matrix().nonZeros() << "\n";
  for (Eigen::Index row = 0; row < op.matrix().outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(op.matrix(), row); it; ++it)
      out << it.row() << " " << it.col() << " " << format_double(it.value()) << "\n";
}

void export_cochain_csv(const Cochain& alpha, std::ostream& out) {
  const auto& space = *alpha.space();
  const auto& w = *space.window();
  for (std::size_t k = 0; k < space.arity(); ++k) out << "g" << k << ",";
  out << "value\n";
  for (std::size_t i = 0; i < space.size(); ++i) {
    for (int x : space.tuple(i)) out << '"' << w.group()->describe(w.element(x)) << "\",";
    out << format_double(alpha[i]) << "\n";
  }
}

}  // namespace coarsel2
