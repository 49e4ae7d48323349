#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace coarsel2 {

// Canonical identifier of a group element: one coordinate for cyclic groups
// and multiplication tables, d coordinates for Z^d, concatenated coordinates
// for direct products. Equal elements have equal coordinates, and the
// lexicographic order on coordinates is the canonical enumeration order.
struct Element {
  std::vector<std::int64_t> coords;

  Element() = default;
  explicit Element(std::vector<std::int64_t> c) : coords(std::move(c)) {}
  Element(std::initializer_list<std::int64_t> c) : coords(c) {}

  friend auto operator<=>(const Element&, const Element&) = default;
  friend bool operator==(const Element&, const Element&) = default;
};

std::string to_string(const Element& e);

// Finite group given by its Cayley table. Construction validates closure,
// identity, inverses and associativity and names the first violated axiom.
class MultiplicationTable {
 public:
  MultiplicationTable(std::vector<std::string> names, std::vector<int> products);

  // Header row of element names, then one row per element with the products
  // name_i * name_j. A row may optionally start with its own label.
  static MultiplicationTable from_csv(std::istream& in);
  static MultiplicationTable from_csv_file(const std::string& path);

  int order() const { return static_cast<int>(names_.size()); }
  int product(int a, int b) const { return products_[a * order() + b]; }
  int identity() const { return identity_; }
  int inverse(int a) const { return inverses_[a]; }
  const std::vector<std::string>& names() const { return names_; }
  int index_of(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  std::vector<int> products_;
  int identity_ = -1;
  std::vector<int> inverses_;
};

struct GroupSpec {
  enum class Family { kCyclic, kIntegerLattice, kDirectProduct, kTable };

  Family family = Family::kCyclic;
  std::int64_t order = 1;  // cyclic
  int dimension = 1;       // integer lattice
  std::vector<GroupSpec> factors;
  std::shared_ptr<const MultiplicationTable> table;
  std::string table_source;  // path the table was loaded from, if any
  // Empty means the family default: {+-1} for cyclic groups, {+-e_i} for
  // lattices, every non-identity element for tables, and the union of the
  // embedded factor generators for direct products.
  std::vector<Element> generators;
  double measure_weight = 1.0;

  static GroupSpec cyclic(std::int64_t n, double weight = 1.0);
  static GroupSpec integer_lattice(int d, double weight = 1.0);
  static GroupSpec direct_product(std::vector<GroupSpec> factors,
                                  double weight = 1.0);
  static GroupSpec from_table(std::shared_ptr<const MultiplicationTable> t,
                              double weight = 1.0);
  static GroupSpec trivial(double weight = 1.0) { return cyclic(1, weight); }
};

namespace detail {
class GroupImpl;
}

// Discrete group with word metric and weighted counting measure c * #.
// Immutable after construction and safe to share between threads.
class MetricMeasureGroup {
 public:
  static std::shared_ptr<const MetricMeasureGroup> build(const GroupSpec& spec);

  ~MetricMeasureGroup();

  const GroupSpec& spec() const { return spec_; }
  double measure_weight() const { return spec_.measure_weight; }
  bool is_finite() const;
  // Number of elements; UnsupportedError for infinite groups.
  std::int64_t order() const;
  std::size_t arity() const;

  Element identity() const;
  Element multiply(const Element& a, const Element& b) const;
  Element inverse(const Element& a) const;
  // Reduces residues (cyclic) into canonical form; RangeError if impossible.
  Element canonical(const Element& e) const;
  // RangeError unless e is a canonical, representable element.
  void check(const Element& e) const;

  const std::vector<Element>& generators() const { return generators_; }

  std::int64_t word_length(const Element& e) const;
  // Word length of g^{-1} h.
  std::int64_t distance(const Element& g, const Element& h) const;
  // Closed ball, canonical order. Saturates at the whole group when finite.
  std::vector<Element> ball(const Element& center, std::int64_t radius) const;
  std::int64_t ball_size(std::int64_t radius) const;

  // Finite groups only.
  std::vector<Element> elements() const;
  std::int64_t diameter() const;

  // Stable textual description; two groups with equal fingerprints have the
  // same elements, operation, generators and measure.
  std::string fingerprint() const;
  std::string describe(const Element& e) const;

 private:
  MetricMeasureGroup(GroupSpec spec, std::unique_ptr<detail::GroupImpl> impl);

  GroupSpec spec_;
  std::unique_ptr<detail::GroupImpl> impl_;
  std::vector<Element> generators_;
};

using GroupPtr = std::shared_ptr<const MetricMeasureGroup>;

inline GroupPtr build_group(const GroupSpec& spec) {
  return MetricMeasureGroup::build(spec);
}

}  // namespace coarsel2
