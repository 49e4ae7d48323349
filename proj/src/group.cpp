#include "coarsel2/group.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

std::string to_string(const Element& e) {
  if (e.coords.size() == 1) return std::to_string(e.coords[0]);
  std::string out = "(";
  for (std::size_t i = 0; i < e.coords.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(e.coords[i]);
  }
  return out + ")";
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string format_weight(double w) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  return buf;
}

constexpr std::int64_t kLatticeCoordLimit = std::int64_t{1} << 40;
constexpr std::int64_t kMaxBfsOrder = std::int64_t{1} << 24;
constexpr std::size_t kLazyBfsLimit = 4'000'000;

}  // namespace

// ---------------------------------------------------------------------------
// MultiplicationTable

MultiplicationTable::MultiplicationTable(std::vector<std::string> names,
                                         std::vector<int> products)
    : names_(std::move(names)), products_(std::move(products)) {
  const int n = order();
  if (n == 0) throw ValidationError("table: empty multiplication table");
  {
    std::set<std::string> seen;
    for (const auto& name : names_) {
      if (name.empty()) throw ValidationError("table: empty element name");
      if (!seen.insert(name).second)
        throw ValidationError("table: duplicate element name '" + name + "'");
    }
  }
  if (products_.size() != static_cast<std::size_t>(n) * n)
    throw ValidationError("table: expected " + std::to_string(n * n) +
                          " products, got " + std::to_string(products_.size()));
  for (int p : products_)
    if (p < 0 || p >= n) throw ValidationError("table: closure violated");

  for (int e = 0; e < n && identity_ < 0; ++e) {
    bool ok = true;
    for (int x = 0; x < n && ok; ++x)
      ok = product(e, x) == x && product(x, e) == x;
    if (ok) identity_ = e;
  }
  if (identity_ < 0) throw ValidationError("table: no identity element");

  inverses_.assign(n, -1);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (product(a, b) == identity_ && product(b, a) == identity_) {
        inverses_[a] = b;
        break;
      }
    }
    if (inverses_[a] < 0)
      throw ValidationError("table: inverse axiom violated, element '" +
                            names_[a] + "' has no inverse");
  }

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        if (product(product(a, b), c) != product(a, product(b, c)))
          throw ValidationError("table: associativity violated for (" +
                                names_[a] + ", " + names_[b] + ", " +
                                names_[c] + ")");
}

MultiplicationTable MultiplicationTable::from_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw ValidationError("table: empty CSV");

  std::vector<std::string> names = rows.front();
  bool labelled_header = false;
  if (!names.empty() && names.front().empty()) {
    names.erase(names.begin());
    labelled_header = true;
  }
  const std::size_t n = names.size();
  if (rows.size() != n + 1)
    throw ValidationError("table: expected " + std::to_string(n) +
                          " product rows, got " + std::to_string(rows.size() - 1));

  std::map<std::string, int> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(names[i], static_cast<int>(i));

  std::vector<int> products;
  products.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    auto cells = rows[r + 1];
    if (labelled_header || cells.size() == n + 1) {
      if (cells.empty() || cells.front() != names[r])
        throw ValidationError("table: row " + std::to_string(r + 1) +
                              " label does not match header");
      cells.erase(cells.begin());
    }
    if (cells.size() != n)
      throw ValidationError("table: row " + std::to_string(r + 1) + " has " +
                            std::to_string(cells.size()) + " entries");
    for (const auto& cell : cells) {
      auto it = index.find(cell);
      if (it == index.end())
        throw ValidationError("table: closure violated, unknown product '" +
                              cell + "'");
      products.push_back(it->second);
    }
  }
  return MultiplicationTable(std::move(names), std::move(products));
}

MultiplicationTable MultiplicationTable::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("table: cannot open '" + path + "'");
  return from_csv(in);
}

int MultiplicationTable::index_of(const std::string& name) const {
  for (int i = 0; i < order(); ++i)
    if (names_[i] == name) return i;
  throw RangeError("table: unknown element '" + name + "'");
}

// ---------------------------------------------------------------------------
// GroupSpec factories

GroupSpec GroupSpec::cyclic(std::int64_t n, double weight) {
  GroupSpec s;
  s.family = Family::kCyclic;
  s.order = n;
  s.measure_weight = weight;
  return s;
}

GroupSpec GroupSpec::integer_lattice(int d, double weight) {
  GroupSpec s;
  s.family = Family::kIntegerLattice;
  s.dimension = d;
  s.measure_weight = weight;
  return s;
}

GroupSpec GroupSpec::direct_product(std::vector<GroupSpec> factors, double weight) {
  GroupSpec s;
  s.family = Family::kDirectProduct;
  s.factors = std::move(factors);
  s.measure_weight = weight;
  return s;
}

GroupSpec GroupSpec::from_table(std::shared_ptr<const MultiplicationTable> t,
                                double weight) {
  GroupSpec s;
  s.family = Family::kTable;
  s.table = std::move(t);
  s.measure_weight = weight;
  return s;
}

// ---------------------------------------------------------------------------
// Family implementations

namespace detail {

class GroupImpl {
 public:
  virtual ~GroupImpl() = default;
  virtual bool finite() const = 0;
  virtual std::int64_t order() const = 0;
  virtual std::size_t arity() const = 0;
  virtual Element identity() const = 0;
  virtual Element multiply(const Element& a, const Element& b) const = 0;
  virtual Element inverse(const Element& a) const = 0;
  virtual Element canonical(const Element& e) const = 0;
  virtual void check(const Element& e) const = 0;
  virtual std::vector<Element> default_generators() const = 0;
  virtual bool custom_generators_allowed() const { return true; }
  // Called once with the validated symmetric generating set.
  virtual void set_generators(const std::vector<Element>& gens) = 0;
  virtual std::int64_t word_length(const Element& e) const = 0;
  virtual std::vector<Element> elements() const = 0;
  virtual std::int64_t diameter() const = 0;
  virtual std::string fingerprint() const = 0;
  virtual std::string describe(const Element& e) const { return to_string(e); }
};

namespace {

void check_arity(const Element& e, std::size_t arity) {
  if (e.coords.size() != arity)
    throw RangeError("element " + to_string(e) + " has " +
                     std::to_string(e.coords.size()) + " coordinates, expected " +
                     std::to_string(arity));
}

// Finite group whose elements are indices 0..N-1; word lengths by BFS.
class IndexedFiniteImpl : public GroupImpl {
 public:
  explicit IndexedFiniteImpl(std::int64_t n) : n_(n) {}

  bool finite() const override { return true; }
  std::int64_t order() const override { return n_; }
  std::size_t arity() const override { return 1; }
  Element identity() const override { return Element{identity_index()}; }
  Element multiply(const Element& a, const Element& b) const override {
    return Element{mult(a.coords[0], b.coords[0])};
  }
  Element inverse(const Element& a) const override {
    return Element{inv(a.coords[0])};
  }
  void check(const Element& e) const override {
    check_arity(e, 1);
    if (e.coords[0] < 0 || e.coords[0] >= n_)
      throw RangeError("element " + to_string(e) + " outside group of order " +
                       std::to_string(n_));
  }
  std::vector<Element> elements() const override {
    std::vector<Element> out;
    out.reserve(n_);
    for (std::int64_t i = 0; i < n_; ++i) out.push_back(Element{i});
    return out;
  }
  void set_generators(const std::vector<Element>& gens) override {
    if (n_ > kMaxBfsOrder)
      throw RangeError("group of order " + std::to_string(n_) +
                       " too large for tabulated word lengths");
    lengths_.assign(n_, -1);
    std::deque<std::int64_t> queue{identity_index()};
    lengths_[identity_index()] = 0;
    while (!queue.empty()) {
      const auto g = queue.front();
      queue.pop_front();
      for (const auto& s : gens) {
        const auto h = mult(g, s.coords[0]);
        if (lengths_[h] < 0) {
          lengths_[h] = lengths_[g] + 1;
          queue.push_back(h);
        }
      }
    }
    for (std::int64_t i = 0; i < n_; ++i)
      if (lengths_[i] < 0)
        throw ValidationError("generating set does not generate the group: " +
                              describe(Element{i}) + " unreachable");
    diameter_ = *std::max_element(lengths_.begin(), lengths_.end());
  }
  std::int64_t word_length(const Element& e) const override {
    return lengths_[e.coords[0]];
  }
  std::int64_t diameter() const override { return diameter_; }

 protected:
  virtual std::int64_t identity_index() const = 0;
  virtual std::int64_t mult(std::int64_t a, std::int64_t b) const = 0;
  virtual std::int64_t inv(std::int64_t a) const = 0;

  std::int64_t n_;
  std::vector<std::int64_t> lengths_;
  std::int64_t diameter_ = 0;
};

class CyclicImpl final : public IndexedFiniteImpl {
 public:
  explicit CyclicImpl(std::int64_t n) : IndexedFiniteImpl(n) {
    if (n < 1) throw ValidationError("cyclic group order must be >= 1");
  }
  Element canonical(const Element& e) const override {
    check_arity(e, 1);
    auto r = e.coords[0] % n_;
    if (r < 0) r += n_;
    return Element{r};
  }
  std::vector<Element> default_generators() const override {
    if (n_ == 1) return {};
    if (n_ == 2) return {Element{1}};
    return {Element{1}, Element{n_ - 1}};
  }
  std::string fingerprint() const override {
    return "cyclic(" + std::to_string(n_) + ")";
  }

 protected:
  std::int64_t identity_index() const override { return 0; }
  std::int64_t mult(std::int64_t a, std::int64_t b) const override {
    return (a + b) % n_;
  }
  std::int64_t inv(std::int64_t a) const override { return (n_ - a) % n_; }
};

class TableImpl final : public IndexedFiniteImpl {
 public:
  explicit TableImpl(std::shared_ptr<const MultiplicationTable> t)
      : IndexedFiniteImpl(t ? t->order() : 0), table_(std::move(t)) {
    if (!table_) throw ValidationError("table family requires a table");
  }
  Element canonical(const Element& e) const override {
    check(e);
    return e;
  }
  std::vector<Element> default_generators() const override {
    std::vector<Element> gens;
    for (int i = 0; i < table_->order(); ++i)
      if (i != table_->identity()) gens.push_back(Element{i});
    return gens;
  }
  std::string fingerprint() const override {
    std::string fp = "table(";
    for (const auto& name : table_->names()) fp += name + ";";
    fp += "|";
    for (int a = 0; a < table_->order(); ++a)
      for (int b = 0; b < table_->order(); ++b)
        fp += std::to_string(table_->product(a, b)) + ",";
    return fp + ")";
  }
  std::string describe(const Element& e) const override {
    if (e.coords.size() == 1 && e.coords[0] >= 0 && e.coords[0] < n_)
      return table_->names()[e.coords[0]];
    return to_string(e);
  }

 protected:
  std::int64_t identity_index() const override { return table_->identity(); }
  std::int64_t mult(std::int64_t a, std::int64_t b) const override {
    return table_->product(static_cast<int>(a), static_cast<int>(b));
  }
  std::int64_t inv(std::int64_t a) const override {
    return table_->inverse(static_cast<int>(a));
  }

 private:
  std::shared_ptr<const MultiplicationTable> table_;
};

class LatticeImpl final : public GroupImpl {
 public:
  explicit LatticeImpl(int d) : d_(d) {
    if (d < 1) throw ValidationError("lattice dimension must be >= 1");
  }
  bool finite() const override { return false; }
  std::int64_t order() const override { return -1; }
  std::size_t arity() const override { return static_cast<std::size_t>(d_); }
  Element identity() const override {
    return Element(std::vector<std::int64_t>(d_, 0));
  }
  Element multiply(const Element& a, const Element& b) const override {
    Element out = a;
    for (int i = 0; i < d_; ++i) out.coords[i] += b.coords[i];
    return out;
  }
  Element inverse(const Element& a) const override {
    Element out = a;
    for (auto& c : out.coords) c = -c;
    return out;
  }
  Element canonical(const Element& e) const override {
    check(e);
    return e;
  }
  void check(const Element& e) const override {
    check_arity(e, arity());
    for (auto c : e.coords)
      if (c <= -kLatticeCoordLimit || c >= kLatticeCoordLimit)
        throw RangeError("element " + to_string(e) +
                         " outside enumerable lattice range");
  }
  std::vector<Element> default_generators() const override {
    std::vector<Element> gens;
    for (int i = 0; i < d_; ++i) {
      for (int s : {1, -1}) {
        std::vector<std::int64_t> c(d_, 0);
        c[i] = s;
        gens.emplace_back(std::move(c));
      }
    }
    return gens;
  }
  void set_generators(const std::vector<Element>& gens) override {
    auto standard = default_generators();
    std::sort(standard.begin(), standard.end());
    standard_ = gens == standard;
    gens_ = gens;
    if (!standard_) {
      std::lock_guard lock(mutex_);
      lengths_.emplace(identity(), 0);
      frontier_ = {identity()};
      lock_free_verify_generation();
    }
  }
  std::int64_t word_length(const Element& e) const override {
    if (standard_) {
      std::int64_t total = 0;
      for (auto c : e.coords) total += c < 0 ? -c : c;
      return total;
    }
    std::lock_guard lock(mutex_);
    return lazy_length(e);
  }
  std::vector<Element> elements() const override {
    throw UnsupportedError("Z^" + std::to_string(d_) + " is infinite");
  }
  std::int64_t diameter() const override {
    throw UnsupportedError("Z^" + std::to_string(d_) + " has infinite diameter");
  }
  std::string fingerprint() const override { return "Z^" + std::to_string(d_); }

  bool standard() const { return standard_; }

 private:
  void lock_free_verify_generation() {
    for (int i = 0; i < d_; ++i) {
      std::vector<std::int64_t> c(d_, 0);
      c[i] = 1;
      try {
        lazy_length(Element(c));
      } catch (const RangeError&) {
        throw ValidationError("generating set does not generate Z^" +
                              std::to_string(d_));
      }
    }
  }

  std::int64_t lazy_length(const Element& e) const {
    for (;;) {
      auto it = lengths_.find(e);
      if (it != lengths_.end()) return it->second;
      if (lengths_.size() > kLazyBfsLimit || frontier_.empty())
        throw RangeError("word length of " + to_string(e) +
                         " beyond the explored Cayley graph");
      std::vector<Element> next;
      for (const auto& g : frontier_) {
        for (const auto& s : gens_) {
          auto h = multiply(g, s);
          if (lengths_.emplace(h, radius_ + 1).second) next.push_back(std::move(h));
        }
      }
      frontier_ = std::move(next);
      ++radius_;
    }
  }

  int d_;
  bool standard_ = true;
  std::vector<Element> gens_;
  mutable std::mutex mutex_;
  mutable std::map<Element, std::int64_t> lengths_;
  mutable std::vector<Element> frontier_;
  mutable std::int64_t radius_ = 0;
};

class ProductImpl final : public GroupImpl {
 public:
  explicit ProductImpl(std::vector<GroupPtr> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw ValidationError("direct product needs factors");
    std::size_t offset = 0;
    for (const auto& f : factors_) {
      offsets_.push_back(offset);
      offset += f->arity();
    }
    arity_ = offset;
  }
  bool finite() const override {
    return std::all_of(factors_.begin(), factors_.end(),
                       [](const GroupPtr& f) { return f->is_finite(); });
  }
  std::int64_t order() const override {
    if (!finite()) return -1;
    std::int64_t n = 1;
    for (const auto& f : factors_) n *= f->order();
    return n;
  }
  std::size_t arity() const override { return arity_; }
  Element identity() const override {
    std::vector<Element> parts;
    for (const auto& f : factors_) parts.push_back(f->identity());
    return join(parts);
  }
  Element multiply(const Element& a, const Element& b) const override {
    std::vector<Element> parts;
    for (std::size_t k = 0; k < factors_.size(); ++k)
      parts.push_back(factors_[k]->multiply(part(a, k), part(b, k)));
    return join(parts);
  }
  Element inverse(const Element& a) const override {
    std::vector<Element> parts;
    for (std::size_t k = 0; k < factors_.size(); ++k)
      parts.push_back(factors_[k]->inverse(part(a, k)));
    return join(parts);
  }
  Element canonical(const Element& e) const override {
    check_arity(e, arity_);
    std::vector<Element> parts;
    for (std::size_t k = 0; k < factors_.size(); ++k)
      parts.push_back(factors_[k]->canonical(part(e, k)));
    return join(parts);
  }
  void check(const Element& e) const override {
    check_arity(e, arity_);
    for (std::size_t k = 0; k < factors_.size(); ++k) factors_[k]->check(part(e, k));
  }
  std::vector<Element> default_generators() const override {
    std::vector<Element> gens;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      for (const auto& s : factors_[k]->generators()) {
        std::vector<Element> parts;
        for (const auto& f : factors_) parts.push_back(f->identity());
        parts[k] = s;
        gens.push_back(join(parts));
      }
    }
    return gens;
  }
  bool custom_generators_allowed() const override { return false; }
  void set_generators(const std::vector<Element>&) override {}
  std::int64_t word_length(const Element& e) const override {
    std::int64_t total = 0;
    for (std::size_t k = 0; k < factors_.size(); ++k)
      total += factors_[k]->word_length(part(e, k));
    return total;
  }
  std::vector<Element> elements() const override {
    std::vector<Element> out{Element{}};
    for (const auto& f : factors_) {
      const auto factor_elements = f->elements();
      std::vector<Element> next;
      next.reserve(out.size() * factor_elements.size());
      for (const auto& prefix : out) {
        for (const auto& x : factor_elements) {
          Element e = prefix;
          e.coords.insert(e.coords.end(), x.coords.begin(), x.coords.end());
          next.push_back(std::move(e));
        }
      }
      out = std::move(next);
    }
    return out;
  }
  std::int64_t diameter() const override {
    std::int64_t total = 0;
    for (const auto& f : factors_) total += f->diameter();
    return total;
  }
  std::string fingerprint() const override {
    std::string fp = "product(";
    for (const auto& f : factors_) fp += f->fingerprint() + ";";
    return fp + ")";
  }
  std::string describe(const Element& e) const override {
    if (e.coords.size() != arity_) return to_string(e);
    std::string out = "(";
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      if (k) out += ",";
      out += factors_[k]->describe(part(e, k));
    }
    return out + ")";
  }

 private:
  Element part(const Element& e, std::size_t k) const {
    const auto begin = e.coords.begin() + static_cast<std::ptrdiff_t>(offsets_[k]);
    return Element(std::vector<std::int64_t>(
        begin, begin + static_cast<std::ptrdiff_t>(factors_[k]->arity())));
  }
  static Element join(const std::vector<Element>& parts) {
    Element out;
    for (const auto& p : parts)
      out.coords.insert(out.coords.end(), p.coords.begin(), p.coords.end());
    return out;
  }

  std::vector<GroupPtr> factors_;
  std::vector<std::size_t> offsets_;
  std::size_t arity_ = 0;
};

}  // namespace
}  // namespace detail

// ---------------------------------------------------------------------------
// MetricMeasureGroup

MetricMeasureGroup::MetricMeasureGroup(GroupSpec spec,
                                       std::unique_ptr<detail::GroupImpl> impl)
    : spec_(std::move(spec)), impl_(std::move(impl)) {}

MetricMeasureGroup::~MetricMeasureGroup() = default;

GroupPtr MetricMeasureGroup::build(const GroupSpec& spec) {
  if (!(spec.measure_weight > 0.0) || !std::isfinite(spec.measure_weight))
    throw ValidationError("measure_weight must be a positive finite number");

  std::unique_ptr<detail::GroupImpl> impl;
  switch (spec.family) {
    case GroupSpec::Family::kCyclic:
      impl = std::make_unique<detail::CyclicImpl>(spec.order);
      break;
    case GroupSpec::Family::kIntegerLattice:
      impl = std::make_unique<detail::LatticeImpl>(spec.dimension);
      break;
    case GroupSpec::Family::kTable:
      impl = std::make_unique<detail::TableImpl>(spec.table);
      break;
    case GroupSpec::Family::kDirectProduct: {
      std::vector<GroupPtr> factors;
      for (const auto& f : spec.factors) factors.push_back(build(f));
      impl = std::make_unique<detail::ProductImpl>(std::move(factors));
      break;
    }
  }

  std::vector<Element> gens;
  if (spec.generators.empty()) {
    gens = impl->default_generators();
  } else {
    if (!impl->custom_generators_allowed())
      throw ValidationError(
          "direct products use the union of their factor generating sets");
    for (const auto& g : spec.generators) gens.push_back(impl->canonical(g));
  }
  std::sort(gens.begin(), gens.end());
  gens.erase(std::unique(gens.begin(), gens.end()), gens.end());
  const Element id = impl->identity();
  for (const auto& g : gens) {
    impl->check(g);
    if (g == id)
      throw ValidationError("generating set must not contain the identity");
    if (!std::binary_search(gens.begin(), gens.end(), impl->inverse(g)))
      throw ValidationError("generating set is not symmetric: inverse of " +
                            impl->describe(g) + " missing");
  }
  impl->set_generators(gens);

  auto group = std::shared_ptr<MetricMeasureGroup>(
      new MetricMeasureGroup(spec, std::move(impl)));
  group->generators_ = std::move(gens);
  return group;
}

bool MetricMeasureGroup::is_finite() const { return impl_->finite(); }

std::int64_t MetricMeasureGroup::order() const {
  if (!impl_->finite()) throw UnsupportedError("group is infinite");
  return impl_->order();
}

std::size_t MetricMeasureGroup::arity() const { return impl_->arity(); }
Element MetricMeasureGroup::identity() const { return impl_->identity(); }

Element MetricMeasureGroup::multiply(const Element& a, const Element& b) const {
  impl_->check(a);
  impl_->check(b);
  return impl_->multiply(a, b);
}

Element MetricMeasureGroup::inverse(const Element& a) const {
  impl_->check(a);
  return impl_->inverse(a);
}

Element MetricMeasureGroup::canonical(const Element& e) const {
  return impl_->canonical(e);
}

void MetricMeasureGroup::check(const Element& e) const { impl_->check(e); }

std::int64_t MetricMeasureGroup::word_length(const Element& e) const {
  impl_->check(e);
  return impl_->word_length(e);
}

std::int64_t MetricMeasureGroup::distance(const Element& g, const Element& h) const {
  impl_->check(g);
  impl_->check(h);
  return impl_->word_length(impl_->multiply(impl_->inverse(g), h));
}

std::vector<Element> MetricMeasureGroup::ball(const Element& center,
                                              std::int64_t radius) const {
  impl_->check(center);
  if (radius < 0) throw RangeError("ball radius must be non-negative");
  if (impl_->finite() && radius >= impl_->diameter()) return impl_->elements();

  auto* lattice = dynamic_cast<const detail::LatticeImpl*>(impl_.get());
  if (lattice != nullptr && lattice->standard()) {
    // Enumerate the l1 ball directly, in lexicographic order.
    std::vector<Element> out;
    const std::size_t d = arity();
    std::vector<std::int64_t> offset(d, -radius);
    for (;;) {
      std::int64_t norm = 0;
      for (auto o : offset) norm += o < 0 ? -o : o;
      if (norm <= radius) {
        Element e = center;
        for (std::size_t i = 0; i < d; ++i) e.coords[i] += offset[i];
        impl_->check(e);
        out.push_back(std::move(e));
      }
      std::size_t i = d;
      while (i > 0 && offset[i - 1] == radius) offset[--i] = -radius;
      if (i == 0) break;
      ++offset[i - 1];
    }
    return out;
  }

  std::set<Element> seen{center};
  std::vector<Element> frontier{center};
  for (std::int64_t r = 0; r < radius && !frontier.empty(); ++r) {
    std::vector<Element> next;
    for (const auto& g : frontier)
      for (const auto& s : generators_) {
        auto h = impl_->multiply(g, s);
        if (seen.insert(h).second) next.push_back(std::move(h));
      }
    frontier = std::move(next);
  }
  return {seen.begin(), seen.end()};
}

std::int64_t MetricMeasureGroup::ball_size(std::int64_t radius) const {
  return static_cast<std::int64_t>(ball(identity(), radius).size());
}

std::vector<Element> MetricMeasureGroup::elements() const {
  if (!impl_->finite()) throw UnsupportedError("group is infinite");
  return impl_->elements();
}

std::int64_t MetricMeasureGroup::diameter() const {
  if (!impl_->finite()) throw UnsupportedError("group is infinite");
  return impl_->diameter();
}

std::string MetricMeasureGroup::fingerprint() const {
  std::string fp = impl_->fingerprint() + ";gens=";
  for (const auto& g : generators_) fp += to_string(g) + " ";
  return fp + ";w=" + format_weight(spec_.measure_weight);
}

std::string MetricMeasureGroup::describe(const Element& e) const {
  return impl_->describe(e);
}

}  // namespace coarsel2
