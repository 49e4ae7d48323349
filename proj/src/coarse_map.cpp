#include "coarsel2/coarse_map.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

namespace {

constexpr double kControlSlack = 1e-9;

int floor_scale(double v) { return static_cast<int>(std::floor(v + 1e-9)); }

bool same_window(const WindowPtr& a, const WindowPtr& b) {
  return a == b || a->fingerprint() == b->fingerprint();
}

bool same_group(const GroupPtr& a, const GroupPtr& b) {
  return a == b || a->fingerprint() == b->fingerprint();
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void check_setup(const CoarseSetup& s) {
  if (!same_window(s.forward.target(), s.backward.source()))
    throw ConfigurationError("coarse pair: target window of f differs from source window of g");
  if (!same_window(s.backward.target(), s.forward.source()))
    throw ConfigurationError("coarse pair: target window of g differs from source window of f");
  if (!same_group(s.source_kernel.group(), s.forward.source()->group()))
    throw ConfigurationError("coarse pair: source kernel lives on a different group");
  if (!same_group(s.target_kernel.group(), s.forward.target()->group()))
    throw ConfigurationError("coarse pair: target kernel lives on a different group");
}

// Transition kernel from `rows` to `columns` where row i is the closed ball of
// radius c around columns-index centre[i], normalized by |B(c)|.
TransitionKernel ball_transition(const WindowPtr& rows, const WindowPtr& columns,
                                 const std::vector<int>& centre, const SmoothingKernel& chi) {
  const Rational mass(1, chi.ball_size());
  std::vector<std::vector<TransitionKernel::Entry>> entries(rows->size());
  std::vector<std::uint8_t> complete(rows->size(), 0);
  const int n = static_cast<int>(columns->size());
  for (std::size_t i = 0; i < rows->size(); ++i) {
    for (int j = 0; j < n; ++j)
      if (columns->distance(centre[i], j) <= chi.radius()) entries[i].push_back({j, mass});
    complete[i] = static_cast<std::int64_t>(entries[i].size()) == chi.ball_size();
  }
  return TransitionKernel(rows, columns, std::move(entries), std::move(complete));
}

// Per-row supports with double masses, for assembly.
struct DoubleRows {
  std::vector<std::vector<std::pair<int, double>>> rows;
};

DoubleRows to_double_rows(const TransitionKernel& k) {
  DoubleRows out;
  out.rows.resize(k.row_window()->size());
  for (std::size_t i = 0; i < out.rows.size(); ++i)
    for (const auto& e : k.row(static_cast<int>(i)))
      out.rows[i].emplace_back(e.column, to_double(e.mass));
  return out;
}

[[noreturn]] void throw_missing(const TupleSpace& domain, const std::vector<int>& t) {
  const int need = domain.max_pairwise_distance(t);
  throw CoverageError("kernel support reaches a tuple of diameter " + std::to_string(need) +
                          " beyond the domain scale " + std::to_string(domain.scale()),
                      need);
}

// Calls visit(mass) for each combination of kernel entries over `slots`,
// after writing the chosen columns into tuple positions 0..slots.size()-1.
template <class Visit>
void for_each_product(const DoubleRows& k, const std::vector<int>& slots,
                      std::vector<int>& tuple, Visit&& visit) {
  const std::size_t m = slots.size();
  std::vector<std::size_t> pos(m, 0);
  for (std::size_t l = 0; l < m; ++l)
    if (k.rows[slots[l]].empty()) return;
  for (;;) {
    double w = 1.0;
    for (std::size_t l = 0; l < m; ++l) {
      const auto& e = k.rows[slots[l]][pos[l]];
      tuple[l] = e.first;
      w *= e.second;
    }
    visit(w);
    std::size_t l = m;
    while (l > 0) {
      --l;
      if (++pos[l] < k.rows[slots[l]].size()) break;
      pos[l] = 0;
      if (l == 0) return;
    }
    if (m == 0) return;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ControlFunction::ControlFunction(std::vector<std::pair<double, double>> breakpoints)
    : points_(std::move(breakpoints)) {
  if (points_.size() < 2)
    throw ValidationError("control function needs at least two breakpoints");
  if (points_.front().first != 0.0)
    throw ValidationError("control function must start at t = 0");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto [t, v] = points_[i];
    if (!std::isfinite(t) || !std::isfinite(v) || v < 0.0)
      throw ValidationError("control function values must be finite and non-negative");
    if (i > 0 && !(t > points_[i - 1].first))
      throw ValidationError("control breakpoints must be strictly increasing in t");
    if (i > 0 && v < points_[i - 1].second)
      throw ValidationError("control function must be non-decreasing");
  }
  if (!(final_slope() > 0.0))
    throw ValidationError("control function must diverge: last slope must be positive");
}

ControlFunction ControlFunction::affine(double slope, double intercept) {
  return ControlFunction({{0.0, intercept}, {1.0, intercept + slope}});
}

double ControlFunction::final_slope() const {
  const auto& a = points_[points_.size() - 2];
  const auto& b = points_.back();
  return (b.second - a.second) / (b.first - a.first);
}

double ControlFunction::operator()(double t) const {
  if (t < 0.0) throw RangeError("control function evaluated at negative distance");
  if (t >= points_.back().first)
    return points_.back().second + final_slope() * (t - points_.back().first);
  auto it = std::upper_bound(points_.begin(), points_.end(), t,
                             [](double x, const auto& p) { return x < p.first; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  return a.second + (b.second - a.second) * (t - a.first) / (b.first - a.first);
}

ControlFunction ControlFunction::shifted(double s) const {
  if (!(s >= 0.0)) throw RangeError("control shift must be non-negative");
  std::vector<std::pair<double, double>> pts{{0.0, (*this)(s)}};
  for (const auto& [t, v] : points_)
    if (t > s) pts.emplace_back(t - s, v);
  if (pts.size() < 2) pts.emplace_back(1.0, pts[0].second + final_slope());
  return ControlFunction(std::move(pts));
}

// ---------------------------------------------------------------------------

CoarseMap::CoarseMap(WindowPtr source, WindowPtr target, std::vector<Element> images,
                     std::optional<ControlFunction> control)
    : source_(std::move(source)),
      target_(std::move(target)),
      images_(std::move(images)),
      control_(ControlFunction::affine(1.0, 0.0)) {
  if (images_.size() != source_->size())
    throw ValidationError("coarse map table has " + std::to_string(images_.size()) +
                          " entries for a source window of " +
                          std::to_string(source_->size()) + " elements");
  image_index_.resize(images_.size());
  for (std::size_t i = 0; i < images_.size(); ++i) {
    target_->group()->check(images_[i]);
    const auto j = target_->index_of(images_[i]);
    if (!j)
      throw MarginError("image " + target_->group()->describe(images_[i]) + " of " +
                        source_->group()->describe(source_->element(static_cast<int>(i))) +
                        " lies outside the target window");
    image_index_[i] = *j;
  }
  control_ = control ? *control : fit_affine_control(*source_, *target_, image_index_);
  const int n = static_cast<int>(source_->size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const int dy = target_->distance(image_index_[i], image_index_[j]);
      const int dx = source_->distance(i, j);
      if (dy > control_(dx) + kControlSlack)
        throw ValidationError("control bound fails: d(f(" +
                              source_->group()->describe(source_->element(i)) + "), f(" +
                              source_->group()->describe(source_->element(j)) + ")) = " +
                              std::to_string(dy) + " > a(" + std::to_string(dx) +
                              ") = " + format(control_(dx)));
    }
}

CoarseMap CoarseMap::tabulate(WindowPtr source, WindowPtr target,
                              const std::function<Element(const Element&)>& f,
                              std::optional<ControlFunction> control) {
  std::vector<Element> images;
  images.reserve(source->size());
  for (const auto& x : source->elements()) images.push_back(target->group()->canonical(f(x)));
  return CoarseMap(std::move(source), std::move(target), std::move(images), std::move(control));
}

CoarseMap CoarseMap::identity(const WindowPtr& window) {
  return CoarseMap(window, window, window->elements(), ControlFunction::affine(1.0, 0.0));
}

ControlFunction fit_affine_control(const Window& source, const Window& target,
                                   const std::vector<int>& image_index) {
  const int n = static_cast<int>(source.size());
  const int top = source.diameter();
  std::vector<int> envelope(static_cast<std::size_t>(top) + 1, -1);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int dx = source.distance(i, j);
      envelope[dx] = std::max(envelope[dx], target.distance(image_index[i], image_index[j]));
    }
  double slope = top > 0 ? static_cast<double>(envelope[top] - envelope[0]) / top : 0.0;
  if (!(slope > 0.0)) slope = 1.0;
  double intercept = 0.0;
  for (int t = 0; t <= top; ++t)
    if (envelope[t] >= 0) intercept = std::max(intercept, envelope[t] - slope * t);
  return ControlFunction::affine(slope, intercept);
}

ClosenessReport verify_coarse_pair(const CoarseMap& f, const CoarseMap& g, double closeness) {
  const auto& G = f.source()->group();
  const auto& H = f.target()->group();
  if (!same_group(g.source()->group(), H) || !same_group(g.target()->group(), G))
    throw ConfigurationError("coarse pair: g must map the target group of f back to its source");
  ClosenessReport out;
  out.closeness = closeness;
  auto round_trip = [](const CoarseMap& a, const CoarseMap& b, const GroupPtr& group) {
    std::int64_t sup = 0;
    for (std::size_t i = 0; i < a.source()->size(); ++i) {
      const auto& y = a.image(static_cast<int>(i));
      const auto j = b.source()->index_of(y);
      if (!j)
        throw MarginError("composition leaves the window at " +
                          group->describe(a.source()->element(static_cast<int>(i))) +
                          ": its image " + b.source()->group()->describe(y) +
                          " is outside the domain of the inverse");
      sup = std::max(sup, group->distance(b.image(*j), a.source()->element(static_cast<int>(i))));
    }
    return sup;
  };
  out.sup_gf = round_trip(f, g, G);
  out.sup_fg = round_trip(g, f, H);
  out.passed = static_cast<double>(out.sup_gf) <= closeness &&
               static_cast<double>(out.sup_fg) <= closeness;
  return out;
}

Measurablization measurablize(const CoarseMap& f, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw RangeError("cell diameter must be finite and >= 0");
  const auto& w = *f.source();
  const int n = static_cast<int>(w.size());
  std::vector<int> basepoint(n, -1);
  std::vector<std::vector<int>> cells;
  for (int i = 0; i < n; ++i) {
    if (basepoint[i] >= 0) continue;
    std::vector<int> cell{i};
    basepoint[i] = i;
    for (int j = i + 1; j < n; ++j) {
      if (basepoint[j] >= 0) continue;
      const bool fits = std::all_of(cell.begin(), cell.end(),
                                    [&](int m) { return w.distance(j, m) <= t; });
      if (fits) {
        cell.push_back(j);
        basepoint[j] = i;
      }
    }
    cells.push_back(std::move(cell));
  }

  std::vector<Element> images(n);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) {
    images[i] = f.image(basepoint[i]);
    idx[i] = f.image_index(basepoint[i]);
  }
  const auto control = f.control().shifted(2.0 * t);
  const auto& tw = *f.target();

  double slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      slack = std::min(slack, f.control()(w.distance(i, j) + 2.0 * t) -
                                  tw.distance(idx[i], idx[j]));
  if (slack < -kControlSlack)
    throw InternalConsistencyError("measurable replacement violates the shifted control bound");
  std::int64_t closeness = 0;
  for (int i = 0; i < n; ++i)
    closeness = std::max<std::int64_t>(closeness, tw.distance(idx[i], f.image_index(i)));
  const double bound = f.control()(2.0 * t);
  if (closeness > bound + kControlSlack)
    throw InternalConsistencyError("measurable replacement moves a point by more than a(2t)");

  return Measurablization{CoarseMap(f.source(), f.target(), std::move(images), control),
                          std::move(cells), std::move(basepoint), t, closeness, bound, slack};
}

// ---------------------------------------------------------------------------

SmoothingKernel::SmoothingKernel(GroupPtr group, std::int64_t radius)
    : group_(std::move(group)), radius_(radius) {
  if (radius_ < 0) throw RangeError("kernel radius must be non-negative");
  ball_size_ = group_->ball_size(radius_);
  if (normalization() < 1.0)
    throw NormalizationError("mu(B(" + std::to_string(radius_) + ")) = " +
                             format(normalization()) +
                             " < 1; choose a larger kernel radius");
}

double SmoothingKernel::normalization() const {
  return group_->measure_weight() * static_cast<double>(ball_size_);
}

double SmoothingKernel::value(const Element& x, const Element& y) const {
  return group_->distance(x, y) <= radius_ ? 1.0 / normalization() : 0.0;
}

Rational SmoothingKernel::mass(const Element& x, const Element& y) const {
  return group_->distance(x, y) <= radius_ ? Rational(1, ball_size_) : Rational(0);
}

Rational SmoothingKernel::row_sum(const Element& x) const {
  Rational sum(0);
  for (const auto& y : group_->ball(x, radius_)) sum += mass(x, y);
  return sum;
}

double SmoothingKernel::tuple_value(const std::vector<Element>& xs,
                                    const std::vector<Element>& ys) const {
  if (xs.size() != ys.size()) throw ConfigurationError("product kernel: tuple lengths differ");
  double v = 1.0;
  for (std::size_t i = 0; i < xs.size() && v != 0.0; ++i) v *= value(xs[i], ys[i]);
  return v;
}

SmoothingKernel kernel(GroupPtr group, std::int64_t radius) {
  return SmoothingKernel(std::move(group), radius);
}

// ---------------------------------------------------------------------------

TransitionKernel::TransitionKernel(WindowPtr rows, WindowPtr columns,
                                   std::vector<std::vector<Entry>> entries,
                                   std::vector<std::uint8_t> complete)
    : rows_(std::move(rows)),
      columns_(std::move(columns)),
      entries_(std::move(entries)),
      complete_(std::move(complete)) {
  if (entries_.size() != rows_->size() || complete_.size() != rows_->size())
    throw ConfigurationError("transition kernel: row count mismatch");
}

Rational TransitionKernel::row_sum(int i) const {
  Rational s(0);
  for (const auto& e : entries_[i]) s += e.mass;
  return s;
}

int TransitionKernel::spread() const {
  if (!same_window(rows_, columns_))
    throw ConfigurationError("kernel spread needs a kernel from a window to itself");
  int out = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!complete_[i]) continue;
    for (const auto& e : entries_[i])
      out = std::max(out, rows_->distance(static_cast<int>(i), e.column));
  }
  return out;
}

TransitionKernel smoothing_transition(const SmoothingKernel& chi, const WindowPtr& window) {
  if (!same_group(chi.group(), window->group()))
    throw ConfigurationError("smoothing kernel and window live on different groups");
  std::vector<int> centre(window->size());
  for (std::size_t i = 0; i < centre.size(); ++i) centre[i] = static_cast<int>(i);
  return ball_transition(window, window, centre, chi);
}

TransitionKernel pullback_transition(const CoarseMap& f, const SmoothingKernel& target_kernel) {
  if (!same_group(target_kernel.group(), f.target()->group()))
    throw ConfigurationError("pullback kernel must live on the target group");
  std::vector<int> centre(f.source()->size());
  for (std::size_t i = 0; i < centre.size(); ++i) centre[i] = f.image_index(static_cast<int>(i));
  return ball_transition(f.source(), f.target(), centre, target_kernel);
}

TransitionKernel compose_kernels(const TransitionKernel& a, const TransitionKernel& b) {
  if (!same_window(a.column_window(), b.row_window()))
    throw ConfigurationError("kernel composition: inner windows differ");
  const std::size_t n = a.row_window()->size();
  std::vector<std::vector<TransitionKernel::Entry>> entries(n);
  std::vector<std::uint8_t> complete(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    std::map<int, Rational> acc;
    bool full = a.complete(static_cast<int>(x));
    for (const auto& e : a.row(static_cast<int>(x))) {
      full = full && b.complete(e.column);
      for (const auto& e2 : b.row(e.column)) acc[e2.column] += e.mass * e2.mass;
    }
    for (const auto& [col, m] : acc)
      if (m.numerator() != 0) entries[x].push_back({col, m});
    complete[x] = full;
  }
  return TransitionKernel(a.row_window(), b.column_window(), std::move(entries),
                          std::move(complete));
}

// ---------------------------------------------------------------------------

SparseOperator tensor_kernel_operator(const TransitionKernel& k, const TupleSpacePtr& domain,
                                      const TupleSpacePtr& codomain, bool extend_by_zero) {
  if (!same_window(k.row_window(), codomain->window()) ||
      !same_window(k.column_window(), domain->window()))
    throw ConfigurationError("kernel operator: windows do not match the tuple spaces");
  if (domain->degree() != codomain->degree())
    throw ConfigurationError("kernel operator: degrees differ");
  const auto rows = to_double_rows(k);
  const std::size_t arity = codomain->arity();
  std::vector<int> slots(arity);
  std::vector<int> tuple(arity);
  std::vector<Triplet> triplets;
  std::vector<std::uint8_t> covered(codomain->size(), 1);
  for (std::size_t r = 0; r < codomain->size(); ++r) {
    const auto x = codomain->tuple(r);
    bool full = true;
    for (std::size_t l = 0; l < arity; ++l) {
      slots[l] = x[l];
      full = full && k.complete(x[l]);
    }
    if (!full && !extend_by_zero) {
      covered[r] = 0;
      continue;
    }
    for_each_product(rows, slots, tuple, [&](double w) {
      const auto c = domain->find(tuple);
      if (!c) throw_missing(*domain, tuple);
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(*c), w);
    });
  }
  SparseMatrix m(static_cast<Eigen::Index>(codomain->size()),
                 static_cast<Eigen::Index>(domain->size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  if (extend_by_zero || std::all_of(covered.begin(), covered.end(), [](auto c) { return c; }))
    covered.clear();
  return SparseOperator(domain, codomain, std::move(m), std::move(covered));
}

SparseOperator pullback(const CoarseMap& f, const SmoothingKernel& target_kernel,
                        const TupleSpacePtr& target_space, const TupleSpacePtr& source_space) {
  return tensor_kernel_operator(pullback_transition(f, target_kernel), target_space, source_space);
}

SparseOperator homotopy_face(const TransitionKernel& k, int i, const TupleSpacePtr& domain,
                             const TupleSpacePtr& codomain) {
  if (!same_window(k.row_window(), k.column_window()) ||
      !same_window(k.row_window(), domain->window()) ||
      !same_window(k.row_window(), codomain->window()))
    throw ConfigurationError("homotopy: kernel and tuple spaces must share one window");
  if (domain->degree() != codomain->degree() + 1)
    throw ConfigurationError("homotopy: domain degree must exceed codomain degree by one");
  const int n = codomain->degree();
  if (i < 0 || i > n)
    throw RangeError("homotopy index " + std::to_string(i) + " outside 0.." + std::to_string(n));
  const auto rows = to_double_rows(k);
  std::vector<int> slots(static_cast<std::size_t>(i) + 1);
  std::vector<int> tuple(static_cast<std::size_t>(n) + 2);
  std::vector<Triplet> triplets;
  std::vector<std::uint8_t> covered(codomain->size(), 1);
  bool all = true;
  for (std::size_t r = 0; r < codomain->size(); ++r) {
    const auto y = codomain->tuple(r);
    bool full = true;
    for (int l = 0; l <= i; ++l) {
      slots[l] = y[l];
      full = full && k.complete(y[l]);
    }
    if (!full) {
      covered[r] = 0;
      all = false;
      continue;
    }
    for (int l = i; l <= n; ++l) tuple[l + 1] = y[l];
    for_each_product(rows, slots, tuple, [&](double w) {
      const auto c = domain->find(tuple);
      if (!c) throw_missing(*domain, tuple);
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(*c), w);
    });
  }
  SparseMatrix m(static_cast<Eigen::Index>(codomain->size()),
                 static_cast<Eigen::Index>(domain->size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  if (all) covered.clear();
  return SparseOperator(domain, codomain, std::move(m), std::move(covered));
}

SparseOperator homotopy_operator(const TransitionKernel& k, const TupleSpacePtr& domain,
                                 const TupleSpacePtr& codomain) {
  SparseOperator h = homotopy_face(k, 0, domain, codomain);
  for (int i = 1; i <= codomain->degree(); ++i)
    h = add(h, homotopy_face(k, i, domain, codomain), i % 2 ? -1.0 : 1.0);
  return h;
}

// ---------------------------------------------------------------------------

CoarseSetup CoarseSetup::reversed() const {
  return CoarseSetup{backward, forward, target_kernel, source_kernel};
}

TransitionKernel homotopy_kernel(const CoarseSetup& setup) {
  check_setup(setup);
  return compose_kernels(pullback_transition(setup.backward, setup.source_kernel),
                         pullback_transition(setup.forward, setup.target_kernel));
}

namespace {

RequiredScales scales_with(const CoarseSetup& s, const TransitionKernel& k, int scale) {
  if (scale < 0) throw RangeError("scale must be non-negative");
  RequiredScales out;
  out.scale = scale;
  out.source_scale =
      floor_scale(s.backward.control()(scale)) + 2 * static_cast<int>(s.source_kernel.radius());
  out.pullback_scale = floor_scale(s.forward.control()(out.source_scale)) +
                       2 * static_cast<int>(s.target_kernel.radius());
  out.spread = k.spread();
  out.homotopy_scale = scale + 2 * out.spread;
  out.cochain_scale = std::max({scale, out.pullback_scale, out.homotopy_scale});
  return out;
}

std::vector<std::uint8_t> both_covered(const SparseOperator& a, const SparseOperator& b) {
  std::vector<std::uint8_t> rows(a.codomain()->size());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = a.row_covered(r) && b.row_covered(r);
  return rows;
}

struct Check {
  SparseOperator lhs;
  SparseOperator rhs;
};

RelationResidual evaluate(const std::string& name, const std::vector<Check>& checks,
                          const std::vector<Cochain>& trials) {
  RelationResidual out;
  out.name = name;
  for (const auto& c : checks) {
    const auto rows = both_covered(c.lhs, c.rhs);
    if (std::none_of(rows.begin(), rows.end(), [](auto v) { return v; })) continue;
    ++out.instances;
    for (const auto& alpha : trials)
      out.max_residual =
          std::max(out.max_residual, max_abs_difference(c.lhs.apply(alpha), c.rhs.apply(alpha), rows));
  }
  return out;
}

}  // namespace

RequiredScales required_scales(const CoarseSetup& setup, int scale) {
  return scales_with(setup, homotopy_kernel(setup), scale);
}

double HomotopyReport::max_relation_residual() const {
  double m = 0.0;
  for (const auto& r : relations) m = std::max(m, r.max_residual);
  return m;
}

bool HomotopyReport::passed(double tolerance) const {
  return interior_rows > 0 && homotopy_residual <= tolerance &&
         max_relation_residual() <= tolerance;
}

HomotopyReport verify_homotopy_identity(const CoarseSetup& setup, int degree, int scale,
                                        int trials, std::uint64_t seed, std::size_t cap) {
  if (degree < 0 || degree > kMaxDegree)
    throw RangeError("homotopy degree must lie in 0.." + std::to_string(kMaxDegree));
  if (trials < 1) throw RangeError("at least one trial is required");
  const auto k = homotopy_kernel(setup);
  HomotopyReport out;
  out.degree = degree;
  out.trials = trials;
  out.scales = scales_with(setup, k, scale);
  const int n = degree;
  const int S = out.scales.cochain_scale;
  const auto& WH = setup.forward.target();
  const auto& WG = setup.forward.source();

  const auto Hn_S = enumerate_tuples(WH, n, S, cap);
  const auto Hn1_S = enumerate_tuples(WH, n + 1, S, cap);
  const auto Hn_R = enumerate_tuples(WH, n, scale, cap);
  const auto Gn = enumerate_tuples(WG, n, out.scales.source_scale, cap);
  TupleSpacePtr Hm1_R;
  if (n > 0) Hm1_R = enumerate_tuples(WH, n - 1, scale, cap);

  const auto f_star = pullback(setup.forward, setup.target_kernel, Hn_S, Gn);
  const auto g_star = pullback(setup.backward, setup.source_kernel, Gn, Hn_R);
  const auto gf = compose(g_star, f_star);
  const auto id = restriction(Hn_S, Hn_R);

  std::vector<SparseOperator> h_top, h_low, face_S, face_R;
  for (int j = 0; j <= n; ++j) h_top.push_back(homotopy_face(k, j, Hn1_S, Hn_R));
  for (int j = 0; j < n; ++j) h_low.push_back(homotopy_face(k, j, Hn_S, Hm1_R));
  for (int i = 0; i <= n + 1; ++i) face_S.push_back(face_operator(Hn_S, Hn1_S, i));
  for (int i = 0; n > 0 && i <= n; ++i) face_R.push_back(face_operator(Hm1_R, Hn_R, i));

  std::vector<Cochain> alphas;
  for (int t = 0; t < trials; ++t)
    alphas.push_back(random_cochain(Hn_S, seed + static_cast<std::uint64_t>(t)));

  auto hd = [&](int j, int i) { return compose(h_top[j], face_S[i]); };
  std::vector<Check> first, last, below, above, telescoping, lit_equal, lit_next;
  first.push_back({hd(0, 0), id});
  last.push_back({hd(n, n + 1), gf});
  for (int j = 1; j <= n; ++j)
    for (int i = 0; i < j; ++i) below.push_back({hd(j, i), compose(face_R[i], h_low[j - 1])});
  for (int j = 0; j < n; ++j)
    for (int i = j + 2; i <= n + 1; ++i)
      above.push_back({hd(j, i), compose(face_R[i - 1], h_low[j])});
  for (int j = 1; j <= n; ++j) {
    telescoping.push_back({hd(j, j), hd(j - 1, j)});
    lit_equal.push_back({hd(j, j), compose(face_R[j], h_low[j - 1])});
  }
  for (int j = 0; j < n; ++j) lit_next.push_back({hd(j, j + 1), compose(face_R[j], h_low[j])});

  out.relations.push_back(evaluate("h_0 d_0 = id", first, alphas));
  out.relations.push_back(evaluate("h_n d_{n+1} = g f", last, alphas));
  out.relations.push_back(evaluate("h_j d_i = d_i h_{j-1}, i < j", below, alphas));
  out.relations.push_back(evaluate("h_j d_i = d_{i-1} h_j, i > j+1", above, alphas));
  out.relations.push_back(evaluate("h_j d_j = h_{j-1} d_j", telescoping, alphas));
  out.boundary_cases.push_back(evaluate("h_j d_j = d_j h_{j-1}", lit_equal, alphas));
  out.boundary_cases.push_back(evaluate("h_j d_{j+1} = d_j h_j", lit_next, alphas));

  SparseOperator lhs = compose(homotopy_operator(k, Hn1_S, Hn_R), coboundary_matrix(Hn_S, Hn1_S));
  if (n > 0)
    lhs = add(lhs, compose(coboundary_matrix(Hm1_R, Hn_R), homotopy_operator(k, Hn_S, Hm1_R)));
  const auto rhs = add(id, gf, -1.0);
  const auto interior = both_covered(lhs, rhs);
  out.total_rows = Hn_R->size();
  out.interior_rows = static_cast<std::size_t>(std::count(interior.begin(), interior.end(), 1));
  if (out.interior_rows == 0)
    throw GeometryError("no fully covered tuples remain at scale " + std::to_string(scale) +
                        " (cochain scale " + std::to_string(S) +
                        "); enlarge the windows");
  for (const auto& alpha : alphas)
    out.homotopy_residual = std::max(
        out.homotopy_residual, max_abs_difference(lhs.apply(alpha), rhs.apply(alpha), interior));
  return out;
}

CochainMapReport verify_cochain_map(const CoarseMap& f, const SmoothingKernel& target_kernel,
                                    int degree, int scale, int trials, std::uint64_t seed,
                                    std::size_t cap) {
  if (degree < 0 || degree > kMaxDegree)
    throw RangeError("degree must lie in 0.." + std::to_string(kMaxDegree));
  CochainMapReport out;
  out.degree = degree;
  out.scale = scale;
  const int S = floor_scale(f.control()(scale)) + 2 * static_cast<int>(target_kernel.radius());
  const auto Gn = enumerate_tuples(f.source(), degree, scale, cap);
  const auto Gn1 = enumerate_tuples(f.source(), degree + 1, scale, cap);
  const auto Hn = enumerate_tuples(f.target(), degree, S, cap);
  const auto Hn1 = enumerate_tuples(f.target(), degree + 1, S, cap);
  const auto lhs = compose(coboundary_matrix(Gn, Gn1), pullback(f, target_kernel, Hn, Gn));
  const auto rhs = compose(pullback(f, target_kernel, Hn1, Gn1), coboundary_matrix(Hn, Hn1));
  const auto rows = both_covered(lhs, rhs);
  out.covered_rows = static_cast<std::size_t>(std::count(rows.begin(), rows.end(), 1));
  for (int t = 0; t < trials; ++t) {
    const auto alpha = random_cochain(Hn, seed + static_cast<std::uint64_t>(t));
    out.max_residual =
        std::max(out.max_residual, max_abs_difference(lhs.apply(alpha), rhs.apply(alpha), rows));
  }
  return out;
}

NormBoundReport verify_norm_bound(const CoarseMap& f, const SmoothingKernel& target_kernel,
                                  int degree, int scale, int trials, std::uint64_t seed,
                                  double slack, std::size_t cap) {
  if (degree < 0 || degree > kMaxDegree + 1)
    throw RangeError("degree must lie in 0.." + std::to_string(kMaxDegree + 1));
  NormBoundReport out;
  out.degree = degree;
  out.scale = scale;
  out.trials = trials;
  const double a = f.control()(scale);
  const int c = static_cast<int>(target_kernel.radius());
  out.control_value = a;
  out.literal_scale = floor_scale(a + c);
  out.support_scale = floor_scale(a) + 2 * c;

  const auto k = pullback_transition(f, target_kernel);
  std::vector<Rational> column(f.target()->size(), Rational(0));
  for (std::size_t x = 0; x < f.source()->size(); ++x)
    for (const auto& e : k.row(static_cast<int>(x))) column[e.column] += e.mass;
  double fiber = 0.0;
  for (const auto& m : column) fiber = std::max(fiber, to_double(m));
  out.fiber_constant =
      fiber * f.source()->group()->measure_weight() / f.target()->group()->measure_weight();
  const double fiber_power = std::pow(out.fiber_constant, degree + 1);

  const auto Hs = enumerate_tuples(f.target(), degree, out.support_scale, cap);
  const auto Gr = enumerate_tuples(f.source(), degree, scale, cap);
  const auto op = tensor_kernel_operator(k, Hs, Gr, true);
  out.max_literal_excess = -std::numeric_limits<double>::infinity();
  out.max_fiber_excess = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const auto alpha = random_cochain(Hs, seed + static_cast<std::uint64_t>(t));
    const double lhs2 = seminorm_squared(op.apply(alpha), scale);
    const double literal = std::sqrt(lhs2) - seminorm(alpha, out.literal_scale);
    out.max_literal_excess = std::max(out.max_literal_excess, literal);
    if (literal > slack) ++out.literal_violations;
    const double bound = fiber_power * seminorm_squared(alpha, out.support_scale);
    const double jensen = lhs2 - bound;
    out.max_fiber_excess = std::max(out.max_fiber_excess, jensen);
    if (jensen > slack * std::max(1.0, bound)) ++out.fiber_violations;
  }
  return out;
}

InducedIdentityReport verify_induced_identity(const CoarseSetup& setup, int degree, int scale,
                                              double harmonic_tolerance, std::size_t cap) {
  check_setup(setup);
  const auto& WH = setup.forward.target();
  const auto& WG = setup.forward.source();
  if (!WH->is_whole_group() || !WG->is_whole_group())
    throw DomainError("the induced map on harmonic spaces needs whole finite groups");
  if (scale < WH->diameter())
    throw DomainError("scale " + std::to_string(scale) + " is below the diameter " +
                      std::to_string(WH->diameter()) + " of the target group");
  const auto lap = laplacian(WH, degree, scale, cap);
  const auto harmonic = harmonic_space(lap, harmonic_tolerance);
  const auto scales = required_scales(setup, scale);
  const auto Hs = enumerate_tuples(WH, degree, std::max(scale, scales.pullback_scale), cap);
  const auto Gn = enumerate_tuples(WG, degree, scales.source_scale, cap);
  const auto f_star = pullback(setup.forward, setup.target_kernel, Hs, Gn);
  const auto g_star = pullback(setup.backward, setup.source_kernel, Gn, lap.space);

  InducedIdentityReport out;
  out.harmonic_count = harmonic.basis.size();
  for (const auto& h : harmonic.basis) {
    const auto image = g_star.apply(f_star.apply(Cochain(Hs, h.values())));
    const Cochain diff(lap.space, h.values() - image.values());
    const auto p = project(harmonic, diff);
    out.max_projection = std::max(out.max_projection, std::sqrt(inner_product(p, p)));
  }
  return out;
}

}  // namespace coarsel2
