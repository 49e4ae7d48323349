#include "coarsel2/window.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

// ---------------------------------------------------------------------------
// Window

Window::Window(GroupPtr group, std::vector<Element> elements, std::string label)
    : group_(std::move(group)), elements_(std::move(elements)), label_(std::move(label)) {
  for (auto& e : elements_) group_->check(e);
  std::sort(elements_.begin(), elements_.end());
  elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
  if (elements_.size() > kMaxWindowSize)
    throw CapError("window of " + std::to_string(elements_.size()) +
                       " elements exceeds the window cap " +
                       std::to_string(kMaxWindowSize),
                   static_cast<double>(elements_.size()));
  const auto id = index_of(group_->identity());
  if (!id) throw ValidationError("window must contain the identity");
  identity_index_ = *id;

  const std::size_t n = elements_.size();
  distances_.assign(n * n, 0);
  std::vector<Element> inverses;
  inverses.reserve(n);
  for (const auto& e : elements_) inverses.push_back(group_->inverse(e));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto d = group_->word_length(group_->multiply(inverses[i], elements_[j]));
      distances_[i * n + j] = distances_[j * n + i] = static_cast<int>(d);
      diameter_ = std::max(diameter_, static_cast<int>(d));
    }
  }
  whole_group_ = group_->is_finite() &&
                 static_cast<std::int64_t>(n) == group_->order();
}

std::shared_ptr<const Window> Window::ball(GroupPtr group, std::int64_t radius) {
  auto elements = group->ball(group->identity(), radius);
  return std::shared_ptr<const Window>(
      new Window(std::move(group), std::move(elements),
                 "ball(" + std::to_string(radius) + ")"));
}

std::shared_ptr<const Window> Window::whole(GroupPtr group) {
  auto elements = group->elements();
  return std::shared_ptr<const Window>(
      new Window(std::move(group), std::move(elements), "whole"));
}

std::shared_ptr<const Window> Window::box(GroupPtr group, std::int64_t lo,
                                          std::int64_t hi) {
  if (lo > 0 || hi < 0) throw ValidationError("box window must contain the origin");
  const std::size_t d = group->arity();
  const double count = std::pow(static_cast<double>(hi - lo + 1), static_cast<double>(d));
  if (count > static_cast<double>(kMaxWindowSize))
    throw CapError("box window too large", count);
  std::vector<Element> elements;
  std::vector<std::int64_t> c(d, lo);
  for (;;) {
    elements.emplace_back(c);
    std::size_t i = d;
    while (i > 0 && c[i - 1] == hi) c[--i] = lo;
    if (i == 0) break;
    ++c[i - 1];
  }
  return std::shared_ptr<const Window>(
      new Window(std::move(group), std::move(elements),
                 "box(" + std::to_string(lo) + "," + std::to_string(hi) + ")"));
}

std::shared_ptr<const Window> Window::from_elements(GroupPtr group,
                                                    std::vector<Element> elements,
                                                    std::string label) {
  return std::shared_ptr<const Window>(
      new Window(std::move(group), std::move(elements), std::move(label)));
}

std::optional<int> Window::index_of(const Element& e) const {
  auto it = std::lower_bound(elements_.begin(), elements_.end(), e);
  if (it == elements_.end() || *it != e) return std::nullopt;
  return static_cast<int>(it - elements_.begin());
}

double Window::measure() const {
  return group_->measure_weight() * static_cast<double>(elements_.size());
}

std::string Window::fingerprint() const {
  std::string fp = group_->fingerprint() + "|window=" + label_ + "[";
  if (label_ == "explicit")
    for (const auto& e : elements_) fp += to_string(e) + " ";
  return fp + std::to_string(elements_.size()) + "]";
}

// ---------------------------------------------------------------------------
// TupleSpace

namespace {

void check_degree(int degree) {
  if (degree < 0 || degree > kMaxDegree + 1)
    throw RangeError("tuple degree " + std::to_string(degree) +
                     " outside supported range 0.." +
                     std::to_string(kMaxDegree + 1));
}

std::vector<std::vector<int>> neighbour_lists(const Window& w, int scale) {
  const int n = static_cast<int>(w.size());
  std::vector<std::vector<int>> nb(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (w.distance(i, j) <= scale) nb[i].push_back(j);
  return nb;
}

// Depth-first enumeration in lexicographic order. `visit` sees each tuple.
void for_each_tuple(const Window& w, int degree, int scale,
                    const std::function<void(const std::vector<int>&)>& visit) {
  const auto nb = neighbour_lists(w, scale);
  const int n = static_cast<int>(w.size());
  std::vector<int> t(static_cast<std::size_t>(degree) + 1);
  std::function<void(int)> extend = [&](int pos) {
    if (pos > degree) {
      visit(t);
      return;
    }
    for (int cand : nb[t[0]]) {
      bool ok = true;
      for (int k = 1; k < pos && ok; ++k) ok = w.distance(t[k], cand) <= scale;
      if (!ok) continue;
      t[pos] = cand;
      extend(pos + 1);
    }
  };
  for (int g = 0; g < n; ++g) {
    t[0] = g;
    extend(1);
  }
}

}  // namespace

TupleSpace::TupleSpace(WindowPtr window, int degree, int scale)
    : window_(std::move(window)),
      degree_(degree),
      scale_(scale),
      tuple_weight_(std::pow(window_->group()->measure_weight(), degree + 1)) {}

std::uint64_t TupleSpace::key(std::span<const int> t) const {
  std::uint64_t k = 0;
  const auto base = static_cast<std::uint64_t>(window_->size());
  for (int x : t) k = k * base + static_cast<std::uint64_t>(x);
  return k;
}

std::optional<std::size_t> TupleSpace::find(std::span<const int> t) const {
  if (t.size() != arity()) return std::nullopt;
  for (int x : t)
    if (x < 0 || static_cast<std::size_t>(x) >= window_->size()) return std::nullopt;
  const auto k = key(t);
  auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
  if (it == keys_.end() || *it != k) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

bool TupleSpace::contains_elements(std::span<const int> t) const {
  return std::all_of(t.begin(), t.end(), [&](int x) {
    return x >= 0 && static_cast<std::size_t>(x) < window_->size();
  });
}

int TupleSpace::max_pairwise_distance(std::span<const int> t) const {
  int m = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = i + 1; j < t.size(); ++j)
      m = std::max(m, window_->distance(t[i], t[j]));
  return m;
}

std::string TupleSpace::fingerprint() const {
  return window_->fingerprint() + "|n=" + std::to_string(degree_) +
         "|R=" + std::to_string(scale_);
}

std::size_t count_tuples(const WindowPtr& window, int degree, int scale) {
  check_degree(degree);
  if (scale < 0) throw RangeError("scale must be non-negative");
  std::size_t count = 0;
  for_each_tuple(*window, degree, scale, [&](const std::vector<int>&) { ++count; });
  return count;
}

TupleSpacePtr enumerate_tuples(const WindowPtr& window, int degree, int scale,
                               std::size_t cap) {
  check_degree(degree);
  if (scale < 0) throw RangeError("scale must be non-negative");

  // Upper estimate sum_g |N_R(g)|^n; exact count only when the estimate is
  // over the cap.
  const auto nb = neighbour_lists(*window, scale);
  double estimate = 0.0;
  for (const auto& list : nb)
    estimate += std::pow(static_cast<double>(list.size()), degree);
  if (estimate > static_cast<double>(cap)) {
    const auto exact = count_tuples(window, degree, scale);
    if (exact > cap)
      throw CapError("tuple space (n=" + std::to_string(degree) +
                         ", R=" + std::to_string(scale) + ") has " +
                         std::to_string(exact) + " tuples, cap is " +
                         std::to_string(cap),
                     static_cast<double>(exact));
  }

  auto space = std::shared_ptr<TupleSpace>(new TupleSpace(window, degree, scale));
  for_each_tuple(*window, degree, scale, [&](const std::vector<int>& t) {
    space->entries_.insert(space->entries_.end(), t.begin(), t.end());
    space->keys_.push_back(space->key(t));
  });
  return space;
}

}  // namespace coarsel2
