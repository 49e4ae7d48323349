#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "coarsel2/bridge.hpp"
#include "coarsel2/cochain.hpp"
#include "coarsel2/group.hpp"
#include "coarsel2/window.hpp"

namespace coarsel2::testing {

// SplitMix64. Small, seedable, and independent of the library's generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }
  Eigen::VectorXd vector(std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = real();
    return v;
  }

 private:
  std::uint64_t state_;
};

inline Element random_element(Rng& rng, const MetricMeasureGroup& g, std::int64_t spread = 6) {
  if (g.is_finite()) {
    const auto all = g.elements();
    return all[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(all.size()) - 1))];
  }
  std::vector<std::int64_t> c(g.arity());
  for (auto& x : c) x = rng.uniform(-spread, spread);
  return g.canonical(Element(c));
}

// Breadth-first search over the generators from g until h is reached.
inline std::int64_t bfs_distance(const MetricMeasureGroup& group, const Element& g, const Element& h) {
  std::map<Element, std::int64_t> seen{{g, 0}};
  std::deque<Element> queue{g};
  while (!queue.empty()) {
    const Element x = queue.front();
    queue.pop_front();
    if (x == h) return seen[x];
    for (const auto& s : group.generators()) {
      const Element y = group.multiply(x, s);
      if (seen.emplace(y, seen[x] + 1).second) queue.push_back(y);
    }
  }
  return -1;
}

// Every tuple of W^{n+1}, filtered by the pairwise distance predicate.
inline std::vector<std::vector<int>> brute_tuples(const Window& w, int n, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(static_cast<std::size_t>(n) + 1, 0);
  const int size = static_cast<int>(w.size());
  while (true) {
    bool ok = true;
    for (std::size_t i = 0; i < t.size() && ok; ++i)
      for (std::size_t j = i + 1; j < t.size() && ok; ++j)
        ok = w.group()->distance(w.element(t[i]), w.element(t[j])) <= r;
    if (ok) out.push_back(t);
    int l = n;
    while (l >= 0 && ++t[static_cast<std::size_t>(l)] == size) t[static_cast<std::size_t>(l--)] = 0;
    if (l < 0) break;
  }
  return out;
}

// Lookup from tuple to position, built without TupleSpace::find.
inline std::map<std::vector<int>, std::size_t> tuple_index(const TupleSpace& s) {
  std::map<std::vector<int>, std::size_t> m;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto t = s.tuple(i);
    m[std::vector<int>(t.begin(), t.end())] = i;
  }
  return m;
}

// Dense coboundary from the alternating face sum.
inline Eigen::MatrixXd dense_coboundary(const TupleSpace& lo, const TupleSpace& hi) {
  const auto idx = tuple_index(lo);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hi.size()),
                                            static_cast<Eigen::Index>(lo.size()));
  for (std::size_t r = 0; r < hi.size(); ++r) {
    const auto t = hi.tuple(r);
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::vector<int> face;
      for (std::size_t k = 0; k < t.size(); ++k)
        if (k != i) face.push_back(t[k]);
      d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(idx.at(face))) += (i % 2 ? -1.0 : 1.0);
    }
  }
  return d;
}

inline Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

// b(x_0..x_n, x) = phi(x^{-1} x_0, ..., x^{-1} x_n), assembled directly
// from the group law.
inline ValuedCochain invariant_from(const Cochain& phi) {
  const auto& w = *phi.space()->window();
  const auto g = w.group();
  const int n = phi.space()->degree();
  const std::size_t k = w.size();
  auto b = ValuedCochain::zero(g, n);
  Eigen::VectorXd v = b.values();
  std::vector<int> xs(static_cast<std::size_t>(n) + 1), moved(xs.size());
  std::size_t total = 1;
  for (int i = 0; i <= n; ++i) total *= k;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (int i = n; i >= 0; --i) {
      xs[static_cast<std::size_t>(i)] = static_cast<int>(rest % k);
      rest /= k;
    }
    for (std::size_t x = 0; x < k; ++x) {
      const Element xinv = g->inverse(w.element(static_cast<int>(x)));
      for (std::size_t i = 0; i < xs.size(); ++i)
        moved[i] = *w.index_of(g->multiply(xinv, w.element(xs[i])));
      v[static_cast<Eigen::Index>(b.index(xs, static_cast<int>(x)))] = phi[*phi.space()->find(moved)];
    }
  }
  return ValuedCochain(g, n, v);
}

}  // namespace coarsel2::testing
