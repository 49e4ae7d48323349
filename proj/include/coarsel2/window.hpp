#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coarsel2/group.hpp"

namespace coarsel2 {

inline constexpr std::size_t kDefaultTupleCap = 5'000'000;
inline constexpr int kMaxDegree = 3;
inline constexpr std::size_t kMaxWindowSize = 4096;

// Finite set of group elements W containing the identity, with its pairwise
// distance matrix. Elements are held in canonical order and addressed by
// their position ("window index") everywhere downstream.
class Window {
 public:
  static std::shared_ptr<const Window> ball(GroupPtr group, std::int64_t radius);
  static std::shared_ptr<const Window> whole(GroupPtr group);
  // Coordinate box [lo, hi]^d in a lattice (or product of lattices).
  static std::shared_ptr<const Window> box(GroupPtr group, std::int64_t lo,
                                           std::int64_t hi);
  static std::shared_ptr<const Window> from_elements(GroupPtr group,
                                                     std::vector<Element> elements,
                                                     std::string label = "explicit");

  const GroupPtr& group() const { return group_; }
  std::size_t size() const { return elements_.size(); }
  const std::vector<Element>& elements() const { return elements_; }
  const Element& element(int i) const { return elements_[i]; }
  std::optional<int> index_of(const Element& e) const;
  int identity_index() const { return identity_index_; }

  int distance(int i, int j) const { return distances_[i * size() + j]; }
  int diameter() const { return diameter_; }
  // mu(W) = c * |W|.
  double measure() const;
  bool is_whole_group() const { return whole_group_; }

  const std::string& label() const { return label_; }
  std::string fingerprint() const;

 private:
  Window(GroupPtr group, std::vector<Element> elements, std::string label);

  GroupPtr group_;
  std::vector<Element> elements_;
  std::vector<int> distances_;
  int identity_index_ = -1;
  int diameter_ = 0;
  bool whole_group_ = false;
  std::string label_;
};

using WindowPtr = std::shared_ptr<const Window>;

// All tuples (g_0, ..., g_n) in W^{n+1} with d(g_i, g_j) <= R, enumerated in
// lexicographic order of window indices. Each tuple carries measure c^{n+1}.
class TupleSpace {
 public:
  const WindowPtr& window() const { return window_; }
  int degree() const { return degree_; }
  int scale() const { return scale_; }
  std::size_t arity() const { return static_cast<std::size_t>(degree_) + 1; }
  std::size_t size() const { return keys_.size(); }

  std::span<const int> tuple(std::size_t i) const {
    return {entries_.data() + i * arity(), arity()};
  }
  std::optional<std::size_t> find(std::span<const int> t) const;
  bool contains_elements(std::span<const int> t) const;

  // c^{n+1}
  double tuple_weight() const { return tuple_weight_; }
  int max_pairwise_distance(std::span<const int> t) const;

  // True when every tuple of W^{n+1} is indexed (scale >= window diameter).
  bool is_complete() const { return scale_ >= window_->diameter(); }

  std::string fingerprint() const;

 private:
  friend std::shared_ptr<const TupleSpace> enumerate_tuples(const WindowPtr&, int,
                                                            int, std::size_t);
  TupleSpace(WindowPtr window, int degree, int scale);
  std::uint64_t key(std::span<const int> t) const;

  WindowPtr window_;
  int degree_;
  int scale_;
  double tuple_weight_;
  std::vector<int> entries_;
  std::vector<std::uint64_t> keys_;
};

using TupleSpacePtr = std::shared_ptr<const TupleSpace>;

// Enumerates G_R^{n+1} intersected with W^{n+1}. Refuses with CapError when
// the tuple count exceeds `cap`, reporting the count or its upper estimate.
TupleSpacePtr enumerate_tuples(const WindowPtr& window, int degree, int scale,
                               std::size_t cap = kDefaultTupleCap);

// Count only, no storage. Exact.
std::size_t count_tuples(const WindowPtr& window, int degree, int scale);

}  // namespace coarsel2
