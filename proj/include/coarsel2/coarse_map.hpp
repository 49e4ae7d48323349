#pragma once

#include <boost/rational.hpp>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coarsel2/cochain.hpp"
#include "coarsel2/cohomology.hpp"

namespace coarsel2 {

using Rational = boost::rational<std::int64_t>;

// Non-decreasing piecewise-linear a: [0, inf) -> [0, inf), extended past the
// last breakpoint with the last slope, which must be positive.
class ControlFunction {
 public:
  explicit ControlFunction(std::vector<std::pair<double, double>> breakpoints);
  static ControlFunction affine(double slope, double intercept);

  double operator()(double t) const;
  // t -> a(t + s)
  ControlFunction shifted(double s) const;
  const std::vector<std::pair<double, double>>& breakpoints() const { return points_; }
  double final_slope() const;

 private:
  std::vector<std::pair<double, double>> points_;
};

// Tabulated coarse Lipschitz map between windows. Construction checks that
// every image lies in the target window and that
// d(f(x), f(x')) <= a(d(x, x')) on all pairs.
class CoarseMap {
 public:
  CoarseMap(WindowPtr source, WindowPtr target, std::vector<Element> images,
            std::optional<ControlFunction> control = std::nullopt);

  static CoarseMap tabulate(WindowPtr source, WindowPtr target,
                            const std::function<Element(const Element&)>& f,
                            std::optional<ControlFunction> control = std::nullopt);
  static CoarseMap identity(const WindowPtr& window);

  const WindowPtr& source() const { return source_; }
  const WindowPtr& target() const { return target_; }
  const Element& image(int source_index) const { return images_[source_index]; }
  int image_index(int source_index) const { return image_index_[source_index]; }
  const ControlFunction& control() const { return control_; }

 private:
  WindowPtr source_;
  WindowPtr target_;
  std::vector<Element> images_;
  std::vector<int> image_index_;
  ControlFunction control_;
};

// Affine control fitted to the tabulated map: slope from the envelope of
// image distances across the window, intercept the smallest value that makes
// the bound hold on every pair. Slope falls back to 1 for bounded maps.
ControlFunction fit_affine_control(const Window& source, const Window& target,
                                   const std::vector<int>& image_index);

struct ClosenessReport {
  std::int64_t sup_gf = 0;  // sup_x d(g f x, x)
  std::int64_t sup_fg = 0;  // sup_y d(f g y, y)
  double closeness = std::numeric_limits<double>::infinity();
  bool passed = false;
};

ClosenessReport verify_coarse_pair(const CoarseMap& f, const CoarseMap& g,
                                   double closeness = std::numeric_limits<double>::infinity());

struct Measurablization {
  CoarseMap map;                       // piecewise constant f~
  std::vector<std::vector<int>> cells;  // source window indices
  std::vector<int> basepoint;           // per source index
  double cell_diameter = 0.0;
  std::int64_t max_closeness = 0;  // max d(f~(x), f(x))
  double closeness_bound = 0.0;    // a(2t)
  double min_pair_slack = 0.0;     // min a(d(x,x') + 2t) - d(f~x, f~x')
};

// Greedy partition into cells of diameter <= t in canonical order; the cell
// basepoint is its least element. Verifies both inequalities of the
// measurable replacement and throws InternalConsistencyError if either fails.
Measurablization measurablize(const CoarseMap& f, double t);

// chi(x, y) = 1_{B_x(c)}(y) / mu(B(c)).
class SmoothingKernel {
 public:
  SmoothingKernel(GroupPtr group, std::int64_t radius);

  const GroupPtr& group() const { return group_; }
  std::int64_t radius() const { return radius_; }
  std::int64_t ball_size() const { return ball_size_; }
  // mu(B(c)) = c_weight * |B(c)|
  double normalization() const;

  double value(const Element& x, const Element& y) const;
  // chi(x, y) mu({y}) = [d(x,y) <= c] / |B(c)|, exactly.
  Rational mass(const Element& x, const Element& y) const;
  // sum_y chi(x, y) mu({y}) over B_x(c), in exact arithmetic.
  Rational row_sum(const Element& x) const;
  double tuple_value(const std::vector<Element>& xs, const std::vector<Element>& ys) const;

 private:
  GroupPtr group_;
  std::int64_t radius_;
  std::int64_t ball_size_;
};

SmoothingKernel kernel(GroupPtr group, std::int64_t radius);

// Row-stochastic kernel between two windows with exact masses. A row is
// complete when its full support lies in the column window.
class TransitionKernel {
 public:
  struct Entry {
    int column;
    Rational mass;
  };

  TransitionKernel(WindowPtr rows, WindowPtr columns,
                   std::vector<std::vector<Entry>> entries,
                   std::vector<std::uint8_t> complete);

  const WindowPtr& row_window() const { return rows_; }
  const WindowPtr& column_window() const { return columns_; }
  const std::vector<Entry>& row(int i) const { return entries_[i]; }
  bool complete(int i) const { return complete_[i] != 0; }
  Rational row_sum(int i) const;
  // Largest d(x, y) over complete rows x and y in their support, for kernels
  // from a window to itself.
  int spread() const;

 private:
  WindowPtr rows_;
  WindowPtr columns_;
  std::vector<std::vector<Entry>> entries_;
  std::vector<std::uint8_t> complete_;
};

// chi restricted to a window.
TransitionKernel smoothing_transition(const SmoothingKernel& chi, const WindowPtr& window);
// x -> chi'(f(x), .): the one-variable kernel of the pullback f^*.
TransitionKernel pullback_transition(const CoarseMap& f, const SmoothingKernel& target_kernel);
// (a b)(x, z) = sum_y a(x, y) b(y, z)
TransitionKernel compose_kernels(const TransitionKernel& a, const TransitionKernel& b);

// (K alpha)(x_0..x_n) = sum_y alpha(y_0..y_n) prod_i K(x_i, y_i). Rows whose
// kernel rows are incomplete are uncovered, unless `extend_by_zero`, which
// assembles them as if alpha vanished outside the window. A row needing a
// tuple absent from `domain` throws CoverageError.
SparseOperator tensor_kernel_operator(const TransitionKernel& k, const TupleSpacePtr& domain,
                                      const TupleSpacePtr& codomain,
                                      bool extend_by_zero = false);

// Pullback f^*: cochains on the target tuple space -> cochains on the source.
SparseOperator pullback(const CoarseMap& f, const SmoothingKernel& target_kernel,
                        const TupleSpacePtr& target_space, const TupleSpacePtr& source_space);

// h_i alpha(y_0..y_n) = sum alpha(y~_0..y~_i, y_i..y_n) prod_{l<=i} K(y_l, y~_l),
// mapping degree n+1 cochains on `domain` to degree n cochains on `codomain`.
SparseOperator homotopy_face(const TransitionKernel& k, int i, const TupleSpacePtr& domain,
                             const TupleSpacePtr& codomain);
// sum_i (-1)^i h_i
SparseOperator homotopy_operator(const TransitionKernel& k, const TupleSpacePtr& domain,
                                 const TupleSpacePtr& codomain);

// f: G -> H, g: H -> G with kernels chi on G (radius c) and chi' on H
// (radius c'). The homotopy acts on cochains of H and certifies
// id - g^* f^* = h d + d h.
struct CoarseSetup {
  CoarseMap forward;
  CoarseMap backward;
  SmoothingKernel source_kernel;
  SmoothingKernel target_kernel;

  // Roles of G and H swapped: certifies id - f^* g^* on cochains of G.
  CoarseSetup reversed() const;
};

// Kernel of g^* f^* on the window of H.
TransitionKernel homotopy_kernel(const CoarseSetup& setup);

struct RequiredScales {
  int scale = 0;              // R
  int source_scale = 0;       // floor(a_g(R)) + 2c, domain of g^*
  int pullback_scale = 0;     // floor(a_f(source_scale)) + 2c'
  int spread = 0;             // rho, support radius of the homotopy kernel
  int homotopy_scale = 0;     // R + 2 rho
  int cochain_scale = 0;      // max of the above; scale of the test cochains
};

RequiredScales required_scales(const CoarseSetup& setup, int scale);

struct RelationResidual {
  std::string name;
  double max_residual = 0.0;
  std::size_t instances = 0;  // (i, j) index pairs covered
};

struct HomotopyReport {
  int degree = 0;
  RequiredScales scales;
  std::size_t total_rows = 0;
  std::size_t interior_rows = 0;
  int trials = 0;
  std::vector<RelationResidual> relations;
  double homotopy_residual = 0.0;
  // Boundary index cases (i = j, i = j + 1) excluded from the exchange
  // relations; recorded for inspection, never part of the pass criterion.
  std::vector<RelationResidual> boundary_cases;

  double max_relation_residual() const;
  bool passed(double tolerance) const;
};

HomotopyReport verify_homotopy_identity(const CoarseSetup& setup, int degree, int scale,
                                        int trials, std::uint64_t seed,
                                        std::size_t cap = kDefaultTupleCap);

struct CochainMapReport {
  int degree = 0;
  int scale = 0;
  double max_residual = 0.0;  // |d f^* alpha - f^* d alpha| on covered rows
  std::size_t covered_rows = 0;
};

CochainMapReport verify_cochain_map(const CoarseMap& f, const SmoothingKernel& target_kernel,
                                    int degree, int scale, int trials, std::uint64_t seed,
                                    std::size_t cap = kDefaultTupleCap);

struct NormBoundReport {
  int degree = 0;
  int scale = 0;
  double control_value = 0.0;  // a(R)
  int literal_scale = 0;       // floor(a(R) + c')
  int support_scale = 0;       // floor(a(R)) + 2c'
  int trials = 0;
  // max over trials of ||f^* alpha||_R - ||alpha||_{a(R)+c'}
  double max_literal_excess = 0.0;
  std::size_t literal_violations = 0;
  // Jensen bound ||f^* alpha||_R^2 <= Phi^{n+1} ||alpha||_{support}^2 with
  // Phi the largest fibre mass of the pullback kernel.
  double fiber_constant = 0.0;
  double max_fiber_excess = 0.0;
  std::size_t fiber_violations = 0;
};

NormBoundReport verify_norm_bound(const CoarseMap& f, const SmoothingKernel& target_kernel,
                                  int degree, int scale, int trials, std::uint64_t seed,
                                  double slack = 1e-12, std::size_t cap = kDefaultTupleCap);

// For a finite target group on its whole window at scale >= diameter: the
// largest norm of the harmonic projection of (id - g^* f^*) h over an
// orthonormal harmonic basis.
struct InducedIdentityReport {
  std::size_t harmonic_count = 0;
  double max_projection = 0.0;
};
InducedIdentityReport verify_induced_identity(const CoarseSetup& setup, int degree, int scale,
                                              double harmonic_tolerance = 1e-8,
                                              std::size_t cap = kDefaultTupleCap);

}  // namespace coarsel2
