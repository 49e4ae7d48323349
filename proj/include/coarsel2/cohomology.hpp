#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coarsel2/cochain.hpp"
#include "coarsel2/eigensolver.hpp"

namespace coarsel2 {

// Delta^n = d^{n-1} (d^{n-1})^* + (d^n)^* d^n on the degree-n tuple space
// (degree 0 keeps only the second summand). Harmonic cochains, its kernel,
// represent reduced cohomology at scale R.
struct Laplacian {
  int degree = 0;
  int scale = 0;
  TupleSpacePtr space;
  SparseMatrix matrix;
};

Laplacian laplacian(const WindowPtr& window, int degree, int scale,
                    std::size_t cap = kDefaultTupleCap);

enum class EigenMethod { kAuto, kDense, kIterative };
inline constexpr std::size_t kDenseTupleLimit = 2000;
inline constexpr double kDefaultHarmonicTolerance = 1e-8;

struct SpectralReport {
  std::vector<double> eigenvalues;  // ascending; leading part for iterative
  std::size_t harmonic_count = 0;
  std::optional<double> spectral_gap;  // smallest eigenvalue >= tolerance
  double tolerance = kDefaultHarmonicTolerance;
  std::string method;
  double max_residual = 0.0;
};

struct HarmonicSpace {
  SpectralReport report;
  // Orthonormal in the weighted inner product.
  std::vector<Cochain> basis;
};

HarmonicSpace harmonic_space(const Laplacian& lap,
                             double tolerance = kDefaultHarmonicTolerance,
                             EigenMethod method = EigenMethod::kAuto);

// Orthogonal projection onto the harmonic space.
Cochain project(const HarmonicSpace& harmonic, const Cochain& alpha);

// harmonic_count / (c |G|): the trace of the harmonic projection normalized
// by the group von Neumann trace with Haar weight c. Finite groups only.
double vn_dimension_finite(const MetricMeasureGroup& group, std::size_t harmonic_count);

// Rank of a coboundary via the spectrum of d^* d.
std::size_t operator_rank(const SparseOperator& op, double tolerance = kDefaultHarmonicTolerance);

// dim ker d^n = harmonic count + rank d^{n-1}.
struct HodgeBookkeeping {
  std::size_t kernel_dimension = 0;
  std::size_t harmonic_count = 0;
  std::size_t lower_rank = 0;
  bool consistent = false;
};
HodgeBookkeeping hodge_bookkeeping(const WindowPtr& window, int degree, int scale,
                                   double tolerance = kDefaultHarmonicTolerance,
                                   std::size_t cap = kDefaultTupleCap);

struct DimensionEstimate {
  std::string group;
  int degree = 0;
  int scale = 0;
  std::int64_t window_radius = 0;
  std::size_t window_size = 0;
  std::size_t tuple_count = 0;
  std::size_t raw_dimension = 0;
  double window_measure = 0.0;
  double normalized_dimension = 0.0;
};

enum class SweepVerdict { kVanishingConsistent, kNonVanishingConsistent, kInconclusive };
std::string to_string(SweepVerdict v);

struct SweepOptions {
  double tolerance = kDefaultHarmonicTolerance;
  // Normalized dimensions below this count as vanishing.
  double threshold = 0.05;
  // Relative change between the last two windows that still counts as stable.
  double stability = 0.1;
  std::size_t cap = kDefaultTupleCap;
  EigenMethod method = EigenMethod::kAuto;
};

struct SweepResult {
  std::vector<DimensionEstimate> estimates;
  SweepVerdict verdict = SweepVerdict::kInconclusive;
  bool non_increasing = false;
  bool strictly_decreasing = false;
  std::vector<std::string> warnings;
};

using LaplacianBuilder = std::function<Laplacian(const WindowPtr&, int, int)>;

// Harmonic dimension on one window, normalized by mu(W).
DimensionEstimate estimate_dimension(const WindowPtr& window, std::int64_t window_radius,
                                     int degree, int scale, const SweepOptions& opts = {},
                                     const LaplacianBuilder& build = {});

// Trend diagnostics and verdict for estimates in increasing window order.
SweepResult summarize_sweep(std::vector<DimensionEstimate> estimates,
                            std::vector<std::string> warnings, const SweepOptions& opts);

// Normalized harmonic dimension on ball windows B(L) for each L in `radii`.
// A window that hits the tuple cap ends the sweep with a warning.
SweepResult window_sweep(const GroupPtr& group, int degree, int scale,
                         const std::vector<std::int64_t>& radii,
                         const SweepOptions& opts = {},
                         const LaplacianBuilder& build = {});

SweepVerdict classify_sweep(const std::vector<double>& normalized, const SweepOptions& opts);

}  // namespace coarsel2
