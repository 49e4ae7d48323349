#include "coarsel2/cohomology.hpp"

#include <algorithm>
#include <cmath>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

Laplacian laplacian(const WindowPtr& window, int degree, int scale, std::size_t cap) {
  if (degree < 0 || degree > kMaxDegree)
    throw RangeError("Laplacian degree must lie in 0.." + std::to_string(kMaxDegree));
  Laplacian lap;
  lap.degree = degree;
  lap.scale = scale;
  lap.space = enumerate_tuples(window, degree, scale, cap);
  const auto upper = enumerate_tuples(window, degree + 1, scale, cap);
  const auto d_up = coboundary_matrix(lap.space, upper);
  SparseMatrix m = SparseMatrix(adjoint(d_up).matrix() * d_up.matrix());
  if (degree > 0) {
    const auto lower = enumerate_tuples(window, degree - 1, scale, cap);
    const auto d_down = coboundary_matrix(lower, lap.space);
    const SparseMatrix lower_part = d_down.matrix() * adjoint(d_down).matrix();
    m = SparseMatrix(m + lower_part);
  }
  m.prune(0.0);
  m.makeCompressed();
  lap.matrix = std::move(m);
  return lap;
}

HarmonicSpace harmonic_space(const Laplacian& lap, double tolerance, EigenMethod method) {
  if (!(tolerance > 0.0)) throw ValidationError("harmonic tolerance must be positive");
  const std::size_t n = lap.space->size();
  const bool dense = method == EigenMethod::kDense ||
                     (method == EigenMethod::kAuto && n <= kDenseTupleLimit);

  EigenPairs pairs;
  if (dense) {
    pairs = dense_symmetric_eigen(lap.matrix);
  } else {
    IterativeOptions opts;
    opts.threshold = tolerance;
    pairs = smallest_eigenpairs(lap.matrix, opts);
  }

  HarmonicSpace out;
  auto& report = out.report;
  report.tolerance = tolerance;
  report.method = dense ? "dense" : "iterative";
  report.max_residual = pairs.max_residual;
  report.eigenvalues.assign(pairs.values.data(), pairs.values.data() + pairs.values.size());
  const double inv_sqrt_weight = 1.0 / std::sqrt(lap.space->tuple_weight());
  for (Eigen::Index k = 0; k < pairs.values.size(); ++k) {
    if (pairs.values[k] < tolerance) {
      ++report.harmonic_count;
      out.basis.emplace_back(lap.space, pairs.vectors.col(k) * inv_sqrt_weight);
    } else if (!report.spectral_gap) {
      report.spectral_gap = pairs.values[k];
    }
  }
  return out;
}

Cochain project(const HarmonicSpace& harmonic, const Cochain& alpha) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(alpha.size()));
  for (const auto& h : harmonic.basis) acc += inner_product(h, alpha) * h.values();
  return Cochain(alpha.space(), std::move(acc));
}

double vn_dimension_finite(const MetricMeasureGroup& group, std::size_t harmonic_count) {
  if (!group.is_finite())
    throw UnsupportedError(
        "von Neumann dimension is exact only for finite groups; use window_sweep");
  return static_cast<double>(harmonic_count) /
         (group.measure_weight() * static_cast<double>(group.order()));
}

std::size_t operator_rank(const SparseOperator& op, double tolerance) {
  const SparseMatrix gram = adjoint(op).matrix() * op.matrix();
  const auto pairs = dense_symmetric_eigen(gram);
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < pairs.values.size(); ++k)
    if (pairs.values[k] >= tolerance) ++rank;
  return rank;
}

HodgeBookkeeping hodge_bookkeeping(const WindowPtr& window, int degree, int scale,
                                   double tolerance, std::size_t cap) {
  HodgeBookkeeping out;
  const auto lap = laplacian(window, degree, scale, cap);
  out.harmonic_count = harmonic_space(lap, tolerance, EigenMethod::kDense).report.harmonic_count;
  const auto upper = enumerate_tuples(window, degree + 1, scale, cap);
  out.kernel_dimension =
      lap.space->size() - operator_rank(coboundary_matrix(lap.space, upper), tolerance);
  if (degree > 0) {
    const auto lower = enumerate_tuples(window, degree - 1, scale, cap);
    out.lower_rank = operator_rank(coboundary_matrix(lower, lap.space), tolerance);
  }
  out.consistent = out.kernel_dimension == out.harmonic_count + out.lower_rank;
  return out;
}

std::string to_string(SweepVerdict v) {
  switch (v) {
    case SweepVerdict::kVanishingConsistent:
      return "vanishing-consistent";
    case SweepVerdict::kNonVanishingConsistent:
      return "non-vanishing-consistent";
    case SweepVerdict::kInconclusive:
      break;
  }
  return "inconclusive";
}

SweepVerdict classify_sweep(const std::vector<double>& values, const SweepOptions& opts) {
  if (values.empty()) return SweepVerdict::kInconclusive;
  bool non_increasing = true;
  for (std::size_t i = 1; i < values.size(); ++i)
    non_increasing = non_increasing && values[i] <= values[i - 1] + 1e-12;
  const double last = values.back();
  if (non_increasing && last < opts.threshold) return SweepVerdict::kVanishingConsistent;
  const bool all_above = std::all_of(values.begin(), values.end(),
                                     [&](double v) { return v >= opts.threshold; });
  if (all_above) {
    const double prev = values.size() > 1 ? values[values.size() - 2] : last;
    if (std::abs(last - prev) <= opts.stability * std::max(prev, last))
      return SweepVerdict::kNonVanishingConsistent;
  }
  return SweepVerdict::kInconclusive;
}

DimensionEstimate estimate_dimension(const WindowPtr& window, std::int64_t window_radius,
                                     int degree, int scale, const SweepOptions& opts,
                                     const LaplacianBuilder& build) {
  const auto lap = build ? build(window, degree, scale) : laplacian(window, degree, scale, opts.cap);
  const auto harmonic = harmonic_space(lap, opts.tolerance, opts.method);
  DimensionEstimate est;
  est.group = window->group()->fingerprint();
  est.degree = degree;
  est.scale = scale;
  est.window_radius = window_radius;
  est.window_size = window->size();
  est.tuple_count = lap.space->size();
  est.raw_dimension = harmonic.report.harmonic_count;
  est.window_measure = window->measure();
  est.normalized_dimension = static_cast<double>(est.raw_dimension) / est.window_measure;
  return est;
}

SweepResult summarize_sweep(std::vector<DimensionEstimate> estimates,
                            std::vector<std::string> warnings, const SweepOptions& opts) {
  SweepResult out;
  out.estimates = std::move(estimates);
  out.warnings = std::move(warnings);
  std::vector<double> normalized;
  for (const auto& e : out.estimates) normalized.push_back(e.normalized_dimension);
  out.non_increasing = !normalized.empty();
  out.strictly_decreasing = normalized.size() > 1;
  for (std::size_t i = 1; i < normalized.size(); ++i) {
    out.non_increasing = out.non_increasing && normalized[i] <= normalized[i - 1] + 1e-12;
    out.strictly_decreasing = out.strictly_decreasing && normalized[i] < normalized[i - 1];
  }
  out.verdict = classify_sweep(normalized, opts);
  return out;
}

SweepResult window_sweep(const GroupPtr& group, int degree, int scale,
                         const std::vector<std::int64_t>& radii, const SweepOptions& opts,
                         const LaplacianBuilder& build) {
  std::vector<DimensionEstimate> estimates;
  std::vector<std::string> warnings;
  for (auto radius : radii) {
    try {
      estimates.push_back(
          estimate_dimension(Window::ball(group, radius), radius, degree, scale, opts, build));
    } catch (const CapError& e) {
      warnings.push_back("window radius " + std::to_string(radius) +
                         " skipped, sweep truncated: " + e.what());
      break;
    }
  }
  return summarize_sweep(std::move(estimates), std::move(warnings), opts);
}

}  // namespace coarsel2
