#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "coarsel2/cochain.hpp"

namespace coarsel2 {

struct EigenPairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // Euclidean-orthonormal columns
  // Dense solves return the full spectrum; iterative solves only the leading
  // part up to and including the first eigenvalue at or above the threshold.
  bool full_spectrum = true;
  double max_residual = 0.0;
  int iterations = 0;
};

EigenPairs dense_symmetric_eigen(const SparseMatrix& a);

struct IterativeOptions {
  double threshold = 1e-8;
  int initial_block = 8;
  int max_iterations = 300;
  // Residual tolerance relative to max(1, max |a_ii|).
  double tolerance = 1e-10;
  std::uint64_t seed = 0x5eed;
};

// Smallest eigenpairs of a symmetric positive semi-definite sparse matrix by
// shift-invert block subspace iteration with Rayleigh-Ritz. Returns every
// eigenpair below `threshold` plus the first one above it when it exists,
// growing the block until the spectrum crosses the threshold. Throws
// NumericalError when the Ritz residuals do not converge.
EigenPairs smallest_eigenpairs(const SparseMatrix& a, const IterativeOptions& opts);

}  // namespace coarsel2
