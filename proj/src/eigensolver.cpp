#include "coarsel2/eigensolver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "coarsel2/errors.hpp"

namespace coarsel2 {

namespace {

double diagonal_scale(const SparseMatrix& a) {
  double m = 1.0;
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      if (it.row() == it.col()) m = std::max(m, std::abs(it.value()));
  return m;
}

Eigen::MatrixXd random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      x(i, j) = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
  return x;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

EigenPairs dense_symmetric_eigen(const SparseMatrix& a) {
  EigenPairs out;
  if (a.rows() == 0) return out;
  const Eigen::MatrixXd dense(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  if (es.info() != Eigen::Success)
    throw NumericalError("dense eigensolver failed", std::numeric_limits<double>::quiet_NaN());
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  out.full_spectrum = true;
  const Eigen::MatrixXd residual = dense * out.vectors - out.vectors * out.values.asDiagonal();
  out.max_residual = residual.colwise().norm().maxCoeff();
  return out;
}

EigenPairs smallest_eigenpairs(const SparseMatrix& a, const IterativeOptions& opts) {
  const Eigen::Index n = a.rows();
  EigenPairs out;
  out.full_spectrum = false;
  if (n == 0) return out;

  const double scale = diagonal_scale(a);
  const double shift = 1e-4 * scale;
  Eigen::SparseMatrix<double> shifted(a);
  Eigen::SparseMatrix<double> id(n, n);
  id.setIdentity();
  shifted += shift * id;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("shifted factorization failed", std::numeric_limits<double>::quiet_NaN());

  std::mt19937_64 gen(opts.seed);
  Eigen::Index p = std::min<Eigen::Index>(std::max(opts.initial_block, 1), n);
  Eigen::MatrixXd x = orthonormal_basis(random_block(n, p, gen));
  const double tol = opts.tolerance * scale;
  double last_residual = std::numeric_limits<double>::infinity();

  for (;;) {
    bool grow = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      ++out.iterations;
      const Eigen::MatrixXd q = orthonormal_basis(ldlt.solve(x));
      const Eigen::MatrixXd aq = a * q;
      Eigen::MatrixXd h = q.transpose() * aq;
      h = 0.5 * (h + h.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      const Eigen::VectorXd theta = es.eigenvalues();
      x = q * es.eigenvectors();
      const Eigen::MatrixXd ax = aq * es.eigenvectors();

      Eigen::Index below = 0;
      while (below < p && theta[below] < opts.threshold) ++below;
      if (below == p && p < n) {
        grow = true;
        break;
      }
      const Eigen::Index wanted = std::min(below + 1, p);
      double residual = 0.0;
      for (Eigen::Index j = 0; j < wanted; ++j)
        residual = std::max(residual, (ax.col(j) - theta[j] * x.col(j)).norm());
      last_residual = residual;
      if (residual <= tol || p == n) {
        out.values = theta.head(wanted);
        out.vectors = x.leftCols(wanted);
        out.max_residual = residual;
        out.full_spectrum = wanted == n;
        return out;
      }
    }
    if (!grow)
      throw NumericalError("iterative eigensolver did not converge after " +
                               std::to_string(out.iterations) + " iterations",
                           last_residual);
    const Eigen::Index next = std::min<Eigen::Index>(2 * p, n);
    Eigen::MatrixXd extended(n, next);
    extended << x, random_block(n, next - p, gen);
    x = orthonormal_basis(extended);
    p = next;
  }
}

}  // namespace coarsel2
