#include <gtest/gtest.h>

#include "coarsel2/cohomology.hpp"
#include "coarsel2/errors.hpp"
#include "support.hpp"

using namespace coarsel2;
using coarsel2::testing::dense;
using coarsel2::testing::dense_coboundary;

namespace {

WindowPtr whole_cyclic(int n, double c = 1.0) { return Window::whole(build_group(GroupSpec::cyclic(n, c))); }

// Delta from dense alternating sums; the adjoint of D: C^k -> C^{k+1} is c D^T.
Eigen::MatrixXd dense_laplacian(const WindowPtr& w, int n, int r) {
  const double c = w->group()->measure_weight();
  const auto mid = enumerate_tuples(w, n, r);
  const auto up = dense_coboundary(*mid, *enumerate_tuples(w, n + 1, r));
  Eigen::MatrixXd lap = c * up.transpose() * up;
  if (n > 0) {
    const auto down = dense_coboundary(*enumerate_tuples(w, n - 1, r), *mid);
    lap += c * down * down.transpose();
  }
  return lap;
}

std::size_t dense_rank(const Eigen::MatrixXd& m) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-10);
  return static_cast<std::size_t>(lu.rank());
}

// Harmonic count from ranks alone: dim ker d^n - rank d^{n-1}.
std::size_t rank_oracle_count(const WindowPtr& w, int n, int r) {
  const auto mid = enumerate_tuples(w, n, r);
  const auto up = dense_coboundary(*mid, *enumerate_tuples(w, n + 1, r));
  std::size_t lower = 0;
  if (n > 0) lower = dense_rank(dense_coboundary(*enumerate_tuples(w, n - 1, r), *mid));
  return mid->size() - dense_rank(up) - lower;
}

// tau(P) = <P delta_e, delta_e> for the averaging projection P = (1/|G|) sum_g lambda(g),
// divided by the Haar weight.
double averaging_trace(const MetricMeasureGroup& g) {
  const auto elems = g.elements();
  const auto n = static_cast<Eigen::Index>(elems.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : elems)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto image = g.multiply(s, elems[static_cast<std::size_t>(j)]);
      const auto i = std::find(elems.begin(), elems.end(), image) - elems.begin();
      p(i, j) += 1.0 / static_cast<double>(n);
    }
  const auto e = std::find(elems.begin(), elems.end(), g.identity()) - elems.begin();
  return p(e, e) / g.measure_weight();
}

}  // namespace

TEST(Laplacian, MatchesDenseHodgeFormula) {
  const auto z = build_group(GroupSpec::integer_lattice(1, 0.5));
  for (const auto& w : {whole_cyclic(5), whole_cyclic(4, 3.0), Window::box(z, -4, 4)})
    for (int n = 0; n <= 2; ++n)
      for (int r = 1; r <= 2; ++r) {
        const auto lap = laplacian(w, n, r);
        EXPECT_LE((dense(lap.matrix) - dense_laplacian(w, n, r)).cwiseAbs().maxCoeff(), 1e-12);
      }
}

TEST(Laplacian, CyclicTwoDegreeZero) {
  const auto lap = laplacian(whole_cyclic(2), 0, 1);
  const Eigen::MatrixXd m = dense(lap.matrix);
  // d^0 rows: (0,1) -> f1 - f0, (1,0) -> f0 - f1, diagonal rows vanish.
  Eigen::Matrix2d expect;
  expect << 2, -2, -2, 2;
  EXPECT_EQ(m, Eigen::MatrixXd(expect));
  const auto h = harmonic_space(lap);
  ASSERT_EQ(h.report.harmonic_count, 1u);
  EXPECT_NEAR(std::abs(h.basis[0][0] - h.basis[0][1]), 0.0, 1e-12);
}

TEST(Laplacian, TrivialGroup) {
  const auto w = whole_cyclic(1);
  for (int n = 0; n <= 3; ++n) {
    const auto h = harmonic_space(laplacian(w, n, 0));
    EXPECT_EQ(h.report.harmonic_count, n == 0 ? 1u : 0u) << n;
  }
}

TEST(Laplacian, SymmetricAndPositiveSemidefinite) {
  coarsel2::testing::Rng rng(5);
  const auto z2 = build_group(GroupSpec::integer_lattice(2, 1.3));
  for (const auto& w : {whole_cyclic(6), whole_cyclic(7, 0.5), Window::box(z2, -2, 2)})
    for (int n = 0; n <= 2; ++n)
      for (int r = 1; r <= 2; ++r) {
        const auto lap = laplacian(w, n, r);
        for (int t = 0; t < 5; ++t) {
          const Cochain x(lap.space, rng.vector(lap.space->size()));
          const Cochain y(lap.space, rng.vector(lap.space->size()));
          const Cochain lx(lap.space, lap.matrix * x.values());
          const Cochain ly(lap.space, lap.matrix * y.values());
          EXPECT_LE(std::abs(inner_product(lx, y) - inner_product(x, ly)),
                    1e-12 * std::max(1.0, std::abs(inner_product(lx, y))));
        }
        const auto h = harmonic_space(lap, 1e-8, EigenMethod::kDense);
        EXPECT_GE(h.report.eigenvalues.front(), -1e-12);
      }
}

TEST(Laplacian, DegreeOutOfRange) {
  EXPECT_THROW(laplacian(whole_cyclic(3), kMaxDegree + 1, 1), RangeError);
}

TEST(Harmonic, Examples) {
  const auto c4 = harmonic_space(laplacian(whole_cyclic(4), 0, 2));
  ASSERT_EQ(c4.report.harmonic_count, 1u);
  const auto& h = c4.basis[0];
  EXPECT_LE((h.values().array() - h[0]).abs().maxCoeff(), 1e-12);  // constant
  EXPECT_EQ(harmonic_space(laplacian(whole_cyclic(3), 1, 1)).report.harmonic_count, 0u);
  const auto z = build_group(GroupSpec::integer_lattice(1));
  EXPECT_EQ(harmonic_space(laplacian(Window::box(z, -10, 10), 0, 1)).report.harmonic_count, 1u);
}

TEST(Harmonic, CountsMatchRankOracleAndAreCocycles) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const auto z2 = build_group(GroupSpec::integer_lattice(2));
  for (const auto& w : {whole_cyclic(5), whole_cyclic(6), Window::box(z, -6, 6), Window::box(z2, -2, 2)})
    for (int n = 0; n <= 2; ++n)
      for (int r = 1; r <= 2; ++r) {
        const auto lap = laplacian(w, n, r);
        const auto h = harmonic_space(lap);
        EXPECT_EQ(h.report.harmonic_count, rank_oracle_count(w, n, r)) << w->label() << " n=" << n << " R=" << r;
        const auto d = coboundary_matrix(lap.space, enumerate_tuples(w, n + 1, r));
        for (const auto& v : h.basis) {
          EXPECT_NEAR(inner_product(v, v), 1.0, 1e-10);
          EXPECT_LE(seminorm(d.apply(v), r), 1e-8 * seminorm(v, r));
        }
        const auto hodge = hodge_bookkeeping(w, n, r);
        EXPECT_TRUE(hodge.consistent);
      }
}

TEST(Harmonic, BasisOrthonormalInWeightedProduct) {
  const auto z = build_group(GroupSpec::integer_lattice(1, 2.5));
  // Two clusters far apart: two harmonic 0-cochains.
  const auto w = Window::from_elements(z, {Element{-1}, Element{0}, Element{8}, Element{9}});
  const auto h = harmonic_space(laplacian(w, 0, 3));
  ASSERT_EQ(h.report.harmonic_count, 2u);
  for (std::size_t i = 0; i < h.basis.size(); ++i)
    for (std::size_t j = 0; j < h.basis.size(); ++j)
      EXPECT_NEAR(inner_product(h.basis[i], h.basis[j]), i == j ? 1.0 : 0.0, 1e-10);
}

TEST(Harmonic, DenseAndIterativeAgree) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const auto z2 = build_group(GroupSpec::integer_lattice(2));
  for (const auto& [w, n, r] : {std::tuple{Window::box(z, -12, 12), 1, 2}, std::tuple{Window::box(z2, -3, 3), 0, 1},
                                std::tuple{Window::box(z2, -2, 2), 1, 1}, std::tuple{whole_cyclic(7), 1, 3}}) {
    const auto lap = laplacian(w, n, r);
    const auto a = harmonic_space(lap, 1e-8, EigenMethod::kDense);
    const auto b = harmonic_space(lap, 1e-8, EigenMethod::kIterative);
    EXPECT_EQ(a.report.harmonic_count, b.report.harmonic_count);
    ASSERT_TRUE(a.report.spectral_gap && b.report.spectral_gap);
    EXPECT_NEAR(*a.report.spectral_gap, *b.report.spectral_gap, 1e-9);
    for (std::size_t k = 0; k < b.report.eigenvalues.size(); ++k)
      EXPECT_NEAR(a.report.eigenvalues[k], b.report.eigenvalues[k], 1e-9);
  }
}

TEST(VonNeumann, Examples) {
  const auto c4 = build_group(GroupSpec::cyclic(4));
  EXPECT_DOUBLE_EQ(vn_dimension_finite(*c4, 1), 0.25);
  EXPECT_DOUBLE_EQ(vn_dimension_finite(*c4, 1), averaging_trace(*c4));
  const auto c4w = build_group(GroupSpec::cyclic(4, 2.0));
  EXPECT_DOUBLE_EQ(vn_dimension_finite(*c4w, 1), 0.125);
  EXPECT_DOUBLE_EQ(vn_dimension_finite(*build_group(GroupSpec::trivial()), 1), 1.0);
  EXPECT_THROW(vn_dimension_finite(*build_group(GroupSpec::integer_lattice(1)), 1), UnsupportedError);
}

// Both implications of "dimension zero iff no harmonic cochains", and
// the scaling law under a doubled Haar weight.
TEST(VonNeumann, FaithfulnessAndScaling) {
  for (int order = 2; order <= 8; ++order) {
    const auto g1 = build_group(GroupSpec::cyclic(order));
    const auto g2 = build_group(GroupSpec::cyclic(order, 2.0));
    const int diam = static_cast<int>(g1->diameter());
    for (int n = 0; n <= 2; ++n) {
      const auto h1 = harmonic_space(laplacian(Window::whole(g1), n, diam));
      const auto h2 = harmonic_space(laplacian(Window::whole(g2), n, diam));
      const double b1 = vn_dimension_finite(*g1, h1.report.harmonic_count);
      const double b2 = vn_dimension_finite(*g2, h2.report.harmonic_count);
      EXPECT_EQ(b1 == 0.0, h1.basis.empty());
      EXPECT_EQ(b1 > 0.0, !h1.basis.empty());
      EXPECT_NEAR(b2, b1 / 2.0, 1e-9);
      if (n == 0) {
        EXPECT_NEAR(b1, averaging_trace(*g1), 1e-12);
      } else {
        EXPECT_EQ(h1.report.harmonic_count, 0u);
      }
    }
  }
}

TEST(Sweep, IntegersDegreeZero) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const auto r = window_sweep(z, 0, 1, {4, 8, 16, 32});
  ASSERT_EQ(r.estimates.size(), 4u);
  for (const auto& e : r.estimates) {
    EXPECT_EQ(e.raw_dimension, 1u);
    EXPECT_NEAR(e.normalized_dimension, 1.0 / (2.0 * static_cast<double>(e.window_radius) + 1.0), 1e-12);
  }
  EXPECT_TRUE(r.strictly_decreasing);
  EXPECT_EQ(r.verdict, SweepVerdict::kVanishingConsistent);
}

TEST(Sweep, CyclicWholeWindowIsConstant) {
  const auto g = build_group(GroupSpec::cyclic(6));
  const auto r = window_sweep(g, 0, 3, {3, 4, 5});
  ASSERT_EQ(r.estimates.size(), 3u);
  for (const auto& e : r.estimates) EXPECT_NEAR(e.normalized_dimension, 1.0 / 6.0, 1e-12);
  EXPECT_FALSE(r.strictly_decreasing);
  EXPECT_EQ(r.verdict, SweepVerdict::kNonVanishingConsistent);
}

TEST(Sweep, IntegersDegreeOneVanishes) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const auto r = window_sweep(z, 1, 1, {4, 8, 16, 32});
  ASSERT_EQ(r.estimates.size(), 4u);
  EXPECT_EQ(r.verdict, SweepVerdict::kVanishingConsistent);
}

TEST(Sweep, CapTruncatesWithWarning) {
  const auto z2 = build_group(GroupSpec::integer_lattice(2));
  SweepOptions opts;
  opts.cap = 400;
  const auto r = window_sweep(z2, 0, 1, {1, 2, 3, 8}, opts);
  EXPECT_LT(r.estimates.size(), 4u);
  EXPECT_FALSE(r.estimates.empty());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("sweep truncated"), std::string::npos);
}

TEST(Sweep, Classification) {
  SweepOptions o;
  EXPECT_EQ(classify_sweep({0.2, 0.1, 0.04}, o), SweepVerdict::kVanishingConsistent);
  EXPECT_EQ(classify_sweep({0.2, 0.3, 0.04}, o), SweepVerdict::kInconclusive);
  EXPECT_EQ(classify_sweep({0.5, 0.5, 0.5}, o), SweepVerdict::kNonVanishingConsistent);
  EXPECT_EQ(classify_sweep({0.5, 0.3, 0.1}, o), SweepVerdict::kInconclusive);
  EXPECT_EQ(classify_sweep({}, o), SweepVerdict::kInconclusive);
}
