#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <sstream>

#include "coarsel2/bridge.hpp"
#include "coarsel2/errors.hpp"
#include "support.hpp"

using namespace coarsel2;
using coarsel2::testing::invariant_from;
using coarsel2::testing::Rng;

namespace {

// Symmetric group on three letters as a composition table of permutations.
GroupPtr s3() {
  std::vector<std::array<int, 3>> perms;
  std::array<int, 3> p{0, 1, 2};
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  std::vector<std::string> names;
  for (const auto& q : perms) names.push_back(std::to_string(q[0]) + std::to_string(q[1]) + std::to_string(q[2]));
  std::vector<int> products;
  for (const auto& a : perms)
    for (const auto& b : perms) {
      const std::array<int, 3> ab{a[b[0]], a[b[1]], a[b[2]]};
      products.push_back(static_cast<int>(std::find(perms.begin(), perms.end(), ab) - perms.begin()));
    }
  return build_group(GroupSpec::from_table(std::make_shared<MultiplicationTable>(names, products)));
}

std::vector<GroupPtr> finite_groups() {
  std::vector<GroupPtr> out;
  for (int n = 2; n <= 6; ++n) out.push_back(build_group(GroupSpec::cyclic(n)));
  out.push_back(build_group(GroupSpec::cyclic(4, 0.5)));
  out.push_back(s3());
  return out;
}

TupleSpacePtr complete(const GroupPtr& g, int n) {
  const auto w = Window::whole(g);
  return enumerate_tuples(w, n, w->diameter());
}

double max_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Bridge, EvaluationAfterInductionIsIdentity) {
  for (const auto& g : finite_groups())
    for (int n = 0; n <= 2; ++n) {
      const auto beta = random_cochain(complete(g, n), 10 + n);
      EXPECT_EQ(evaluate_E(induce_M(beta)).values(), beta.values()) << g->fingerprint() << " n=" << n;
    }
}

TEST(Bridge, InductionAfterEvaluationIsIdentity) {
  for (const auto& g : finite_groups())
    for (int n = 0; n <= 2; ++n) {
      const auto phi = random_cochain(complete(g, n), 20 + n);
      const InvariantCochain alpha(invariant_from(phi));
      EXPECT_EQ(induce_M(evaluate_E(alpha)).data().values(), alpha.data().values());
      // The direct construction and M agree.
      EXPECT_EQ(induce_M(phi).data().values(), alpha.data().values());
    }
}

TEST(Bridge, CommuteWithCoboundary) {
  for (const auto& g : finite_groups())
    for (int n = 0; n <= 1; ++n) {
      const auto c0 = complete(g, n), c1 = complete(g, n + 1);
      const auto d = coboundary_matrix(c0, c1);
      const auto beta = random_cochain(c0, 5);
      const auto alpha = induce_M(beta);
      EXPECT_LE(max_diff(evaluate_E(l2_coboundary(alpha)).values(), d.apply(evaluate_E(alpha)).values()), 1e-12);
      EXPECT_LE(max_diff(induce_M(d.apply(beta)).data().values(), l2_coboundary(alpha).data().values()), 1e-12);
    }
}

TEST(Bridge, ValuedCoboundarySquaresToZero) {
  Rng rng(3);
  const auto g = s3();
  const ValuedCochain b(g, 0, rng.vector(36));
  EXPECT_LE(l2_coboundary(l2_coboundary(b)).values().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bridge, InvarianceIsEnforced) {
  Rng rng(4);
  const auto g = build_group(GroupSpec::cyclic(3));
  try {
    InvariantCochain bad(ValuedCochain(g, 0, rng.vector(9)));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("invariance"), std::string::npos);
  }
  EXPECT_THROW(ValuedCochain(g, 0, Eigen::VectorXd::Zero(8)), ConfigurationError);
  EXPECT_THROW(ValuedCochain::zero(build_group(GroupSpec::integer_lattice(1)), 0), UnsupportedError);
}

TEST(Bridge, InductionNeedsCompleteWholeGroupData) {
  const auto g = build_group(GroupSpec::cyclic(6));
  const auto w = Window::whole(g);
  EXPECT_THROW(induce_M(random_cochain(enumerate_tuples(w, 1, 2), 1)), DomainError);
  const auto z = build_group(GroupSpec::integer_lattice(1));
  EXPECT_THROW(induce_M(random_cochain(enumerate_tuples(Window::box(z, -2, 2), 0, 4), 1)), DomainError);
}

TEST(Bridge, EvaluationOnPartialSpaceRestricts) {
  const auto g = build_group(GroupSpec::cyclic(6));
  const auto w = Window::whole(g);
  const auto beta = random_cochain(complete(g, 1), 9);
  const auto part = enumerate_tuples(w, 1, 1);
  const auto e = evaluate_E(induce_M(beta), part);
  EXPECT_EQ(e.values(), restriction(complete(g, 1), part).apply(beta).values());
}

TEST(Bridge, NormChains) {
  for (const auto& g : finite_groups())
    for (int n = 0; n <= 1; ++n)
      for (int r = 0; r <= 2; ++r) {
        const auto beta = random_cochain(complete(g, n), 100 + r);
        const auto e = e_norm_chain(induce_M(beta), r);
        EXPECT_TRUE(e.holds()) << e.evaluated << " " << e.local << " " << e.global;
        const auto m = m_norm_chain(beta, r);
        EXPECT_TRUE(m.holds()) << m.induced << " " << m.coarse;
      }
}

// mu(B(R)) ||E alpha||_R^2 counted by hand on cyclic(3) at R = 0.
TEST(Bridge, NormChainValuesByHand) {
  const auto g = build_group(GroupSpec::cyclic(3, 2.0));
  const auto phi = random_cochain(complete(g, 0), 8);
  const auto chain = e_norm_chain(induce_M(phi), 0);
  const double sq = phi.values().squaredNorm();
  // mu(B(0)) = 2, ||E alpha||_0^2 = 2 * sum phi^2.
  EXPECT_NEAR(chain.evaluated, 4.0 * sq, 1e-12);
  EXPECT_NEAR(chain.local, 4.0 * sq, 1e-12);
}

TEST(Bridge, Substitutions) {
  for (const auto& g : finite_groups())
    for (int n = 0; n <= 1; ++n)
      for (int r = 1; r <= 2; ++r) {
        const auto s = check_substitutions(g, n, r);
        EXPECT_TRUE(s.automorphism);
        EXPECT_TRUE(s.m_bijective);
        EXPECT_TRUE(s.m_image_contained);
        EXPECT_TRUE(s.m_value_preserving);
        EXPECT_TRUE(s.variant_bijective);
        EXPECT_TRUE(s.variant_image_contained);
      }
}

TEST(Smoothing, DeltaKernelIsIdentity) {
  Rng rng(12);
  const auto g = build_group(GroupSpec::cyclic(5));
  const ValuedCochain f(g, 1, rng.vector(125));
  EXPECT_EQ(smoothing_R(SmoothingKernel(g, 0), f).values(), f.values());
}

// R f (g)(x) = |B(c)|^{-(n+1)} sum over h_i in B_{g_i}(c) of f(h)(x).
TEST(Smoothing, MatchesAverageOverBalls) {
  Rng rng(13);
  const auto g = build_group(GroupSpec::cyclic(5));
  const auto w = Window::whole(g);
  const ValuedCochain f(g, 0, rng.vector(25));
  const auto rf = smoothing_R(SmoothingKernel(g, 1), f);
  for (int a = 0; a < 5; ++a)
    for (int x = 0; x < 5; ++x) {
      double sum = 0.0;
      for (int h = 0; h < 5; ++h)
        if (w->distance(a, h) <= 1) sum += f.at(std::array<int, 1>{h}, x);
      EXPECT_NEAR(rf.at(std::array<int, 1>{a}, x), sum / 3.0, 1e-12);
    }
}

TEST(Smoothing, CommutesWithCoboundary) {
  Rng rng(14);
  for (const auto& g : {build_group(GroupSpec::cyclic(4)), s3()}) {
    const SmoothingKernel chi(g, 1);
    const auto k = static_cast<std::size_t>(g->order());
    for (int n = 0; n <= 1; ++n) {
      std::size_t size = k;
      for (int i = 0; i <= n; ++i) size *= k;
      const ValuedCochain f(g, n, rng.vector(size));
      EXPECT_LE(max_diff(l2_coboundary(smoothing_R(chi, f)).values(), smoothing_R(chi, l2_coboundary(f)).values()), 1e-12);
      const auto c0 = complete(g, n), c1 = complete(g, n + 1);
      const auto a = random_cochain(c0, 3);
      const auto d = coboundary_matrix(c0, c1);
      EXPECT_LE(max_diff(d.apply(smoothing_operator(chi, c0).apply(a)).values(),
                         smoothing_operator(chi, c1).apply(d.apply(a)).values()),
                1e-12);
    }
  }
}

// On a finite group the reduced cohomology in degree 0 is the constants and
// vanishes above; R fixes constants and maps cocycles to cohomologous ones.
TEST(Smoothing, InducesIdentityOnCohomology) {
  const auto g = build_group(GroupSpec::cyclic(4));
  const SmoothingKernel chi(g, 1);
  const auto c0 = complete(g, 0);
  const Cochain one(c0, Eigen::VectorXd::Constant(4, 0.7));
  EXPECT_LE(max_diff(smoothing_operator(chi, c0).apply(one).values(), one.values()), 1e-15);
  const auto c1 = complete(g, 1);
  const auto c2 = complete(g, 2);
  const auto beta = random_cochain(c0, 5);
  const auto cocycle = coboundary_matrix(c0, c1).apply(beta);
  const auto smoothed = smoothing_operator(chi, c1).apply(cocycle);
  EXPECT_LE(max_abs(coboundary_matrix(c1, c2).apply(smoothed)), 1e-12);
  // R d beta - d beta = d (R beta - beta)
  const auto diff = coboundary_matrix(c0, c1).apply(Cochain(c0, smoothing_operator(chi, c0).apply(beta).values() - beta.values()));
  EXPECT_LE(max_diff(smoothed.values() - cocycle.values(), diff.values()), 1e-12);
}

TEST(Bridge, CsvRoundTrip) {
  for (const auto& g : {build_group(GroupSpec::cyclic(3)), s3()}) {
    const auto b = induce_M(random_cochain(complete(g, 1), 6)).data();
    std::stringstream ss;
    write_valued_csv(b, ss);
    ss.seekg(0);
    EXPECT_LE(max_diff(read_valued_csv(g, 1, ss).values(), b.values()), 1e-15);
  }
  std::istringstream truncated("0,0,0.5\n");
  EXPECT_THROW(read_valued_csv(build_group(GroupSpec::cyclic(3)), 0, truncated), ValidationError);
}
