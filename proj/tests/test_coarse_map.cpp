#include <gtest/gtest.h>

#include "coarsel2/coarse_map.hpp"
#include "coarsel2/errors.hpp"
#include "support.hpp"

using namespace coarsel2;
using coarsel2::testing::Rng;

namespace {

struct Pair {
  GroupPtr G, H;
  WindowPtr WG, WH;
  CoarseMap f, g;
};

Pair cyclic_to_trivial(int order) {
  auto G = build_group(GroupSpec::cyclic(order));
  auto H = build_group(GroupSpec::trivial());
  auto WG = Window::whole(G), WH = Window::whole(H);
  auto f = CoarseMap::tabulate(WG, WH, [&](const Element&) { return H->identity(); });
  auto g = CoarseMap::tabulate(WH, WG, [&](const Element&) { return G->identity(); });
  return {G, H, WG, WH, f, g};
}

Pair doubling(std::int64_t l_source = 32, std::int64_t l_target = 64) {
  auto Z = build_group(GroupSpec::integer_lattice(1));
  auto WG = Window::box(Z, -l_source, l_source), WH = Window::box(Z, -l_target, l_target);
  auto f = CoarseMap::tabulate(WG, WH, [](const Element& x) { return Element{2 * x.coords[0]}; },
                               ControlFunction::affine(2.0, 0.0));
  auto g = CoarseMap::tabulate(
      WH, WG,
      [](const Element& y) {
        const auto v = y.coords[0];
        return Element{v >= 0 ? v / 2 : -((-v + 1) / 2)};
      },
      ControlFunction::affine(0.5, 0.5));
  return {Z, Z, WG, WH, f, g};
}

// Random table map between two finite groups.
CoarseMap random_map(Rng& rng, const WindowPtr& from, const WindowPtr& to) {
  std::vector<Element> images;
  for (std::size_t i = 0; i < from->size(); ++i)
    images.push_back(to->element(static_cast<int>(rng.uniform(0, static_cast<std::int64_t>(to->size()) - 1))));
  return CoarseMap(from, to, images);
}

// f^* alpha (x_0..x_n) = sum over target tuples y of alpha(y) prod chi'(f x_i, y_i) mu(y_i),
// straight from the definition.
double pullback_oracle(const CoarseMap& f, const SmoothingKernel& chi, const Cochain& alpha,
                       std::span<const int> x) {
  const auto& space = *alpha.space();
  const auto& w = *space.window();
  const double c = w.group()->measure_weight();
  double sum = 0.0;
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto y = space.tuple(k);
    double weight = 1.0;
    for (std::size_t i = 0; i < y.size() && weight != 0.0; ++i)
      weight *= chi.value(f.image(x[i]), w.element(y[i])) * c;
    sum += weight * alpha[k];
  }
  return sum;
}

}  // namespace

TEST(ControlFunction, Validation) {
  EXPECT_THROW(ControlFunction({{0, 0}}), ValidationError);
  EXPECT_THROW(ControlFunction({{1, 0}, {2, 1}}), ValidationError);
  EXPECT_THROW(ControlFunction({{0, 2}, {1, 1}}), ValidationError);
  EXPECT_THROW(ControlFunction({{0, 0}, {1, 1}, {2, 1}}), ValidationError);
  const ControlFunction a({{0, 1}, {2, 1}, {3, 4}});
  EXPECT_DOUBLE_EQ(a(1), 1);
  EXPECT_DOUBLE_EQ(a(2.5), 2.5);
  EXPECT_DOUBLE_EQ(a(5), 10);  // extended with slope 3
  EXPECT_DOUBLE_EQ(a.shifted(2)(1), a(3));
  EXPECT_THROW(a(-1), RangeError);
}

TEST(CoarseMap, ConstructionChecks) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const auto w = Window::box(z, -4, 4);
  EXPECT_THROW(CoarseMap::tabulate(w, w, [](const Element& x) { return Element{2 * x.coords[0]}; }), MarginError);
  EXPECT_THROW(CoarseMap::tabulate(w, w, [](const Element& x) { return Element{-x.coords[0]}; },
                                   ControlFunction::affine(0.5, 0.0)),
               ValidationError);
}

TEST(CoarseMap, FittedControlIsVerified) {
  Rng rng(31);
  const auto c7 = Window::whole(build_group(GroupSpec::cyclic(7)));
  const auto z = Window::box(build_group(GroupSpec::integer_lattice(1)), -20, 20);
  for (int t = 0; t < 20; ++t) {
    const auto f = random_map(rng, c7, z);  // control fitted on construction
    for (std::size_t i = 0; i < c7->size(); ++i)
      for (std::size_t j = 0; j < c7->size(); ++j)
        EXPECT_LE(z->group()->distance(f.image(static_cast<int>(i)), f.image(static_cast<int>(j))),
                  f.control()(c7->distance(static_cast<int>(i), static_cast<int>(j))) + 1e-9);
  }
  const auto d = doubling(8, 16);
  const auto fitted = fit_affine_control(*d.WG, *d.WH, [&] {
    std::vector<int> idx;
    for (std::size_t i = 0; i < d.WG->size(); ++i) idx.push_back(d.f.image_index(static_cast<int>(i)));
    return idx;
  }());
  EXPECT_DOUBLE_EQ(fitted(0), 0.0);
  EXPECT_DOUBLE_EQ(fitted(5), 10.0);
}

TEST(Closeness, Examples) {
  const auto d = doubling();
  const auto r = verify_coarse_pair(d.f, d.g);
  EXPECT_EQ(r.sup_gf, 0);
  EXPECT_EQ(r.sup_fg, 1);
  EXPECT_TRUE(r.passed);
  EXPECT_FALSE(verify_coarse_pair(d.f, d.g, 0.5).passed);

  const auto t = cyclic_to_trivial(6);
  const auto rt = verify_coarse_pair(t.f, t.g);
  EXPECT_EQ(rt.sup_gf, 3);
  EXPECT_EQ(rt.sup_fg, 0);

  const auto id = CoarseMap::identity(d.WG);
  const auto ri = verify_coarse_pair(id, id);
  EXPECT_EQ(ri.sup_gf + ri.sup_fg, 0);
}

TEST(Closeness, CompositionLeavingWindow) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const auto a = Window::box(z, -4, 4), b = Window::box(z, -8, 8);
  const auto f = CoarseMap::tabulate(a, b, [](const Element& x) { return Element{2 * x.coords[0]}; });
  const auto g = CoarseMap::tabulate(b, a, [](const Element& y) { return Element{y.coords[0] / 4}; });
  EXPECT_NO_THROW(verify_coarse_pair(f, g));
  const auto small = Window::box(z, -2, 2);
  const auto h = CoarseMap::tabulate(small, b, [](const Element& x) { return Element{3 * x.coords[0]}; });
  const auto k = CoarseMap::tabulate(b, small, [](const Element& y) { return Element{y.coords[0] / 4}; });
  EXPECT_NO_THROW(verify_coarse_pair(h, k));
}

TEST(Measurablize, ZeroCellDiameterKeepsTheMap) {
  const auto d = doubling(8, 16);
  const auto m = measurablize(d.f, 0.0);
  EXPECT_EQ(m.cells.size(), d.WG->size());
  for (std::size_t i = 0; i < d.WG->size(); ++i) EXPECT_EQ(m.map.image(static_cast<int>(i)), d.f.image(static_cast<int>(i)));
  EXPECT_EQ(m.max_closeness, 0);
}

TEST(Measurablize, IdentityOnIntegers) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const auto w = Window::box(z, -8, 8);
  const auto id = CoarseMap::tabulate(w, w, [](const Element& x) { return x; }, ControlFunction::affine(1, 0));
  const auto m = measurablize(id, 2.0);
  for (const auto& cell : m.cells) {
    for (int a : cell)
      for (int b : cell) EXPECT_LE(w->distance(a, b), 2);
    EXPECT_EQ(*std::min_element(cell.begin(), cell.end()), m.basepoint[static_cast<std::size_t>(cell[0])]);
  }
  for (std::size_t i = 0; i < w->size(); ++i)
    EXPECT_LE(z->distance(m.map.image(static_cast<int>(i)), w->element(static_cast<int>(i))), 4);
  EXPECT_DOUBLE_EQ(m.closeness_bound, 4.0);
  EXPECT_DOUBLE_EQ(m.map.control()(3.0), 7.0);  // t' -> a(t' + 2t)
}

TEST(Measurablize, InequalitiesOnRandomMaps) {
  Rng rng(404);
  const auto c9 = Window::whole(build_group(GroupSpec::cyclic(9)));
  const auto z2 = Window::box(build_group(GroupSpec::integer_lattice(2)), -3, 3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_map(rng, z2, c9);
    for (double t : {0.0, 1.0, 2.0, 3.0}) {
      const auto m = measurablize(f, t);
      const auto& a = f.control();
      for (std::size_t i = 0; i < z2->size(); ++i) {
        const int ii = static_cast<int>(i);
        EXPECT_LE(c9->group()->distance(m.map.image(ii), f.image(ii)), a(2 * t) + 1e-9);
        for (std::size_t j = 0; j < z2->size(); ++j) {
          const int jj = static_cast<int>(j);
          EXPECT_LE(c9->group()->distance(m.map.image(ii), m.map.image(jj)), a(z2->distance(ii, jj) + 2 * t) + 1e-9);
        }
      }
    }
  }
}

TEST(Kernel, Examples) {
  const auto z = build_group(GroupSpec::integer_lattice(1));
  const SmoothingKernel delta(z, 0);
  EXPECT_EQ(delta.value({3}, {3}), 1.0);
  EXPECT_EQ(delta.value({3}, {4}), 0.0);
  const SmoothingKernel chi(z, 1);
  for (std::int64_t y = -3; y <= 3; ++y) EXPECT_DOUBLE_EQ(chi.value({0}, {y}), std::abs(y) <= 1 ? 1.0 / 3.0 : 0.0);
  EXPECT_THROW(SmoothingKernel(build_group(GroupSpec::cyclic(5, 0.2)), 1), NormalizationError);
  EXPECT_NO_THROW(SmoothingKernel(build_group(GroupSpec::cyclic(5, 0.2)), 2));
}

TEST(Kernel, RowSumsAndSymmetryExact) {
  const auto z2 = build_group(GroupSpec::integer_lattice(2, 0.25));
  for (int c = 1; c <= 3; ++c) {
    const SmoothingKernel chi(z2, c);
    const auto w = Window::box(z2, -3, 3);
    for (const auto& x : w->elements()) {
      EXPECT_EQ(chi.row_sum(x), Rational(1));
      for (const auto& y : w->elements()) EXPECT_EQ(chi.mass(x, y), chi.mass(y, x));
    }
  }
}

TEST(Pullback, IdentityWithDeltaKernel) {
  const auto w = Window::whole(build_group(GroupSpec::cyclic(5)));
  const auto id = CoarseMap::identity(w);
  const SmoothingKernel delta(w->group(), 0);
  const auto s = enumerate_tuples(w, 1, 2);
  const auto a = random_cochain(s, 3);
  EXPECT_EQ(pullback(id, delta, s, s).apply(a).values(), a.values());
}

TEST(Pullback, ToTrivialIsConstant) {
  const auto t = cyclic_to_trivial(6);
  const SmoothingKernel delta(t.H, 0);
  for (int n = 0; n <= 2; ++n) {
    const auto hs = enumerate_tuples(t.WH, n, 0);
    const auto gs = enumerate_tuples(t.WG, n, 2);
    const Cochain a(hs, Eigen::VectorXd::Constant(1, 0.37));
    const auto pa = pullback(t.f, delta, hs, gs).apply(a);
    EXPECT_LE((pa.values().array() - 0.37).abs().maxCoeff(), 0.0);
  }
}

TEST(Pullback, MatchesDefinitionOnInterior) {
  const auto d = doubling(6, 12);
  const SmoothingKernel chi(d.H, 1);
  for (int n = 0; n <= 1; ++n) {
    const int r = 1;
    const auto hs = enumerate_tuples(d.WH, n, 2 * r + 2);
    const auto gs = enumerate_tuples(d.WG, n, r);
    const auto op = pullback(d.f, chi, hs, gs);
    const auto a = random_cochain(hs, 17);
    const auto pa = op.apply(a);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < gs->size(); ++i) {
      if (!op.row_covered(i)) continue;
      EXPECT_NEAR(pa[i], pullback_oracle(d.f, chi, a, gs->tuple(i)), 1e-12);
      ++checked;
    }
    EXPECT_GT(checked, gs->size() / 2);
  }
}

TEST(Pullback, CoverageErrorReportsRequiredScale) {
  const auto d = doubling(6, 12);
  const SmoothingKernel chi(d.H, 1);
  const auto gs = enumerate_tuples(d.WG, 1, 1);
  try {
    pullback(d.f, chi, enumerate_tuples(d.WH, 1, 2), gs);
    FAIL();
  } catch (const CoverageError& e) {
    EXPECT_GT(e.required_scale(), 2);
    EXPECT_LE(e.required_scale(), 4);  // a(1) + 2c'
  }
  EXPECT_NO_THROW(pullback(d.f, chi, enumerate_tuples(d.WH, 1, 4), gs));
}

TEST(Homotopy, DeltaKernelFaceZero) {
  const auto w = Window::whole(build_group(GroupSpec::cyclic(5)));
  const auto k = smoothing_transition(SmoothingKernel(w->group(), 0), w);
  const auto c1 = enumerate_tuples(w, 1, 2);
  const auto c0 = enumerate_tuples(w, 0, 2);
  const auto a = random_cochain(c1, 8);
  const auto h = homotopy_face(k, 0, c1, c0).apply(a);
  for (int y = 0; y < 5; ++y) {
    const std::array<int, 2> t{y, y};
    EXPECT_EQ(h[static_cast<std::size_t>(y)], a[*c1->find(t)]);
  }
}

// h_i alpha(y_0..y_n) = sum alpha(z_0..z_i, y_i..y_n) prod_{l<=i} K(y_l, z_l).
TEST(Homotopy, FaceMatchesDefinition) {
  const auto w = Window::whole(build_group(GroupSpec::cyclic(7)));
  const SmoothingKernel chi(w->group(), 1);
  const auto k = smoothing_transition(chi, w);
  const int n = 1;
  const auto dom = enumerate_tuples(w, n + 1, 3);
  const auto cod = enumerate_tuples(w, n, 3);
  const auto a = random_cochain(dom, 4);
  for (int i = 0; i <= n; ++i) {
    const auto h = homotopy_face(k, i, dom, cod).apply(a);
    for (std::size_t r = 0; r < cod->size(); ++r) {
      const auto y = cod->tuple(r);
      double expect = 0.0;
      std::vector<int> z(static_cast<std::size_t>(i) + 1, 0);
      for (;;) {
        double weight = 1.0;
        std::vector<int> t(z.begin(), z.end());
        for (int l = 0; l <= i; ++l) weight *= chi.value(w->element(y[static_cast<std::size_t>(l)]), w->element(z[static_cast<std::size_t>(l)]));
        for (std::size_t l = static_cast<std::size_t>(i); l < y.size(); ++l) t.push_back(y[l]);
        if (weight != 0.0) expect += weight * a[*dom->find(t)];
        int l = i;
        while (l >= 0 && ++z[static_cast<std::size_t>(l)] == 7) z[static_cast<std::size_t>(l--)] = 0;
        if (l < 0) break;
      }
      EXPECT_NEAR(h[r], expect, 1e-12);
    }
  }
}

TEST(Homotopy, CyclicTwoToTrivialDelta) {
  const auto t = cyclic_to_trivial(2);
  const CoarseSetup s{t.f, t.g, SmoothingKernel(t.G, 0), SmoothingKernel(t.H, 0)};
  for (const auto& setup : {s, s.reversed()}) {
    const auto r = verify_homotopy_identity(setup, 0, 1, 50, 1);
    EXPECT_LE(r.homotopy_residual, 1e-12);
    EXPECT_TRUE(r.passed(1e-12));
  }
}

TEST(Homotopy, CyclicSixToTrivial) {
  const auto t = cyclic_to_trivial(6);
  for (int c : {0, 1}) {
    const CoarseSetup s{t.f, t.g, SmoothingKernel(t.G, c), SmoothingKernel(t.H, c)};
    for (const auto& setup : {s, s.reversed()})
      for (int n = 0; n <= 1; ++n) {
        const auto r = verify_homotopy_identity(setup, n, 2, 50, 9);
        EXPECT_EQ(r.interior_rows, r.total_rows);
        EXPECT_TRUE(r.passed(1e-10)) << "c=" << c << " n=" << n;
        bool first = false, last = false;
        for (const auto& rel : r.relations) {
          first = first || rel.name == "h_0 d_0 = id";
          last = last || rel.name == "h_n d_{n+1} = g f";
          EXPECT_LE(rel.max_residual, 1e-12) << rel.name;
        }
        EXPECT_TRUE(first && last);
      }
  }
}

TEST(Homotopy, FirstRelationOnCyclicFour) {
  const auto w = Window::whole(build_group(GroupSpec::cyclic(4)));
  const auto id = CoarseMap::identity(w);
  const CoarseSetup s{id, id, SmoothingKernel(w->group(), 1), SmoothingKernel(w->group(), 1)};
  for (int n = 0; n <= 2; ++n) {
    const auto r = verify_homotopy_identity(s, n, 1, 50, 2);
    for (const auto& rel : r.relations)
      if (rel.name == "h_0 d_0 = id") {
        EXPECT_LE(rel.max_residual, 1e-12);
      }
    EXPECT_TRUE(r.passed(1e-10));
  }
}

// The identity needs no closeness at all on whole finite groups: any two maps
// and any kernels give id - g^* f^* = h d + d h.
TEST(Homotopy, RandomFiniteMapsProperty) {
  Rng rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const auto G = build_group(GroupSpec::cyclic(rng.uniform(2, 6)));
    const auto H = build_group(GroupSpec::cyclic(rng.uniform(1, 5)));
    const auto WG = Window::whole(G), WH = Window::whole(H);
    const CoarseSetup s{random_map(rng, WG, WH), random_map(rng, WH, WG),
                        SmoothingKernel(G, rng.uniform(0, 2)), SmoothingKernel(H, rng.uniform(0, 2))};
    const int n = static_cast<int>(rng.uniform(0, 1));
    const auto r = verify_homotopy_identity(trial % 2 ? s : s.reversed(), n, 1, 10, rng.next());
    EXPECT_TRUE(r.passed(1e-10)) << "trial " << trial;
    EXPECT_EQ(r.interior_rows, r.total_rows);
  }
}

TEST(Homotopy, DoublingOnInterior) {
  const auto d = doubling();
  const CoarseSetup s{d.f, d.g, SmoothingKernel(d.G, 1), SmoothingKernel(d.H, 1)};
  const auto sc = required_scales(s, 1);
  EXPECT_EQ(sc.spread, 4);
  EXPECT_EQ(sc.cochain_scale, std::max({sc.scale, sc.pullback_scale, sc.homotopy_scale}));
  for (const auto& setup : {s, s.reversed()})
    for (int n = 0; n <= 1; ++n) {
      const auto r = verify_homotopy_identity(setup, n, 1, 20, 5);
      EXPECT_GT(r.interior_rows, 0u);
      EXPECT_LT(r.interior_rows, r.total_rows);
      EXPECT_TRUE(r.passed(1e-10)) << "n=" << n;
    }
}

TEST(Homotopy, TinyWindowHasNoInterior) {
  const auto d = doubling(1, 2);
  const CoarseSetup s{d.f, d.g, SmoothingKernel(d.G, 1), SmoothingKernel(d.H, 1)};
  EXPECT_THROW(verify_homotopy_identity(s, 1, 1, 5, 1), GeometryError);
}

TEST(CochainMap, PullbackCommutesWithCoboundary) {
  const auto d = doubling(12, 24);
  const auto t = cyclic_to_trivial(6);
  for (int n = 0; n <= 1; ++n) {
    const auto a = verify_cochain_map(d.f, SmoothingKernel(d.H, 1), n, 1, 20, 3);
    const auto b = verify_cochain_map(d.g, SmoothingKernel(d.G, 1), n, 2, 20, 3);
    const auto c = verify_cochain_map(t.f, SmoothingKernel(t.H, 1), n, 3, 20, 3);
    const auto e = verify_cochain_map(t.g, SmoothingKernel(t.G, 1), n, 3, 20, 3);
    for (const auto& r : {a, b, c, e}) {
      EXPECT_GT(r.covered_rows, 0u);
      EXPECT_LE(r.max_residual, 1e-12);
    }
  }
}

TEST(NormBound, DoublingSatisfiesBothForms) {
  const auto d = doubling(12, 24);
  for (int n = 0; n <= 1; ++n)
    for (int r = 1; r <= 2; ++r) {
      const auto rep = verify_norm_bound(d.f, SmoothingKernel(d.H, 1), n, r, 50, 7);
      EXPECT_EQ(rep.literal_scale, 2 * r + 1);
      EXPECT_EQ(rep.literal_violations, 0u);
      EXPECT_EQ(rep.fiber_violations, 0u);
    }
}

// f: cyclic(6) -> trivial pulls alpha back to the constant alpha(e..e), so
// ||f^* alpha||_R^2 = |G_R^{n+1}| a^2 while ||alpha||^2 = a^2 on the single
// target tuple. The bound without a fibre factor fails for every alpha != 0;
// the fibre-weighted bound holds with Phi = |G|.
TEST(NormBound, CollapsingMapNeedsFibreFactor) {
  const auto t = cyclic_to_trivial(6);
  for (int c : {0, 1})
    for (int n = 0; n <= 1; ++n) {
      const auto rep = verify_norm_bound(t.f, SmoothingKernel(t.H, c), n, 1, 50, 11);
      EXPECT_EQ(rep.literal_violations, 50u);
      EXPECT_EQ(rep.fiber_violations, 0u);
      EXPECT_DOUBLE_EQ(rep.fiber_constant, 6.0);
      // Independent instance: alpha = 0.5 on the single target tuple.
      const auto hs = enumerate_tuples(t.WH, n, rep.literal_scale);
      const auto gs = enumerate_tuples(t.WG, n, 1);
      const Cochain alpha(hs, Eigen::VectorXd::Constant(1, 0.5));
      const auto pulled = pullback(t.f, SmoothingKernel(t.H, c), hs, gs).apply(alpha);
      const double tuples = static_cast<double>(gs->size());
      EXPECT_NEAR(seminorm_squared(pulled, 1), tuples * 0.25, 1e-12);
      EXPECT_NEAR(seminorm_squared(alpha, rep.literal_scale), 0.25, 1e-12);
      EXPECT_GT(seminorm(pulled, 1), seminorm(alpha, rep.literal_scale));
      EXPECT_LE(seminorm_squared(pulled, 1), std::pow(6.0, n + 1) * 0.25 + 1e-12);
    }
}

TEST(InducedIdentity, FiniteGroupsProjectToZero) {
  const auto t = cyclic_to_trivial(6);
  const CoarseSetup s{t.f, t.g, SmoothingKernel(t.G, 1), SmoothingKernel(t.H, 1)};
  for (int n = 0; n <= 2; ++n) {
    const auto a = verify_induced_identity(s, n, 3);
    const auto b = verify_induced_identity(s.reversed(), n, 3);
    EXPECT_LE(a.max_projection, 1e-8);
    EXPECT_LE(b.max_projection, 1e-8);
    EXPECT_EQ(a.harmonic_count + b.harmonic_count, n == 0 ? 2u : 0u);
  }
  EXPECT_THROW(verify_induced_identity(s.reversed(), 0, 2), DomainError);
}
