#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "nharm/target_space.hpp"
#include "oracles.hpp"

using namespace nharm;

namespace {

SpacePtr tripod() {
  // three unit arms joined at vertex 0; arm i is edge i = (0, i+1)
  return TargetSpace::tree(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
}

Vec ev(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// random tree: vertex v>=1 attaches below a uniformly chosen earlier vertex
SpacePtr random_tree(int V, std::mt19937_64& rng,
                     std::vector<TreeEdge>* out_edges = nullptr) {
  std::vector<TreeEdge> es;
  std::uniform_real_distribution<double> len(0.3, 2.0);
  for (int v = 1; v < V; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    es.push_back({parent(rng), v, len(rng)});
  }
  if (out_edges) *out_edges = es;
  return TargetSpace::tree(V, es);
}

TargetPoint random_point(const TargetSpace& S, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (S.kind()) {
    case SpaceKind::Euclidean: {
      Vec p(S.payload_dim());
      for (int i = 0; i < p.size(); ++i) p[i] = 2.0 * gauss(rng);
      return S.make_point(p);
    }
    case SpaceKind::Tree: {
      const auto& es = S.tree_edges();
      std::uniform_int_distribution<int> pick(0,
                                              static_cast<int>(es.size()) - 1);
      const int e = pick(rng);
      return S.tree_point(e, u01(rng) * es[e].length);
    }
    case SpaceKind::Hyperbolic2: {
      const double r = 2.5 * u01(rng), th = 2.0 * kPi * u01(rng);
      Eigen::Vector3d h = oracle::hyp_polar(r, th);
      return S.make_point(ev({h[0], h[1], h[2]}));
    }
    case SpaceKind::Product: {
      Vec p(S.payload_dim());
      const auto& off = S.factor_offsets();
      const auto& fs = S.factors();
      for (std::size_t f = 0; f < fs.size(); ++f) {
        TargetPoint q = random_point(*fs[f], rng);
        p.segment(off[f], q.payload.size()) = q.payload;
      }
      return S.make_point(p);
    }
  }
  return S.origin();
}

}  // namespace

TEST_CASE("construction, descriptors, tags") {
  auto e2 = TargetSpace::euclidean(2);
  CHECK(e2->kind() == SpaceKind::Euclidean);
  CHECK(e2->payload_dim() == 2);
  CHECK(e2->descriptor() == "euclidean(2)");
  CHECK(e2->tag() == TargetSpace::euclidean(2)->tag());
  CHECK(e2->tag() != TargetSpace::euclidean(3)->tag());

  auto T = tripod();
  CHECK(T->payload_dim() == 2);
  CHECK(T->tree_vertex_count() == 4);
  CHECK(T->tree_edges().size() == 3);
  CHECK(T->tree_vertex_distance(1, 2) == doctest::Approx(2.0).epsilon(1e-15));

  auto H = TargetSpace::hyperbolic2();
  CHECK(H->payload_dim() == 3);
  CHECK(H->descriptor() == "hyperbolic2");

  auto P = TargetSpace::product({T, TargetSpace::euclidean(1)});
  CHECK(P->kind() == SpaceKind::Product);
  CHECK(P->payload_dim() == 3);
  CHECK(P->factor_offsets().size() == 3);
  CHECK(P->factor_offsets()[2] == 3);
  CHECK(P->descriptor().find("euclidean(1)") != std::string::npos);

  SUBCASE("invalid trees are rejected") {
    CHECK_THROWS_AS(TargetSpace::tree(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}),
                    DomainError);  // cycle: edge count != V-1
    CHECK_THROWS_AS(TargetSpace::tree(4, {{0, 1, 1.0}, {2, 3, 1.0}}),
                    DomainError);  // too few edges
    CHECK_THROWS_AS(
        TargetSpace::tree(4, {{0, 1, 1.0}, {0, 1, 2.0}, {2, 3, 1.0}}),
        DomainError);  // right count but disconnected
    CHECK_THROWS_AS(TargetSpace::tree(2, {{0, 1, 0.0}}), DomainError);
    CHECK_THROWS_AS(TargetSpace::tree(2, {{0, 1, -1.0}}), DomainError);
    CHECK_THROWS_AS(TargetSpace::tree(2, {{0, 5, 1.0}}), DomainError);
    CHECK_THROWS_AS(TargetSpace::tree(2, {{1, 1, 1.0}}), DomainError);
    CHECK_THROWS_AS(TargetSpace::tree(1, {}), DomainError);
  }
  SUBCASE("invalid factories") {
    CHECK_THROWS_AS(TargetSpace::euclidean(0), DomainError);
    CHECK_THROWS_AS(TargetSpace::product({}), DomainError);
  }
}

TEST_CASE("point validation and canonicalization") {
  auto T = tripod();
  CHECK_THROWS_AS(T->tree_point(3, 0.5), DomainError);   // no such edge
  CHECK_THROWS_AS(T->tree_point(0, 1.5), DomainError);   // beyond the edge
  CHECK_THROWS_AS(T->tree_point(0, -0.5), DomainError);  // before the edge
  // tiny excursions are clamped, not rejected
  CHECK(T->tree_point(0, 1.0 + 1e-12).payload[1] == 1.0);
  CHECK(T->tree_point(0, -1e-12).payload[1] == 0.0);
  CHECK_THROWS_AS(T->make_point(ev({0.4, 0.5})), DomainError);  // non-integer edge

  auto H = TargetSpace::hyperbolic2();
  // drifted off the sheet by ~1e-8, as arithmetic drift would produce
  TargetPoint p = H->make_point(ev({std::sqrt(1.98) + 1e-8, 0.7, 0.7}));
  const double q = -p.payload[0] * p.payload[0] +
                   p.payload[1] * p.payload[1] + p.payload[2] * p.payload[2];
  CHECK(std::abs(q + 1.0) <= 1e-12);  // renormalized onto the sheet
  CHECK_THROWS_AS(H->make_point(ev({2.0, 0.1, 0.1})), DomainError);  // far off
  CHECK_THROWS_AS(H->make_point(ev({-1.0, 0.0, 0.0})), DomainError); // lower sheet

  auto E = TargetSpace::euclidean(2);
  CHECK_THROWS_AS(E->make_point(ev({1.0, std::nan("")})), DomainError);
  CHECK_THROWS_AS(E->make_point(ev({1.0, 2.0, 3.0})), DomainError);  // size

  // tag mismatch across spaces
  TargetPoint a = E->make_point(ev({0.0, 0.0}));
  TargetPoint b = tripod()->tree_point(0, 0.5);
  CHECK_THROWS_AS(distance(*E, a, b), SpaceMismatchError);
}

TEST_CASE("euclidean metric: exact identities") {
  auto E = TargetSpace::euclidean(3);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    TargetPoint a = random_point(*E, rng), b = random_point(*E, rng);
    CHECK(distance(*E, a, b) ==
          doctest::Approx((a.payload - b.payload).norm()).epsilon(1e-15));
    TargetPoint m = geodesic_point(*E, a, b, 0.25);
    CHECK((m.payload - (0.75 * a.payload + 0.25 * b.payload)).norm() <= 1e-15);
    // Hilbert spaces satisfy the comparison identity with equality
    TargetPoint c = random_point(*E, rng);
    const double gap = comparison_gap(*E, a, b, c, 0.37);
    CHECK(std::abs(gap) <= 1e-12 * std::max(1.0, b.payload.squaredNorm() +
                                                     c.payload.squaredNorm()));
  }
}

TEST_CASE("tree metric agrees with the graph-search oracle") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 12; ++rep) {
    std::vector<TreeEdge> es;
    auto S = random_tree(9, rng, &es);
    oracle::TreeOracle O(9, es);
    for (int k = 0; k < 300; ++k) {
      TargetPoint a = random_point(*S, rng), b = random_point(*S, rng);
      const double d1 = distance(*S, a, b);
      const double d2 = O.dist(a.payload, b.payload);
      CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
    }
  }
  // hand values on the tripod
  auto T = tripod();
  CHECK(distance(*T, T->tree_point(0, 0.6), T->tree_point(1, 0.8)) ==
        doctest::Approx(1.4).epsilon(1e-15));
  CHECK(distance(*T, T->tree_point(0, 0.6), T->tree_point(0, 0.1)) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(distance(*T, T->tree_point(2, 0.0), T->tree_point(0, 0.0)) == 0.0);
}

TEST_CASE("geodesics: endpoints bitwise, constant speed, additivity") {
  std::mt19937_64 rng(33);
  std::vector<SpacePtr> spaces = {
      TargetSpace::euclidean(2), tripod(), TargetSpace::hyperbolic2(),
      TargetSpace::product({tripod(), TargetSpace::euclidean(1)})};
  for (const auto& S : spaces) {
    for (int k = 0; k < 60; ++k) {
      TargetPoint a = random_point(*S, rng), b = random_point(*S, rng);
      TargetPoint g0 = geodesic_point(*S, a, b, 0.0);
      TargetPoint g1 = geodesic_point(*S, a, b, 1.0);
      CHECK(std::memcmp(g0.payload.data(), a.payload.data(),
                        sizeof(double) * a.payload.size()) == 0);
      CHECK(std::memcmp(g1.payload.data(), b.payload.data(),
                        sizeof(double) * b.payload.size()) == 0);
      const double d = distance(*S, a, b);
      for (double t : {0.125, 0.5, 0.875}) {
        TargetPoint g = geodesic_point(*S, a, b, t);
        CHECK(distance(*S, a, g) ==
              doctest::Approx(t * d).epsilon(1e-10).scale(std::max(1.0, d)));
      }
      TargetPoint gs = geodesic_point(*S, a, b, 0.3);
      TargetPoint gt = geodesic_point(*S, a, b, 0.9);
      CHECK(distance(*S, gs, gt) ==
            doctest::Approx(0.6 * d).epsilon(1e-10).scale(std::max(1.0, d)));
    }
    TargetPoint a = random_point(*S, rng), b = random_point(*S, rng);
    CHECK_THROWS_AS(geodesic_point(*S, a, b, -0.1), DomainError);
    CHECK_THROWS_AS(geodesic_point(*S, a, b, 1.1), DomainError);
  }
}

TEST_CASE("hyperboloid model: stability and classical identities") {
  auto H = TargetSpace::hyperbolic2();
  auto O = [&] { return H->origin(); };

  SUBCASE("radial distances, including nearly-coincident points") {
    for (double r : {3.0, 1.0, 1e-3, 1e-6, 1e-8}) {
      Eigen::Vector3d h = oracle::hyp_polar(r, 0.3);
      TargetPoint p = H->make_point(ev({h[0], h[1], h[2]}));
      const double d = distance(*H, O(), p);
      CHECK(d == doctest::Approx(r).epsilon(1e-12));  // relative accuracy
    }
  }
  SUBCASE("agreement with the Poincare-disk formula") {
    std::mt19937_64 rng(44);
    for (int k = 0; k < 300; ++k) {
      TargetPoint a = random_point(*H, rng), b = random_point(*H, rng);
      const double dd = oracle::hyp_disk_distance(
          Eigen::Vector3d(a.payload), Eigen::Vector3d(b.payload));
      CHECK(distance(*H, a, b) ==
            doctest::Approx(dd).epsilon(1e-9).scale(std::max(1.0, dd)));
    }
  }
  SUBCASE("law of cosines") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> side(0.1, 2.5), ang(0.2, kPi - 0.2);
    for (int k = 0; k < 200; ++k) {
      const double a = side(rng), b = side(rng), g = ang(rng);
      TargetPoint B = H->make_point(
          ev({std::cosh(a), std::sinh(a), 0.0}));
      Eigen::Vector3d hc = oracle::hyp_polar(b, g);
      TargetPoint C = H->make_point(ev({hc[0], hc[1], hc[2]}));
      CHECK(distance(*H, B, C) ==
            doctest::Approx(oracle::hyp_third_side(a, b, g)).epsilon(1e-9));
    }
  }
  SUBCASE("geodesics stay on the sheet and bisect symmetric pairs") {
    std::mt19937_64 rng(66);
    for (int k = 0; k < 100; ++k) {
      TargetPoint a = random_point(*H, rng), b = random_point(*H, rng);
      for (double t : {0.2, 0.5, 0.8}) {
        TargetPoint g = geodesic_point(*H, a, b, t);
        const double q = -g.payload[0] * g.payload[0] +
                         g.payload[1] * g.payload[1] +
                         g.payload[2] * g.payload[2];
        CHECK(std::abs(q + 1.0) <= 1e-12);
      }
    }
    Eigen::Vector3d hp = oracle::hyp_polar(1.3, 0.0);
    Eigen::Vector3d hm = oracle::hyp_polar(1.3, kPi);
    TargetPoint mid = geodesic_point(
        *H, H->make_point(ev({hp[0], hp[1], hp[2]})),
        H->make_point(ev({hm[0], hm[1], hm[2]})), 0.5);
    CHECK(distance(*H, mid, O()) <= 1e-12);
  }
}

TEST_CASE("product spaces combine factors in the square metric") {
  auto T = tripod();
  auto P = TargetSpace::product({T, TargetSpace::euclidean(2)});
  std::mt19937_64 rng(77);
  for (int k = 0; k < 200; ++k) {
    TargetPoint a = random_point(*P, rng), b = random_point(*P, rng);
    const double dt = distance(*T, a.payload.head(2), b.payload.head(2));
    const double de = (a.payload.tail(2) - b.payload.tail(2)).norm();
    CHECK(distance(*P, a, b) ==
          doctest::Approx(std::hypot(dt, de)).epsilon(1e-13));
    // geodesics act componentwise
    TargetPoint g = geodesic_point(*P, a, b, 0.4);
    Vec gt(2);
    geodesic_into(*T, a.payload.head(2), b.payload.head(2), 0.4, gt);
    CHECK((g.payload.head(2) - gt).norm() <= 1e-13);
    CHECK((g.payload.tail(2) -
           (0.6 * a.payload.tail(2) + 0.4 * b.payload.tail(2)))
              .norm() <= 1e-13);
  }
  // a product of lines is isometric to the plane
  auto L2 = TargetSpace::product(
      {TargetSpace::euclidean(1), TargetSpace::euclidean(1)});
  auto E2 = TargetSpace::euclidean(2);
  for (int k = 0; k < 50; ++k) {
    TargetPoint a = random_point(*L2, rng), b = random_point(*L2, rng);
    CHECK(distance(*L2, a, b) ==
          doctest::Approx(distance(*E2, a.payload, b.payload)).epsilon(1e-14));
  }
}

TEST_CASE("comparison gap is nonnegative across all spaces") {
  std::mt19937_64 rng(88);
  std::vector<SpacePtr> spaces = {
      TargetSpace::euclidean(2), TargetSpace::euclidean(5), tripod(),
      TargetSpace::hyperbolic2(),
      TargetSpace::product({tripod(), TargetSpace::hyperbolic2()})};
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  for (const auto& S : spaces) {
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
      TargetPoint p = random_point(*S, rng), q = random_point(*S, rng),
                  r = random_point(*S, rng);
      const double l = lam(rng);
      const double scale =
          std::max({1.0, distance(*S, p, q), distance(*S, p, r),
                    distance(*S, q, r)});
      const double g = comparison_gap(*S, p, q, r, l) / (scale * scale);
      worst = std::min(worst, g);
      CHECK(std::abs(comparison_gap(*S, p, q, r, 0.0)) <=
            1e-12 * scale * scale);
      CHECK(std::abs(comparison_gap(*S, p, q, r, 1.0)) <=
            1e-12 * scale * scale);
    }
    CHECK(worst >= -1e-12);
  }
  // strict positivity for a fat hyperbolic triangle (genuine curvature)
  auto H = TargetSpace::hyperbolic2();
  TargetPoint p = H->make_point(ev({1.0, 0.0, 0.0}));
  Eigen::Vector3d q3 = oracle::hyp_polar(2.0, 0.0), r3 = oracle::hyp_polar(2.0, 2.0);
  CHECK(comparison_gap(*H, p, H->make_point(ev({q3[0], q3[1], q3[2]})),
                       H->make_point(ev({r3[0], r3[1], r3[2]})), 0.5) > 0.1);
  TargetPoint a = random_point(*H, rng), b = random_point(*H, rng),
              c = random_point(*H, rng);
  CHECK_THROWS_AS(comparison_gap(*H, a, b, c, -0.2), DomainError);
  CHECK_THROWS_AS(comparison_gap(*H, a, b, c, 1.2), DomainError);
}

TEST_CASE("tripod comparison gap: frozen oracle value") {
  // P, Q, R at offset 1 on the three distinct arms, lambda = 1/2: the
  // midpoint of [Q,R] is the branch point, so the gap is
  //   (1/2)*4 + (1/2)*4 - (1/4)*4 - 1 = 2.
  auto T = tripod();
  const double gap =
      comparison_gap(*T, T->tree_point(0, 1.0), T->tree_point(1, 1.0),
                     T->tree_point(2, 1.0), 0.5);
  CHECK(gap == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("frechet mean: euclidean closed forms and dense-scan oracles") {
  auto E1 = TargetSpace::euclidean(1);
  auto E2 = TargetSpace::euclidean(2);
  std::mt19937_64 rng(99);

  SUBCASE("p=2 equals the weighted average") {
    for (int k = 0; k < 50; ++k) {
      std::vector<TargetPoint> pts;
      std::vector<double> w;
      Vec acc = Vec::Zero(2);
      double tw = 0.0;
      std::uniform_real_distribution<double> wd(0.0, 3.0);
      for (int i = 0; i < 6; ++i) {
        pts.push_back(random_point(*E2, rng));
        w.push_back(wd(rng));
        acc += w.back() * pts.back().payload;
        tw += w.back();
      }
      auto res = frechet_mean(*E2, pts, w);
      CHECK((res.point.payload - acc / tw).norm() <= 1e-12);
    }
  }
  SUBCASE("p=4 on the line matches a dense scan") {
    std::vector<TargetPoint> pts = {
        E1->make_point(ev({-1.0})), E1->make_point(ev({0.2})),
        E1->make_point(ev({1.7})), E1->make_point(ev({3.0}))};
    std::vector<double> w = {1.0, 2.0, 1.0, 0.5};
    FrechetOptions opt;
    opt.power = 4.0;
    auto res = frechet_mean(*E1, pts, w, opt);
    auto obj = [&](double x) {
      double s = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        s += w[i] * std::pow(std::abs(x - pts[i].payload[0]), 4.0);
      return s;
    };
    auto [bx, bv] = oracle::zoom1d(obj, -2.0, 4.0);
    // the argmin of a quartic is flat: location to 1e-4, objective to 1e-9
    CHECK(res.point.payload[0] == doctest::Approx(bx).epsilon(1e-4));
    CHECK(res.objective == doctest::Approx(bv).epsilon(1e-9));
  }
  SUBCASE("p=1 geometric median matches a dense scan") {
    std::vector<TargetPoint> pts;
    std::vector<double> w;
    for (int i = 0; i < 5; ++i) {
      pts.push_back(random_point(*E2, rng));
      w.push_back(1.0 + (i % 2));
    }
    FrechetOptions opt;
    opt.power = 1.0;
    auto res = frechet_mean(*E2, pts, w, opt);
    auto obj = [&](const Eigen::Vector2d& x) {
      double s = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        s += w[i] * (x - Eigen::Vector2d(pts[i].payload)).norm();
      return s;
    };
    auto [bx, bv] = oracle::zoom2d(obj, {-6, -6}, {6, 6});
    CHECK(res.objective <= bv + 1e-6);
    CHECK(res.objective >= bv - 1e-6);
  }
}

TEST_CASE("frechet mean on trees: exact hand values and scan oracles") {
  auto T = tripod();

  SUBCASE("balanced tripod mean is the branch point") {
    std::vector<TargetPoint> pts = {T->tree_point(0, 1.0), T->tree_point(1, 1.0),
                                    T->tree_point(2, 1.0)};
    std::vector<double> w = {1.0, 1.0, 1.0};
    auto res = frechet_mean(*T, pts, w);
    CHECK(res.objective == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(distance(*T, res.point, T->tree_point(0, 0.0)) <= 1e-9);
  }
  SUBCASE("weighted tripod mean moves up the heavy arm") {
    std::vector<TargetPoint> pts = {T->tree_point(0, 1.0), T->tree_point(1, 1.0),
                                    T->tree_point(2, 1.0)};
    std::vector<double> w = {4.0, 1.0, 1.0};
    auto res = frechet_mean(*T, pts, w);
    // minimize 4(1-t)^2 + 2(1+t)^2 on arm 0: t = 1/3, objective 16/3
    CHECK(res.objective == doctest::Approx(16.0 / 3.0).epsilon(1e-12));
    CHECK(std::lround(res.point.payload[0]) == 0);
    CHECK(res.point.payload[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  }
  SUBCASE("random trees vs dense scan, p = 2 and p = 3") {
    std::mt19937_64 rng(123);
    for (int rep = 0; rep < 6; ++rep) {
      std::vector<TreeEdge> es;
      auto S = random_tree(7, rng, &es);
      oracle::TreeOracle O(7, es);
      std::vector<TargetPoint> pts;
      std::vector<oracle::TreePt> ox;
      std::vector<double> w;
      std::uniform_real_distribution<double> wd(0.2, 2.0), u01(0.0, 1.0);
      for (int i = 0; i < 7; ++i) {
        TargetPoint p = random_point(*S, rng);
        pts.push_back(p);
        ox.push_back({static_cast<int>(std::lround(p.payload[0])), p.payload[1]});
        w.push_back(wd(rng));
      }
      for (double p : {2.0, 3.0}) {
        FrechetOptions opt;
        opt.power = p;
        auto res = frechet_mean(*S, pts, w, opt);
        const double scan = oracle::tree_mean_objective_scan(O, ox, w, p);
        CHECK(res.objective <= scan * (1.0 + 1e-9) + 1e-12);
        CHECK(res.objective >= scan * (1.0 - 1e-6) - 1e-9);
      }
    }
  }
  SUBCASE("cyclic contraction iteration lands near the p=2 mean") {
    std::mt19937_64 rng(321);
    std::vector<TargetPoint> pts;
    std::vector<double> w;
    for (int i = 0; i < 5; ++i) {
      pts.push_back(random_point(*T, rng));
      w.push_back(1.0);
    }
    auto res = frechet_mean(*T, pts, w);
    TargetPoint s = pts[0];
    for (int k = 1; k <= 4000; ++k) {
      s = geodesic_point(*T, s, pts[k % 5], 1.0 / (k + 1));
    }
    CHECK(distance(*T, s, res.point) <= 5e-3);
  }
}

TEST_CASE("frechet mean in the hyperbolic plane") {
  auto H = TargetSpace::hyperbolic2();
  std::mt19937_64 rng(456);

  SUBCASE("two points give the geodesic midpoint") {
    TargetPoint a = random_point(*H, rng), b = random_point(*H, rng);
    auto res = frechet_mean(*H, {a, b}, {1.0, 1.0});
    TargetPoint mid = geodesic_point(*H, a, b, 0.5);
    CHECK(distance(*H, res.point, mid) <= 1e-9);
  }
  SUBCASE("symmetric triples center at the origin") {
    std::vector<TargetPoint> pts;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d h = oracle::hyp_polar(1.7, 2.0 * kPi * i / 3.0);
      pts.push_back(H->make_point(ev({h[0], h[1], h[2]})));
    }
    auto res = frechet_mean(*H, pts, {1.0, 1.0, 1.0});
    CHECK(distance(*H, res.point, H->origin()) <= 1e-9);
  }
  SUBCASE("random sets vs the chart-scan oracle, p = 2 and p = 3") {
    for (double p : {2.0, 3.0}) {
      std::vector<TargetPoint> pts;
      std::vector<double> w;
      for (int i = 0; i < 4; ++i) {
        pts.push_back(random_point(*H, rng));
        w.push_back(1.0 + 0.5 * i);
      }
      FrechetOptions opt;
      opt.power = p;
      auto res = frechet_mean(*H, pts, w, opt);
      auto obj = [&](const Eigen::Vector2d& x) {
        Eigen::Vector3d h(std::sqrt(1.0 + x.squaredNorm()), x[0], x[1]);
        double s = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          const double d =
              oracle::hyp_disk_distance(h, Eigen::Vector3d(pts[i].payload));
          s += w[i] * std::pow(d, p);
        }
        return s;
      };
      auto [bx, bv] = oracle::zoom2d(obj, {-8, -8}, {8, 8}, 12, 33);
      CHECK(res.objective <= bv * (1.0 + 1e-6) + 1e-9);
      CHECK(res.objective >= bv * (1.0 - 1e-4) - 1e-9);
    }
  }
}

TEST_CASE("frechet mean on products: separation and consistency") {
  auto L2 = TargetSpace::product(
      {TargetSpace::euclidean(1), TargetSpace::euclidean(1)});
  auto E2 = TargetSpace::euclidean(2);
  std::mt19937_64 rng(789);
  for (double p : {2.0, 4.0}) {
    std::vector<TargetPoint> a, b;
    std::vector<double> w;
    for (int i = 0; i < 5; ++i) {
      TargetPoint q = random_point(*E2, rng);
      a.push_back(L2->make_point(q.payload));
      b.push_back(q);
      w.push_back(1.0 + i * 0.3);
    }
    FrechetOptions opt;
    opt.power = p;
    auto ra = frechet_mean(*L2, a, w, opt);
    auto rb = frechet_mean(*E2, b, w, opt);
    CHECK(ra.objective == doctest::Approx(rb.objective).epsilon(1e-8));
    CHECK((ra.point.payload - rb.point.payload).norm() <= 1e-6);
  }
}

TEST_CASE("frechet mean: argument validation and determinism") {
  auto E = TargetSpace::euclidean(2);
  std::mt19937_64 rng(1010);
  std::vector<TargetPoint> pts = {random_point(*E, rng), random_point(*E, rng)};

  CHECK_THROWS_AS(frechet_mean(*E, {}, {}), DomainError);
  CHECK_THROWS_AS(frechet_mean(*E, pts, {1.0}), DomainError);
  CHECK_THROWS_AS(frechet_mean(*E, pts, {1.0, -0.5}), DomainError);
  CHECK_THROWS_AS(frechet_mean(*E, pts, {0.0, 0.0}), DomainError);
  FrechetOptions bad;
  bad.power = 0.5;
  CHECK_THROWS_AS(frechet_mean(*E, pts, {1.0, 1.0}, bad), DomainError);

  // zero-weight points are ignored
  auto res = frechet_mean(*E, pts, {1.0, 0.0});
  CHECK((res.point.payload - pts[0].payload).norm() <= 1e-15);

  // mixing spaces is rejected
  auto T = tripod();
  std::vector<TargetPoint> mixed = {pts[0], T->tree_point(0, 0.5)};
  CHECK_THROWS_AS(frechet_mean(*E, mixed, {1.0, 1.0}), SpaceMismatchError);

  // bitwise determinism across repeated calls
  auto H = TargetSpace::hyperbolic2();
  std::vector<TargetPoint> hp;
  std::vector<double> w;
  for (int i = 0; i < 5; ++i) {
    hp.push_back(random_point(*H, rng));
    w.push_back(1.0 + i);
  }
  FrechetOptions o3;
  o3.power = 3.0;
  auto r1 = frechet_mean(*H, hp, w, o3);
  auto r2 = frechet_mean(*H, hp, w, o3);
  CHECK(std::memcmp(r1.point.payload.data(), r2.point.payload.data(),
                    sizeof(double) * 3) == 0);
}
