#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "holodyn/dynamics.hpp"
#include "holodyn/errors.hpp"
#include "holodyn/rng.hpp"

using namespace holodyn;
using namespace holodyn::dyn;

namespace {

RationalMap zsq() { return RationalMap(Poly{{0, 0, 1}}, Poly{{1}}); }                  // z^2
RationalMap cheb() { return RationalMap(Poly{{-2, 0, 1}}, Poly{{1}}); }                // z^2-2
RationalMap zsq_frac() { return RationalMap(Poly{{1, 0, 1}}, Poly{{-1, 0, 1}}); }      // (z^2+1)/(z^2-1)
RationalMap one_over() { return RationalMap(Poly{{1, 0, 1}}, Poly{{0, 1}}); }          // (z^2+1)/z

RationalMap random_map(Rng& rng, int degree) {
  for (;;) {
    Poly p, q;
    for (int i = 0; i <= degree; ++i) p.c.push_back(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    const int dq = static_cast<int>(rng.below(degree));  // deg q < deg p keeps degree = deg p
    for (int i = 0; i <= dq; ++i) q.c.push_back(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    try {
      return RationalMap(p, q);
    } catch (const error&) {
      continue;
    }
  }
}

SpherePoint random_point(Rng& rng) {
  Vec3 v{rng.normal(), rng.normal(), rng.normal()};
  const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
  return unembed({v.x / n, v.y / n, v.z / n});
}

}  // namespace

TEST_CASE("poly roots") {
  // (z-1)(z-2)(z-3)
  Poly p{{-6.0, 11.0, -6.0, 1.0}};
  auto roots = poly_roots(p);
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  REQUIRE(roots.size() == 3);
  CHECK(std::abs(roots[0] - 1.0) < 1e-10);
  CHECK(std::abs(roots[1] - 2.0) < 1e-10);
  CHECK(std::abs(roots[2] - 3.0) < 1e-10);

  // double root: z^2
  auto dz = poly_roots(Poly{{0, 0, 1}});
  REQUIRE(dz.size() == 2);
  CHECK(std::abs(dz[0]) < 1e-7);
  CHECK(std::abs(dz[1]) < 1e-7);
}

TEST_CASE("resultant detects common factors") {
  // p = (z-1)(z-2), q = (z-1)(z+3) share the root 1
  Poly p{{2.0, -3.0, 1.0}};
  Poly q{{-3.0, 2.0, 1.0}};
  CHECK(resultant_magnitude(p, q) < 1e-10);
  CHECK_THROWS_AS(RationalMap(Poly{{2, -3, 1}}, Poly{{-3, 2, 1}}), error);
  CHECK(resultant_magnitude(Poly{{0, 0, 1}}, Poly{{1}}) > 1e-10);
}

TEST_CASE("evaluation handles poles and infinity") {
  CHECK(chordal(zsq().eval(SpherePoint::of({1, 1})), SpherePoint::of({0, 2})) < 1e-14);
  CHECK(zsq().eval(SpherePoint::infinity()).inf);
  CHECK(chordal(zsq_frac().eval(SpherePoint::of(0.0)), SpherePoint::of(-1.0)) < 1e-14);
  CHECK(zsq_frac().eval(SpherePoint::of(1.0)).inf);  // pole
  // rational with deg q = deg p: f(inf) = ratio of leading coefficients
  CHECK(chordal(zsq_frac().eval(SpherePoint::infinity()), SpherePoint::of(1.0)) < 1e-14);
}

TEST_CASE("spherical derivative") {
  CHECK(zsq().spherical_derivative(SpherePoint::of(1.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(zsq().spherical_derivative(SpherePoint::of(0.0)) == 0.0);
  CHECK(zsq().spherical_derivative(SpherePoint::infinity()) == 0.0);
}

TEST_CASE("spherical derivative is chart independent") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_map(rng, 2 + static_cast<int>(rng.below(3)));
    // conjugate by inversion: h = inv o f o inv
    const int d = f.degree();
    const RationalMap h(f.den().reversed(d), f.num().reversed(d));
    for (int pt = 0; pt < 10; ++pt) {
      const SpherePoint z = random_point(rng);
      const SpherePoint zi = z.inf ? SpherePoint::of(0.0)
                                   : (std::abs(z.z) < 1e-14 ? SpherePoint::infinity()
                                                            : SpherePoint::of(1.0 / z.z));
      const double a = f.spherical_derivative(z);
      const double b = h.spherical_derivative(zi);
      CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(a, b)));
    }
  }
}

TEST_CASE("critical points") {
  auto crit = zsq().critical_points();
  REQUIRE(crit.size() == 2);
  CHECK(chordal(crit[0], SpherePoint::of(0.0)) < 1e-10);
  CHECK(crit[1].inf);

  crit = cheb().critical_points();
  REQUIRE(crit.size() == 2);
  CHECK(chordal(crit[0], SpherePoint::of(0.0)) < 1e-10);
  CHECK(crit[1].inf);

  crit = one_over().critical_points();
  REQUIRE(crit.size() == 2);
  CHECK(chordal(crit[0], SpherePoint::of(-1.0)) < 1e-9);
  CHECK(chordal(crit[1], SpherePoint::of(1.0)) < 1e-9);
}

TEST_CASE("preimages") {
  auto p = zsq().preimages(SpherePoint::of(4.0));
  REQUIRE(p.pts.size() == 2);
  CHECK(chordal(p.pts[0], SpherePoint::of(-2.0)) < 1e-10);
  CHECK(chordal(p.pts[1], SpherePoint::of(2.0)) < 1e-10);
  CHECK(!p.critical_value);

  p = cheb().preimages(SpherePoint::of(2.0));
  REQUIRE(p.pts.size() == 2);
  CHECK(chordal(p.pts[0], SpherePoint::of(-2.0)) < 1e-9);
  CHECK(chordal(p.pts[1], SpherePoint::of(2.0)) < 1e-9);

  p = zsq().preimages(SpherePoint::of(0.0));
  REQUIRE(p.pts.size() == 2);
  CHECK(p.critical_value);  // double root at 0
  CHECK(chordal(p.pts[0], SpherePoint::of(0.0)) < 1e-6);

  p = zsq().preimages(SpherePoint::infinity());
  REQUIRE(p.pts.size() == 2);
  CHECK(p.pts[0].inf);
  CHECK(p.pts[1].inf);
  CHECK(p.critical_value);
}

TEST_CASE("preimages project back onto the target") {
  Rng rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    const auto f = random_map(rng, 2 + static_cast<int>(rng.below(3)));
    for (int pt = 0; pt < 6; ++pt) {
      const SpherePoint y = random_point(rng);
      const auto pre = f.preimages(y);
      CHECK(pre.pts.size() == static_cast<std::size_t>(f.degree()));
      for (const auto& w : pre.pts) CHECK(chordal(f.eval(w), y) <= 1e-9);
    }
  }
}

TEST_CASE("chordal distance") {
  CHECK(chordal(SpherePoint::of({0.3, -0.7}), SpherePoint::of({0.3, -0.7})) == 0.0);
  CHECK(chordal(SpherePoint::of(0.0), SpherePoint::infinity()) == doctest::Approx(2.0));
  CHECK(chordal(SpherePoint::of(0.0), SpherePoint::of(1.0)) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  // huge coordinates behave like infinity
  CHECK(chordal(SpherePoint::of(1e200), SpherePoint::infinity()) < 1e-100);
}

TEST_CASE("chordal distance is a metric on sampled triples") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const SpherePoint a = random_point(rng), b = random_point(rng), c = random_point(rng);
    CHECK(chordal(a, b) == chordal(b, a));
    CHECK(chordal(a, c) <= chordal(a, b) + chordal(b, c) + 1e-12);
    CHECK(chordal(a, b) >= 0.0);
    CHECK(chordal(a, b) <= 2.0 + 1e-15);
  }
}

TEST_CASE("slerp endpoints and midpoints") {
  const SpherePoint a = SpherePoint::of(2.0), b = SpherePoint::of({0.0, 1.0});
  CHECK(chordal(slerp(a, b, 0.0), a) < 1e-12);
  CHECK(chordal(slerp(a, b, 1.0), b) < 1e-12);
  const SpherePoint m = slerp(a, b, 0.5);
  CHECK(std::abs(chordal(a, m) - chordal(m, b)) < 1e-9);
}

TEST_CASE("postcritical sets") {
  auto post = Map::rational(zsq()).postcritical(10);
  REQUIRE(post.size() == 1);
  CHECK(post[0].size() == 2);  // {0, inf}, both fixed

  post = Map::rational(cheb()).postcritical(10);
  REQUIRE(post[0].size() == 4);  // {0, -2, 2, inf}

  // z^2 - 1: orbit 0 -> -1 -> 0 closes
  post = Map::rational(RationalMap(Poly{{-1, 0, 1}}, Poly{{1}})).postcritical(10);
  REQUIRE(post[0].size() == 3);
}

TEST_CASE("product maps") {
  const Map m = Map::product(zsq(), cheb());
  CHECK(m.k() == 2);
  CHECK(m.alphabet() == 4);
  const Pt y = Pt::two(SpherePoint::of(4.0), SpherePoint::of(2.0));
  const auto pre = m.preimages(y);
  CHECK(pre.pts.size() == 4);
  for (const auto& w : pre.pts) CHECK(chordal_pt(m.eval(w), y) < 1e-9);
  Rng rng(1);
  CHECK_THROWS_AS(Map::product(zsq(), random_map(rng, 3)), error);  // degree mismatch

  // log Jacobian = sum of factor contributions
  const Pt x = Pt::two(SpherePoint::of(1.0), SpherePoint::of(1.0));
  const double expect = 2.0 * std::log(zsq().spherical_derivative(SpherePoint::of(1.0))) +
                        2.0 * std::log(cheb().spherical_derivative(SpherePoint::of(1.0)));
  CHECK(m.log_jacobian(x) == doctest::Approx(expect).epsilon(1e-12));
}
