#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "holodyn/coding.hpp"
#include "holodyn/errors.hpp"
#include "holodyn/rng.hpp"
#include "holodyn/shift.hpp"

using namespace holodyn;
using namespace holodyn::coding;
using dyn::chordal;
using dyn::chordal_pt;
using dyn::cplx;
using dyn::Map;
using dyn::Poly;
using dyn::Pt;
using dyn::RationalMap;
using dyn::SpherePoint;

namespace {

RationalMap zsq() { return RationalMap(Poly{{0, 0, 1}}, Poly{{1}}); }

CodingTree make_zsq_tree(double base, int depth, double clearance = 0.3) {
  Map m = Map::rational(zsq());
  Rng rng(1);
  BasePathOptions opt;
  opt.clearance = clearance;
  auto paths = build_base_paths(m, Pt::one(SpherePoint::of(base)), opt, rng);
  CodingTree tree(std::move(m), Pt::one(SpherePoint::of(base)), std::move(paths));
  tree.extend_to(depth);
  return tree;
}

Map random_poly_map(Rng& rng, int degree) {
  for (;;) {
    Poly p;
    for (int i = 0; i < degree; ++i) p.c.push_back(cplx(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)));
    p.c.push_back(cplx(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5)));
    try {
      return Map::rational(RationalMap(p, Poly{{1}}));
    } catch (const error&) {
    }
  }
}

}  // namespace

TEST_CASE("geodesics stay resolved and hit endpoints") {
  const auto p = geodesic(SpherePoint::of(3.0), SpherePoint::of({0, 2}), 1e-2);
  CHECK(chordal(p.start(), SpherePoint::of(3.0)) == 0.0);
  CHECK(chordal(p.end(), SpherePoint::of({0, 2})) == 0.0);
  for (std::size_t i = 1; i < p.pts.size(); ++i)
    CHECK(chordal(p.pts[i - 1], p.pts[i]) <= 1e-2 + 1e-9);
}

TEST_CASE("lift follows the chosen square-root branch") {
  const auto f = zsq();
  const auto eta = geodesic(SpherePoint::of(4.0), SpherePoint::of(1.0), 1e-2);
  const auto up = lift_path(f, eta, SpherePoint::of(2.0));
  CHECK(chordal(up.end(), SpherePoint::of(1.0)) < 1e-9);
  const auto dn = lift_path(f, eta, SpherePoint::of(-2.0));
  CHECK(chordal(dn.end(), SpherePoint::of(-1.0)) < 1e-9);
  // every sample projects back onto the arc (single-segment geodesic, so the
  // global parameter addresses it directly)
  for (std::size_t i = 0; i < up.pts.size(); ++i)
    CHECK(chordal(f.eval(up.pts[i]), slerp(eta.start(), eta.end(), up.t[i])) < 2e-2);
}

TEST_CASE("lift through a critical value fails") {
  const auto f = zsq();
  // path through 0 = f(0), the critical value
  const auto eta = geodesic(SpherePoint::of(1.0), SpherePoint::of(-1.0), 1e-2);
  CHECK_THROWS_AS(lift_path(f, eta, SpherePoint::of(1.0)), error);
}

TEST_CASE("base paths: clear straight segments stay straight") {
  Map m = Map::rational(zsq());
  Rng rng(2);
  BasePathOptions opt;
  opt.clearance = 0.1;
  const auto bp = build_base_paths(m, Pt::one(SpherePoint::of({0, 2})), opt, rng);
  CHECK(bp.per_factor[0].size() == 2);
  CHECK(bp.detours_used == 0);
  CHECK(bp.min_clearance >= 0.1);
}

TEST_CASE("base paths: detours trigger when the geodesic crosses the postcritical set") {
  // from z = 3 the geodesic to -sqrt(3) runs through infinity, which is
  // postcritical for z^2
  Map m = Map::rational(zsq());
  Rng rng(3);
  BasePathOptions opt;
  opt.clearance = 0.25;
  const auto straight = geodesic(SpherePoint::of(3.0), SpherePoint::of(-std::sqrt(3.0)), 1e-2);
  double clear = 2.0;
  for (const auto& q : straight.pts)
    clear = std::min(clear, std::min(chordal(q, SpherePoint::of(0.0)),
                                     chordal(q, SpherePoint::infinity())));
  CHECK(clear < opt.clearance);  // the straight segment violates clearance

  const auto bp = build_base_paths(m, Pt::one(SpherePoint::of(3.0)), opt, rng);
  CHECK(bp.detours_used >= 1);
  CHECK(bp.min_clearance >= opt.clearance);
}

TEST_CASE("postcritical base points are rejected") {
  Map m = Map::rational(RationalMap(Poly{{-2, 0, 1}}, Poly{{1}}));  // z^2-2, V = {0,-2,2,inf}
  Rng rng(4);
  BasePathOptions opt;
  CHECK_THROWS_AS(build_base_paths(m, Pt::one(SpherePoint::of(2.0)), opt, rng), error);
  try {
    build_base_paths(m, Pt::one(SpherePoint::of(2.0)), opt, rng);
  } catch (const error& e) {
    CHECK(e.code() == errc::base_point_rejected);
  }
}

TEST_CASE("level moduli of the z^2 tree follow iterated square roots") {
  const auto tree = make_zsq_tree(2.0, 12);
  for (int n : {4, 8, 12}) {
    const double expect = std::pow(2.0, 1.0 / std::pow(2.0, n));
    for (std::uint64_t i = 0; i < tree.level_size(n); ++i) {
      CHECK(tree.node_ok(n, i));
      const auto p = tree.node(n, i);
      CHECK(std::abs(std::abs(p.a.z) - expect) < 1e-9);
    }
  }
  CHECK(tree.level_size(12) == 4096);
  // modulus at n = 12 matches the spec'd constant
  CHECK(std::pow(2.0, 1.0 / 4096.0) == doctest::Approx(1.000169).epsilon(1e-6));
}

TEST_CASE("compatibility holds on every node") {
  const auto tree = make_zsq_tree(2.0, 8);
  const auto& f = tree.map().factor(0);
  for (int n = 2; n <= 8; ++n)
    for (std::uint64_t i = 0; i < tree.level_size(n); ++i) {
      // f(node(w)) = node(shift w): shift drops the first (high) symbol
      const auto x = tree.node(n, i);
      const auto y = tree.node(n - 1, i % tree.level_size(n - 1));
      CHECK(chordal(f.eval(x.a), y.a) <= 1e-8);
    }
  // level 1: f(node(a)) = z
  for (std::uint64_t i = 0; i < tree.level_size(1); ++i)
    CHECK(chordal(f.eval(tree.node(1, i).a), SpherePoint::of(2.0)) <= 1e-8);
}

TEST_CASE("compatibility on random maps and base points") {
  Rng rng(5);
  int built = 0;
  for (int trial = 0; trial < 24 && built < 10; ++trial) {
    const Map m = random_poly_map(rng, 2 + static_cast<int>(rng.below(3)));
    dyn::Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double nn = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    const Pt z = Pt::one(dyn::unembed({v.x / nn, v.y / nn, v.z / nn}));
    BasePathOptions opt;
    opt.clearance = 0.03;
    try {
      Rng prng(100 + trial);
      auto paths = build_base_paths(m, z, opt, prng);
      CodingTree tree(m, z, std::move(paths));
      tree.extend_to(4);
      if (!tree.level_complete(4)) continue;
      ++built;
      for (int n = 2; n <= 4; ++n)
        for (std::uint64_t i = 0; i < tree.level_size(n); ++i) {
          const auto x = tree.node(n, i);
          const auto y = tree.node(n - 1, i % tree.level_size(n - 1));
          CHECK(chordal_pt(m.eval(x), y) <= 1e-8);
        }
    } catch (const error& e) {
      if (e.code() != errc::base_point_rejected) throw;
    }
  }
  CHECK(built >= 10);
}

TEST_CASE("levels are injective") {
  const auto tree = make_zsq_tree(2.0, 10);
  for (int n : {4, 8, 10}) CHECK(level_min_separation(tree, n) > 0.0);
}

TEST_CASE("branch sampler matches the enumerated tree bit for bit") {
  const auto tree = make_zsq_tree(2.0, 6);
  Map m = Map::rational(zsq());
  Rng rng(6);
  BasePathOptions opt;
  opt.clearance = 0.3;
  const auto base = build_base_paths(m, Pt::one(SpherePoint::of(2.0)), opt, rng);
  const BranchSampler sampler(m, base, tree.lift_options());
  double worst = 0.0;
  for (std::uint64_t i = 0; i < tree.level_size(6); ++i) {
    const auto w = CodingTree::unpack(i, 6, 2);
    const Pt p = sampler.sample(w);
    worst = std::max(worst, chordal_pt(p, tree.node(6, i)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("successive refinement decays geometrically on sampled branches") {
  const auto tree = make_zsq_tree(2.0, 12);
  shift::GibbsMeasure nu(shift::Potential::uniform(2));
  Rng rng(7);
  int decaying = 0;
  const int samples = 1000;
  for (int s = 0; s < samples; ++s) {
    const auto w = nu.sample_word(12, rng);
    // d(z_n, z_{n+1}) along the branch
    std::vector<double> gaps;
    for (int n = 4; n < 12; ++n) {
      const std::uint64_t iw = CodingTree::pack(std::span<const int>(w.data(), n + 1), 2);
      const auto a = tree.node(n, iw / 2);  // first n symbols
      const auto b = tree.node(n + 1, iw);
      gaps.push_back(chordal_pt(a, b));
    }
    // slope of log-gaps
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      if (gaps[i] <= 0.0) continue;
      const double x = static_cast<double>(i), y = std::log(gaps[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++cnt;
    }
    if (cnt >= 2 && (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) < 0.0) ++decaying;
  }
  CHECK(decaying >= samples * 99 / 100);
}

TEST_CASE("level diameter statistics") {
  const auto tree = make_zsq_tree(2.0, 10);
  shift::GibbsMeasure nu(shift::Potential::uniform(2));

  // generous threshold: no bad words, bounds hold
  auto st = level_diameter_stats(tree, 8, 0.3, 10.0, 0.0, &nu, 0.2);
  CHECK(st.card_bad == 0);
  CHECK(st.card_ok);
  CHECK(st.mass_ok);
  CHECK(st.nodes == 256);

  // fitted decay exponent is positive (diameters shrink geometrically)
  const auto fit = fit_diameter_decay(tree, 4, 10);
  CHECK(fit.ok);
  CHECK(fit.rho > 0.0);

  // with the fitted threshold the bad set stays within the cardinality bound
  st = level_diameter_stats(tree, 9, 0.3, fit.c * 2.0, fit.rho, &nu,
                            shift::tau_theta(nu.potential(), 2, 1, 0.3).sup_variant);
  CHECK(st.card_ok);

  // a threshold below the median splits the level; counts and masses add up
  st = level_diameter_stats(tree, 8, 0.3, 0.0, 0.0, &nu, 0.0);
  // threshold c = 0: every word with positive diameter is bad
  std::uint64_t manual = 0;
  double manual_mass = 0.0;
  for (std::uint64_t i = 0; i < tree.level_size(8); ++i) {
    if (tree.node_diameter(8, i) > 0.0) {
      ++manual;
      auto w = coding::CodingTree::unpack(i, 8, 2);
      manual_mass += nu.cylinder_mass(shift::Word(w.begin(), w.end()));
    }
  }
  CHECK(st.card_bad == manual);
  CHECK(st.bad_mass == doctest::Approx(manual_mass).epsilon(1e-12));
  CHECK(st.card_bad == 256);  // every stored lift has positive diameter here
}

TEST_CASE("branching cardinality bound") {
  // single path: s = 0, card 1
  std::vector<std::vector<int>> leaves{{0, 1, 0}};
  int s = -1;
  CHECK(branching_cardinality_check(leaves, 2, 3, &s));
  CHECK(s == 0);

  // full binary tree of depth 3: every leaf has three branching ancestors
  leaves.clear();
  for (int i = 0; i < 8; ++i) leaves.push_back({(i >> 2) & 1, (i >> 1) & 1, i & 1});
  CHECK(branching_cardinality_check(leaves, 2, 3, &s));
  CHECK(s == 3);

  // exhaustive: every nonempty subset of the depth-3 binary leaves satisfies
  // card <= alphabet^s
  int violations = 0;
  for (int mask = 1; mask < 256; ++mask) {
    std::vector<std::vector<int>> sub;
    for (int i = 0; i < 8; ++i)
      if (mask & (1 << i)) sub.push_back({(i >> 2) & 1, (i >> 1) & 1, i & 1});
    if (!branching_cardinality_check(sub, 2, 3)) ++violations;
  }
  CHECK(violations == 0);
}
