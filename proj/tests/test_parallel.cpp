#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "holodyn/coding.hpp"
#include "holodyn/ergodic_stats.hpp"
#include "holodyn/graph_transform.hpp"
#include "holodyn/measures.hpp"
#include "holodyn/parallel.hpp"
#include "holodyn/rng.hpp"
#include "holodyn/shift.hpp"

using namespace holodyn;
using dyn::Map;
using dyn::Poly;
using dyn::Pt;
using dyn::RationalMap;
using dyn::SpherePoint;

namespace {

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

coding::CodingTree make_tree(int depth, exec mode) {
  Map m = Map::rational(RationalMap(Poly{{0, 0, 1}}, Poly{{1}}));
  Rng rng(1);
  coding::BasePathOptions opt;
  opt.clearance = 0.3;
  auto paths = coding::build_base_paths(m, Pt::one(SpherePoint::of(2.0)), opt, rng);
  coding::CodingTree tree(std::move(m), Pt::one(SpherePoint::of(2.0)), std::move(paths));
  tree.extend_to(depth, mode);
  return tree;
}

}  // namespace

TEST_CASE("pairwise sum is schedule independent and accurate") {
  std::vector<double> v(100001);
  Rng rng(9);
  for (double& x : v) x = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-8, 8));
  const double a = pairwise_sum(v);
  const double b = pairwise_sum(v);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  // against long-double accumulation
  long double acc = 0.0L;
  for (double x : v) acc += x;
  CHECK(std::abs(a - static_cast<double>(acc)) <=
        1e-12 * std::max(1.0, std::abs(static_cast<double>(acc))));
}

TEST_CASE("substreams are stable and decorrelated") {
  CHECK(substream_seed(1, "cloud", 0) != substream_seed(1, "cloud", 1));
  CHECK(substream_seed(1, "cloud", 0) != substream_seed(2, "cloud", 0));
  CHECK(substream_seed(1, "cloud", 0) != substream_seed(1, "birkhoff", 0));
  CHECK(substream_seed(1, "cloud", 7) == substream_seed(1, "cloud", 7));
  Rng a(substream_seed(5, "x", 0)), b(substream_seed(5, "x", 0));
  for (int i = 0; i < 100; ++i) CHECK(a.bits() == b.bits());
}

TEST_CASE("tree extension: serial and parallel agree bit for bit") {
  const auto ts = make_tree(9, exec::serial);
  const auto tp = make_tree(9, exec::parallel);
  for (int n = 1; n <= 9; ++n) {
    for (std::uint64_t i = 0; i < ts.level_size(n); ++i) {
      const auto a = ts.node(n, i), b = tp.node(n, i);
      CHECK(std::memcmp(&a.a.z, &b.a.z, sizeof a.a.z) == 0);
      CHECK(ts.node_diameter(n, i) == tp.node_diameter(n, i));
    }
  }
}

TEST_CASE("clouds and pushforwards: serial and parallel agree bit for bit") {
  const auto tree = make_tree(10, exec::parallel);
  shift::GibbsMeasure nu(shift::Potential::bernoulli({0.3, 0.7}));
  const auto cs = meas::sample_cloud(tree, 10, nu, 5000, 42, exec::serial);
  const auto cp = meas::sample_cloud(tree, 10, nu, 5000, 42, exec::parallel);
  for (std::size_t i = 0; i < cs.pts.size(); ++i)
    CHECK(std::memcmp(&cs.pts[i].a.z, &cp.pts[i].a.z, sizeof(dyn::cplx)) == 0);

  const auto ms = meas::pushforward_measure(tree, 9, nu, 4000000, exec::serial);
  const auto mp = meas::pushforward_measure(tree, 9, nu, 4000000, exec::parallel);
  CHECK(bit_equal(ms.w, mp.w));

  const auto fam = meas::test_family(1);
  for (const auto& f : fam) {
    const double a = meas::integrate(meas::MeasureView::of(ms), f, exec::serial);
    const double b = meas::integrate(meas::MeasureView::of(mp), f, exec::parallel);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}

TEST_CASE("birkhoff sigma: serial and parallel agree bit for bit") {
  shift::GibbsMeasure nu(shift::Potential::bernoulli({0.5, 0.5}));
  const auto chi = shift::CylinderObservable::indicator(2, {0});
  const auto a = shift::birkhoff_sigma(nu, chi, 200, 4000, 7, exec::serial);
  const auto b = shift::birkhoff_sigma(nu, chi, 200, 4000, 7, exec::parallel);
  CHECK(std::memcmp(&a.sigma, &b.sigma, sizeof a.sigma) == 0);
  CHECK(std::memcmp(&a.clt_gap, &b.clt_gap, sizeof a.clt_gap) == 0);
}

TEST_CASE("brin-katok: serial and parallel agree bit for bit") {
  const auto tree = make_tree(10, exec::parallel);
  const Map& m = tree.map();
  shift::GibbsMeasure nu(shift::Potential::uniform(2));
  const auto cloud = meas::sample_cloud(tree, 10, nu, 2000, 3);
  const auto a = stats::brin_katok_entropy(m, cloud, 6, 0.05, {}, exec::serial);
  const auto b = stats::brin_katok_entropy(m, cloud, 6, 0.05, {}, exec::parallel);
  CHECK(std::memcmp(&a.h, &b.h, sizeof a.h) == 0);
}

TEST_CASE("backward transform: serial and parallel agree bit for bit") {
  const auto split = gt::LinearSplit::make(gt::CMat::scalar(2.0), gt::CMat::scalar(0.5));
  const auto lm = gt::make_local_map(split,
                                     [](const gt::cplx* w, gt::cplx* out) {
                                       out[0] = 2.0 * w[0] + 0.005 * w[1] * w[1];
                                       out[1] = 0.5 * w[1];
                                     },
                                     1.0, 2.0, 0.02);
  const auto phi = gt::zero_graph(1, 1, 0.5);
  gt::TransformOptions opt;
  opt.mode = gt::Mode::shrink;
  opt.epsilon = 0.05;
  const auto a = gt::backward_transform(lm, phi, opt, exec::serial);
  const auto b = gt::backward_transform(lm, phi, opt, exec::parallel);
  REQUIRE(a.psi.grid_x.size() == b.psi.grid_x.size());
  for (std::size_t i = 0; i < a.psi.grid_x.size(); ++i)
    CHECK(std::memcmp(&a.psi.grid_x[i], &b.psi.grid_x[i], sizeof(gt::cplx)) == 0);
}
