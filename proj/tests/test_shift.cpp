#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "holodyn/errors.hpp"
#include "holodyn/rng.hpp"
#include "holodyn/shift.hpp"

using namespace holodyn;
using namespace holodyn::shift;

namespace {

// The [[2,1],[1,2]] chain: transition rows (2/3,1/3),(1/3,2/3), stationary
// (1/2,1/2), pressure log 3, autocovariance of 1_[1] equal to (1/4) 3^-j.
Potential chain_pot() {
  return Potential::finite_range(2, 2,
                                 {std::log(2.0), std::log(1.0), std::log(1.0), std::log(2.0)});
}

double chain_sigma2_oracle(int n) {
  double s = 0.25;
  for (int j = 1; j < n; ++j)
    s += 2.0 * (1.0 - static_cast<double>(j) / n) * 0.25 * std::pow(1.0 / 3.0, j);
  return s;
}

}  // namespace

TEST_CASE("potential validation") {
  CHECK_THROWS_AS(Potential::bernoulli({0.5, 0.4}), error);          // sum != 1
  CHECK_THROWS_AS(Potential::bernoulli({1.0, 0.0}), error);          // zero weight
  CHECK_THROWS_AS(Potential::bernoulli({1.0}), error);               // alphabet 1
  CHECK_THROWS_AS(Potential::finite_range(2, 2, {0.0}), error);      // wrong table size
  CHECK_NOTHROW(Potential::finite_range(2, 1, {0.3, -0.2}));
}

TEST_CASE("pressure") {
  CHECK(GibbsMeasure(Potential::bernoulli({0.5, 0.5})).pressure() == 0.0);
  // zero potential on 2-cylinders: pressure log M
  GibbsMeasure zero(Potential::finite_range(2, 2, {0.0, 0.0, 0.0, 0.0}));
  CHECK(zero.pressure() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Perron eigenvalue of [[2,1],[1,2]] is 3 (characteristic polynomial roots 3, 1)
  GibbsMeasure chain(chain_pot());
  CHECK(std::abs(chain.pressure() - std::log(3.0)) < 1e-10);
}

TEST_CASE("entropy") {
  CHECK(GibbsMeasure(Potential::uniform(4)).entropy() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const double h = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
  CHECK(GibbsMeasure(Potential::bernoulli({0.25, 0.75})).entropy() ==
        doctest::Approx(h).epsilon(1e-14));
  CHECK(GibbsMeasure(Potential::bernoulli({0.25, 0.75})).entropy() ==
        doctest::Approx(0.5623351446188083).epsilon(1e-12));
  // Markov entropy rate: log 3 - (2/3) log 2
  GibbsMeasure chain(chain_pot());
  CHECK(std::abs(chain.entropy() - (std::log(3.0) - 2.0 / 3.0 * std::log(2.0))) < 1e-10);
}

TEST_CASE("chain representation") {
  GibbsMeasure chain(chain_pot());
  CHECK(chain.num_states() == 2);
  CHECK(chain.transition(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(chain.transition(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(chain.stationary()[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cylinder masses") {
  GibbsMeasure b(Potential::bernoulli({0.3, 0.7}));
  CHECK(b.cylinder_mass({}) == 1.0);
  CHECK(b.cylinder_mass({0, 1}) == doctest::Approx(0.21).epsilon(1e-14));
  GibbsMeasure chain(chain_pot());
  CHECK(chain.cylinder_mass({0, 0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("cylinder masses sum to one and are shift invariant") {
  for (const auto& pot :
       {Potential::bernoulli({0.25, 0.75}), chain_pot(),
        Potential::finite_range(3, 2, {0.1, -0.4, 0.2, 0.0, 0.3, -0.2, 0.5, -0.1, 0.05})}) {
    GibbsMeasure nu(pot);
    const int M = nu.alphabet();
    for (int n = 1; n <= 6; ++n) {
      std::uint64_t count = 1;
      for (int i = 0; i < n; ++i) count *= M;
      double total = 0.0;
      for (std::uint64_t idx = 0; idx < count; ++idx) {
        Word w(n);
        std::uint64_t v = idx;
        for (int i = n - 1; i >= 0; --i) {
          w[i] = static_cast<int>(v % M);
          v /= M;
        }
        const double mass = nu.cylinder_mass(w);
        total += mass;
        // nu[C] = sum_a nu[aC]
        double ext = 0.0;
        Word aw(n + 1);
        std::copy(w.begin(), w.end(), aw.begin() + 1);
        for (int a = 0; a < M; ++a) {
          aw[0] = a;
          ext += nu.cylinder_mass(aw);
        }
        CHECK(std::abs(ext - mass) < 1e-12);
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("sampling is deterministic and matches the chain") {
  GibbsMeasure chain(chain_pot());
  {
    Rng a(42), b(42);
    CHECK(chain.sample_word(50, a) == chain.sample_word(50, b));
  }
  // symbol frequency (Bernoulli) and two-step frequencies (chain)
  GibbsMeasure fair(Potential::bernoulli({0.5, 0.5}));
  Rng rng(7);
  int ones = 0;
  const int N = 100000;
  for (int i = 0; i < N; ++i) ones += fair.sample_word(1, rng)[0];
  CHECK(std::abs(static_cast<double>(ones) / N - 0.5) < 0.01);

  Rng rng2(8);
  int count00 = 0;
  for (int i = 0; i < N; ++i) {
    const Word w = chain.sample_word(2, rng2);
    if (w[0] == 0 && w[1] == 0) ++count00;
  }
  // pi_0 P_00 = 1/3
  CHECK(std::abs(static_cast<double>(count00) / N - 1.0 / 3.0) < 0.02);
}

TEST_CASE("gibbs bounds") {
  const auto b = gibbs_bounds_check(GibbsMeasure(Potential::bernoulli({0.3, 0.7})), 5);
  CHECK(b.c1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.c2 == doctest::Approx(1.0).epsilon(1e-12));

  const auto z = gibbs_bounds_check(GibbsMeasure(Potential::finite_range(2, 2, {0, 0, 0, 0})), 5);
  CHECK(z.c1 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(z.c2 == doctest::Approx(1.0).epsilon(1e-10));

  const auto c = gibbs_bounds_check(GibbsMeasure(chain_pot()), 6);
  CHECK(c.c1 > 0.0);
  CHECK(c.c1 <= 1.0 + 1e-12);
  CHECK(c.c2 >= 1.0 - 1e-12);
  CHECK(std::isfinite(c.c2));
  CHECK(c.cylinders == 2 + 4 + 8 + 16 + 32 + 64);

  CHECK_THROWS_AS(gibbs_bounds_check(GibbsMeasure(Potential::uniform(4)), 15), error);  // cap
}

TEST_CASE("mixing gap") {
  GibbsMeasure fair(Potential::bernoulli({0.5, 0.5}));
  for (int n = 1; n <= 6; ++n)
    CHECK(mixing_gap(fair, {{0}, 0}, {{1}, 0}, n) < 1e-15);

  GibbsMeasure chain(chain_pot());
  for (int n = 1; n <= 20; ++n) {
    const double expect = 0.25 * std::pow(1.0 / 3.0, n);
    CHECK(std::abs(mixing_gap(chain, {{0}, 0}, {{0}, 0}, n) - expect) < 1e-12);
  }
  CHECK_THROWS_AS(mixing_gap(chain, {{0, 0}, 0}, {{0}, 0}, 1), error);  // overlapping windows

  // stationarity: translating both windows leaves the gap unchanged
  for (int shift_by : {1, 3}) {
    const double a = mixing_gap(chain, {{0, 1}, 0}, {{1}, 0}, 5);
    const double b = mixing_gap(chain, {{0, 1}, shift_by}, {{1}, shift_by}, 5);
    CHECK(std::abs(a - b) < 1e-13);
  }
}

TEST_CASE("mixing gap obeys a fitted exponential bound") {
  GibbsMeasure chain(chain_pot());
  const auto fit = fit_mixing(chain);
  CHECK(!fit.degenerate);
  CHECK(fit.delta == doctest::Approx(std::log(3.0)).epsilon(1e-6));
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int le = 1 + static_cast<int>(rng.below(3));
    const int lf = 1 + static_cast<int>(rng.below(3));
    Word we(le), wf(lf);
    for (int& s : we) s = static_cast<int>(rng.below(2));
    for (int& s : wf) s = static_cast<int>(rng.below(2));
    const int gap = le + static_cast<int>(rng.below(10));
    const double g = mixing_gap(chain, {we, 0}, {wf, 0}, gap);
    const double pe = chain.cylinder_mass(we), pf = chain.cylinder_mass(wf);
    const int dist = gap - le;  // separation between the windows
    CHECK(g <= pe * pf * fit.c * std::exp(-fit.delta * dist) * (1.0 + 1e-9));
  }
}

TEST_CASE("correlation") {
  GibbsMeasure fair(Potential::bernoulli({0.5, 0.5}));
  const auto ind0 = CylinderObservable::indicator(2, {0});
  for (int n = 1; n <= 5; ++n) {
    const auto c = correlation(fair, ind0, ind0, n);
    CHECK(c.exact);
    CHECK(std::abs(c.value) < 1e-14);
  }
  const auto v = correlation(fair, ind0, ind0, 0);
  CHECK(v.value == doctest::Approx(0.25).epsilon(1e-12));

  // chain: correlation decays at rate 1/3 per step, slope -log 3
  GibbsMeasure chain(chain_pot());
  std::vector<double> logs;
  for (int n = 1; n <= 10; ++n) {
    const auto c = correlation(chain, ind0, ind0, n);
    CHECK(c.exact);
    CHECK(std::abs(c.value - 0.25 * std::pow(1.0 / 3.0, n)) < 1e-12);
    logs.push_back(std::log(c.value));
  }
  for (std::size_t i = 1; i < logs.size(); ++i)
    CHECK(logs[i - 1] - logs[i] == doctest::Approx(std::log(3.0)).epsilon(1e-8));
}

TEST_CASE("correlation matches Monte Carlo within 3 standard errors") {
  GibbsMeasure chain(chain_pot());
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    CylinderObservable a, b;
    a.depth = 2;
    b.depth = 1;
    a.values = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    b.values = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const int n = 2 + trial;
    const auto exact = correlation(chain, a, b, n);
    CHECK(exact.exact);
    // fresh measure forces the MC path via a tiny cap
    const auto mc = correlation(chain, a, b, n, /*cap=*/1, 200000, 123 + trial);
    CHECK(!mc.exact);
    CHECK(std::abs(mc.value - exact.value) < 3.0 * mc.stderr_ + 1e-12);
  }
}

TEST_CASE("cylinder approximation error") {
  GibbsMeasure fair(Potential::bernoulli({0.5, 0.5}));
  CylinderObservable chi;
  chi.depth = 3;
  chi.values.assign(8, 0.0);
  chi.values[5] = 2.0;
  chi.values[2] = -1.0;
  CHECK(cylinder_approx_error(fair, chi, 3, 2).value == 0.0);
  CHECK(cylinder_approx_error(fair, chi, 7, 1).value == 0.0);

  // any bounded chi: |chi - E(chi|A_n)|_p <= 2 sup|chi|
  for (int n = 0; n < 3; ++n) {
    const auto e = cylinder_approx_error(fair, chi, n, 2);
    CHECK(e.value <= 2.0 * 2.0 + 1e-12);
  }

  // Monte Carlo route agrees with the exact route on a cylinder observable
  {
    GibbsMeasure chain(chain_pot());
    CylinderObservable cyl;
    cyl.depth = 3;
    cyl.values = {0.2, -0.5, 1.0, 0.0, -0.3, 0.7, 0.1, -0.9};
    const auto exact = cylinder_approx_error(chain, cyl, 1, 2.0);
    auto as_fun = [&](std::span<const int> w) { return cyl(w, 2); };
    const auto mc = cylinder_approx_error_mc(chain, as_fun, 3, 1, 2.0, 40000, 64, 5);
    CHECK(std::abs(mc.value - exact.value) < 3.0 * mc.stderr_ + 0.02 * exact.value);
  }

  // dyadic series truncated at depth 30: independent L2 oracle
  const int D = 30;
  auto dyadic = [](std::span<const int> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += std::pow(0.5, i) * (w[i] == 0 ? 1.0 : 0.0);
    return s;
  };
  for (int n : {4, 8, 12}) {
    double l2sq = 0.0;
    for (int i = n; i < D; ++i) l2sq += std::pow(0.25, i) * 0.25;
    const double oracle = std::sqrt(l2sq);
    const auto e = cylinder_approx_error_mc(fair, dyadic, D, n, 2.0, 20000, 64, 99);
    CHECK(std::abs(e.value - oracle) < 3.0 * e.stderr_ + 0.05 * oracle + 1e-9);
    CHECK(e.value <= 2.0 * std::pow(2.0, -n) * 1.2);
  }
}

TEST_CASE("birkhoff sigma") {
  GibbsMeasure fair(Potential::bernoulli({0.5, 0.5}));
  CylinderObservable zero;
  zero.depth = 1;
  zero.values = {0.0, 0.0};
  CHECK(birkhoff_sigma(fair, zero, 10, 100, 1).sigma == 0.0);

  const auto ind0 = CylinderObservable::indicator(2, {0});
  for (int n : {50, 200}) {
    const auto s = birkhoff_sigma(fair, ind0, n, 10000, 2024);
    CHECK(std::abs(s.sigma - 0.5) < 0.025);
  }

  // chain sigma^2 against the closed-form autocovariance sum
  GibbsMeasure chain(chain_pot());
  const int n = 1000;
  const auto s = birkhoff_sigma(chain, ind0, n, 10000, 77);
  const double oracle = std::sqrt(chain_sigma2_oracle(n));
  CHECK(std::abs(s.sigma - oracle) / oracle < 0.05);
}

TEST_CASE("tau_theta") {
  // uniform weights d^-k: tau = theta log d
  for (int d : {2, 3}) {
    const auto t = tau_theta(Potential::uniform(d * d), d, 2, 0.3);
    CHECK(t.sup_variant == doctest::Approx(0.3 * std::log(d)).epsilon(1e-12));
  }
  const auto t = tau_theta(Potential::bernoulli({0.25, 0.75}), 2, 1, 0.2);
  CHECK(t.sup_variant ==
        doctest::Approx(std::log(4.0 / 3.0) - 0.8 * std::log(2.0)).epsilon(1e-12));
  CHECK(t.sup_variant < 0.0);
  // literal variant is more negative for a Bernoulli potential (P = 0)
  CHECK(t.linf_variant <= t.sup_variant + 1e-15);

  // weights below d^(-k+eta) give a positive margin for theta in ]eta, theta_k[
  Rng rng(3);
  const int d = 2, k = 2;
  const double eta = 0.15;
  const double cap = std::pow(static_cast<double>(d), -k + eta);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(4);
    double sum = 0.0;
    for (double& x : w) {
      x = rng.uniform(0.8, 1.0) * cap;
      sum += x;
    }
    // renormalise keeping every weight below the cap (uniform is 1/4 < cap)
    for (double& x : w) x /= sum;
    bool ok = true;
    for (double x : w) ok = ok && x <= cap;
    if (!ok) continue;
    for (double theta : {0.2, 0.3, 0.39}) {
      const auto tt = tau_theta(Potential::bernoulli(w), d, k, theta);
      CHECK(tt.sup_variant > 0.0);
    }
  }
}
