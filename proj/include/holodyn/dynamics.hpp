#pragma once

#include <complex>
#include <span>
#include <vector>

#include "holodyn/rng.hpp"

namespace holodyn::dyn {

using cplx = std::complex<double>;

// Coefficients lowest-degree first; trimmed so the leading entry is nonzero.
struct Poly {
  std::vector<cplx> c;

  int degree() const { return static_cast<int>(c.size()) - 1; }  // -1 for zero
  cplx eval(cplx z) const;
  Poly derivative() const;
  Poly trimmed(double rel_tol = 0.0) const;
  // w^pad * p(1/w), padded to `pad` (the chart swap z -> 1/z).
  Poly reversed(int pad) const;
};

Poly operator*(const Poly& a, const Poly& b);
Poly operator-(const Poly& a, const Poly& b);
Poly scaled(const Poly& a, cplx s);

// Aberth-Ehrlich simultaneous iteration with deterministic restarts.
// Returns all deg(p) roots; clusters are left where they converge.
std::vector<cplx> poly_roots(const Poly& p, double tol = 1e-12, int max_sweeps = 200);

// Point on the Riemann sphere; canonical: inf => z == 0.
struct SpherePoint {
  cplx z{};
  bool inf = false;

  static SpherePoint infinity() { return {cplx{}, true}; }
  static SpherePoint of(cplx w) { return {w, false}; }
};

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

Vec3 embed(const SpherePoint& p);          // unit sphere, chordal = euclidean
SpherePoint unembed(const Vec3& v);
double chordal(const SpherePoint& a, const SpherePoint& b);  // in [0, 2]
SpherePoint slerp(const SpherePoint& a, const SpherePoint& b, double t);

// f = p/q on the sphere, degree d = max(deg p, deg q) >= 2, no common root
// (checked through the resultant). Infinity is handled by precomputed chart
// swaps, so evaluation and derivatives are total.
class RationalMap {
 public:
  RationalMap(Poly p, Poly q);

  int degree() const { return d_; }
  const Poly& num() const { return p_; }
  const Poly& den() const { return q_; }

  SpherePoint eval(const SpherePoint& x) const;
  double spherical_derivative(const SpherePoint& x) const;
  cplx derivative_plane(cplx z) const;  // f'(z), both charts finite

  std::vector<SpherePoint> critical_points() const;  // 2d-2 with multiplicity

  struct Preimages {
    std::vector<SpherePoint> pts;  // exactly d, canonical order
    bool critical_value = false;
    double max_residual = 0.0;
  };
  Preimages preimages(const SpherePoint& y, double cluster_tol = 1e-7) const;

  // Chart-composed representations: [src][tgt], src/tgt 0 = identity, 1 = 1/z.
  struct ChartPair {
    Poly num, den, dnum, dden;
  };
  const ChartPair& chart(int src_inv, int tgt_inv) const { return charts_[src_inv][tgt_inv]; }

 private:
  Poly p_, q_;
  int d_ = 0;
  ChartPair charts_[2][2];
};

// Point of the artifact's phase space: the sphere (k = 1) or a product of two
// spheres (k = 2). The metric is the max over factors.
struct Pt {
  SpherePoint a, b;
  int k = 1;

  static Pt one(SpherePoint p) { return {p, {}, 1}; }
  static Pt two(SpherePoint p, SpherePoint q) { return {p, q, 2}; }
  const SpherePoint& factor(int i) const { return i == 0 ? a : b; }
  SpherePoint& factor(int i) { return i == 0 ? a : b; }
};

double chordal_pt(const Pt& x, const Pt& y);

// A holomorphic endomorphism at desk scale: a rational map (k = 1) or a
// product of two equal-degree rational maps (k = 2). Alphabet size d^k.
class Map {
 public:
  static Map rational(RationalMap f);
  static Map product(RationalMap f1, RationalMap f2);

  int k() const { return static_cast<int>(factors_.size()); }
  int degree() const { return factors_[0].degree(); }
  int alphabet() const;
  const RationalMap& factor(int i) const { return factors_[i]; }

  Pt eval(const Pt& x) const;
  // Exactly d^k preimages; symbol order is factor-major over the canonical
  // per-factor root order.
  struct Preimages {
    std::vector<Pt> pts;
    bool critical_value = false;
    double max_residual = 0.0;
  };
  Preimages preimages(const Pt& y) const;

  double log_jacobian(const Pt& x) const;  // sum over factors of 2 log sphd

  // Forward orbit of the critical set, truncated at `depth`, one list per
  // factor (the product postcritical set is the union of factor slabs).
  std::vector<std::vector<SpherePoint>> postcritical(int depth, double dedup_tol = 1e-9) const;

 private:
  std::vector<RationalMap> factors_;
};

double resultant_magnitude(const Poly& p, const Poly& q);  // scaled

}  // namespace holodyn::dyn
