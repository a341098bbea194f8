#include "holodyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "holodyn/errors.hpp"

namespace holodyn::dyn {

cplx Poly::eval(cplx z) const {
  cplx v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * z + *it;
  return v;
}

Poly Poly::derivative() const {
  Poly d;
  if (c.size() <= 1) return d;
  d.c.resize(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d.c[i - 1] = static_cast<double>(i) * c[i];
  return d;
}

Poly Poly::trimmed(double rel_tol) const {
  double scale = 0.0;
  for (const cplx& x : c) scale = std::max(scale, std::abs(x));
  Poly t;
  t.c = c;
  while (!t.c.empty() && std::abs(t.c.back()) <= rel_tol * scale) t.c.pop_back();
  return t;
}

Poly Poly::reversed(int pad) const {
  Poly r;
  r.c.assign(pad + 1, cplx{});
  for (std::size_t i = 0; i < c.size() && static_cast<int>(i) <= pad; ++i)
    r.c[pad - i] = c[i];
  return r.trimmed();
}

Poly operator*(const Poly& a, const Poly& b) {
  Poly r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.assign(a.c.size() + b.c.size() - 1, cplx{});
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

Poly operator-(const Poly& a, const Poly& b) {
  Poly r;
  r.c.assign(std::max(a.c.size(), b.c.size()), cplx{});
  for (std::size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
  for (std::size_t i = 0; i < b.c.size(); ++i) r.c[i] -= b.c[i];
  return r.trimmed(1e-14);
}

Poly scaled(const Poly& a, cplx s) {
  Poly r = a;
  for (cplx& x : r.c) x *= s;
  return r;
}

namespace {

double scaled_residual(const Poly& p, cplx z) {
  double scale = 0.0, zp = 1.0;
  const double az = std::abs(z);
  for (const cplx& c : p.c) {
    scale += std::abs(c) * zp;
    zp *= std::max(1.0, az);
  }
  return std::abs(p.eval(z)) / std::max(scale, 1e-300);
}

}  // namespace

std::vector<cplx> poly_roots(const Poly& poly, double tol, int max_sweeps) {
  const Poly p = poly.trimmed(1e-300);
  const int D = p.degree();
  if (D < 1) return {};
  if (D == 1) return {-p.c[0] / p.c[1]};
  const Poly dp = p.derivative();

  double radius = 0.0;
  for (int i = 0; i < D; ++i) radius = std::max(radius, std::abs(p.c[i] / p.c[D]));
  radius = 1.0 + radius;

  std::vector<cplx> z(D);
  Rng restart_rng(0x9e3779b9u);
  for (int attempt = 0; attempt < 4; ++attempt) {
    for (int i = 0; i < D; ++i) {
      const double ang = 2.0 * M_PI * (i + 0.5) / D + 0.4;
      cplx base = 0.7 * radius * std::polar(1.0, ang);
      if (attempt > 0)
        base += radius * 0.2 * cplx(restart_rng.uniform(-1, 1), restart_rng.uniform(-1, 1));
      z[i] = base;
    }
    bool done = false;
    for (int sweep = 0; sweep < max_sweeps && !done; ++sweep) {
      double max_step = 0.0;
      for (int i = 0; i < D; ++i) {
        const cplx pv = p.eval(z[i]);
        cplx dv = dp.eval(z[i]);
        if (std::abs(dv) < 1e-300) dv = 1e-300;
        const cplx N = pv / dv;
        cplx s = 0.0;
        for (int j = 0; j < D; ++j) {
          if (j == i) continue;
          cplx diff = z[i] - z[j];
          if (std::abs(diff) < 1e-300) diff = 1e-300;
          s += 1.0 / diff;
        }
        cplx denom = 1.0 - N * s;
        if (std::abs(denom) < 1e-12) denom = 1e-12;
        const cplx step = N / denom;
        z[i] -= step;
        max_step = std::max(max_step, std::abs(step) / (1.0 + std::abs(z[i])));
      }
      if (max_step <= 1e-13) done = true;
    }
    if (done) {
      double worst = 0.0;
      for (const cplx& r : z) worst = std::max(worst, scaled_residual(p, r));
      if (worst <= tol) return z;
    }
  }
  throw error(errc::numerical, "poly_roots: Aberth iteration failed to converge");
}

Vec3 embed(const SpherePoint& p) {
  if (p.inf) return {0.0, 0.0, 1.0};
  const double a2 = std::norm(p.z);
  if (a2 <= 1.0) {
    const double s = 1.0 / (1.0 + a2);
    return {2.0 * p.z.real() * s, 2.0 * p.z.imag() * s, (a2 - 1.0) * s};
  }
  const cplx w = 1.0 / p.z;
  const double w2 = std::norm(w);
  const double s = 1.0 / (1.0 + w2);
  return {2.0 * w.real() * s, -2.0 * w.imag() * s, (1.0 - w2) * s};
}

SpherePoint unembed(const Vec3& v) {
  if (v.z <= 0.0) return SpherePoint::of(cplx(v.x, v.y) / (1.0 - v.z));
  const cplx u = cplx(v.x, -v.y) / (1.0 + v.z);
  if (std::abs(u) < 1e-300) return SpherePoint::infinity();
  return SpherePoint::of(1.0 / u);
}

double chordal(const SpherePoint& a, const SpherePoint& b) {
  const Vec3 u = embed(a), v = embed(b);
  const double dx = u.x - v.x, dy = u.y - v.y, dz = u.z - v.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

SpherePoint slerp(const SpherePoint& a, const SpherePoint& b, double t) {
  const Vec3 u = embed(a), v = embed(b);
  double dot = u.x * v.x + u.y * v.y + u.z * v.z;
  dot = std::clamp(dot, -1.0, 1.0);
  const double ang = std::acos(dot);
  Vec3 w;
  if (ang < 1e-12) {
    w = u;
  } else {
    double sa = std::sin((1.0 - t) * ang) / std::sin(ang);
    double sb = std::sin(t * ang) / std::sin(ang);
    if (ang > M_PI - 1e-9) {
      // Antipodal endpoints: pick the deterministic meridian through a fixed
      // auxiliary axis.
      Vec3 aux{0.70710678118654752, 0.0, 0.70710678118654752};
      double pd = aux.x * u.x + aux.y * u.y + aux.z * u.z;
      Vec3 ortho{aux.x - pd * u.x, aux.y - pd * u.y, aux.z - pd * u.z};
      const double on = std::sqrt(ortho.x * ortho.x + ortho.y * ortho.y + ortho.z * ortho.z);
      ortho = {ortho.x / on, ortho.y / on, ortho.z / on};
      const double c = std::cos(t * ang), s = std::sin(t * ang);
      return unembed({c * u.x + s * ortho.x, c * u.y + s * ortho.y, c * u.z + s * ortho.z});
    }
    w = {sa * u.x + sb * v.x, sa * u.y + sb * v.y, sa * u.z + sb * v.z};
  }
  const double n = std::sqrt(w.x * w.x + w.y * w.y + w.z * w.z);
  return unembed({w.x / n, w.y / n, w.z / n});
}

double resultant_magnitude(const Poly& pa, const Poly& pb) {
  const Poly a = pa.trimmed(1e-300), b = pb.trimmed(1e-300);
  const int n = a.degree(), m = b.degree();
  if (n < 0 || m < 0) return 0.0;
  if (n == 0) return std::pow(std::abs(a.c[0]), m);
  if (m == 0) return std::pow(std::abs(b.c[0]), n);
  const int N = n + m;
  std::vector<cplx> S(static_cast<std::size_t>(N) * N, cplx{});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= n; ++j) S[static_cast<std::size_t>(i) * N + i + j] = a.c[n - j];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= m; ++j) S[static_cast<std::size_t>(m + i) * N + i + j] = b.c[m - j];
  // |det| by Gaussian elimination with partial pivoting.
  double logdet = 0.0;
  for (int col = 0; col < N; ++col) {
    int piv = col;
    double best = std::abs(S[static_cast<std::size_t>(col) * N + col]);
    for (int r = col + 1; r < N; ++r) {
      const double v = std::abs(S[static_cast<std::size_t>(r) * N + col]);
      if (v > best) { best = v; piv = r; }
    }
    if (best < 1e-300) return 0.0;
    if (piv != col)
      for (int cc = 0; cc < N; ++cc)
        std::swap(S[static_cast<std::size_t>(piv) * N + cc], S[static_cast<std::size_t>(col) * N + cc]);
    logdet += std::log(best);
    const cplx d = S[static_cast<std::size_t>(col) * N + col];
    for (int r = col + 1; r < N; ++r) {
      const cplx f = S[static_cast<std::size_t>(r) * N + col] / d;
      if (f == cplx{}) continue;
      for (int cc = col; cc < N; ++cc)
        S[static_cast<std::size_t>(r) * N + cc] -= f * S[static_cast<std::size_t>(col) * N + cc];
    }
  }
  // Scale invariance: divide by |lc(a)|^m |lc(b)|^n and coefficient norms.
  double na = 0.0, nb = 0.0;
  for (const cplx& x : a.c) na = std::max(na, std::abs(x));
  for (const cplx& x : b.c) nb = std::max(nb, std::abs(x));
  const double lognorm = m * std::log(na) + n * std::log(nb);
  return std::exp(logdet - lognorm);
}

RationalMap::RationalMap(Poly p, Poly q) : p_(p.trimmed(1e-14)), q_(q.trimmed(1e-14)) {
  d_ = std::max(p_.degree(), q_.degree());
  if (d_ < 2) throw error(errc::config, "map: degree must be at least 2");
  if (q_.c.empty()) throw error(errc::config, "map: zero denominator");
  if (p_.c.empty()) throw error(errc::config, "map: zero numerator");
  if (resultant_magnitude(p_, q_) <= 1e-10)
    throw error(errc::config, "map: numerator and denominator share a root (resultant near zero)");
  const Poly rp = p_.reversed(d_), rq = q_.reversed(d_);
  charts_[0][0] = {p_, q_, p_.derivative(), q_.derivative()};
  charts_[0][1] = {q_, p_, q_.derivative(), p_.derivative()};
  charts_[1][0] = {rp, rq, rp.derivative(), rq.derivative()};
  charts_[1][1] = {rq, rp, rq.derivative(), rp.derivative()};
}

SpherePoint RationalMap::eval(const SpherePoint& x) const {
  const int src = (x.inf || std::abs(x.z) > 1.0) ? 1 : 0;
  const cplx u = x.inf ? cplx{} : (src ? 1.0 / x.z : x.z);
  const ChartPair& g = charts_[src][0];
  const cplx P = g.num.eval(u), Q = g.den.eval(u);
  const double aP = std::abs(P), aQ = std::abs(Q);
  if (aP <= aQ) {
    if (aQ < 1e-300) throw error(errc::numerical, "eval: indeterminate point");
    return SpherePoint::of(P / Q);
  }
  const cplx inv = Q / P;  // |inv| < 1
  if (std::abs(inv) < 1e-300) return SpherePoint::infinity();
  return SpherePoint::of(1.0 / inv);
}

double RationalMap::spherical_derivative(const SpherePoint& x) const {
  const int src = (x.inf || std::abs(x.z) > 1.0) ? 1 : 0;
  const cplx u = x.inf ? cplx{} : (src ? 1.0 / x.z : x.z);
  const SpherePoint fx = eval(x);
  const int tgt = (fx.inf || std::abs(fx.z) > 1.0) ? 1 : 0;
  const ChartPair& g = charts_[src][tgt];
  const cplx P = g.num.eval(u), Q = g.den.eval(u);
  const cplx dP = g.dnum.eval(u), dQ = g.dden.eval(u);
  const cplx gp = (dP * Q - P * dQ) / (Q * Q);
  const double gv2 = std::norm(P / Q);
  return std::abs(gp) * (1.0 + std::norm(u)) / (1.0 + gv2);
}

cplx RationalMap::derivative_plane(cplx z) const {
  const cplx P = p_.eval(z), Q = q_.eval(z);
  const cplx dP = charts_[0][0].dnum.eval(z), dQ = charts_[0][0].dden.eval(z);
  return (dP * Q - P * dQ) / (Q * Q);
}

namespace {

bool sphere_less(const SpherePoint& a, const SpherePoint& b) {
  if (a.inf != b.inf) return !a.inf;  // infinity sorts last
  if (a.inf) return false;
  if (a.z.real() != b.z.real()) return a.z.real() < b.z.real();
  return a.z.imag() < b.z.imag();
}

}  // namespace

std::vector<SpherePoint> RationalMap::critical_points() const {
  const Poly W = (p_.derivative() * q_ - p_ * q_.derivative()).trimmed(1e-13);
  std::vector<SpherePoint> out;
  if (W.degree() >= 1)
    for (const cplx& r : poly_roots(W)) out.push_back(SpherePoint::of(r));
  const int missing = 2 * d_ - 2 - std::max(W.degree(), 0);
  for (int i = 0; i < missing; ++i) out.push_back(SpherePoint::infinity());
  std::sort(out.begin(), out.end(), sphere_less);
  return out;
}

RationalMap::Preimages RationalMap::preimages(const SpherePoint& y, double cluster_tol) const {
  Preimages out;
  Poly r;
  if (y.inf) {
    r = q_;
  } else if (std::abs(y.z) <= 1.0) {
    r = p_ - scaled(q_, y.z);
  } else {
    r = q_ - scaled(p_, 1.0 / y.z);
  }
  r = r.trimmed(1e-14);
  std::vector<cplx> roots;
  if (r.degree() >= 1) roots = poly_roots(r);

  // Newton polish (keeps the better residual).
  const Poly dr = r.derivative();
  for (cplx& z : roots) {
    cplx best = z;
    double bres = scaled_residual(r, z);
    for (int it = 0; it < 3; ++it) {
      const cplx dv = dr.eval(z);
      if (std::abs(dv) < 1e-300) break;
      z -= r.eval(z) / dv;
      const double res = scaled_residual(r, z);
      if (res < bres) { bres = res; best = z; }
    }
    z = best;
    out.max_residual = std::max(out.max_residual, bres);
  }

  for (const cplx& z : roots) out.pts.push_back(SpherePoint::of(z));
  const int missing = d_ - std::max(r.degree(), 0);
  for (int i = 0; i < missing; ++i) out.pts.push_back(SpherePoint::infinity());
  if (missing >= 2) out.critical_value = true;
  std::sort(out.pts.begin(), out.pts.end(), sphere_less);
  for (std::size_t i = 0; i + 1 < out.pts.size(); ++i)
    for (std::size_t j = i + 1; j < out.pts.size(); ++j)
      if (chordal(out.pts[i], out.pts[j]) < cluster_tol) out.critical_value = true;
  return out;
}

double chordal_pt(const Pt& x, const Pt& y) {
  double d = chordal(x.a, y.a);
  if (x.k == 2) d = std::max(d, chordal(x.b, y.b));
  return d;
}

Map Map::rational(RationalMap f) {
  Map m;
  m.factors_.push_back(std::move(f));
  return m;
}

Map Map::product(RationalMap f1, RationalMap f2) {
  if (f1.degree() != f2.degree())
    throw error(errc::config, "product map: factors must have equal degree");
  Map m;
  m.factors_.push_back(std::move(f1));
  m.factors_.push_back(std::move(f2));
  return m;
}

int Map::alphabet() const {
  int a = 1;
  for (int i = 0; i < k(); ++i) a *= degree();
  return a;
}

Pt Map::eval(const Pt& x) const {
  Pt y = x;
  for (int i = 0; i < k(); ++i) y.factor(i) = factors_[i].eval(x.factor(i));
  return y;
}

Map::Preimages Map::preimages(const Pt& y) const {
  Preimages out;
  if (k() == 1) {
    auto p = factors_[0].preimages(y.a);
    for (const auto& w : p.pts) out.pts.push_back(Pt::one(w));
    out.critical_value = p.critical_value;
    out.max_residual = p.max_residual;
    return out;
  }
  auto p1 = factors_[0].preimages(y.a);
  auto p2 = factors_[1].preimages(y.b);
  for (const auto& w1 : p1.pts)
    for (const auto& w2 : p2.pts) out.pts.push_back(Pt::two(w1, w2));
  out.critical_value = p1.critical_value || p2.critical_value;
  out.max_residual = std::max(p1.max_residual, p2.max_residual);
  return out;
}

double Map::log_jacobian(const Pt& x) const {
  double s = 0.0;
  for (int i = 0; i < k(); ++i) {
    const double d = factors_[i].spherical_derivative(x.factor(i));
    if (d < 1e-300) return -std::numeric_limits<double>::infinity();
    s += 2.0 * std::log(d);
  }
  return s;
}

std::vector<std::vector<SpherePoint>> Map::postcritical(int depth, double dedup_tol) const {
  std::vector<std::vector<SpherePoint>> out(k());
  for (int f = 0; f < k(); ++f) {
    std::vector<SpherePoint>& set = out[f];
    auto add = [&](const SpherePoint& p) {
      for (const SpherePoint& q : set)
        if (chordal(p, q) <= dedup_tol) return false;
      set.push_back(p);
      return true;
    };
    for (const SpherePoint& c : factors_[f].critical_points()) {
      SpherePoint x = factors_[f].eval(c);  // V starts at the critical values
      add(c);
      for (int i = 0; i < depth; ++i) {
        if (!add(x)) break;  // orbit entered a known point: cycle closed
        x = factors_[f].eval(x);
      }
    }
  }
  return out;
}

}  // namespace holodyn::dyn
