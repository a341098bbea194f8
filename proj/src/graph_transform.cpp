#include "holodyn/graph_transform.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "holodyn/errors.hpp"
#include "holodyn/rng.hpp"

namespace holodyn::gt {

namespace {

double vnorm(const cplx* v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::norm(v[i]);
  return std::sqrt(s);
}

// Operator norm of a dense k x k complex matrix (k <= 4) by power iteration
// on M*M with a fixed start vector.
double op_norm_dense(std::span<const cplx> m, int k) {
  std::vector<cplx> v(k), mv(k), mtv(k);
  for (int i = 0; i < k; ++i) v[i] = cplx(1.0 + 0.1 * i, 0.05 * i);
  double lam = 0.0;
  for (int it = 0; it < 60; ++it) {
    for (int i = 0; i < k; ++i) {
      cplx s = 0.0;
      for (int j = 0; j < k; ++j) s += m[static_cast<std::size_t>(i) * k + j] * v[j];
      mv[i] = s;
    }
    for (int j = 0; j < k; ++j) {
      cplx s = 0.0;
      for (int i = 0; i < k; ++i) s += std::conj(m[static_cast<std::size_t>(i) * k + j]) * mv[i];
      mtv[j] = s;
    }
    const double n2 = vnorm(mtv.data(), k);
    if (n2 < 1e-300) return 0.0;
    lam = n2;
    for (int i = 0; i < k; ++i) v[i] = mtv[i] / n2;
  }
  return std::sqrt(lam);
}

}  // namespace

CMat CMat::zero(int n) {
  CMat m;
  m.n = n;
  return m;
}

CMat CMat::scalar(cplx v) {
  CMat m;
  m.n = 1;
  m.a[0] = v;
  return m;
}

CMat CMat::mat2(cplx a11, cplx a12, cplx a21, cplx a22) {
  CMat m;
  m.n = 2;
  m.a = {a11, a12, a21, a22};
  return m;
}

void CMat::apply(const cplx* in, cplx* out) const {
  for (int i = 0; i < n; ++i) {
    cplx s = 0.0;
    for (int j = 0; j < n; ++j) s += at(i, j) * in[j];
    out[i] = s;
  }
}

CMat CMat::inverse() const {
  CMat inv;
  inv.n = n;
  if (n == 1) {
    if (std::abs(a[0]) < 1e-300) throw error(errc::numerical, "matrix not invertible");
    inv.a[0] = 1.0 / a[0];
    return inv;
  }
  const cplx det = a[0] * a[3] - a[1] * a[2];
  if (std::abs(det) < 1e-300) throw error(errc::numerical, "matrix not invertible");
  inv.a = {a[3] / det, -a[1] / det, -a[2] / det, a[0] / det};
  return inv;
}

double CMat::op_norm() const {
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(a[0]);
  const double T = std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]) + std::norm(a[3]);
  const double D = std::norm(a[0] * a[3] - a[1] * a[2]);
  const double disc = std::max(0.0, T * T - 4.0 * D);
  return std::sqrt(0.5 * (T + std::sqrt(disc)));
}

double CMat::min_sv() const {
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(a[0]);
  const double T = std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]) + std::norm(a[3]);
  const double D = std::norm(a[0] * a[3] - a[1] * a[2]);
  const double disc = std::max(0.0, T * T - 4.0 * D);
  return std::sqrt(std::max(0.0, 0.5 * (T - std::sqrt(disc))));
}

LinearSplit LinearSplit::make(CMat A, CMat B) {
  LinearSplit s;
  s.k1 = A.n;
  s.k2 = B.n;
  if (s.k1 < 1 || s.k2 < 1) throw error(errc::config, "split: k1, k2 must be positive");
  s.A = A;
  s.B = B;
  const double min_sv = A.min_sv();
  if (min_sv < 1e-300) throw error(errc::numerical, "split: A is not invertible");
  s.norm_Ainv = 1.0 / min_sv;
  s.norm_B = B.op_norm();
  s.gamma = 1.0 - s.norm_B * s.norm_Ainv;
  if (!(s.gamma > 0.0))
    throw error(errc::config, "split: need |B| < |A^-1|^-1 (gamma must be positive)");
  return s;
}

Conditions check_conditions(const LinearSplit& split, double gamma0, double delta,
                            double epsilon) {
  if (gamma0 < 0.0 || gamma0 > 1.0) throw error(errc::config, "gamma0: must lie in [0, 1]");
  if (delta < 0.0) throw error(errc::config, "delta: must be nonnegative");
  if (!(delta < epsilon)) throw error(errc::config, "delta: must be smaller than epsilon");
  Conditions c;
  c.gamma = split.gamma;
  const double nAinv = split.norm_Ainv;
  const double nB = split.norm_B;
  const double ainv_inv = 1.0 / nAinv;

  c.lhs_a = gamma0 * (1.0 - split.gamma) + 2.0 * delta * (1.0 + gamma0) * nAinv;
  c.a = c.lhs_a <= 1.0;

  const double den = ainv_inv - delta * (1.0 + gamma0);
  c.lhs_b = den > 0.0 ? (gamma0 * nB + delta * (1.0 + gamma0)) / den
                      : std::numeric_limits<double>::infinity();
  c.b = den > 0.0 && c.lhs_b <= gamma0;

  c.lhs_c = nB + 2.0 * delta;
  c.c = c.lhs_c <= std::exp(epsilon);

  c.lhs_d1 = (nB + 2.0 * delta) * std::exp(-epsilon) + delta;
  c.lhs_d2 = delta * (1.0 + gamma0);
  c.rhs_d2 = std::min(0.5 * (ainv_inv - gamma0 * nB), ainv_inv - 1.0);
  c.d = c.lhs_d1 <= 1.0 && c.lhs_d2 <= c.rhs_d2;
  return c;
}

void LocalMap::eval(const cplx* w, cplx* g1_out, cplx* g2_out) const {
  std::array<cplx, 4> out{};
  g(w, out.data());
  for (int i = 0; i < split.k1; ++i) g1_out[i] = out[i];
  for (int i = 0; i < split.k2; ++i) g2_out[i] = out[split.k1 + i];
}

LocalMap make_local_map(const LinearSplit& split, std::function<void(const cplx*, cplx*)> g,
                        double R0, double R1, std::optional<double> delta_override,
                        int jac_grid, double fd_step) {
  if (R0 <= 0.0 || R1 < R0) throw error(errc::config, "local map: need 0 < R0 <= R1");
  LocalMap lm;
  lm.split = split;
  lm.g = std::move(g);
  lm.R0 = R0;
  lm.R1 = R1;

  const int k = split.k();
  std::array<cplx, 4> w{}, v{};
  lm.g(w.data(), v.data());
  if (vnorm(v.data(), k) > 1e-12) throw error(errc::config, "local map: g(0) must vanish");

  // Finite-difference Jacobian; a real step gives the complex derivative of a
  // holomorphic map.
  auto jac_at = [&](const std::array<cplx, 4>& x, std::vector<cplx>& J) {
    std::array<cplx, 4> xp{}, xm{}, gp{}, gm{};
    for (int j = 0; j < k; ++j) {
      xp = x;
      xm = x;
      xp[j] += fd_step;
      xm[j] -= fd_step;
      lm.g(xp.data(), gp.data());
      lm.g(xm.data(), gm.data());
      for (int i = 0; i < k; ++i)
        J[static_cast<std::size_t>(i) * k + j] = (gp[i] - gm[i]) / (2.0 * fd_step);
    }
  };

  std::vector<cplx> J0(static_cast<std::size_t>(k) * k), J(static_cast<std::size_t>(k) * k),
      D(static_cast<std::size_t>(k) * k);
  std::array<cplx, 4> origin{};
  jac_at(origin, J0);
  std::vector<cplx> blocks(static_cast<std::size_t>(k) * k, cplx{});
  for (int i = 0; i < split.k1; ++i)
    for (int j = 0; j < split.k1; ++j)
      blocks[static_cast<std::size_t>(i) * k + j] = split.A.at(i, j);
  for (int i = 0; i < split.k2; ++i)
    for (int j = 0; j < split.k2; ++j)
      blocks[static_cast<std::size_t>(split.k1 + i) * k + (split.k1 + j)] = split.B.at(i, j);
  for (std::size_t i = 0; i < J0.size(); ++i) D[i] = J0[i] - blocks[i];
  if (op_norm_dense(D, k) > 1e-6)
    throw error(errc::config, "local map: d0 g does not match the declared (A, B)");

  // Sampled bound |d_w g - d0 g| over the polydisc; sound at the grid only.
  const int per_dim = std::max(1, jac_grid);
  double delta = 0.0;
  std::vector<int> idx(k, 0);
  const double rmax = R0 - 2.0 * fd_step;
  for (;;) {
    std::array<cplx, 4> x{};
    for (int j = 0; j < k; ++j) {
      const int i = idx[j];
      const double rad = rmax * (1.0 + i / 3) / 3.0;
      const double ang = 2.0 * M_PI * (i % 3) / 3.0 + 0.5;
      x[j] = std::polar(rad, ang);
    }
    jac_at(x, J);
    for (std::size_t i = 0; i < J.size(); ++i) D[i] = J[i] - J0[i];
    delta = std::max(delta, op_norm_dense(D, k));
    int j = 0;
    while (j < k && ++idx[j] == per_dim) idx[j++] = 0;
    if (j == k) break;
  }
  lm.delta = delta_override ? std::max(*delta_override, delta) : delta;
  lm.delta_sampled = !delta_override.has_value();
  return lm;
}

namespace {

// Uniform grid over the polydisc D^{k2}(R); 0 is always a grid point.
std::vector<std::vector<cplx>> polydisc_grid(int k2, double R, int per_real_dim) {
  const int g = per_real_dim % 2 ? per_real_dim : per_real_dim + 1;
  std::vector<double> axis(g);
  for (int i = 0; i < g; ++i) axis[i] = -R + 2.0 * R * i / (g - 1);
  std::vector<std::vector<cplx>> pts;
  std::vector<int> idx(2 * k2, 0);
  for (;;) {
    std::vector<cplx> y(k2);
    bool inside = true;
    for (int j = 0; j < k2; ++j) {
      y[j] = cplx(axis[idx[2 * j]], axis[idx[2 * j + 1]]);
      if (std::abs(y[j]) > R + 1e-15) inside = false;
    }
    if (inside) pts.push_back(std::move(y));
    int j = 0;
    while (j < 2 * k2 && ++idx[j] == g) idx[j++] = 0;
    if (j == 2 * k2) break;
  }
  return pts;
}

double measure_lip(const std::vector<cplx>& ys, const std::vector<cplx>& xs,
                   const std::vector<std::uint8_t>& mask, int k1, int k2,
                   std::uint64_t pair_cap) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) live.push_back(i);
  const std::size_t n = live.size();
  if (n < 2) return 0.0;
  auto ratio = [&](std::size_t a, std::size_t b) {
    double dy = 0.0, dx = 0.0;
    for (int j = 0; j < k2; ++j) dy += std::norm(ys[a * k2 + j] - ys[b * k2 + j]);
    for (int j = 0; j < k1; ++j) dx += std::norm(xs[a * k1 + j] - xs[b * k1 + j]);
    if (dy < 1e-300) return 0.0;
    return std::sqrt(dx / dy);
  };
  double lip = 0.0;
  if (n * (n - 1) / 2 <= pair_cap) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) lip = std::max(lip, ratio(live[i], live[j]));
  } else {
    Rng rng(0x5eed);
    for (std::uint64_t t = 0; t < pair_cap; ++t) {
      const std::size_t i = rng.below(n), j = rng.below(n);
      if (i != j) lip = std::max(lip, ratio(live[i], live[j]));
    }
  }
  return lip;
}

// One shared fixed-point engine: both the grid fill and the returned lazy
// evaluator run exactly this.
struct FixSolver {
  CMat A, Ainv;
  std::function<void(const cplx*, cplx*)> g;
  std::function<void(const cplx*, cplx*)> phi_eval;
  double phi_R = 0.0;
  int k1 = 0, k2 = 0;
  double tol = 1e-12;
  int iter_cap = 10000;

  struct Result {
    std::array<cplx, 2> x{};
    double residual = 0.0;
    double contraction = 0.0;
    int status = 0;  // 0 ok, 1 left phi's domain, 2 not contracting, 3 cap
  };

  Result solve(const cplx* y) const {
    Result r;
    std::array<cplx, 2> x{};
    std::array<cplx, 4> w{}, gv{};
    std::array<cplx, 2> g2{}, px{}, Ax{}, rhs{}, xn{};
    double prev_step = -1.0;
    for (int it = 0; it < iter_cap; ++it) {
      for (int i = 0; i < k1; ++i) w[i] = x[i];
      for (int i = 0; i < k2; ++i) w[k1 + i] = y[i];
      g(w.data(), gv.data());
      for (int i = 0; i < k2; ++i) g2[i] = gv[k1 + i];
      if (vnorm(g2.data(), k2) > phi_R * (1.0 + 1e-9)) {
        r.status = 1;
        return r;
      }
      phi_eval(g2.data(), px.data());
      A.apply(x.data(), Ax.data());
      for (int i = 0; i < k1; ++i) rhs[i] = px[i] - (gv[i] - Ax[i]);
      Ainv.apply(rhs.data(), xn.data());
      double step = 0.0;
      for (int i = 0; i < k1; ++i) step += std::norm(xn[i] - x[i]);
      step = std::sqrt(step);
      if (prev_step > 1e-14) {
        const double ratio = step / prev_step;
        r.contraction = std::max(r.contraction, ratio);
        if (ratio >= 1.0 && step > 64.0 * tol) {
          r.status = 2;
          return r;
        }
      }
      for (int i = 0; i < k1; ++i) x[i] = xn[i];
      if (step <= tol) {
        r.x = x;
        r.residual = step;
        return r;
      }
      prev_step = step;
    }
    r.status = 3;
    return r;
  }
};

}  // namespace

TransformResult backward_transform(const LocalMap& lm, const LipGraph& phi,
                                   const TransformOptions& opt, exec mode) {
  const int k1 = lm.split.k1, k2 = lm.split.k2;
  if (phi.k1 != k1 || phi.k2 != k2)
    throw error(errc::config, "backward_transform: graph/split dimension mismatch");

  const Conditions cond = check_conditions(lm.split, opt.gamma0, lm.delta, opt.epsilon);
  if (!cond.a || !cond.b)
    throw error(errc::config, "backward_transform: conditions (a)/(b) fail");
  double R_out = 0.0;
  switch (opt.mode) {
    case Mode::general:
      R_out = lm.R0;
      break;
    case Mode::shrink:
      if (!cond.c) throw error(errc::config, "backward_transform: condition (c) fails");
      if (phi.R > lm.R0 + 1e-12)
        throw error(errc::config, "backward_transform: shrink mode needs R <= R0");
      R_out = phi.R * std::exp(-opt.epsilon);
      break;
    case Mode::offset:
      if (!cond.d) throw error(errc::config, "backward_transform: condition (d) fails");
      if (phi.R > 0.5 * lm.R0 + 1e-12)
        throw error(errc::config, "backward_transform: offset mode needs R <= R0/2");
      R_out = phi.R * std::exp(-opt.epsilon);
      break;
  }

  FixSolver solver{lm.split.A, lm.split.A.inverse(), lm.g, phi.eval, phi.R,
                   k1, k2, opt.tol, opt.iter_cap};

  const auto pts = polydisc_grid(k2, R_out, opt.grid_pts);
  TransformResult out;
  out.psi.k1 = k1;
  out.psi.k2 = k2;
  out.psi.R = R_out;
  out.psi.grid_y.resize(pts.size() * k2);
  out.psi.grid_x.assign(pts.size() * k1, cplx{});
  out.psi.in_domain.assign(pts.size(), 0);

  std::vector<double> residual(pts.size(), 0.0), contraction(pts.size(), 0.0);
  std::vector<int> status(pts.size(), 0);
  const bool general = opt.mode == Mode::general;
  const int u_samples = opt.u_samples;

  par_for(pts.size(), [&](std::size_t i) {
    const auto& y = pts[i];
    for (int j = 0; j < k2; ++j) out.psi.grid_y[i * k2 + j] = y[j];
    if (general) {
      // Sampled containment test of g2 over L(y); conservative membership.
      const double yn = vnorm(y.data(), k2);
      std::array<cplx, 4> w{}, gv{};
      for (int t = 0; t < u_samples; ++t) {
        const double amp = yn * t / std::max(1, u_samples - 1);
        const cplx xval = std::polar(amp, 2.0 * M_PI * 0.618 * t);
        for (int j = 0; j < k1; ++j) w[j] = xval / std::sqrt(static_cast<double>(k1));
        for (int j = 0; j < k2; ++j) w[k1 + j] = y[j];
        lm.g(w.data(), gv.data());
        if (vnorm(gv.data() + k1, k2) > phi.R) {
          status[i] = 1;
          return;
        }
      }
    }
    const auto r = solver.solve(y.data());
    status[i] = r.status;
    if (r.status == 0) {
      for (int j = 0; j < k1; ++j) out.psi.grid_x[i * k1 + j] = r.x[j];
      residual[i] = r.residual;
      contraction[i] = r.contraction;
      out.psi.in_domain[i] = 1;
    }
  }, mode);

  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (status[i] == 2)
      throw error(errc::numerical,
                  "backward_transform: iteration not contracting (conditions violated)");
    if (status[i] == 3) throw error(errc::numerical, "backward_transform: iteration cap hit");
    if (status[i] == 1) {
      if (!general)
        throw error(errc::domain, "backward_transform: g2-image escapes the graph domain");
      ++out.outside_domain;
    }
    out.max_fixpoint_residual = std::max(out.max_fixpoint_residual, residual[i]);
    out.max_contraction = std::max(out.max_contraction, contraction[i]);
  }

  out.psi.eval = [solver](const cplx* y, cplx* x_out) {
    const auto r = solver.solve(y);
    if (r.status != 0) throw error(errc::domain, "graph evaluation outside its domain");
    for (int j = 0; j < solver.k1; ++j) x_out[j] = r.x[j];
  };
  out.psi.lip = measure_lip(out.psi.grid_y, out.psi.grid_x, out.psi.in_domain, k1, k2, 1000000);
  {
    std::vector<cplx> zero(k2, cplx{}), at0(k1);
    const auto r = solver.solve(zero.data());
    out.psi.psi0 = r.status == 0 ? vnorm(r.x.data(), k1) : 0.0;
  }
  return out;
}

VerifyReport verify_graph(const LocalMap& lm, const LipGraph& psi, const LipGraph& phi,
                          double gamma0, double tol, exec mode) {
  const int k1 = lm.split.k1, k2 = lm.split.k2;
  VerifyReport rep;
  rep.lip = psi.lip;
  rep.lip_ok = psi.lip <= gamma0 + 1e-12;
  rep.psi0 = psi.psi0;

  const std::size_t n = psi.points();
  std::vector<double> res(n, 0.0);
  std::vector<std::uint8_t> escaped(n, 0);
  par_for(n, [&](std::size_t i) {
    if (!psi.in_domain[i]) return;
    std::array<cplx, 4> w{}, gv{};
    std::array<cplx, 2> px{};
    for (int j = 0; j < k1; ++j) w[j] = psi.grid_x[i * k1 + j];
    for (int j = 0; j < k2; ++j) w[k1 + j] = psi.grid_y[i * k2 + j];
    lm.g(w.data(), gv.data());
    if (vnorm(gv.data() + k1, k2) > phi.R * (1.0 + 1e-9)) {
      escaped[i] = 1;
      return;
    }
    phi.eval(gv.data() + k1, px.data());
    double d = 0.0;
    for (int j = 0; j < k1; ++j) d += std::norm(gv[j] - px[j]);
    res[i] = std::sqrt(d);
  }, mode);
  for (std::size_t i = 0; i < n; ++i) {
    if (escaped[i])
      throw error(errc::domain, "verify_graph: g2-image escapes the target graph domain");
    rep.containment_residual = std::max(rep.containment_residual, res[i]);
  }
  (void)tol;
  return rep;
}

LipGraph taylorize(const LipGraph& g, int n_coef, int n_samples) {
  LipGraph out = g;
  const int k1 = g.k1;
  const double rs = g.R * 0.995;
  if (g.k2 == 1) {
    std::vector<cplx> samples(static_cast<std::size_t>(n_samples) * k1);
    std::vector<cplx> y(1), x(k1);
    for (int s = 0; s < n_samples; ++s) {
      y[0] = std::polar(rs, 2.0 * M_PI * s / n_samples);
      g.eval(y.data(), x.data());
      for (int j = 0; j < k1; ++j) samples[static_cast<std::size_t>(s) * k1 + j] = x[j];
    }
    std::vector<cplx> coef(static_cast<std::size_t>(n_coef) * k1, cplx{});
    for (int m = 0; m < n_coef; ++m) {
      for (int s = 0; s < n_samples; ++s) {
        const cplx tw = std::polar(1.0, -2.0 * M_PI * m * s / n_samples);
        for (int j = 0; j < k1; ++j)
          coef[static_cast<std::size_t>(m) * k1 + j] +=
              samples[static_cast<std::size_t>(s) * k1 + j] * tw;
      }
      const double scale = 1.0 / (n_samples * std::pow(rs, m));
      for (int j = 0; j < k1; ++j) coef[static_cast<std::size_t>(m) * k1 + j] *= scale;
    }
    out.eval = [coef, n_coef, k1](const cplx* yv, cplx* xv) {
      for (int j = 0; j < k1; ++j) {
        cplx acc = 0.0;
        for (int m = n_coef - 1; m >= 0; --m)
          acc = acc * yv[0] + coef[static_cast<std::size_t>(m) * k1 + j];
        xv[j] = acc;
      }
    };
    return out;
  }
  // k2 == 2: tensor coefficients from a torus sample.
  const int Ns = std::max(16, n_samples / 3);
  const int Nc = std::max(8, n_coef / 2);
  std::vector<cplx> samples(static_cast<std::size_t>(Ns) * Ns * k1);
  std::vector<cplx> y(2), x(k1);
  for (int s1 = 0; s1 < Ns; ++s1)
    for (int s2 = 0; s2 < Ns; ++s2) {
      y[0] = std::polar(rs, 2.0 * M_PI * s1 / Ns);
      y[1] = std::polar(rs, 2.0 * M_PI * s2 / Ns);
      g.eval(y.data(), x.data());
      for (int j = 0; j < k1; ++j)
        samples[(static_cast<std::size_t>(s1) * Ns + s2) * k1 + j] = x[j];
    }
  std::vector<cplx> coef(static_cast<std::size_t>(Nc) * Nc * k1, cplx{});
  for (int m1 = 0; m1 < Nc; ++m1)
    for (int m2 = 0; m2 < Nc; ++m2) {
      for (int s1 = 0; s1 < Ns; ++s1)
        for (int s2 = 0; s2 < Ns; ++s2) {
          const cplx tw = std::polar(1.0, -2.0 * M_PI * (m1 * s1 + m2 * s2) / Ns);
          for (int j = 0; j < k1; ++j)
            coef[(static_cast<std::size_t>(m1) * Nc + m2) * k1 + j] +=
                samples[(static_cast<std::size_t>(s1) * Ns + s2) * k1 + j] * tw;
        }
      const double scale = 1.0 / (static_cast<double>(Ns) * Ns * std::pow(rs, m1 + m2));
      for (int j = 0; j < k1; ++j)
        coef[(static_cast<std::size_t>(m1) * Nc + m2) * k1 + j] *= scale;
    }
  out.eval = [coef, Nc, k1](const cplx* yv, cplx* xv) {
    for (int j = 0; j < k1; ++j) {
      cplx acc = 0.0;
      for (int m1 = Nc - 1; m1 >= 0; --m1) {
        cplx inner = 0.0;
        for (int m2 = Nc - 1; m2 >= 0; --m2)
          inner = inner * yv[1] + coef[(static_cast<std::size_t>(m1) * Nc + m2) * k1 + j];
        acc = acc * yv[0] + inner;
      }
      xv[j] = acc;
    }
  };
  return out;
}

LipGraph graph_from(int k1, int k2, double R, std::function<void(const cplx*, cplx*)> eval,
                    int grid_pts, std::uint64_t lip_pair_cap) {
  LipGraph g;
  g.k1 = k1;
  g.k2 = k2;
  g.R = R;
  g.eval = std::move(eval);
  const auto pts = polydisc_grid(k2, R, grid_pts);
  g.grid_y.reserve(pts.size() * k2);
  g.grid_x.resize(pts.size() * k1);
  g.in_domain.assign(pts.size(), 1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int j = 0; j < k2; ++j) g.grid_y.push_back(pts[i][j]);
    g.eval(pts[i].data(), g.grid_x.data() + i * k1);
  }
  g.lip = measure_lip(g.grid_y, g.grid_x, g.in_domain, k1, k2, lip_pair_cap);
  std::vector<cplx> zero(k2, cplx{});
  std::vector<cplx> at0(k1);
  g.eval(zero.data(), at0.data());
  g.psi0 = vnorm(at0.data(), k1);
  return g;
}

LipGraph zero_graph(int k1, int k2, double R, int grid_pts) {
  return graph_from(k1, k2, R,
                    [k1](const cplx*, cplx* out) {
                      for (int i = 0; i < k1; ++i) out[i] = 0.0;
                    },
                    grid_pts);
}

ChainResult transform_chain(std::span<const LocalMap> maps, const LipGraph& phi_n,
                            const TransformOptions& opt, exec mode) {
  if (maps.empty()) throw error(errc::config, "transform_chain: empty chain");
  if (opt.mode == Mode::general)
    throw error(errc::config, "transform_chain: chain requires shrink or offset mode");
  ChainResult out;
  LipGraph cur = phi_n;
  for (int i = static_cast<int>(maps.size()) - 1; i >= 0; --i) {
    TransformResult tr;
    try {
      tr = backward_transform(maps[i], cur, opt, mode);
    } catch (const error& e) {
      throw error(e.code(), "transform_chain: step " + std::to_string(i) + ": " + e.what());
    }
    LipGraph rep = taylorize(tr.psi);
    const VerifyReport v = verify_graph(maps[i], rep, cur, opt.gamma0, opt.tol, mode);
    out.log.push_back({i, rep.R, v.lip, v.containment_residual, v.psi0});
    cur = std::move(rep);
  }
  std::reverse(out.log.begin(), out.log.end());
  out.psi0 = std::move(cur);
  return out;
}

}  // namespace holodyn::gt
