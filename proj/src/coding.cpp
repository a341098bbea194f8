#include "holodyn/coding.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>

#include "holodyn/errors.hpp"

namespace holodyn::coding {

using dyn::chordal;
using dyn::cplx;
using dyn::embed;
using dyn::slerp;
using dyn::unembed;
using dyn::Vec3;

double Path::diameter() const {
  // Stride down very dense polylines; endpoints always participate.
  const std::size_t n = pts.size();
  const std::size_t stride = n > 256 ? n / 256 + 1 : 1;
  std::vector<const SpherePoint*> sel;
  for (std::size_t i = 0; i < n; i += stride) sel.push_back(&pts[i]);
  if ((n - 1) % stride != 0) sel.push_back(&pts[n - 1]);
  double d = 0.0;
  for (std::size_t i = 0; i < sel.size(); ++i)
    for (std::size_t j = i + 1; j < sel.size(); ++j)
      d = std::max(d, chordal(*sel[i], *sel[j]));
  return d;
}

Path geodesic(const SpherePoint& a, const SpherePoint& b, double step_max) {
  const Vec3 u = embed(a), v = embed(b);
  double dot = std::clamp(u.x * v.x + u.y * v.y + u.z * v.z, -1.0, 1.0);
  const double ang = std::acos(dot);
  const int segs = std::max(1, static_cast<int>(std::ceil(ang / step_max)));
  Path p;
  p.t.reserve(segs + 1);
  p.pts.reserve(segs + 1);
  for (int i = 0; i <= segs; ++i) {
    const double t = static_cast<double>(i) / segs;
    p.t.push_back(t);
    if (i == 0)
      p.pts.push_back(a);
    else if (i == segs)
      p.pts.push_back(b);
    else
      p.pts.push_back(slerp(a, b, t));
  }
  return p;
}

namespace {

std::optional<SpherePoint> newton_solve(const RationalMap& f, const SpherePoint& target,
                                        SpherePoint w, double tol, int iters) {
  const int tgt = (target.inf || std::abs(target.z) > 1.0) ? 1 : 0;
  const cplx vt = target.inf ? cplx{} : (tgt ? 1.0 / target.z : target.z);
  for (int it = 0; it < iters; ++it) {
    SpherePoint fw;
    try {
      fw = f.eval(w);
    } catch (const error&) {
      return std::nullopt;
    }
    if (chordal(fw, target) <= tol) return w;
    const int src = (w.inf || std::abs(w.z) > 1.0) ? 1 : 0;
    const cplx u0 = w.inf ? cplx{} : (src ? 1.0 / w.z : w.z);
    const auto& g = f.chart(src, tgt);
    const cplx P = g.num.eval(u0), Q = g.den.eval(u0);
    const cplx dP = g.dnum.eval(u0), dQ = g.dden.eval(u0);
    const cplx wron = dP * Q - P * dQ;
    if (std::abs(wron) < 1e-250) return std::nullopt;  // derivative collapse
    const cplx u1 = u0 - (P - vt * Q) * Q / wron;
    if (src) {
      w = std::abs(u1) < 1e-300 ? SpherePoint::infinity() : SpherePoint::of(1.0 / u1);
    } else {
      w = SpherePoint::of(u1);
    }
  }
  return std::nullopt;
}

SpherePoint predict(const RationalMap& f, const SpherePoint& cur, const SpherePoint& va,
                    const SpherePoint& vb) {
  if (cur.inf || va.inf || vb.inf) return cur;
  if (std::abs(cur.z) > 4.0 || std::abs(va.z) > 4.0 || std::abs(vb.z) > 4.0) return cur;
  const cplx der = f.derivative_plane(cur.z);
  if (std::abs(der) < 1e-8) return cur;
  return SpherePoint::of(cur.z + (vb.z - va.z) / der);
}

void decimate(Path& p, double step_max) {
  if (p.pts.size() <= 2) return;
  Path out;
  out.t.push_back(p.t.front());
  out.pts.push_back(p.pts.front());
  for (std::size_t i = 1; i + 1 < p.pts.size(); ++i) {
    if (chordal(out.pts.back(), p.pts[i + 1]) > step_max) {
      out.t.push_back(p.t[i]);
      out.pts.push_back(p.pts[i]);
    }
  }
  out.t.push_back(p.t.back());
  out.pts.push_back(p.pts.back());
  p = std::move(out);
}

}  // namespace

Path lift_path(const RationalMap& f, const Path& eta, const SpherePoint& start,
               const LiftOptions& opt) {
  if (eta.pts.empty()) throw error(errc::config, "lift_path: empty path");
  if (chordal(f.eval(start), eta.pts.front()) > 1e-8)
    throw error(errc::config, "lift_path: start does not project onto the path start");
  if (f.spherical_derivative(start) < opt.crit_floor)
    throw error(errc::lift_failed, "lift_path: start is critically degenerate");

  Path raw;
  raw.t.push_back(eta.t.front());
  raw.pts.push_back(start);
  SpherePoint cur = start;
  double t_cur = eta.t.front();
  SpherePoint v_cur = eta.pts.front();

  for (std::size_t seg = 0; seg + 1 < eta.pts.size(); ++seg) {
    // Pending targets for this segment, nearest on top.
    std::vector<std::pair<double, SpherePoint>> stack;
    stack.emplace_back(eta.t[seg + 1], eta.pts[seg + 1]);
    while (!stack.empty()) {
      const auto [t_next, v_next] = stack.back();
      const SpherePoint guess = predict(f, cur, v_cur, v_next);
      const auto sol = newton_solve(f, v_next, guess, opt.newton_tol, opt.newton_iters);
      bool accept = sol.has_value();
      double move = 0.0;
      if (accept) {
        move = chordal(cur, *sol);
        if (move > std::max(opt.step_max, 1e-7)) accept = false;  // resolution / jump guard
      }
      if (!accept) {
        if (t_next - t_cur < opt.step_min)
          throw error(errc::lift_failed, "lift_path: step floor reached (near a critical point)");
        stack.emplace_back(0.5 * (t_cur + t_next), slerp(v_cur, v_next, 0.5));
        continue;
      }
      stack.pop_back();
      cur = *sol;
      if (f.spherical_derivative(cur) < opt.crit_floor)
        throw error(errc::lift_failed, "lift_path: lift approaches the critical set");
      t_cur = t_next;
      v_cur = v_next;
      raw.t.push_back(t_cur);
      raw.pts.push_back(cur);
    }
  }

  // Polish the endpoint so the compatibility identity holds tightly.
  if (auto polished = newton_solve(f, eta.pts.back(), raw.pts.back(), opt.endpoint_tol, 6))
    raw.pts.back() = *polished;
  decimate(raw, opt.step_max);
  return raw;
}

namespace {

double min_dist_to_set(const SpherePoint& p, std::span<const SpherePoint> set) {
  double d = std::numeric_limits<double>::infinity();
  for (const SpherePoint& q : set) d = std::min(d, chordal(p, q));
  return d;
}

double path_clearance(const Path& p, std::span<const SpherePoint> set) {
  double d = std::numeric_limits<double>::infinity();
  for (const SpherePoint& x : p.pts) d = std::min(d, min_dist_to_set(x, set));
  return d;
}

Path concat(const Path& a, const Path& b) {
  Path out = a;
  // Reparametrise to [0, 1]: a on [0, 1/2], b on [1/2, 1].
  for (double& t : out.t) t *= 0.5;
  for (std::size_t i = 1; i < b.pts.size(); ++i) {
    out.t.push_back(0.5 + 0.5 * b.t[i]);
    out.pts.push_back(b.pts[i]);
  }
  return out;
}

}  // namespace

BasePaths build_base_paths(const Map& map, const Pt& z, const BasePathOptions& opt, Rng& rng) {
  BasePaths bp;
  bp.postcritical = map.postcritical(opt.postcritical_depth);
  bp.min_clearance = std::numeric_limits<double>::infinity();
  bp.per_factor.resize(map.k());

  for (int fi = 0; fi < map.k(); ++fi) {
    const RationalMap& f = map.factor(fi);
    const auto& post = bp.postcritical[fi];
    const SpherePoint zf = z.factor(fi);

    if (min_dist_to_set(zf, post) < opt.clearance)
      throw error(errc::base_point_rejected,
                  "base point within clearance of the postcritical set; pick a new random z");
    const auto pre = f.preimages(zf);
    if (pre.critical_value)
      throw error(errc::base_point_rejected, "base point is a critical value; pick a new random z");

    for (const SpherePoint& w : pre.pts) {
      if (min_dist_to_set(w, post) < opt.clearance)
        throw error(errc::base_point_rejected,
                    "a preimage of the base point lies within clearance of the postcritical set");
      Path path = geodesic(zf, w, opt.step_max);
      double clear = path_clearance(path, post);
      if (clear < opt.clearance) {
        bool found = false;
        const SpherePoint mid = slerp(zf, w, 0.5);
        for (int attempt = 0; attempt < opt.detour_tries; ++attempt) {
          const Vec3 m = embed(mid);
          Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
          const double dn = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
          const double amp = rng.uniform(0.35, 1.1);
          Vec3 c{m.x + amp * dir.x / dn, m.y + amp * dir.y / dn, m.z + amp * dir.z / dn};
          const double cn = std::sqrt(c.x * c.x + c.y * c.y + c.z * c.z);
          const SpherePoint via = unembed({c.x / cn, c.y / cn, c.z / cn});
          Path cand = concat(geodesic(zf, via, opt.step_max), geodesic(via, w, opt.step_max));
          const double cc = path_clearance(cand, post);
          if (cc >= opt.clearance) {
            path = std::move(cand);
            clear = cc;
            ++bp.detours_used;
            found = true;
            break;
          }
        }
        if (!found)
          throw error(errc::base_point_rejected,
                      "no base path clears the postcritical set after detours; pick a new random z");
      }
      bp.min_clearance = std::min(bp.min_clearance, clear);
      bp.per_factor[fi].push_back(std::move(path));
    }
  }
  return bp;
}

CodingTree::CodingTree(Map map, Pt z, BasePaths base) : map_(std::move(map)), z_(z) {
  factors_.reserve(map_.k());
  for (int fi = 0; fi < map_.k(); ++fi) {
    factors_.push_back(Factor(map_.factor(fi)));
    Factor& F = factors_.back();
    F.z = z.factor(fi);
    F.base = std::move(base.per_factor[fi]);
    const int d = map_.degree();
    if (static_cast<int>(F.base.size()) != d)
      throw error(errc::config, "coding tree: expected one base path per preimage");
    F.nodes.resize(2);
    F.diam.resize(2);
    F.ok.resize(2);
    F.nodes[1].resize(d);
    F.diam[1].resize(d);
    F.ok[1].assign(d, 1);
    for (int a = 0; a < d; ++a) {
      F.nodes[1][a] = F.base[a].end();
      F.diam[1][a] = F.base[a].diameter();
    }
    F.last_paths = F.base;
  }
  depth_ = 1;
}

void CodingTree::extend_level(exec mode) {
  const int n = depth_;
  const int d = map_.degree();
  const std::uint64_t prev = factor_level_size(n);
  const std::uint64_t count = prev * d;

  for (Factor& F : factors_) {
    std::vector<SpherePoint> nodes(count);
    std::vector<double> diam(count, 0.0);
    std::vector<std::uint8_t> ok(count, 0);
    std::vector<Path> paths(count);
    par_for(count, [&](std::size_t idx) {
      const std::uint64_t head = idx / d;
      const std::uint64_t tail = idx % prev;
      if (!F.ok[n][head] || !F.ok[n][tail]) return;
      try {
        Path lifted = lift_path(F.f, F.last_paths[tail], F.nodes[n][head], lift_opt_);
        nodes[idx] = lifted.end();
        diam[idx] = lifted.diameter();
        paths[idx] = std::move(lifted);
        ok[idx] = 1;
      } catch (const error&) {
        ok[idx] = 0;  // flagged and excluded; level reported incomplete
      }
    }, mode);
    F.nodes.push_back(std::move(nodes));
    F.diam.push_back(std::move(diam));
    F.ok.push_back(std::move(ok));
    F.last_paths = std::move(paths);
  }
  ++depth_;
}

void CodingTree::extend_to(int depth, exec mode) {
  while (depth_ < depth) extend_level(mode);
}

std::uint64_t CodingTree::factor_level_size(int n) const {
  std::uint64_t s = 1;
  for (int i = 0; i < n; ++i) s *= map_.degree();
  return s;
}

std::uint64_t CodingTree::level_size(int n) const {
  std::uint64_t s = 1;
  for (int i = 0; i < n; ++i) s *= map_.alphabet();
  return s;
}

std::uint64_t CodingTree::pack(std::span<const int> word, int alphabet) {
  std::uint64_t idx = 0;
  for (int s : word) idx = idx * alphabet + s;
  return idx;
}

std::vector<int> CodingTree::unpack(std::uint64_t idx, int n, int alphabet) {
  std::vector<int> w(n);
  for (int i = n - 1; i >= 0; --i) {
    w[i] = static_cast<int>(idx % alphabet);
    idx /= alphabet;
  }
  return w;
}

std::uint64_t CodingTree::factor_index(std::uint64_t word_idx, int n, int factor) const {
  if (map_.k() == 1) return word_idx;
  const int M = map_.alphabet(), d = map_.degree();
  std::uint64_t out = 0;
  // Decode big-endian product symbols, project, repack.
  std::uint64_t pow = 1;
  for (int i = 1; i < n; ++i) pow *= M;
  for (int i = 0; i < n; ++i) {
    const int sym = static_cast<int>((word_idx / pow) % M);
    const int fs = factor == 0 ? sym / d : sym % d;
    out = out * d + fs;
    pow /= M;
  }
  return out;
}

Pt CodingTree::node(int n, std::uint64_t word_idx) const {
  if (map_.k() == 1) return Pt::one(factors_[0].nodes[n][word_idx]);
  return Pt::two(factors_[0].nodes[n][factor_index(word_idx, n, 0)],
                 factors_[1].nodes[n][factor_index(word_idx, n, 1)]);
}

bool CodingTree::node_ok(int n, std::uint64_t word_idx) const {
  for (int fi = 0; fi < map_.k(); ++fi)
    if (!factors_[fi].ok[n][factor_index(word_idx, n, fi)]) return false;
  return true;
}

double CodingTree::node_diameter(int n, std::uint64_t word_idx) const {
  double d = 0.0;
  for (int fi = 0; fi < map_.k(); ++fi)
    d = std::max(d, factors_[fi].diam[n][factor_index(word_idx, n, fi)]);
  return d;
}

SpherePoint CodingTree::factor_node(int factor, int n, std::uint64_t factor_idx) const {
  return factors_[factor].nodes[n][factor_idx];
}

double CodingTree::factor_diameter(int factor, int n, std::uint64_t factor_idx) const {
  return factors_[factor].diam[n][factor_idx];
}

bool CodingTree::level_complete(int n) const { return failed_nodes(n) == 0; }

std::uint64_t CodingTree::failed_nodes(int n) const {
  std::uint64_t bad = 0;
  for (const Factor& F : factors_)
    for (std::uint8_t o : F.ok[n])
      if (!o) ++bad;
  return bad;
}

BranchSampler::BranchSampler(const Map& map, const BasePaths& base, LiftOptions opt)
    : map_(map), base_(base), opt_(opt) {}

Pt BranchSampler::sample(std::span<const int> word) const {
  const int n = static_cast<int>(word.size());
  const int d = map_.degree();
  Pt out;
  out.k = map_.k();
  for (int fi = 0; fi < map_.k(); ++fi) {
    std::vector<int> fw(n);
    for (int i = 0; i < n; ++i)
      fw[i] = map_.k() == 1 ? word[i] : (fi == 0 ? word[i] / d : word[i] % d);

    // Suffix chain: P[i] is the stored path of the subword starting at i.
    std::vector<Path> P;
    std::vector<SpherePoint> N;
    P.reserve(n);
    N.reserve(n);
    for (int i = 0; i < n; ++i) {
      P.push_back(base_.per_factor[fi][fw[i]]);
      N.push_back(P.back().end());
    }
    for (int j = 2; j <= n; ++j) {
      for (int i = 0; i + j <= n; ++i) {
        Path lifted = lift_path(map_.factor(fi), P[i + 1], N[i], opt_);
        N[i] = lifted.end();
        P[i] = std::move(lifted);
      }
      P.resize(n - j + 1);
      N.resize(n - j + 1);
    }
    out.factor(fi) = N[0];
  }
  return out;
}

LevelStats level_diameter_stats(const CodingTree& tree, int level, double theta, double c,
                                double rho, const shift::GibbsMeasure* nu, double tau,
                                double c_tau, std::uint64_t cap) {
  if (level < 1 || level > tree.depth())
    throw error(errc::config, "level_diameter_stats: level not built");
  const std::uint64_t count = tree.level_size(level);
  if (count > cap) throw error(errc::config, "level_diameter_stats: level exceeds enumeration cap");
  const int d = tree.map().degree(), k = tree.map().k(), M = tree.alphabet();

  LevelStats st;
  st.level = level;
  const int n = level - 1;  // bound exponents use the previous level
  st.threshold = c * std::pow(static_cast<double>(d), -rho * n);
  st.card_bound = std::pow(static_cast<double>(d), k * level - theta * n);
  st.mass_bound = c_tau * std::exp(-tau * n);
  st.nodes = count;

  std::vector<double> diams;
  diams.reserve(count);
  shift::Word w;
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const double dia = tree.node_diameter(level, idx);
    diams.push_back(dia);
    st.max_diameter = std::max(st.max_diameter, dia);
    if (dia > st.threshold) {
      ++st.card_bad;
      if (nu) {
        auto wi = CodingTree::unpack(idx, level, M);
        w.assign(wi.begin(), wi.end());
        st.bad_mass += nu->cylinder_mass(w);
      }
    }
  }
  std::nth_element(diams.begin(), diams.begin() + diams.size() / 2, diams.end());
  st.median_diameter = diams[diams.size() / 2];
  st.card_ok = static_cast<double>(st.card_bad) <= st.card_bound;
  st.mass_ok = !nu || tau <= 0.0 || st.bad_mass <= st.mass_bound;
  return st;
}

DecayFit fit_diameter_decay(const CodingTree& tree, int level_lo, int level_hi) {
  DecayFit fit;
  level_hi = std::min(level_hi, tree.depth());
  if (level_hi - level_lo < 1) return fit;
  std::vector<double> xs, ys;
  for (int n = level_lo; n <= level_hi; ++n) {
    std::vector<double> diams;
    for (int fi = 0; fi < tree.map().k(); ++fi) {
      const std::uint64_t count = tree.factor_level_size(n);
      for (std::uint64_t i = 0; i < count; ++i) diams.push_back(tree.factor_diameter(fi, n, i));
    }
    std::nth_element(diams.begin(), diams.begin() + diams.size() / 2, diams.end());
    const double med = diams[diams.size() / 2];
    if (med > 0.0) {
      xs.push_back(n);
      ys.push_back(std::log(med));
    }
  }
  if (xs.size() < 2) return fit;
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icept = (sy - slope * sx) / n;
  fit.rho = -slope / std::log(static_cast<double>(tree.map().degree()));
  fit.c = std::exp(icept);
  fit.ok = fit.rho > 0.0;
  return fit;
}

bool branching_cardinality_check(std::span<const std::vector<int>> leaves, int alphabet,
                                 int depth, int* s_out) {
  if (leaves.empty()) {
    if (s_out) *s_out = 0;
    return true;
  }
  // Children present under each prefix, level by level.
  std::vector<std::map<std::uint64_t, std::uint64_t>> kids(depth);  // prefix -> child bitmask
  for (const auto& leaf : leaves) {
    std::uint64_t prefix = 0;
    for (int l = 0; l < depth; ++l) {
      kids[l][prefix] |= (1ull << leaf[l]);
      prefix = prefix * alphabet + leaf[l];
    }
  }
  auto popcount = [](std::uint64_t x) { return __builtin_popcountll(x); };
  int s = 0;
  for (const auto& leaf : leaves) {
    int count = 0;
    std::uint64_t prefix = 0;
    for (int l = 0; l < depth; ++l) {
      if (popcount(kids[l].at(prefix)) >= 2) ++count;
      prefix = prefix * alphabet + leaf[l];
    }
    s = std::max(s, count);
  }
  if (s_out) *s_out = s;
  // Deduplicate leaves for the cardinality.
  std::vector<std::uint64_t> packed;
  packed.reserve(leaves.size());
  for (const auto& leaf : leaves)
    packed.push_back(CodingTree::pack(leaf, alphabet));
  std::sort(packed.begin(), packed.end());
  packed.erase(std::unique(packed.begin(), packed.end()), packed.end());
  return static_cast<double>(packed.size()) <= std::pow(static_cast<double>(alphabet), s) + 0.5;
}

double level_min_separation(const CodingTree& tree, int n, std::uint64_t cap) {
  const std::uint64_t count = tree.level_size(n);
  const std::uint64_t stride = count > cap ? count / cap + 1 : 1;
  std::vector<Pt> pts;
  for (std::uint64_t i = 0; i < count; i += stride)
    if (tree.node_ok(n, i)) pts.push_back(tree.node(n, i));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, dyn::chordal_pt(pts[i], pts[j]));
  return best;
}

}  // namespace holodyn::coding
