#include "holodyn/measures.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "holodyn/errors.hpp"

namespace holodyn::meas {

using dyn::chordal_pt;
using dyn::cplx;
using dyn::embed;
using dyn::SpherePoint;
using dyn::Vec3;

double AtomicMeasure::total() const {
  return pairwise_sum(std::span<const double>(w.data(), w.size()));
}

AtomicMeasure pushforward_measure(const coding::CodingTree& tree, int n,
                                  const shift::GibbsMeasure& nu, std::uint64_t cap,
                                  exec mode) {
  if (n < 1 || n > tree.depth()) throw error(errc::config, "pushforward: level not built");
  const std::uint64_t count = tree.level_size(n);
  if (count > cap) throw error(errc::config, "pushforward: level exceeds atom cap");
  const int M = tree.alphabet();
  if (nu.alphabet() != M) throw error(errc::config, "pushforward: alphabet mismatch");

  if (!tree.level_complete(n)) {
    std::string failed;
    std::uint64_t listed = 0;
    for (std::uint64_t i = 0; i < count && listed < 16; ++i)
      if (!tree.node_ok(n, i)) {
        auto w = coding::CodingTree::unpack(i, n, M);
        failed += (listed ? " " : "") + shift::word_string(shift::Word(w.begin(), w.end()), M);
        ++listed;
      }
    throw error(errc::domain, "pushforward: incomplete level, failed words: " + failed);
  }

  AtomicMeasure out;
  out.k = tree.map().k();
  out.atoms.resize(count);
  out.w.resize(count);
  par_for(count, [&](std::size_t i) {
    out.atoms[i] = tree.node(n, i);
    auto wi = coding::CodingTree::unpack(i, n, M);
    out.w[i] = nu.cylinder_mass(shift::Word(wi.begin(), wi.end()));
  }, mode);
  return out;
}

SampleCloud sample_cloud(const coding::CodingTree& tree, int n, const shift::GibbsMeasure& nu,
                         std::size_t count, std::uint64_t seed, exec mode) {
  if (n < 1 || n > tree.depth()) throw error(errc::config, "sample_cloud: level not built");
  SampleCloud out;
  out.seed = seed;
  out.depth = n;
  out.k = tree.map().k();
  out.pts.resize(count);
  const int M = tree.alphabet();
  std::vector<std::uint8_t> bad(count, 0);
  par_for(count, [&](std::size_t i) {
    Rng rng(substream_seed(seed, "cloud", i));
    const shift::Word w = nu.sample_word(n, rng);
    const std::uint64_t idx = coding::CodingTree::pack(w, M);
    if (!tree.node_ok(n, idx)) {
      bad[i] = 1;
      return;
    }
    out.pts[i] = tree.node(n, idx);
  }, mode);
  for (std::uint8_t b : bad)
    if (b) throw error(errc::domain, "sample_cloud: sampled word hit a failed node");
  return out;
}

SampleCloud sample_cloud_branch(const coding::BranchSampler& sampler, const Map& map, int n,
                                const shift::GibbsMeasure& nu, std::size_t count,
                                std::uint64_t seed, exec mode) {
  SampleCloud out;
  out.seed = seed;
  out.depth = n;
  out.k = map.k();
  out.pts.resize(count);
  std::vector<std::uint8_t> bad(count, 0);
  par_for(count, [&](std::size_t i) {
    Rng rng(substream_seed(seed, "cloud", i));
    const shift::Word w = nu.sample_word(n, rng);
    try {
      out.pts[i] = sampler.sample(w);
    } catch (const error&) {
      bad[i] = 1;
    }
  }, mode);
  for (std::uint8_t b : bad)
    if (b) throw error(errc::lift_failed, "sample_cloud_branch: a branch lift failed");
  return out;
}

namespace {

// Equatorial coordinate of the embedding: sigma(z) = 2z/(1+|z|^2), so
// |sigma| <= 1, Lip <= 1 in the chordal metric, and sigma = z on |z| = 1.
cplx sigma_coord(const SpherePoint& p) {
  const Vec3 v = embed(p);
  return {v.x, v.y};
}

}  // namespace

std::vector<TestFun> test_family(int k, int max_moment, int bumps, std::uint64_t seed) {
  std::vector<TestFun> fam;
  for (int f = 0; f < k; ++f) {
    for (int m = 1; m <= max_moment; ++m) {
      fam.push_back({"re_s" + std::to_string(f + 1) + "^" + std::to_string(m),
                     [f, m](const Pt& p) {
                       return std::pow(sigma_coord(p.factor(f)), m).real();
                     }});
      fam.push_back({"im_s" + std::to_string(f + 1) + "^" + std::to_string(m),
                     [f, m](const Pt& p) {
                       return std::pow(sigma_coord(p.factor(f)), m).imag();
                     }});
    }
  }
  if (k == 2) {
    for (int a = 1; a <= 2; ++a)
      for (int b = 1; b <= 2; ++b) {
        fam.push_back({"re_s1^" + std::to_string(a) + "s2^" + std::to_string(b),
                       [a, b](const Pt& p) {
                         return (std::pow(sigma_coord(p.a), a) * std::pow(sigma_coord(p.b), b))
                             .real();
                       }});
      }
  }
  Rng rng(substream_seed(seed, "bumps"));
  for (int j = 0; j < bumps; ++j) {
    Pt c;
    c.k = k;
    for (int f = 0; f < k; ++f) {
      Vec3 v{rng.normal(), rng.normal(), rng.normal()};
      const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
      c.factor(f) = dyn::unembed({v.x / n, v.y / n, v.z / n});
    }
    const double r = rng.uniform(0.2, 0.8);
    fam.push_back({"bump" + std::to_string(j),
                   [c, r](const Pt& p) {
                     const double d = chordal_pt(p, c) / r;
                     return std::exp(-d * d);
                   }});
  }
  return fam;
}

std::vector<TestFun> plane_moment_family(int k, int max_moment) {
  std::vector<TestFun> fam;
  for (int f = 0; f < k; ++f)
    for (int m = 1; m <= max_moment; ++m) {
      fam.push_back({"re_z" + std::to_string(f + 1) + "^" + std::to_string(m),
                     [f, m](const Pt& p) {
                       const SpherePoint& s = p.factor(f);
                       return s.inf ? 0.0 : std::pow(s.z, m).real();
                     }});
      fam.push_back({"im_z" + std::to_string(f + 1) + "^" + std::to_string(m),
                     [f, m](const Pt& p) {
                       const SpherePoint& s = p.factor(f);
                       return s.inf ? 0.0 : std::pow(s.z, m).imag();
                     }});
    }
  return fam;
}

double integrate(const MeasureView& m, const TestFun& f, exec mode) {
  std::vector<double> slots(m.size());
  par_for(m.size(), [&](std::size_t i) { slots[i] = m.weight(i) * f.f(m.pts[i]); }, mode);
  return pairwise_sum(slots);
}

double invariance_defect(const Map& map, const AtomicMeasure& nu_next, const AtomicMeasure& nu,
                         std::span<const TestFun> family, exec mode) {
  // Push the deeper level forward once, then compare test integrals.
  std::vector<Pt> pushed(nu_next.atoms.size());
  par_for(pushed.size(), [&](std::size_t i) { pushed[i] = map.eval(nu_next.atoms[i]); }, mode);
  MeasureView a{pushed, nu_next.w};
  MeasureView b = MeasureView::of(nu);
  double worst = 0.0;
  for (const TestFun& f : family)
    worst = std::max(worst, std::abs(integrate(a, f, mode) - integrate(b, f, mode)));
  return worst;
}

double self_invariance_defect(const Map& map, const MeasureView& nu,
                              std::span<const TestFun> family, exec mode) {
  std::vector<Pt> pushed(nu.size());
  par_for(nu.size(), [&](std::size_t i) { pushed[i] = map.eval(nu.pts[i]); }, mode);
  MeasureView a{pushed, nu.w};
  double worst = 0.0;
  for (const TestFun& f : family)
    worst = std::max(worst, std::abs(integrate(a, f, mode) - integrate(nu, f, mode)));
  return worst;
}

double convergence_diagnostic(const MeasureView& a, const MeasureView& b,
                              std::span<const TestFun> family, exec mode) {
  double worst = 0.0;
  for (const TestFun& f : family)
    worst = std::max(worst, std::abs(integrate(a, f, mode) - integrate(b, f, mode)));
  return worst;
}

double DensityGrid::in_window() const {
  return pairwise_sum(std::span<const double>(mass.data(), mass.size()));
}

namespace {

DensityGrid histogram(const MeasureView& m, const GridWindow& win, int nx, int ny,
                      const std::function<bool(const Pt&, double&, double&)>& coords) {
  DensityGrid g;
  g.x0 = win.x0;
  g.x1 = win.x1;
  g.y0 = win.y0;
  g.y1 = win.y1;
  g.nx = nx;
  g.ny = ny;
  g.mass.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    double x, y;
    const double w = m.weight(i);
    if (!coords(m.pts[i], x, y)) {
      g.overflow += w;
      continue;
    }
    const int ix = static_cast<int>(std::floor((x - win.x0) / (win.x1 - win.x0) * nx));
    const int iy = static_cast<int>(std::floor((y - win.y0) / (win.y1 - win.y0) * ny));
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) {
      g.overflow += w;
      continue;
    }
    g.mass[static_cast<std::size_t>(iy) * nx + ix] += w;
  }
  return g;
}

}  // namespace

std::vector<std::pair<std::string, DensityGrid>> density_grids(const MeasureView& m,
                                                               const GridWindow& win, int nx,
                                                               int ny) {
  if (nx < 1 || ny < 1) throw error(errc::config, "density grid: resolution must be >= 1x1");
  std::vector<std::pair<std::string, DensityGrid>> out;
  const bool product = !m.pts.empty() && m.pts.front().k == 2;
  auto plane = [](int f) {
    return [f](const Pt& p, double& x, double& y) {
      const SpherePoint& s = p.factor(f);
      if (s.inf) return false;
      x = s.z.real();
      y = s.z.imag();
      return true;
    };
  };
  if (!product) {
    out.emplace_back("plane", histogram(m, win, nx, ny, plane(0)));
    return out;
  }
  out.emplace_back("factor1", histogram(m, win, nx, ny, plane(0)));
  out.emplace_back("factor2", histogram(m, win, nx, ny, plane(1)));
  GridWindow mod{0.0, std::max(win.x1, win.y1), 0.0, std::max(win.x1, win.y1)};
  out.emplace_back("joint_mod", histogram(m, mod, nx, ny, [](const Pt& p, double& x, double& y) {
                     if (p.a.inf || p.b.inf) return false;
                     x = std::abs(p.a.z);
                     y = std::abs(p.b.z);
                     return true;
                   }));
  return out;
}

}  // namespace holodyn::meas
