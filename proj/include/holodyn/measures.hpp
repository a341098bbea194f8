#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "holodyn/coding.hpp"
#include "holodyn/dynamics.hpp"
#include "holodyn/parallel.hpp"
#include "holodyn/shift.hpp"

namespace holodyn::meas {

using dyn::Map;
using dyn::Pt;

// Finite weighted point set; weights sum to 1.
struct AtomicMeasure {
  std::vector<Pt> atoms;
  std::vector<double> w;
  int k = 1;

  double total() const;
};

// Level-n pushforward: one atom per word with its cylinder mass. Throws
// error(errc::domain) listing failed words when the level is incomplete.
AtomicMeasure pushforward_measure(const coding::CodingTree& tree, int n,
                                  const shift::GibbsMeasure& nu,
                                  std::uint64_t cap = 4000000,
                                  exec mode = default_exec());

// Unweighted draws of z_n(word) with word ~ nu. Reproducible from the seed.
struct SampleCloud {
  std::vector<Pt> pts;
  std::uint64_t seed = 0;
  int depth = 0;
  int k = 1;
};
SampleCloud sample_cloud(const coding::CodingTree& tree, int n,
                         const shift::GibbsMeasure& nu, std::size_t count,
                         std::uint64_t seed, exec mode = default_exec());
// Same draws without an enumerated tree (suffix-chain lifts per sample).
SampleCloud sample_cloud_branch(const coding::BranchSampler& sampler, const Map& map,
                                int n, const shift::GibbsMeasure& nu, std::size_t count,
                                std::uint64_t seed, exec mode = default_exec());

// Uniform view over atoms-with-weights or equal-weight sample points.
struct MeasureView {
  std::span<const Pt> pts;
  std::span<const double> w;  // empty => uniform 1/size

  static MeasureView of(const AtomicMeasure& m) { return {m.atoms, m.w}; }
  static MeasureView of(const SampleCloud& c) { return {c.pts, {}}; }
  std::size_t size() const { return pts.size(); }
  double weight(std::size_t i) const {
    return w.empty() ? 1.0 / static_cast<double>(pts.size()) : w[i];
  }
};

struct TestFun {
  std::string name;
  std::function<double(const Pt&)> f;
};

// Bounded Lipschitz dictionary: moments of the equatorial coordinate of the
// sphere embedding (they agree with plane moments z^m on the unit circle) and
// seeded bump functions. For k = 2, per-factor moments plus joint products.
std::vector<TestFun> test_family(int k, int max_moment = 6, int bumps = 20,
                                 std::uint64_t seed = 7);
// Plane moments Re/Im z^m in the affine chart (unbounded near infinity);
// appropriate for measures supported in a bounded region.
std::vector<TestFun> plane_moment_family(int k, int max_moment = 6);

double integrate(const MeasureView& m, const TestFun& f, exec mode = default_exec());

// max over the family of |int psi o f d nu_next - int psi d nu|; the exact
// pushforward identity makes this vanish on matched consecutive levels.
double invariance_defect(const Map& map, const AtomicMeasure& nu_next,
                         const AtomicMeasure& nu, std::span<const TestFun> family,
                         exec mode = default_exec());
// Defect of f-invariance of a single measure against itself.
double self_invariance_defect(const Map& map, const MeasureView& nu,
                              std::span<const TestFun> family, exec mode = default_exec());

double convergence_diagnostic(const MeasureView& a, const MeasureView& b,
                              std::span<const TestFun> family, exec mode = default_exec());

struct DensityGrid {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  int nx = 0, ny = 0;
  std::vector<double> mass;  // row-major, ny rows of nx
  double overflow = 0.0;     // mass outside the window (and at infinity)

  double in_window() const;
};

struct GridWindow {
  double x0 = -2, x1 = 2, y0 = -2, y1 = 2;
};

// k = 1: one grid over the plane chart. k = 2: per-factor grids plus a joint
// grid of the factor moduli. Names: "plane" or "factor1"/"factor2"/"joint_mod".
std::vector<std::pair<std::string, DensityGrid>> density_grids(const MeasureView& m,
                                                               const GridWindow& win,
                                                               int nx, int ny);

}  // namespace holodyn::meas
