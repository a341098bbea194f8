#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "holodyn/dynamics.hpp"
#include "holodyn/parallel.hpp"
#include "holodyn/rng.hpp"
#include "holodyn/shift.hpp"

namespace holodyn::coding {

using dyn::Map;
using dyn::Pt;
using dyn::RationalMap;
using dyn::SpherePoint;

// Polyline on the sphere; consecutive samples within step_max, endpoints exact.
struct Path {
  std::vector<double> t;
  std::vector<SpherePoint> pts;

  const SpherePoint& start() const { return pts.front(); }
  const SpherePoint& end() const { return pts.back(); }
  double diameter() const;  // max pairwise chordal over samples
};

struct LiftOptions {
  double newton_tol = 1e-11;    // chordal residual per sample
  double endpoint_tol = 1e-13;  // extra polish at t = 1
  double step_max = 1e-2;
  double step_min = 1e-6;       // parameter-step floor before giving up
  double crit_floor = 1e-8;     // spherical-derivative guard
  int newton_iters = 40;
};

Path geodesic(const SpherePoint& a, const SpherePoint& b, double step_max = 1e-2);

// Analytic continuation of the inverse branch of f along eta, starting at a
// point with f(start) = eta(0). Euler predictor, Newton corrector, adaptive
// halving; throws error(errc::lift_failed) near critical points.
Path lift_path(const RationalMap& f, const Path& eta, const SpherePoint& start,
               const LiftOptions& opt = {});

struct BasePathOptions {
  double clearance = 0.05;
  int postcritical_depth = 40;
  int detour_tries = 32;
  double step_max = 1e-2;
};

// One path per factor preimage, each kept `clearance` away from the truncated
// postcritical set of its factor. Throws error(errc::base_point_rejected)
// when no admissible path exists after the detour budget.
struct BasePaths {
  std::vector<std::vector<Path>> per_factor;  // [factor][factor symbol]
  std::vector<std::vector<SpherePoint>> postcritical;
  int detours_used = 0;
  double min_clearance = 0.0;
};
BasePaths build_base_paths(const Map& map, const Pt& z, const BasePathOptions& opt, Rng& rng);

// The preimage tree with compatible labels: level-n nodes are f^{-n}(z),
// indexed by words (big-endian). Product maps factor into independent scalar
// trees, so a level of the product tree is never materialised.
class CodingTree {
 public:
  CodingTree(Map map, Pt z, BasePaths base);

  void extend_level(exec mode = default_exec());
  void extend_to(int depth, exec mode = default_exec());

  const Map& map() const { return map_; }
  const Pt& base_point() const { return z_; }
  int depth() const { return depth_; }
  int alphabet() const { return map_.alphabet(); }

  bool level_complete(int n) const;
  std::uint64_t failed_nodes(int n) const;

  std::uint64_t level_size(int n) const;  // alphabet^n
  Pt node(int n, std::uint64_t word_idx) const;
  bool node_ok(int n, std::uint64_t word_idx) const;
  double node_diameter(int n, std::uint64_t word_idx) const;  // stored lift diameter

  SpherePoint factor_node(int factor, int n, std::uint64_t factor_idx) const;
  std::uint64_t factor_level_size(int n) const;  // degree^n
  double factor_diameter(int factor, int n, std::uint64_t factor_idx) const;

  std::uint64_t factor_index(std::uint64_t word_idx, int n, int factor) const;

  static std::uint64_t pack(std::span<const int> word, int alphabet);
  static std::vector<int> unpack(std::uint64_t idx, int n, int alphabet);

  const LiftOptions& lift_options() const { return lift_opt_; }
  LiftOptions& lift_options() { return lift_opt_; }

 private:
  struct Factor {
    explicit Factor(RationalMap fm) : f(std::move(fm)) {}
    RationalMap f;
    SpherePoint z{};
    std::vector<Path> base;
    std::vector<std::vector<SpherePoint>> nodes;  // [n][idx], n >= 1
    std::vector<std::vector<double>> diam;
    std::vector<std::vector<std::uint8_t>> ok;
    std::vector<Path> last_paths;
  };
  Map map_;
  Pt z_;
  std::vector<Factor> factors_;
  int depth_ = 0;
  LiftOptions lift_opt_;
};

// Evaluates z_n(word) with O(n) memory from the base paths alone, running the
// suffix chain of lifts; bit-identical to the enumerated tree.
class BranchSampler {
 public:
  BranchSampler(const Map& map, const BasePaths& base, LiftOptions opt = {});
  Pt sample(std::span<const int> word) const;

 private:
  const Map& map_;
  const BasePaths& base_;
  LiftOptions opt_;
};

struct LevelStats {
  int level = 0;
  double threshold = 0.0;
  std::uint64_t card_bad = 0;
  double card_bound = 0.0;
  bool card_ok = true;
  double bad_mass = 0.0;          // nu_phi(B), when a measure is supplied
  double mass_bound = 0.0;        // c_tau * exp(-(level-1) tau)
  bool mass_ok = true;
  double max_diameter = 0.0;
  double median_diameter = 0.0;
  std::uint64_t nodes = 0;
};

// Diameter statistics of level `level` against the threshold c d^{-rho (level-1)}
// and the cardinality / Gibbs-mass bounds with exponent theta / tau.
LevelStats level_diameter_stats(const CodingTree& tree, int level, double theta,
                                double c, double rho,
                                const shift::GibbsMeasure* nu = nullptr,
                                double tau = 0.0, double c_tau = 1.0,
                                std::uint64_t cap = 1000000);

struct DecayFit {
  double c = 0.0;
  double rho = 0.0;  // diameters ~ c * d^(-rho n)
  bool ok = false;
};
DecayFit fit_diameter_decay(const CodingTree& tree, int level_lo, int level_hi);

// Abstract-tree cardinality bound: leaves of a depth-m tree over `alphabet`
// symbols, s = max number of branching ancestors along a leaf path; checks
// card(leaves) <= alphabet^s.
bool branching_cardinality_check(std::span<const std::vector<int>> leaves,
                                 int alphabet, int depth, int* s_out = nullptr);

// Min pairwise chordal distance among valid level-n nodes (subsampled past cap).
double level_min_separation(const CodingTree& tree, int n, std::uint64_t cap = 4096);

}  // namespace holodyn::coding
