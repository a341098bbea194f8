#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "holodyn/parallel.hpp"
#include "holodyn/rng.hpp"

namespace holodyn::shift {

// Symbols are 0-based in code, [0, M). Files and logs print them 1-based.
using Word = std::vector<int>;

std::string word_string(const Word& w, int alphabet);

// A locally constant potential on the full shift over M symbols: either a
// Bernoulli weight vector or a table of values on m-cylinders. Both are
// special cases of one finite-range representation; the Bernoulli flavour
// keeps closed forms (pressure 0, entropy -sum w log w) exact.
struct Potential {
  enum class Kind { bernoulli, finite_range };
  Kind kind = Kind::bernoulli;
  int alphabet = 0;               // M >= 2
  int memory = 1;                 // m >= 1; always 1 for bernoulli
  std::vector<double> weights;    // bernoulli: M entries, positive, sum 1
  std::vector<double> log_table;  // finite_range: M^m entries, row-major

  static Potential bernoulli(std::vector<double> w);
  static Potential uniform(int alphabet);
  static Potential finite_range(int alphabet, int memory, std::vector<double> log_table);

  void validate() const;  // throws error(errc::config)
  double value(std::span<const int> window) const;  // phi on an m-window
  double sup() const;
  double linf() const;
};

// The Gibbs/equilibrium measure of a finite-range potential, realised as a
// stationary chain on (m-1)-blocks. Perron data comes from power iteration on
// the induced transfer matrix; cylinder masses and sampling are then exact.
class GibbsMeasure {
 public:
  explicit GibbsMeasure(Potential pot);

  const Potential& potential() const { return pot_; }
  int alphabet() const { return M_; }
  int memory() const { return m_; }
  double pressure() const { return pressure_; }
  double entropy() const { return entropy_; }
  double phi_mean() const { return phi_mean_; }

  double cylinder_mass(const Word& w) const;
  // Mass of the set prescribing symbol s at position p for each (p, s),
  // positions strictly increasing. Exact via the chain.
  double prescription_mass(std::span<const std::pair<int, int>> fixed) const;

  Word sample_word(int n, Rng& rng) const;

  // Chain internals (read-only; used by estimators and tests).
  int num_states() const { return S_; }
  int next_state(int state, int sym) const { return (state * M_ + sym) % S_; }
  double transition(int state, int sym) const { return trans_[static_cast<std::size_t>(state) * M_ + sym]; }
  std::span<const double> stationary() const { return pi_; }
  int state_of(std::span<const int> block) const;  // m-1 symbols
  int sample_state(Rng& rng) const;
  int sample_step(int state, Rng& rng) const;  // returns symbol

 private:
  Potential pot_;
  int M_ = 0, m_ = 1, S_ = 1;
  double pressure_ = 0.0, entropy_ = 0.0, phi_mean_ = 0.0;
  std::vector<double> trans_;  // S x M row-stochastic
  std::vector<double> pi_;     // stationary row
  std::vector<double> trans_cdf_;
  std::vector<double> pi_cdf_;
};

// Empirical Gibbs constants: extremal ratios nu[C] / exp(S_n phi - n P) over
// all cylinders of length <= n_max, with sup/inf of S_n phi over each
// cylinder taken exactly (tails enumerated). For Bernoulli both are 1.
struct GibbsBounds {
  double c1 = 0.0, c2 = 0.0;
  std::uint64_t cylinders = 0;
};
GibbsBounds gibbs_bounds_check(const GibbsMeasure& nu, int n_max,
                               std::uint64_t cap = 1000000);

// A cylinder set [word] placed so its first symbol sits at `start`.
struct Window {
  Word word;
  int start = 0;
};

// |nu(E cap s^{-gap} F) - nu(E) nu(F)| with F translated by `gap`. Windows
// must be disjoint and ordered after the translation.
double mixing_gap(const GibbsMeasure& nu, const Window& E, const Window& F, int gap);

struct MixingFit {
  double c = 0.0, delta = 0.0;
  bool degenerate = false;  // product measure: gaps are exactly zero
};
MixingFit fit_mixing(const GibbsMeasure& nu, int gap_lo = 1, int gap_hi = 12);

// Observable constant on depth-n cylinders, as a value table.
struct CylinderObservable {
  int depth = 0;
  std::vector<double> values;  // M^depth entries, big-endian word index

  double operator()(std::span<const int> word, int alphabet) const;
  static CylinderObservable indicator(int alphabet, const Word& cyl);
};

double observable_mean(const GibbsMeasure& nu, const CylinderObservable& chi);

struct CorrelationResult {
  double value = 0.0;
  double stderr_ = 0.0;
  bool exact = true;
  double mean1 = 0.0, mean2 = 0.0;  // subtracted internally
};
// Exact int chi1 . chi2 o s^n d nu via the chain when the joint enumeration
// fits under `cap`; seeded Monte Carlo with standard error beyond.
CorrelationResult correlation(const GibbsMeasure& nu, const CylinderObservable& chi1,
                              const CylinderObservable& chi2, int n,
                              std::uint64_t cap = 1000000,
                              std::size_t mc_samples = 200000,
                              std::uint64_t seed = 1,
                              exec mode = default_exec());

struct ApproxError {
  double value = 0.0;
  double stderr_ = 0.0;
  bool exact = true;
};
// L^p(nu) norm of chi - E(chi | A_n), exact for cylinder observables.
ApproxError cylinder_approx_error(const GibbsMeasure& nu, const CylinderObservable& chi,
                                  int n, double p, std::uint64_t cap = 1000000);
// Monte-Carlo variant for a sampled function of the first `eval_depth`
// symbols. For p = 2 the tail-resampling bias is corrected exactly.
ApproxError cylinder_approx_error_mc(const GibbsMeasure& nu,
                                     const std::function<double(std::span<const int>)>& chi,
                                     int eval_depth, int n, double p,
                                     std::size_t samples, int tails,
                                     std::uint64_t seed, exec mode = default_exec());

struct SigmaResult {
  double sigma = 0.0;
  double stderr_ = 0.0;
  double clt_gap = 0.0;  // Kolmogorov distance of S_n/sqrt(n) to N(0, sigma^2)
  std::size_t samples = 0;
};
SigmaResult birkhoff_sigma(const GibbsMeasure& nu, const CylinderObservable& chi,
                           int n, std::size_t samples, std::uint64_t seed,
                           exec mode = default_exec());

struct TauTheta {
  double sup_variant = 0.0;   // P - sup phi - (k - theta) log d
  double linf_variant = 0.0;  // literal P - |phi|_inf - (k - theta) log d
};
TauTheta tau_theta(const Potential& pot, int d, int k, double theta);

}  // namespace holodyn::shift
