#pragma once

#include <optional>
#include <string>
#include <vector>

#include "holodyn/dynamics.hpp"
#include "holodyn/measures.hpp"
#include "holodyn/parallel.hpp"
#include "holodyn/shift.hpp"

namespace holodyn::stats {

using dyn::Map;

struct ExponentReport {
  std::vector<double> lambda;   // sorted descending, one per factor
  std::vector<double> stderr_;  // matching order
  struct Group {
    double value;
    int multiplicity;
  };
  std::vector<Group> groups;    // distinct values at tolerance group_tol
  double group_tol = 0.05;
  double excluded_mass = 0.0;   // atoms on the critical set (derivative 0)
  std::size_t excluded_atoms = 0;
  double jac_integral = 0.0;    // int log Jac d nu; equals 2 sum lambda here
};

ExponentReport lyapunov(const Map& map, const meas::MeasureView& nu,
                        exec mode = default_exec());

struct BrinKatokOptions {
  int max_refs = 200;
  int min_count = 1;  // balls with fewer hits are excluded (and counted)
};

struct BrinKatokResult {
  double h = 0.0;                // median over reference points of the decay rate
  std::size_t empty_cells = 0;   // (ref, depth) cells excluded for lack of hits
  int used_refs = 0;
  std::vector<double> per_ref;
};

// Local entropy from Bowen-ball frequencies: for each reference point the
// cloud fraction inside B_j(x, r) is computed for j = 1..n and the decay rate
// of -log(fraction) in j is fitted; the radius-dependent constant cancels in
// the slope. Throws error(errc::numerical) when every ball is empty.
BrinKatokResult brin_katok_entropy(const Map& map, const meas::SampleCloud& cloud,
                                   int n, double r, const BrinKatokOptions& opt = {},
                                   exec mode = default_exec());

std::optional<double> theta_k(int k);  // 2/(5(k-1)); nullopt for k = 1

struct TauGate {
  double tau_sup = 0.0;
  double tau_linf = 0.0;
  double theta = 0.0;
  double theta_k_value = 0.0;  // +inf for k = 1
  bool admissible = false;
  double eta_min = 0.0;        // smallest eta with max w <= d^(-k+eta) (bernoulli)
  bool cor1_window = false;    // eta_min < theta_k
};
TauGate tau_gate(const shift::Potential& pot, int d, int k, double theta);

struct InequalityRecord {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  double slack = 0.0;            // rhs - lhs
  double stderr_combined = 0.0;
  bool applicable = true;
  bool pass = true;              // slack >= -3 * stderr
};

struct InequalityReport {
  double h = 0.0;
  int d = 0, k = 0;
  std::vector<InequalityRecord> records;
  double cor3_value = 0.0;       // dimension lower bound
  bool cor3_applicable = false;
};

// Entropy-exponent inequalities evaluated on the estimated spectrum: the
// Margulis-Ruelle bound, the refined bound for each cut 2 <= j <= k, the
// minimal-exponent bound when h > (k-1) log d, and the dimension value.
InequalityReport inequality_report(double h, const ExponentReport& exps, int d, int k);

std::string format_table(const InequalityReport& rep);

}  // namespace holodyn::stats
