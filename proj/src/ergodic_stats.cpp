#include "holodyn/ergodic_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "holodyn/errors.hpp"

namespace holodyn::stats {

using dyn::chordal;
using dyn::Pt;

ExponentReport lyapunov(const Map& map, const meas::MeasureView& nu, exec mode) {
  if (nu.size() == 0) throw error(errc::config, "lyapunov: empty measure");
  const int k = map.k();
  ExponentReport rep;

  std::vector<double> lam(k), se(k);
  std::vector<double> excl_mass(1, 0.0);
  std::size_t excl_atoms = 0;

  for (int f = 0; f < k; ++f) {
    std::vector<double> logs(nu.size());
    std::vector<double> ws(nu.size());
    std::vector<std::uint8_t> skip(nu.size(), 0);
    par_for(nu.size(), [&](std::size_t i) {
      const double d = map.factor(f).spherical_derivative(nu.pts[i].factor(f));
      if (d < 1e-300) {
        skip[i] = 1;
        logs[i] = 0.0;
        ws[i] = 0.0;
        return;
      }
      ws[i] = nu.weight(i);
      logs[i] = ws[i] * std::log(d);
    }, mode);
    double wsum = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      if (skip[i]) {
        if (f == 0) {
          excl_mass[0] += nu.weight(i);
          ++excl_atoms;
        }
        continue;
      }
      wsum += ws[i];
    }
    mean = pairwise_sum(logs) / wsum;
    // Weighted variance and effective sample size for the standard error.
    double var = 0.0, w2 = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      if (skip[i]) continue;
      const double x = logs[i] / ws[i] - mean;
      var += ws[i] * x * x;
      w2 += ws[i] * ws[i];
    }
    var /= wsum;
    const double neff = wsum * wsum / std::max(w2, 1e-300);
    lam[f] = mean;
    se[f] = std::sqrt(var / std::max(neff, 1.0));
  }

  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lam[a] > lam[b]; });
  for (int i = 0; i < k; ++i) {
    rep.lambda.push_back(lam[order[i]]);
    rep.stderr_.push_back(se[order[i]]);
  }
  rep.excluded_mass = excl_mass[0];
  rep.excluded_atoms = excl_atoms;

  for (double l : rep.lambda) {
    if (!rep.groups.empty() && std::abs(rep.groups.back().value - l) <= rep.group_tol) {
      // Merge into the running group, tracking the mean.
      auto& g = rep.groups.back();
      g.value = (g.value * g.multiplicity + l) / (g.multiplicity + 1);
      ++g.multiplicity;
    } else {
      rep.groups.push_back({l, 1});
    }
  }

  // Independent route to the same number: integrate log Jac directly
  // (excluding atoms where it is -inf) and report it against 2 sum lambda.
  {
    std::vector<double> slots(nu.size(), 0.0);
    std::vector<std::uint8_t> skip(nu.size(), 0);
    par_for(nu.size(), [&](std::size_t i) {
      const double lj = map.log_jacobian(nu.pts[i]);
      if (!std::isfinite(lj)) {
        skip[i] = 1;
        return;
      }
      slots[i] = nu.weight(i) * lj;
    }, mode);
    double wsum = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i)
      if (!skip[i]) wsum += nu.weight(i);
    rep.jac_integral = pairwise_sum(slots) / wsum;
  }
  return rep;
}

BrinKatokResult brin_katok_entropy(const Map& map, const meas::SampleCloud& cloud, int n,
                                   double r, const BrinKatokOptions& opt, exec mode) {
  const std::size_t S = cloud.pts.size();
  if (S < 100) throw error(errc::config, "brin_katok: need at least 100 samples");
  if (n < 2) throw error(errc::config, "brin_katok: need n >= 2");

  // Forward orbits f^j, j < n, of every sample.
  std::vector<Pt> orbit(S * n);
  par_for(S, [&](std::size_t i) {
    Pt x = cloud.pts[i];
    for (int j = 0; j < n; ++j) {
      orbit[i * n + j] = x;
      x = map.eval(x);
    }
  }, mode);

  const int refs = static_cast<int>(std::min<std::size_t>(opt.max_refs, S));
  const std::size_t stride = S / refs;
  std::vector<double> slopes(refs, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint64_t> empties(refs, 0);

  par_for(refs, [&](std::size_t ri) {
    const std::size_t x = ri * stride;
    std::vector<std::uint64_t> count(n + 1, 0);
    for (std::size_t y = 0; y < S; ++y) {
      if (y == x) continue;  // self-match would floor every ball
      int j = 0;
      while (j < n) {
        if (dyn::chordal_pt(orbit[x * n + j], orbit[y * n + j]) >= r) break;
        ++j;
      }
      // orbit stayed r-close through times 0..j-1: y is in B_m(x,r) for m <= j
      for (int m = 1; m <= j; ++m) ++count[m];
    }
    // Fit -log(count_m / S) against m over populated depths.
    std::vector<double> xs, ys;
    for (int m = 1; m <= n; ++m) {
      if (count[m] >= static_cast<std::uint64_t>(opt.min_count) && count[m] > 0) {
        xs.push_back(m);
        ys.push_back(-std::log(static_cast<double>(count[m]) / static_cast<double>(S)));
      } else {
        ++empties[ri];
      }
    }
    if (xs.size() < 2) return;  // slope undefined for this reference
    const double cnt = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    slopes[ri] = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  }, mode);

  BrinKatokResult out;
  for (int i = 0; i < refs; ++i) {
    out.empty_cells += empties[i];
    if (!std::isnan(slopes[i])) out.per_ref.push_back(slopes[i]);
  }
  out.used_refs = static_cast<int>(out.per_ref.size());
  if (out.per_ref.empty())
    throw error(errc::numerical, "brin_katok: every ball is empty; increase r or the cloud size");
  std::vector<double> sorted = out.per_ref;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  out.h = sorted[sorted.size() / 2];
  return out;
}

std::optional<double> theta_k(int k) {
  if (k < 1) throw error(errc::config, "theta_k: k must be >= 1");
  if (k == 1) return std::nullopt;
  return 2.0 / (5.0 * (k - 1));
}

TauGate tau_gate(const shift::Potential& pot, int d, int k, double theta) {
  TauGate g;
  g.theta = theta;
  const auto tt = shift::tau_theta(pot, d, k, theta);
  g.tau_sup = tt.sup_variant;
  g.tau_linf = tt.linf_variant;
  const auto tk = theta_k(k);
  g.theta_k_value = tk ? *tk : std::numeric_limits<double>::infinity();
  g.admissible = (k == 1) || (theta > 0.0 && theta < g.theta_k_value && g.tau_sup > 0.0);
  if (pot.kind == shift::Potential::Kind::bernoulli) {
    const double maxw = *std::max_element(pot.weights.begin(), pot.weights.end());
    g.eta_min = k + std::log(maxw) / std::log(static_cast<double>(d));
    g.cor1_window = g.eta_min < g.theta_k_value;
  } else {
    g.eta_min = std::numeric_limits<double>::quiet_NaN();
    g.cor1_window = false;
  }
  return g;
}

InequalityReport inequality_report(double h, const ExponentReport& exps, int d, int k) {
  if (h < 0.0) throw error(errc::config, "inequality_report: entropy must be nonnegative");
  InequalityReport rep;
  rep.h = h;
  rep.d = d;
  rep.k = k;
  const double logd = std::log(static_cast<double>(d));
  const auto& lam = exps.lambda;
  const auto& se = exps.stderr_;
  auto pos = [](double x) { return std::max(x, 0.0); };

  {
    InequalityRecord rec;
    rec.name = "ruelle";
    rec.lhs = h;
    rec.rhs = 0.0;
    double var = 0.0;
    for (int i = 0; i < k; ++i) {
      rec.rhs += 2.0 * pos(lam[i]);
      if (lam[i] > 0.0) var += 4.0 * se[i] * se[i];
    }
    rec.stderr_combined = std::sqrt(var);
    rec.slack = rec.rhs - rec.lhs;
    rec.pass = rec.slack >= -3.0 * rec.stderr_combined;
    rep.records.push_back(rec);
  }

  // Per-cut refinement over the sorted exponent list (each entry counted with
  // multiplicity one; group boundaries reproduce the grouped statement).
  for (int j = 2; j <= k; ++j) {
    InequalityRecord rec;
    rec.name = "refined_j=" + std::to_string(j);
    rec.lhs = h;
    rec.rhs = (j - 1) * logd;
    double var = 0.0;
    for (int i = j - 1; i < k; ++i) {
      rec.rhs += 2.0 * pos(lam[i]);
      if (lam[i] > 0.0) var += 4.0 * se[i] * se[i];
    }
    rec.stderr_combined = std::sqrt(var);
    rec.slack = rec.rhs - rec.lhs;
    rec.pass = rec.slack >= -3.0 * rec.stderr_combined;
    rep.records.push_back(rec);
  }

  {
    InequalityRecord rec;
    rec.name = "min_exponent";
    rec.applicable = h > (k - 1) * logd;
    rec.lhs = 0.5 * (h - (k - 1) * logd);
    rec.rhs = lam[k - 1];
    rec.stderr_combined = se[k - 1];
    rec.slack = rec.rhs - rec.lhs;
    rec.pass = !rec.applicable || rec.slack >= -3.0 * rec.stderr_combined;
    rep.records.push_back(rec);
  }

  if (k == 1) {
    rep.cor3_applicable = lam[0] > 0.0 && h > 0.0;
    rep.cor3_value = rep.cor3_applicable ? h / lam[0] : 0.0;
  } else {
    rep.cor3_applicable = lam[k - 1] > 0.0;
    rep.cor3_value = rep.cor3_applicable
                         ? (k - 1) * logd / lam[0] + (h - (k - 1) * logd) / lam[k - 1]
                         : 0.0;
  }
  return rep;
}

std::string format_table(const InequalityReport& rep) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "h = %.6f  d = %d  k = %d\n", rep.h, rep.d, rep.k);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %12s %12s %12s %8s\n", "inequality", "lhs", "rhs",
                "slack", "pass");
  out += buf;
  for (const auto& r : rep.records) {
    if (!r.applicable) {
      std::snprintf(buf, sizeof buf, "%-16s %46s\n", r.name.c_str(), "not applicable");
    } else {
      std::snprintf(buf, sizeof buf, "%-16s %12.6f %12.6f %12.6f %8s\n", r.name.c_str(), r.lhs,
                    r.rhs, r.slack, r.pass ? "yes" : "NO");
    }
    out += buf;
  }
  if (rep.cor3_applicable) {
    std::snprintf(buf, sizeof buf, "dimension lower bound: %.6f\n", rep.cor3_value);
    out += buf;
  } else {
    out += "dimension lower bound: not applicable (nonpositive minimal exponent)\n";
  }
  return out;
}

}  // namespace holodyn::stats
