#include "holodyn/shift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "holodyn/errors.hpp"

namespace holodyn::shift {

namespace {

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

std::string word_string(const Word& w, int alphabet) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (alphabet > 9 && i > 0) s += '-';
    s += std::to_string(w[i] + 1);
  }
  return s;
}

Potential Potential::bernoulli(std::vector<double> w) {
  Potential p;
  p.kind = Kind::bernoulli;
  p.alphabet = static_cast<int>(w.size());
  p.memory = 1;
  p.weights = std::move(w);
  p.validate();
  return p;
}

Potential Potential::uniform(int alphabet) {
  return bernoulli(std::vector<double>(alphabet, 1.0 / alphabet));
}

Potential Potential::finite_range(int alphabet, int memory, std::vector<double> log_table) {
  Potential p;
  p.kind = Kind::finite_range;
  p.alphabet = alphabet;
  p.memory = memory;
  p.log_table = std::move(log_table);
  p.validate();
  return p;
}

void Potential::validate() const {
  if (alphabet < 2) throw error(errc::config, "alphabet: must be at least 2");
  if (kind == Kind::bernoulli) {
    if (static_cast<int>(weights.size()) != alphabet)
      throw error(errc::config, "weights: expected one weight per symbol");
    double s = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw error(errc::config, "weights: must be strictly positive");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw error(errc::config, "weights: must sum to 1 (got " + std::to_string(s) + ")");
  } else {
    if (memory < 1) throw error(errc::config, "memory: must be at least 1");
    if (log_table.size() != ipow(alphabet, memory))
      throw error(errc::config, "log_table: expected alphabet^memory entries");
    for (double v : log_table)
      if (!std::isfinite(v)) throw error(errc::config, "log_table: entries must be finite");
  }
}

double Potential::value(std::span<const int> window) const {
  if (kind == Kind::bernoulli) return std::log(weights[window[0]]);
  std::uint64_t idx = 0;
  for (int i = 0; i < memory; ++i) idx = idx * alphabet + window[i];
  return log_table[idx];
}

double Potential::sup() const {
  if (kind == Kind::bernoulli)
    return std::log(*std::max_element(weights.begin(), weights.end()));
  return *std::max_element(log_table.begin(), log_table.end());
}

double Potential::linf() const {
  if (kind == Kind::bernoulli) {
    double m = 0.0;
    for (double w : weights) m = std::max(m, std::abs(std::log(w)));
    return m;
  }
  double m = 0.0;
  for (double v : log_table) m = std::max(m, std::abs(v));
  return m;
}

GibbsMeasure::GibbsMeasure(Potential pot) : pot_(std::move(pot)) {
  pot_.validate();
  M_ = pot_.alphabet;
  m_ = pot_.memory;
  S_ = static_cast<int>(ipow(M_, m_ - 1));

  // Transfer weights W[u*M + b] = exp(phi on the m-word (block u, b)).
  std::vector<double> W(static_cast<std::size_t>(S_) * M_);
  if (pot_.kind == Potential::Kind::bernoulli) {
    for (int b = 0; b < M_; ++b) W[b] = pot_.weights[b];
  } else {
    for (std::size_t i = 0; i < W.size(); ++i) W[i] = std::exp(pot_.log_table[i]);
  }

  // Perron data by power iteration; the chain kernel is primitive, so the
  // iteration is geometric. Tolerance 1e-13, cap 1e5.
  auto iterate = [&](std::vector<double>& v, bool left) -> double {
    std::vector<double> nv(v.size());
    double lam = 0.0;
    for (int it = 0; it < 100000; ++it) {
      std::fill(nv.begin(), nv.end(), 0.0);
      for (int u = 0; u < S_; ++u)
        for (int b = 0; b < M_; ++b) {
          const int v2 = next_state(u, b);
          const double w = W[static_cast<std::size_t>(u) * M_ + b];
          if (left)
            nv[v2] += w * v[u];
          else
            nv[u] += w * v[v2];
        }
      double mx = 0.0;
      for (double x : nv) mx = std::max(mx, std::abs(x));
      double dv = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        nv[i] /= mx;
        dv = std::max(dv, std::abs(nv[i] - v[i]));
      }
      const double dl = std::abs(mx - lam);
      lam = mx;
      v.swap(nv);
      if (dv <= 1e-13 && dl <= 1e-13 * std::max(1.0, lam)) return lam;
    }
    throw error(errc::numerical, "power iteration did not converge");
  };

  std::vector<double> r(S_, 1.0), l(S_, 1.0);
  const double lam = iterate(r, /*left=*/false);
  if (S_ > 1) iterate(l, /*left=*/true);

  pressure_ = (pot_.kind == Potential::Kind::bernoulli) ? 0.0 : std::log(lam);

  trans_.assign(static_cast<std::size_t>(S_) * M_, 0.0);
  for (int u = 0; u < S_; ++u) {
    double row = 0.0;
    for (int b = 0; b < M_; ++b) {
      const double p = W[static_cast<std::size_t>(u) * M_ + b] * r[next_state(u, b)] / (lam * r[u]);
      trans_[static_cast<std::size_t>(u) * M_ + b] = p;
      row += p;
    }
    for (int b = 0; b < M_; ++b) trans_[static_cast<std::size_t>(u) * M_ + b] /= row;
  }

  pi_.assign(S_, 1.0);
  if (S_ > 1) {
    double tot = 0.0;
    for (int u = 0; u < S_; ++u) {
      pi_[u] = l[u] * r[u];
      tot += pi_[u];
    }
    for (double& x : pi_) x /= tot;
  }

  // int phi d nu over m-windows, then h = P - int phi.
  if (pot_.kind == Potential::Kind::bernoulli) {
    phi_mean_ = 0.0;
    entropy_ = 0.0;
    for (double w : pot_.weights) {
      phi_mean_ += w * std::log(w);
      entropy_ -= w * std::log(w);
    }
  } else {
    phi_mean_ = 0.0;
    for (int u = 0; u < S_; ++u)
      for (int b = 0; b < M_; ++b)
        phi_mean_ += pi_[u] * transition(u, b) * pot_.log_table[static_cast<std::size_t>(u) * M_ + b];
    entropy_ = pressure_ - phi_mean_;
  }

  trans_cdf_.resize(trans_.size());
  for (int u = 0; u < S_; ++u) {
    double acc = 0.0;
    for (int b = 0; b < M_; ++b) {
      acc += transition(u, b);
      trans_cdf_[static_cast<std::size_t>(u) * M_ + b] = acc;
    }
  }
  pi_cdf_.resize(S_);
  double acc = 0.0;
  for (int u = 0; u < S_; ++u) {
    acc += pi_[u];
    pi_cdf_[u] = acc;
  }
}

int GibbsMeasure::state_of(std::span<const int> block) const {
  int s = 0;
  for (int i = 0; i < m_ - 1; ++i) s = s * M_ + block[i];
  return s;
}

double GibbsMeasure::cylinder_mass(const Word& w) const {
  const int n = static_cast<int>(w.size());
  if (n == 0) return 1.0;
  for (int s : w)
    if (s < 0 || s >= M_) throw error(errc::config, "word: symbol out of range");
  if (m_ == 1) {
    double p = 1.0;
    for (int s : w) p *= transition(0, s);
    return p;
  }
  if (n < m_ - 1) {
    // Marginal of the stationary block distribution.
    double mass = 0.0;
    for (int u = 0; u < S_; ++u) {
      int v = u;
      bool match = true;
      for (int i = m_ - 2; i >= 0; --i) {
        const int sym = v % M_;
        v /= M_;
        if (i < n && sym != w[i]) { match = false; break; }
      }
      if (match) mass += pi_[u];
    }
    return mass;
  }
  int state = state_of(std::span<const int>(w.data(), m_ - 1));
  double mass = pi_[state];
  for (int i = m_ - 1; i < n; ++i) {
    mass *= transition(state, w[i]);
    state = next_state(state, w[i]);
  }
  return mass;
}

double GibbsMeasure::prescription_mass(std::span<const std::pair<int, int>> fixed) const {
  if (fixed.empty()) return 1.0;
  for (std::size_t i = 0; i + 1 < fixed.size(); ++i)
    if (fixed[i].first >= fixed[i + 1].first)
      throw error(errc::config, "prescription: positions must be strictly increasing");
  const int last = fixed.back().first;

  auto fixed_at = [&](int pos) -> int {
    for (const auto& [p, s] : fixed)
      if (p == pos) return s;
    return -1;
  };

  // Forward pass over chain states; prescribed positions restrict the symbol.
  std::vector<double> cur(S_, 0.0);
  for (int u = 0; u < S_; ++u) {
    int v = u;
    bool match = true;
    for (int i = m_ - 2; i >= 0; --i) {
      const int sym = v % M_;
      v /= M_;
      const int want = fixed_at(i);
      if (want >= 0 && want != sym) { match = false; break; }
    }
    if (match) cur[u] += pi_[u];
  }
  if (last < m_ - 1) {
    double s = 0.0;
    for (double x : cur) s += x;
    return s;
  }
  std::vector<double> nxt(S_);
  for (int pos = m_ - 1; pos <= last; ++pos) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    const int want = fixed_at(pos);
    for (int u = 0; u < S_; ++u) {
      if (cur[u] == 0.0) continue;
      if (want >= 0) {
        nxt[next_state(u, want)] += cur[u] * transition(u, want);
      } else {
        for (int b = 0; b < M_; ++b) nxt[next_state(u, b)] += cur[u] * transition(u, b);
      }
    }
    cur.swap(nxt);
  }
  double s = 0.0;
  for (double x : cur) s += x;
  return s;
}

int GibbsMeasure::sample_state(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(pi_cdf_.begin(), pi_cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - pi_cdf_.begin(), S_ - 1));
}

int GibbsMeasure::sample_step(int state, Rng& rng) const {
  const double u = rng.uniform();
  const double* row = trans_cdf_.data() + static_cast<std::size_t>(state) * M_;
  const auto it = std::upper_bound(row, row + M_, u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - row, M_ - 1));
}

Word GibbsMeasure::sample_word(int n, Rng& rng) const {
  Word w;
  w.reserve(n);
  int state = sample_state(rng);
  if (m_ >= 2) {
    int v = state;
    Word block(m_ - 1);
    for (int i = m_ - 2; i >= 0; --i) {
      block[i] = v % M_;
      v /= M_;
    }
    for (int i = 0; i < std::min(n, m_ - 1); ++i) w.push_back(block[i]);
  }
  while (static_cast<int>(w.size()) < n) {
    const int b = sample_step(state, rng);
    w.push_back(b);
    state = next_state(state, b);
  }
  return w;
}

GibbsBounds gibbs_bounds_check(const GibbsMeasure& nu, int n_max, std::uint64_t cap) {
  const int M = nu.alphabet(), m = nu.memory();
  std::uint64_t total = 0;
  for (int n = 1; n <= n_max; ++n) {
    total += ipow(M, n);
    if (total > cap) throw error(errc::config, "n_max: cylinder enumeration exceeds cap");
  }
  const std::uint64_t tails = ipow(M, m - 1);

  GibbsBounds out;
  out.c1 = std::numeric_limits<double>::infinity();
  out.c2 = 0.0;
  const double P = nu.pressure();

  Word w, ext;
  std::vector<int> tail(m - 1);
  for (int n = 1; n <= n_max; ++n) {
    const std::uint64_t count = ipow(M, n);
    w.assign(n, 0);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
      std::uint64_t v = idx;
      for (int i = n - 1; i >= 0; --i) {
        w[i] = static_cast<int>(v % M);
        v /= M;
      }
      // sup/inf of S_n phi over the cylinder: enumerate the m-1 free tail
      // symbols that the last windows can see.
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::uint64_t tl = 0; tl < tails; ++tl) {
        std::uint64_t tv = tl;
        for (int i = m - 2; i >= 0; --i) {
          tail[i] = static_cast<int>(tv % M);
          tv /= M;
        }
        ext = w;
        ext.insert(ext.end(), tail.begin(), tail.end());
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          s += nu.potential().value(std::span<const int>(ext.data() + i, m));
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
      const double mass = nu.cylinder_mass(w);
      out.c1 = std::min(out.c1, mass / std::exp(hi - n * P));
      out.c2 = std::max(out.c2, mass / std::exp(lo - n * P));
      ++out.cylinders;
    }
  }
  return out;
}

double mixing_gap(const GibbsMeasure& nu, const Window& E, const Window& F, int gap) {
  if (E.word.empty() || F.word.empty())
    throw error(errc::config, "mixing_gap: windows must be nonempty");
  const int e_end = E.start + static_cast<int>(E.word.size());
  const int f_start = F.start + gap;
  if (E.start < 0 || f_start < e_end)
    throw error(errc::config, "mixing_gap: windows must be ordered and disjoint after the gap");

  std::vector<std::pair<int, int>> joint, pe, pf;
  for (std::size_t i = 0; i < E.word.size(); ++i) {
    joint.emplace_back(E.start + static_cast<int>(i), E.word[i]);
    pe.emplace_back(E.start + static_cast<int>(i), E.word[i]);
  }
  for (std::size_t i = 0; i < F.word.size(); ++i) {
    joint.emplace_back(f_start + static_cast<int>(i), F.word[i]);
    pf.emplace_back(F.start + static_cast<int>(i), F.word[i]);
  }
  const double j = nu.prescription_mass(joint);
  const double a = nu.prescription_mass(pe);
  const double b = nu.prescription_mass(pf);
  return std::abs(j - a * b);
}

MixingFit fit_mixing(const GibbsMeasure& nu, int gap_lo, int gap_hi) {
  const int M = nu.alphabet();
  std::vector<double> xs, ys;
  double worst = 0.0;
  for (int n = gap_lo; n <= gap_hi; ++n) {
    double r = 0.0;
    for (int a = 0; a < M; ++a)
      for (int b = 0; b < M; ++b) {
        Window E{{a}, 0}, F{{b}, 0};
        const double g = mixing_gap(nu, E, F, n);
        const double pa = nu.prescription_mass(std::vector<std::pair<int, int>>{{0, a}});
        const double pb = nu.prescription_mass(std::vector<std::pair<int, int>>{{0, b}});
        r = std::max(r, g / (pa * pb));
      }
    worst = std::max(worst, r);
    if (r > 1e-15) {
      xs.push_back(n);
      ys.push_back(std::log(r));
    }
  }
  MixingFit fit;
  if (xs.size() < 2) {
    fit.degenerate = true;
    fit.c = worst;
    fit.delta = std::numeric_limits<double>::infinity();
    return fit;
  }
  // Least-squares line log r = log c - delta n, then lift c so the fit
  // dominates every measured ratio.
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.delta = std::max(0.0, -slope);
  double c = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    c = std::max(c, std::exp(ys[i] + fit.delta * xs[i]));
  fit.c = c * 1.5;
  return fit;
}

double CylinderObservable::operator()(std::span<const int> word, int alphabet) const {
  std::uint64_t idx = 0;
  for (int i = 0; i < depth; ++i) idx = idx * alphabet + word[i];
  return values[idx];
}

CylinderObservable CylinderObservable::indicator(int alphabet, const Word& cyl) {
  CylinderObservable chi;
  chi.depth = static_cast<int>(cyl.size());
  chi.values.assign(ipow(alphabet, chi.depth), 0.0);
  std::uint64_t idx = 0;
  for (int s : cyl) idx = idx * alphabet + s;
  chi.values[idx] = 1.0;
  return chi;
}

namespace {

// Enumerate words of length `len`, calling visit(word_index, mass, end_state).
template <class F>
void enumerate_masses(const GibbsMeasure& nu, int len, F&& visit) {
  const int M = nu.alphabet(), m = nu.memory();
  Word w(len);
  const std::uint64_t count = ipow(M, len);
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    std::uint64_t v = idx;
    for (int i = len - 1; i >= 0; --i) {
      w[i] = static_cast<int>(v % M);
      v /= M;
    }
    const double mass = nu.cylinder_mass(w);
    int state = 0;
    if (m >= 2 && len >= m - 1)
      state = nu.state_of(std::span<const int>(w.data() + (len - (m - 1)), m - 1));
    visit(idx, w, mass, state);
  }
}

}  // namespace

double observable_mean(const GibbsMeasure& nu, const CylinderObservable& chi) {
  const int len = std::max(chi.depth, nu.memory() - 1);
  double mean = 0.0;
  enumerate_masses(nu, len, [&](std::uint64_t, const Word& w, double mass, int) {
    mean += mass * chi(w, nu.alphabet());
  });
  return mean;
}

CorrelationResult correlation(const GibbsMeasure& nu, const CylinderObservable& chi1,
                              const CylinderObservable& chi2, int n, std::uint64_t cap,
                              std::size_t mc_samples, std::uint64_t seed, exec mode) {
  const int M = nu.alphabet(), m = nu.memory();
  CorrelationResult out;
  out.mean1 = observable_mean(nu, chi1);
  out.mean2 = observable_mean(nu, chi2);

  const int d1 = std::max(chi1.depth, m - 1);
  auto pw = [&](std::uint64_t b, int e) { return ipow(b, e); };

  if (n >= d1 && pw(M, d1) + pw(M, chi2.depth) <= cap) {
    // Disjoint windows: push chi1-weighted mass to the chain state after the
    // first window, propagate the gap, then average chi2 over continuations.
    const int S = nu.num_states();
    std::vector<double> va(S, 0.0);
    enumerate_masses(nu, d1, [&](std::uint64_t, const Word& w, double mass, int state) {
      va[state] += mass * (chi1(w, M) - out.mean1);
    });
    std::vector<double> nxt(S);
    for (int step = 0; step < n - d1; ++step) {
      std::fill(nxt.begin(), nxt.end(), 0.0);
      for (int u = 0; u < S; ++u) {
        if (va[u] == 0.0) continue;
        for (int b = 0; b < M; ++b) nxt[nu.next_state(u, b)] += va[u] * nu.transition(u, b);
      }
      va.swap(nxt);
    }
    // E[chi2 | state] by recursion over the chi2 window.
    std::vector<double> vb(S, 0.0);
    Word w2(chi2.depth);
    for (int u = 0; u < S; ++u) {
      double acc = 0.0;
      std::function<void(int, int, double)> rec = [&](int pos, int state, double p) {
        if (pos == chi2.depth) {
          acc += p * (chi2(w2, M) - out.mean2);
          return;
        }
        for (int b = 0; b < M; ++b) {
          w2[pos] = b;
          rec(pos + 1, nu.next_state(state, b), p * nu.transition(state, b));
        }
      };
      rec(0, u, 1.0);
      vb[u] = acc;
    }
    out.value = 0.0;
    for (int u = 0; u < S; ++u) out.value += va[u] * vb[u];
    out.exact = true;
    return out;
  }

  const int D = std::max(d1, n + chi2.depth);
  if (pw(M, std::min(D, 40)) <= cap && D <= 40) {
    enumerate_masses(nu, D, [&](std::uint64_t, const Word& w, double mass, int) {
      const double a = chi1(w, M) - out.mean1;
      const double b = chi2(std::span<const int>(w.data() + n, chi2.depth), M) - out.mean2;
      out.value += mass * a * b;
    });
    out.exact = true;
    return out;
  }

  // Monte Carlo fallback.
  std::vector<double> slots(mc_samples);
  par_for(mc_samples, [&](std::size_t i) {
    Rng rng(substream_seed(seed, "correlation", i));
    const Word w = nu.sample_word(D, rng);
    const double a = chi1(w, M) - out.mean1;
    const double b = chi2(std::span<const int>(w.data() + n, chi2.depth), M) - out.mean2;
    slots[i] = a * b;
  }, mode);
  out.value = pairwise_mean(slots);
  double var = 0.0;
  for (double x : slots) var += (x - out.value) * (x - out.value);
  var /= std::max<std::size_t>(1, mc_samples - 1);
  out.stderr_ = std::sqrt(var / mc_samples);
  out.exact = false;
  return out;
}

ApproxError cylinder_approx_error(const GibbsMeasure& nu, const CylinderObservable& chi,
                                  int n, double p, std::uint64_t cap) {
  if (p < 1.0) throw error(errc::config, "p: must be >= 1");
  ApproxError out;
  if (n >= chi.depth) return out;  // chi is A_n-measurable
  const int M = nu.alphabet();
  const int D = std::max(chi.depth, nu.memory() - 1);
  if (ipow(M, D) > cap) throw error(errc::config, "observable depth exceeds enumeration cap");

  const std::uint64_t prefixes = ipow(M, n);
  std::vector<double> num(prefixes, 0.0), den(prefixes, 0.0);
  const int shift_pow = D - n;
  enumerate_masses(nu, D, [&](std::uint64_t idx, const Word& w, double mass, int) {
    const std::uint64_t pre = idx / ipow(M, shift_pow);
    num[pre] += mass * chi(w, M);
    den[pre] += mass;
  });
  double acc = 0.0;
  enumerate_masses(nu, D, [&](std::uint64_t idx, const Word& w, double mass, int) {
    const std::uint64_t pre = idx / ipow(M, shift_pow);
    const double cond = den[pre] > 0.0 ? num[pre] / den[pre] : 0.0;
    acc += mass * std::pow(std::abs(chi(w, M) - cond), p);
  });
  out.value = std::pow(acc, 1.0 / p);
  return out;
}

ApproxError cylinder_approx_error_mc(const GibbsMeasure& nu,
                                     const std::function<double(std::span<const int>)>& chi,
                                     int eval_depth, int n, double p, std::size_t samples,
                                     int tails, std::uint64_t seed, exec mode) {
  if (p < 1.0) throw error(errc::config, "p: must be >= 1");
  if (n >= eval_depth) return {};
  const int m = nu.memory();
  if (n < m - 1)
    throw error(errc::config, "cylinder_approx_error_mc: n must cover one chain block (n >= memory-1)");
  std::vector<double> slots(samples);
  par_for(samples, [&](std::size_t i) {
    Rng rng(substream_seed(seed, "capprox", i));
    Word w = nu.sample_word(eval_depth, rng);
    const double own = chi(w);
    // Resample the tail given the chain state after the prefix.
    int state0 = 0;
    if (m >= 2)
      state0 = nu.state_of(std::span<const int>(w.data() + (n - (m - 1)), m - 1));
    double mean_tail = 0.0;
    Word v = w;
    for (int t = 0; t < tails; ++t) {
      int state = state0;
      for (int pos = n; pos < eval_depth; ++pos) {
        const int b = nu.sample_step(state, rng);
        v[pos] = b;
        state = nu.next_state(state, b);
      }
      mean_tail += chi(v);
    }
    mean_tail /= tails;
    slots[i] = std::pow(std::abs(own - mean_tail), p);
  }, mode);
  double mean = pairwise_mean(slots);
  // For p = 2, E|X - mean_K|^2 = (1 + 1/K) E|X - E|^2 when the K tails are
  // independent of X; correct that exactly.
  if (std::abs(p - 2.0) < 1e-15) mean *= static_cast<double>(tails) / (tails + 1);
  ApproxError out;
  out.exact = false;
  out.value = std::pow(std::max(0.0, mean), 1.0 / p);
  double var = 0.0;
  for (double x : slots) var += (x - mean) * (x - mean);
  var /= std::max<std::size_t>(1, samples - 1);
  // Delta method through x -> x^(1/p).
  const double dmean = std::sqrt(var / samples);
  out.stderr_ = mean > 0.0 ? dmean / p * std::pow(mean, 1.0 / p - 1.0) : dmean;
  return out;
}

SigmaResult birkhoff_sigma(const GibbsMeasure& nu, const CylinderObservable& chi,
                           int n, std::size_t samples, std::uint64_t seed, exec mode) {
  if (n < 1 || samples < 1) throw error(errc::config, "birkhoff_sigma: n and samples must be >= 1");
  const int M = nu.alphabet();
  const double mean = observable_mean(nu, chi);
  const int len = n + std::max(1, chi.depth) - 1;

  std::vector<double> slots(samples);
  par_for(samples, [&](std::size_t i) {
    Rng rng(substream_seed(seed, "birkhoff", i));
    const Word w = nu.sample_word(len, rng);
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      s += chi(std::span<const int>(w.data() + j, chi.depth), M) - mean;
    slots[i] = s / std::sqrt(static_cast<double>(n));
  }, mode);

  SigmaResult out;
  out.samples = samples;
  std::vector<double> sq(samples);
  for (std::size_t i = 0; i < samples; ++i) sq[i] = slots[i] * slots[i];
  const double s2 = pairwise_mean(sq);
  out.sigma = std::sqrt(std::max(0.0, s2));
  double var = 0.0;
  for (double x : sq) var += (x - s2) * (x - s2);
  var /= std::max<std::size_t>(1, samples - 1);
  out.stderr_ = out.sigma > 1e-300 ? std::sqrt(var / samples) / (2.0 * out.sigma) : 0.0;

  if (out.sigma > 1e-300) {
    // Birkhoff sums of a cylinder observable live on a lattice, so ties are
    // massive; compare the normal CDF against the midpoint of each tie block.
    std::vector<double> sorted = slots;
    std::sort(sorted.begin(), sorted.end());
    double gap = 0.0;
    std::size_t i = 0;
    while (i < samples) {
      std::size_t j = i;
      while (j < samples && sorted[j] == sorted[i]) ++j;
      const double F = normal_cdf(sorted[i] / out.sigma);
      const double mid = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) / samples;
      gap = std::max(gap, std::abs(mid - F));
      i = j;
    }
    out.clt_gap = gap;
  }
  return out;
}

TauTheta tau_theta(const Potential& pot, int d, int k, double theta) {
  if (d < 2 || k < 1) throw error(errc::config, "tau_theta: need d >= 2, k >= 1");
  GibbsMeasure nu(pot);
  const double base = (static_cast<double>(k) - theta) * std::log(static_cast<double>(d));
  TauTheta t;
  t.sup_variant = nu.pressure() - pot.sup() - base;
  t.linf_variant = nu.pressure() - pot.linf() - base;
  return t;
}

}  // namespace holodyn::shift
