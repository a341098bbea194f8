#include "holodyn/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "holodyn/coding.hpp"
#include "holodyn/dynamics.hpp"
#include "holodyn/ergodic_stats.hpp"
#include "holodyn/errors.hpp"
#include "holodyn/graph_transform.hpp"
#include "holodyn/io.hpp"
#include "holodyn/measures.hpp"
#include "holodyn/parallel.hpp"
#include "holodyn/rng.hpp"
#include "holodyn/shift.hpp"

namespace holodyn::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t config_hash(const json& config) {
  return fnv1a(config.dump());  // object keys are sorted, so the dump is canonical
}

struct Workspace {
  json config;
  std::string dir;
  std::uint64_t seed = 0;
  std::vector<std::string> files;

  std::string path(const std::string& name) {
    files.push_back(name);
    return dir + "/" + name;
  }
};

const json& need(const json& j, const char* field) {
  if (!j.contains(field))
    throw error(errc::config, std::string("config: missing field \"") + field + "\"");
  return j.at(field);
}

double get_or(const json& j, const char* field, double def) {
  return j.contains(field) ? j.at(field).get<double>() : def;
}

int get_or(const json& j, const char* field, int def) {
  return j.contains(field) ? j.at(field).get<int>() : def;
}

dyn::Pt parse_base_point(const json& j, int k) {
  if (j.is_string()) throw error(errc::config, "base_point: only \"random\" or coordinates");
  auto pt_of = [](const json& e) {
    if (!e.is_array() || e.size() != 2)
      throw error(errc::config, "base_point: expected [re, im]");
    return dyn::SpherePoint::of({e[0].get<double>(), e[1].get<double>()});
  };
  if (k == 1) return dyn::Pt::one(pt_of(j));
  if (!j.is_array() || j.size() != 2)
    throw error(errc::config, "base_point: product map expects [[re,im],[re,im]]");
  return dyn::Pt::two(pt_of(j[0]), pt_of(j[1]));
}

dyn::Pt random_point(int k, Rng& rng) {
  dyn::Pt p;
  p.k = k;
  for (int f = 0; f < k; ++f) {
    dyn::Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    p.factor(f) = dyn::unembed({v.x / n, v.y / n, v.z / n});
  }
  return p;
}

struct DynSetup {
  dyn::Map map;
  shift::GibbsMeasure nu;
  dyn::Pt z;
  coding::CodingTree tree;
  bool enumerated = false;
  std::optional<coding::BasePaths> sampler_base;  // kept when branch sampling is needed
};

DynSetup build_dynamics(Workspace& ws, int depth) {
  const json& cfg = ws.config;
  dyn::Map map = io::map_from_json(need(cfg, "map"));
  shift::GibbsMeasure nu(io::potential_from_json(need(cfg, "potential")));
  if (nu.alphabet() != map.alphabet())
    throw error(errc::config, "potential: alphabet must equal map degree^k (" +
                                  std::to_string(map.alphabet()) + ")");

  coding::BasePathOptions bopt;
  bopt.clearance = get_or(cfg, "clearance", 0.05);

  const json& bp = need(cfg, "base_point");
  dyn::Pt z;
  std::optional<coding::BasePaths> base;
  if (bp.is_string() && bp.get<std::string>() == "random") {
    if (!cfg.contains("seed")) throw error(errc::config, "config: missing field \"seed\"");
    for (int attempt = 0; attempt < 64 && !base; ++attempt) {
      Rng rng(substream_seed(ws.seed, "base_point", attempt));
      const dyn::Pt cand = random_point(map.k(), rng);
      try {
        base = coding::build_base_paths(map, cand, bopt, rng);
        z = cand;
      } catch (const error& e) {
        if (e.code() != errc::base_point_rejected) throw;
      }
    }
    if (!base)
      throw error(errc::base_point_rejected,
                  "no admissible random base point after 64 attempts; reseed");
  } else {
    z = parse_base_point(bp, map.k());
    Rng rng(substream_seed(ws.seed, "base_point", 0));
    base = coding::build_base_paths(map, z, bopt, rng);
  }

  // Enumerate factor trees when they fit comfortably; otherwise keep base
  // paths for per-branch sampling.
  std::uint64_t fsize = 1;
  for (int i = 0; i < depth; ++i) fsize *= map.degree();
  const bool enumerate = fsize <= (1u << 20);

  coding::BasePaths base_copy = *base;  // tree consumes one copy
  DynSetup s{std::move(map), std::move(nu), z,
             coding::CodingTree(io::map_from_json(need(cfg, "map")), z, std::move(base_copy)),
             enumerate, std::nullopt};
  if (enumerate)
    s.tree.extend_to(depth);
  else
    s.sampler_base = std::move(*base);
  return s;
}

meas::SampleCloud make_cloud(const DynSetup& s, int depth, std::size_t samples,
                             std::uint64_t seed) {
  if (s.enumerated) return meas::sample_cloud(s.tree, depth, s.nu, samples, seed);
  coding::BranchSampler sampler(s.map, *s.sampler_base, s.tree.lift_options());
  return meas::sample_cloud_branch(sampler, s.map, depth, s.nu, samples, seed);
}

shift::CylinderObservable parse_observable(const json& cfg, int alphabet) {
  if (!cfg.contains("observable")) {
    // Default: indicator of the first symbol's cylinder.
    return shift::CylinderObservable::indicator(alphabet, {0});
  }
  const json& j = cfg.at("observable");
  if (j.contains("indicator")) {
    shift::Word w;
    for (const auto& s : j.at("indicator")) w.push_back(s.get<int>() - 1);
    return shift::CylinderObservable::indicator(alphabet, w);
  }
  shift::CylinderObservable chi;
  chi.depth = need(j, "depth").get<int>();
  chi.values = need(j, "values").get<std::vector<double>>();
  std::uint64_t expect = 1;
  for (int i = 0; i < chi.depth; ++i) expect *= alphabet;
  if (chi.values.size() != expect)
    throw error(errc::config, "observable: values must have alphabet^depth entries");
  return chi;
}

gt::CMat parse_cmat(const json& j, const char* field) {
  if (!j.is_array() || j.empty()) throw error(errc::config, std::string(field) + ": expected entries");
  std::vector<gt::cplx> vals;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2)
      throw error(errc::config, std::string(field) + ": entries must be [re, im]");
    vals.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  if (vals.size() == 1) return gt::CMat::scalar(vals[0]);
  if (vals.size() == 4) return gt::CMat::mat2(vals[0], vals[1], vals[2], vals[3]);
  throw error(errc::config, std::string(field) + ": expected 1 or 4 entries (row-major)");
}

struct GraphSetup {
  gt::LocalMap lm;
  gt::LipGraph phi;
  gt::TransformOptions opt;
};

GraphSetup build_graph_setup(const json& cfg) {
  const json& g = need(cfg, "graph");
  const gt::CMat A = parse_cmat(need(g, "A"), "graph.A");
  const gt::CMat B = parse_cmat(need(g, "B"), "graph.B");
  const auto split = gt::LinearSplit::make(A, B);
  const double R0 = get_or(g, "R0", 1.0);
  const double R1 = get_or(g, "R1", 2.0 * R0);

  double pert = 0.0;
  if (g.contains("perturbation")) {
    const json& p = g.at("perturbation");
    const std::string type = need(p, "type").get<std::string>();
    if (type == "quadratic")
      pert = need(p, "coeff").get<double>();
    else if (type != "none")
      throw error(errc::config, "graph.perturbation: unknown type");
  }
  const int k1 = split.k1, k2 = split.k2;
  auto gfun = [A, B, k1, k2, pert](const gt::cplx* w, gt::cplx* out) {
    A.apply(w, out);
    B.apply(w + k1, out + k1);
    out[0] += pert * w[k1] * w[k1];
  };
  std::optional<double> delta;
  if (g.contains("delta")) delta = g.at("delta").get<double>();
  gt::LocalMap lm = gt::make_local_map(split, gfun, R0, R1, delta);

  const double phi_R = get_or(g, "phi_R", R0 * std::exp(-get_or(g, "epsilon", 0.05)));
  gt::LipGraph phi;
  const int grid = get_or(g, "grid", 33);
  if (g.contains("phi")) {
    const json& p = g.at("phi");
    const std::string type = need(p, "type").get<std::string>();
    if (type == "zero") {
      phi = gt::zero_graph(k1, k2, phi_R, grid);
    } else if (type == "linear") {
      const auto c = p.contains("coeff") ? gt::cplx(p.at("coeff")[0].get<double>(),
                                                    p.at("coeff")[1].get<double>())
                                         : gt::cplx(0.5, 0.0);
      phi = gt::graph_from(k1, k2, phi_R,
                           [c, k1](const gt::cplx* y, gt::cplx* x) {
                             for (int i = 0; i < k1; ++i) x[i] = c * y[0];
                           },
                           grid);
    } else if (type == "constant") {
      const gt::cplx c(need(p, "value")[0].get<double>(), need(p, "value")[1].get<double>());
      phi = gt::graph_from(k1, k2, phi_R,
                           [c, k1](const gt::cplx*, gt::cplx* x) {
                             for (int i = 0; i < k1; ++i) x[i] = c;
                           },
                           grid);
    } else {
      throw error(errc::config, "graph.phi: unknown type");
    }
  } else {
    phi = gt::zero_graph(k1, k2, phi_R, grid);
  }

  gt::TransformOptions opt;
  const std::string mode = g.contains("mode") ? g.at("mode").get<std::string>() : "shrink";
  if (mode == "general")
    opt.mode = gt::Mode::general;
  else if (mode == "shrink")
    opt.mode = gt::Mode::shrink;
  else if (mode == "offset")
    opt.mode = gt::Mode::offset;
  else
    throw error(errc::config, "graph.mode: expected general|shrink|offset");
  opt.epsilon = get_or(g, "epsilon", 0.05);
  opt.gamma0 = get_or(g, "gamma0", 1.0);
  opt.tol = get_or(g, "tol", 1e-12);
  opt.grid_pts = grid;
  return {std::move(lm), std::move(phi), opt};
}

void write_graph_csv(Workspace& ws, const std::string& name, const gt::LipGraph& g) {
  std::vector<std::string> header;
  for (int j = 0; j < g.k2; ++j) {
    header.push_back("y" + std::to_string(j + 1) + "_re");
    header.push_back("y" + std::to_string(j + 1) + "_im");
  }
  for (int j = 0; j < g.k1; ++j) {
    header.push_back("psi" + std::to_string(j + 1) + "_re");
    header.push_back("psi" + std::to_string(j + 1) + "_im");
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < g.points(); ++i) {
    if (!g.in_domain[i]) continue;
    std::vector<double> row;
    for (int j = 0; j < g.k2; ++j) {
      row.push_back(g.grid_y[i * g.k2 + j].real());
      row.push_back(g.grid_y[i * g.k2 + j].imag());
    }
    for (int j = 0; j < g.k1; ++j) {
      row.push_back(g.grid_x[i * g.k1 + j].real());
      row.push_back(g.grid_x[i * g.k1 + j].imag());
    }
    rows.push_back(std::move(row));
  }
  io::write_csv(ws.path(name), header, rows);
}

// ---- commands ----

json cmd_build_tree(Workspace& ws) {
  const json& cfg = ws.config;
  const int depth = need(cfg, "depth").get<int>();
  DynSetup s = build_dynamics(ws, depth);
  if (!s.enumerated) throw error(errc::config, "depth: too deep to enumerate the tree");

  const double theta = get_or(cfg, "theta", 0.3);
  coding::DecayFit fit = coding::fit_diameter_decay(s.tree, std::min(4, depth), std::min(8, depth));
  double c = fit.ok ? fit.c : 1.0;
  double rho = fit.ok ? fit.rho : 0.5;
  if (cfg.contains("thresholds")) {
    c = get_or(cfg.at("thresholds"), "c", c);
    rho = get_or(cfg.at("thresholds"), "rho", rho);
  }
  const auto tau = shift::tau_theta(s.nu.potential(), s.map.degree(), s.map.k(), theta);

  std::vector<std::vector<double>> rows;
  for (int n = 1; n <= depth; ++n) {
    const auto st = coding::level_diameter_stats(s.tree, n, theta, c, rho, &s.nu,
                                                 tau.sup_variant);
    rows.push_back({static_cast<double>(n), static_cast<double>(st.nodes),
                    static_cast<double>(s.tree.failed_nodes(n)), st.max_diameter,
                    st.median_diameter, st.threshold, static_cast<double>(st.card_bad),
                    st.card_bound, st.card_ok ? 1.0 : 0.0, st.bad_mass, st.mass_bound,
                    st.mass_ok ? 1.0 : 0.0});
  }
  io::write_csv(ws.path("diagnostics.csv"),
                {"level", "nodes", "failed", "max_diam", "median_diam", "threshold", "card_bad",
                 "card_bound", "card_ok", "bad_mass", "mass_bound", "mass_ok"},
                rows);
  io::write_tree_level_csv(ws.path("level_" + std::to_string(depth) + ".csv"), s.tree, depth);

  json summary;
  summary["depth"] = depth;
  summary["rho_hat"] = fit.rho;
  summary["c_hat"] = fit.c;
  summary["tau_sup"] = tau.sup_variant;
  summary["tau_linf"] = tau.linf_variant;
  summary["min_separation_final"] = coding::level_min_separation(s.tree, depth);
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

json cmd_sample_measure(Workspace& ws) {
  const json& cfg = ws.config;
  const int depth = need(cfg, "depth").get<int>();
  const std::size_t samples = static_cast<std::size_t>(need(cfg, "samples").get<std::int64_t>());
  if (!cfg.contains("seed")) throw error(errc::config, "config: missing field \"seed\"");
  DynSetup s = build_dynamics(ws, depth);

  const meas::SampleCloud cloud = make_cloud(s, depth, samples, ws.seed);
  io::write_cloud_csv(ws.path("cloud.csv"), cloud);

  json summary;
  summary["depth"] = depth;
  summary["samples"] = samples;

  if (s.enumerated && s.tree.level_size(depth) <= 4000000 && s.tree.level_complete(depth)) {
    const auto atomic = meas::pushforward_measure(s.tree, depth, s.nu);
    io::write_atomic_csv(ws.path("measure.csv"), atomic);
    summary["atoms"] = atomic.atoms.size();
  }

  meas::GridWindow win;
  int nx = 256, ny = 256;
  if (cfg.contains("grid")) {
    const json& g = cfg.at("grid");
    if (g.contains("window")) {
      const auto& w = g.at("window");
      win = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>(), w[3].get<double>()};
    }
    nx = get_or(g, "nx", nx);
    ny = get_or(g, "ny", ny);
  }
  for (const auto& [name, grid] : meas::density_grids(meas::MeasureView::of(cloud), win, nx, ny)) {
    io::write_pgm(ws.path("density_" + name + ".pgm"), grid);
    io::write_grid_csv(ws.path("density_" + name + ".csv"), grid);
    summary["overflow_" + name] = grid.overflow;
  }
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

json cmd_entropy_report(Workspace& ws) {
  const json& cfg = ws.config;
  const int depth = get_or(cfg, "depth", 12);
  const std::size_t samples = static_cast<std::size_t>(get_or(cfg, "samples", 10000));
  if (!cfg.contains("seed")) throw error(errc::config, "config: missing field \"seed\"");
  DynSetup s = build_dynamics(ws, depth);
  const meas::SampleCloud cloud = make_cloud(s, depth, samples, ws.seed);

  const int bk_n = get_or(cfg, "bk_n", 8);
  const double bk_r = get_or(cfg, "bk_r", 0.05);
  const auto bk = stats::brin_katok_entropy(s.map, cloud, bk_n, bk_r);

  json summary;
  summary["entropy_formula"] = s.nu.entropy();
  summary["pressure"] = s.nu.pressure();
  summary["brin_katok"] = bk.h;
  summary["bk_used_refs"] = bk.used_refs;
  summary["bk_empty_cells"] = bk.empty_cells;
  io::write_csv(ws.path("entropy.csv"),
                {"entropy_formula", "pressure", "brin_katok", "bk_n", "bk_r"},
                {{s.nu.entropy(), s.nu.pressure(), bk.h, static_cast<double>(bk_n), bk_r}});
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

json cmd_exponents(Workspace& ws) {
  const json& cfg = ws.config;
  const int depth = get_or(cfg, "depth", 12);
  const std::size_t samples = static_cast<std::size_t>(get_or(cfg, "samples", 10000));
  if (!cfg.contains("seed")) throw error(errc::config, "config: missing field \"seed\"");
  DynSetup s = build_dynamics(ws, depth);
  const meas::SampleCloud cloud = make_cloud(s, depth, samples, ws.seed);
  const auto rep = stats::lyapunov(s.map, meas::MeasureView::of(cloud));

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.lambda.size(); ++i)
    rows.push_back({static_cast<double>(i + 1), rep.lambda[i], rep.stderr_[i]});
  io::write_csv(ws.path("exponents.csv"), {"index", "lambda", "stderr"}, rows);

  json summary;
  summary["lambda"] = rep.lambda;
  summary["stderr"] = rep.stderr_;
  summary["jac_integral"] = rep.jac_integral;
  summary["excluded_mass"] = rep.excluded_mass;
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

json cmd_inequalities(Workspace& ws) {
  const json& cfg = ws.config;
  const int depth = get_or(cfg, "depth", 12);
  const std::size_t samples = static_cast<std::size_t>(get_or(cfg, "samples", 10000));
  if (!cfg.contains("seed")) throw error(errc::config, "config: missing field \"seed\"");
  DynSetup s = build_dynamics(ws, depth);
  const meas::SampleCloud cloud = make_cloud(s, depth, samples, ws.seed);
  const auto exps = stats::lyapunov(s.map, meas::MeasureView::of(cloud));
  const double h = s.nu.entropy();
  const auto rep = stats::inequality_report(h, exps, s.map.degree(), s.map.k());

  const double theta = get_or(cfg, "theta", 0.3);
  const auto gate = stats::tau_gate(s.nu.potential(), s.map.degree(), s.map.k(), theta);

  json jrep;
  jrep["h"] = rep.h;
  jrep["d"] = rep.d;
  jrep["k"] = rep.k;
  jrep["cor3_value"] = rep.cor3_value;
  jrep["cor3_applicable"] = rep.cor3_applicable;
  json recs = json::array();
  for (const auto& r : rep.records) {
    json jr;
    jr["name"] = r.name;
    jr["lhs"] = r.lhs;
    jr["rhs"] = r.rhs;
    jr["slack"] = r.slack;
    jr["stderr"] = r.stderr_combined;
    jr["applicable"] = r.applicable;
    jr["pass"] = r.pass;
    recs.push_back(jr);
  }
  jrep["records"] = recs;
  json jgate;
  jgate["tau_sup"] = gate.tau_sup;
  jgate["tau_linf"] = gate.tau_linf;
  jgate["theta"] = gate.theta;
  jgate["theta_k"] = gate.theta_k_value;
  jgate["admissible"] = gate.admissible;
  jrep["tau_gate"] = jgate;
  io::write_json_file(ws.path("inequalities.json"), jrep);
  io::write_text(ws.path("inequalities.txt"), stats::format_table(rep));

  json summary;
  summary["h"] = h;
  summary["lambda"] = exps.lambda;
  int passes = 0, total = 0;
  for (const auto& r : rep.records)
    if (r.applicable) {
      ++total;
      if (r.pass) ++passes;
    }
  summary["inequality_passes"] = passes;
  summary["inequality_total"] = total;
  summary["cor3_value"] = rep.cor3_value;
  summary["admissible"] = gate.admissible;
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

json cmd_correlations(Workspace& ws) {
  const json& cfg = ws.config;
  shift::GibbsMeasure nu(io::potential_from_json(need(cfg, "potential")));
  const int n_max = get_or(cfg, "n", 10);
  const auto chi = parse_observable(cfg, nu.alphabet());

  std::vector<std::vector<double>> rows;
  for (int n = 0; n <= n_max; ++n) {
    const auto c = shift::correlation(nu, chi, chi, n, 1000000, 200000, ws.seed);
    rows.push_back({static_cast<double>(n), c.value, c.stderr_, c.exact ? 1.0 : 0.0});
  }
  io::write_csv(ws.path("correlations.csv"), {"n", "correlation", "stderr", "exact"}, rows);

  rows.clear();
  const auto fit = shift::fit_mixing(nu);
  for (int n = 1; n <= n_max; ++n) {
    shift::Window E{{0}, 0}, F{{0}, 0};
    rows.push_back({static_cast<double>(n), shift::mixing_gap(nu, E, F, n)});
  }
  io::write_csv(ws.path("mixing.csv"), {"n", "gap"}, rows);

  int nb = get_or(cfg, "bounds_depth", 6);
  const auto gb = shift::gibbs_bounds_check(nu, nb);
  io::write_csv(ws.path("gibbs_bounds.csv"), {"n_max", "c1", "c2", "cylinders"},
                {{static_cast<double>(nb), gb.c1, gb.c2, static_cast<double>(gb.cylinders)}});

  json summary;
  summary["pressure"] = nu.pressure();
  summary["entropy"] = nu.entropy();
  summary["c1"] = gb.c1;
  summary["c2"] = gb.c2;
  summary["mix_c"] = fit.c;
  summary["mix_delta"] = fit.degenerate ? -1.0 : fit.delta;
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

json cmd_asip(Workspace& ws) {
  const json& cfg = ws.config;
  if (!cfg.contains("seed")) throw error(errc::config, "config: missing field \"seed\"");
  shift::GibbsMeasure nu(io::potential_from_json(need(cfg, "potential")));
  const int n = get_or(cfg, "n", 1000);
  const std::size_t samples = static_cast<std::size_t>(get_or(cfg, "samples", 10000));
  const auto chi = parse_observable(cfg, nu.alphabet());
  const auto sig = shift::birkhoff_sigma(nu, chi, n, samples, ws.seed);

  io::write_csv(ws.path("asip.csv"), {"n", "samples", "sigma", "stderr", "clt_gap"},
                {{static_cast<double>(n), static_cast<double>(samples), sig.sigma, sig.stderr_,
                  sig.clt_gap}});
  json summary;
  summary["sigma"] = sig.sigma;
  summary["sigma_stderr"] = sig.stderr_;
  summary["clt_gap"] = sig.clt_gap;
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

json cmd_graph_transform(Workspace& ws) {
  GraphSetup gs = build_graph_setup(ws.config);
  const auto res = gt::backward_transform(gs.lm, gs.phi, gs.opt);
  const auto ver = gt::verify_graph(gs.lm, res.psi, gs.phi, gs.opt.gamma0, gs.opt.tol);
  write_graph_csv(ws, "graph.csv", res.psi);

  json rep;
  rep["radius"] = res.psi.R;
  rep["lip"] = ver.lip;
  rep["lip_ok"] = ver.lip_ok;
  rep["containment_residual"] = ver.containment_residual;
  rep["psi0"] = ver.psi0;
  rep["max_fixpoint_residual"] = res.max_fixpoint_residual;
  rep["max_contraction"] = res.max_contraction;
  rep["outside_domain"] = res.outside_domain;
  rep["delta"] = gs.lm.delta;
  rep["delta_sampled"] = gs.lm.delta_sampled;
  io::write_json_file(ws.path("graph_report.json"), rep);
  io::write_json_file(ws.path("summary.json"), rep);
  return rep;
}

json cmd_chain_demo(Workspace& ws) {
  GraphSetup gs = build_graph_setup(ws.config);
  const int steps = get_or(need(ws.config, "graph"), "steps", 10);
  std::vector<gt::LocalMap> maps(static_cast<std::size_t>(steps), gs.lm);
  const auto res = gt::transform_chain(maps, gs.phi, gs.opt);

  json log = json::array();
  for (const auto& st : res.log) {
    json e;
    e["step"] = st.step;
    e["radius"] = st.radius;
    e["lip"] = st.lip;
    e["containment_residual"] = st.containment_residual;
    e["psi0"] = st.psi0;
    log.push_back(e);
  }
  io::write_json_file(ws.path("chain_log.json"), log);
  write_graph_csv(ws, "graph0.csv", res.psi0);

  json summary;
  summary["steps"] = steps;
  summary["final_radius"] = res.psi0.R;
  summary["final_lip"] = res.psi0.lip;
  double worst = 0.0;
  for (const auto& st : res.log) worst = std::max(worst, st.containment_residual);
  summary["worst_containment"] = worst;
  io::write_json_file(ws.path("summary.json"), summary);
  return summary;
}

}  // namespace

json run_config(json config, const RunOverrides& ov) {
  if (!config.is_object()) throw error(errc::config, "config: expected a JSON object");
  const auto t0 = std::chrono::steady_clock::now();
  if (ov.seed) config["seed"] = *ov.seed;
  if (ov.out_dir) config["out_dir"] = *ov.out_dir;
  if (ov.threads) set_max_threads(*ov.threads);

  Workspace ws;
  ws.config = config;
  ws.dir = config.contains("out_dir") ? config.at("out_dir").get<std::string>() : "out";
  ws.seed = config.contains("seed") ? config.at("seed").get<std::uint64_t>() : 0;
  fs::create_directories(ws.dir);

  const std::string command = need(config, "command").get<std::string>();
  json summary;
  if (command == "build-tree")
    summary = cmd_build_tree(ws);
  else if (command == "sample-measure")
    summary = cmd_sample_measure(ws);
  else if (command == "entropy-report")
    summary = cmd_entropy_report(ws);
  else if (command == "exponents")
    summary = cmd_exponents(ws);
  else if (command == "inequalities")
    summary = cmd_inequalities(ws);
  else if (command == "correlations")
    summary = cmd_correlations(ws);
  else if (command == "asip-diagnostics")
    summary = cmd_asip(ws);
  else if (command == "graph-transform")
    summary = cmd_graph_transform(ws);
  else if (command == "chain-demo")
    summary = cmd_chain_demo(ws);
  else
    throw error(errc::config, "command: unknown command \"" + command + "\"");

  const auto t1 = std::chrono::steady_clock::now();
  json manifest;
  char hx[24];
  std::snprintf(hx, sizeof hx, "%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  manifest["version"] = kVersion;
  manifest["command"] = command;
  manifest["config_hash"] = hx;
  manifest["seed"] = ws.seed;
  manifest["wall_time_s"] = std::chrono::duration<double>(t1 - t0).count();
  ws.files.push_back("manifest.json");
  manifest["files"] = ws.files;
  io::write_json_file(ws.dir + "/manifest.json", manifest);
  return manifest;
}

std::string report(const std::vector<std::string>& manifest_paths) {
  if (manifest_paths.empty()) throw error(errc::config, "report: at least one manifest required");
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-24s %-18s %12s %12s %12s %12s %10s\n", "run", "command",
                "entropy", "pressure", "lambda1", "lambda2", "passes");
  out += buf;
  for (const auto& path : manifest_paths) {
    const json m = io::read_json_file(path);
    if (!m.contains("version") || m.at("version").get<std::string>().rfind("0.", 0) != 0)
      throw error(errc::config, "report: incompatible manifest schema in " + path);
    const std::string dir = fs::path(path).parent_path().string();
    json s;
    const std::string spath = (dir.empty() ? "." : dir) + "/summary.json";
    if (fs::exists(spath)) s = io::read_json_file(spath);
    auto short_fmt = [](double v) {
      char b[32];
      std::snprintf(b, sizeof b, "%.10g", v);
      return std::string(b);
    };
    auto num = [&](const char* primary, const char* alt) -> std::string {
      if (s.contains(primary)) return short_fmt(s.at(primary).get<double>());
      if (alt && s.contains(alt)) return short_fmt(s.at(alt).get<double>());
      return "-";
    };
    std::string lam1 = "-", lam2 = "-";
    if (s.contains("lambda") && s.at("lambda").is_array()) {
      const auto& l = s.at("lambda");
      if (!l.empty()) lam1 = short_fmt(l[0].get<double>());
      if (l.size() > 1) lam2 = short_fmt(l[1].get<double>());
    }
    std::string passes = "-";
    if (s.contains("inequality_passes"))
      passes = std::to_string(s.at("inequality_passes").get<int>()) + "/" +
               std::to_string(s.at("inequality_total").get<int>());
    std::snprintf(buf, sizeof buf, "%-24s %-18s %12s %12s %12s %12s %10s\n",
                  fs::path(path).parent_path().filename().string().c_str(),
                  m.at("command").get<std::string>().c_str(),
                  num("entropy", "entropy_formula").c_str(), num("pressure", nullptr).c_str(),
                  lam1.c_str(), lam2.c_str(), passes.c_str());
    out += buf;
  }
  return out;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const error*>(&e)) {
    switch (err->code()) {
      case errc::config:
        return 2;
      case errc::base_point_rejected:
        return 4;
      default:
        return 3;
    }
  }
  return 3;
}

}  // namespace holodyn::cli
