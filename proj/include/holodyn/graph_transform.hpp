#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "holodyn/parallel.hpp"

namespace holodyn::gt {

using cplx = std::complex<double>;

// Dense complex matrix, n <= 2 (desk scale; the construction is dimension-
// generic but only exercised up to 2x2 blocks).
struct CMat {
  int n = 0;
  std::array<cplx, 4> a{};

  static CMat zero(int n);
  static CMat scalar(cplx v);
  static CMat mat2(cplx a11, cplx a12, cplx a21, cplx a22);

  cplx& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const cplx& at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  void apply(const cplx* in, cplx* out) const;
  CMat inverse() const;
  double op_norm() const;  // largest singular value
  double min_sv() const;
};

// Block-diagonal linear part (A, B): A invertible, |B| < |A^-1|^-1.
struct LinearSplit {
  int k1 = 0, k2 = 0;
  CMat A, B;
  double norm_B = 0.0;
  double norm_Ainv = 0.0;
  double gamma = 0.0;  // 1 - |B| |A^-1| in (0, 1]

  static LinearSplit make(CMat A, CMat B);
  int k() const { return k1 + k2; }
};

struct Conditions {
  bool a = false, b = false, c = false, d = false;
  double lhs_a = 0.0, lhs_b = 0.0, lhs_c = 0.0, lhs_d1 = 0.0;
  double rhs_d2 = 0.0, lhs_d2 = 0.0;
  double gamma = 0.0;
};
Conditions check_conditions(const LinearSplit& split, double gamma0, double delta,
                            double epsilon);

// Holomorphic g on the polydisc D^k(R0) -> D^k(R1) with g(0) = 0, d0 g = (A, B)
// and |d_w g - d0 g| <= delta. delta is certified on a finite-difference grid
// unless overridden.
struct LocalMap {
  LinearSplit split;
  std::function<void(const cplx* w, cplx* out)> g;
  double delta = 0.0;
  double R0 = 1.0, R1 = 1.0;
  bool delta_sampled = true;

  int k() const { return split.k(); }
  void eval(const cplx* w, cplx* g1_out, cplx* g2_out) const;
};
LocalMap make_local_map(const LinearSplit& split,
                        std::function<void(const cplx*, cplx*)> g, double R0, double R1,
                        std::optional<double> delta_override = std::nullopt,
                        int jac_grid = 9, double fd_step = 1e-5);

// Lipschitz graph x = phi(y) over D^{k2}(R) with an analytic evaluator plus
// uniform grid samples (export, Lipschitz measurement).
struct LipGraph {
  int k1 = 0, k2 = 0;
  double R = 0.0;
  std::function<void(const cplx* y, cplx* x_out)> eval;
  std::vector<cplx> grid_y;            // k2 entries per point
  std::vector<cplx> grid_x;            // k1 entries per point
  std::vector<std::uint8_t> in_domain; // general-mode membership mask
  double lip = 0.0;
  double psi0 = 0.0;  // |phi(0)|

  std::size_t points() const { return in_domain.size(); }
};

LipGraph graph_from(int k1, int k2, double R,
                    std::function<void(const cplx*, cplx*)> eval, int grid_pts = 33,
                    std::uint64_t lip_pair_cap = 1000000);
LipGraph zero_graph(int k1, int k2, double R, int grid_pts = 33);

enum class Mode { general, shrink, offset };

struct TransformOptions {
  Mode mode = Mode::shrink;
  double epsilon = 0.05;
  double gamma0 = 1.0;
  double tol = 1e-12;
  int grid_pts = 33;
  int iter_cap = 10000;
  int u_samples = 17;  // general mode: containment samples along L(y)
};

struct TransformResult {
  LipGraph psi;
  double max_fixpoint_residual = 0.0;
  double max_contraction = 0.0;  // observed iteration ratio
  std::uint64_t outside_domain = 0;  // general mode: grid points not in U
};

// The contraction Lambda_y(x) = A^-1 [phi(g2(x,y)) - (g1(x,y) - A x)] iterated
// from x = 0 on each grid point of the output domain. Never inverts g; B may
// be zero.
TransformResult backward_transform(const LocalMap& lm, const LipGraph& phi,
                                   const TransformOptions& opt, exec mode = default_exec());

struct VerifyReport {
  double lip = 0.0;
  bool lip_ok = false;
  double containment_residual = 0.0;
  double psi0 = 0.0;
};
// (i) Lip psi <= gamma0 over grid pairs, (ii) g(graph psi) c graph phi up to
// tol, (iii) |psi(0)| report. Throws error(errc::domain) when a g2-image
// escapes phi's domain.
VerifyReport verify_graph(const LocalMap& lm, const LipGraph& psi, const LipGraph& phi,
                          double gamma0, double tol, exec mode = default_exec());

// Swap the evaluator for a truncated power series sampled on the domain
// circle; keeps chained transforms O(1) per evaluation at spectral accuracy.
LipGraph taylorize(const LipGraph& g, int n_coef = 48, int n_samples = 96);

struct ChainStep {
  int step = 0;
  double radius = 0.0;
  double lip = 0.0;
  double containment_residual = 0.0;
  double psi0 = 0.0;
};
struct ChainResult {
  LipGraph psi0;
  std::vector<ChainStep> log;
};
// Backward pass i = n-1 .. 0 with radius schedule R e^{-epsilon} per step;
// every intermediate graph is verified against its predecessor.
ChainResult transform_chain(std::span<const LocalMap> maps, const LipGraph& phi_n,
                            const TransformOptions& opt, exec mode = default_exec());

}  // namespace holodyn::gt
