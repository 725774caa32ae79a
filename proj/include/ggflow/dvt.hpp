#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ggflow/graph_core.hpp"
#include "ggflow/potentials.hpp"

namespace ggflow {

struct DVTOptions {
  /// Number of time intervals.
  int M = 16;
  /// Smoothing levels alpha -> alpha + eps, solved in order with warm starts.
  std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4};
  /// Finish with an unsmoothed solve when both endpoints are strictly positive;
  /// otherwise the value is extrapolated linearly in eps from the last two levels.
  bool exact_final = true;
  double kkt_tol = 1e-10;
  int max_iter = 200;
  /// Rescaled integrand lambda * Upsilon(u, v, w / lambda); lambda = tau on [0, 1] reproduces the cost on [0, tau].
  double lambda = 1.0;
};

struct DVTProblem {
  GraphSystem system;
  DissipationSpec spec;
  double tau = 1.0;
  Measure rho0;
  Measure rho1;
  DVTOptions options;
};

struct DVTSolution {
  double value = 0.0;
  /// Optimal discrete curve: M + 1 states, one flux per interval, midpoint states.
  CurveWithFlux curve;
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
  /// (eps, value) for every solve performed, in order; the unsmoothed solve appears as eps = 0.
  std::vector<std::pair<double, double>> eps_values;
  bool extrapolated = false;
  int iterations = 0;
};

/// Minimal discrete action between rho0 and rho1 in time tau.
/// Throws Infeasible (unequal masses) or SolverStalled (carries the best value).
DVTSolution dvt_cost(const DVTProblem& problem);
DVTSolution dvt_cost(const GraphSystem& system, const DissipationSpec& spec, double tau, const Measure& rho0,
                     const Measure& rho1, const DVTOptions& options = {});

struct WActionReport {
  /// Partition sums per dyadic level (level k uses 2^k sub-intervals).
  std::vector<double> level_values;
  double value = 0.0;
  bool monotone = true;
};

/// Sup over dyadic refinements (up to depth) of sum_k W(t_{k+1} - t_k, rho_{t_k}, rho_{t_{k+1}}).
/// The curve must have 2^depth * r intervals for an integer r >= 1. Each level uses
/// M0 * 2^(depth - k) time steps per sub-interval, so every level shares the same step.
WActionReport w_action(const GraphSystem& system, const DissipationSpec& spec, const std::vector<double>& times,
                       const std::vector<Measure>& states, int depth = 3, int M0 = 4,
                       const DVTOptions& options = {});

struct FeasibleCurve {
  CurveWithFlux curve;
  /// Action of the curve by adaptive quadrature; an upper bound on W.
  double action_bound = 0.0;
};

/// Linear interpolation u_t = u0 + (t / tau)^gamma (u1 - u0) with the minimal weighted-L2 flux.
/// Needs gamma > p - 1. Throws SingularLaplacian when mass must cross between components.
FeasibleCurve feasible_curve(const GraphSystem& system, const DissipationSpec& spec, const Measure& rho0,
                             const Measure& rho1, double tau, double gamma = 2.0, double p = 2.0, int samples = 64);

/// Best constant C in sum |xi|^q pi <= C sum_{ij} |xi_j - xi_i|^q theta_ij over mean-zero xi.
/// Exact for q = 2 (generalized eigenvalue); a lower bound from projected ascent otherwise.
/// Throws Disconnected.
double poincare_constant(const GraphSystem& system, double q = 2.0);

struct CostAxiomsReport {
  int samples = 0;
  double tolerance = 0.0;
  double zero_violation = 0.0;         // max W(tau, rho, rho)
  double triangle_violation = 0.0;     // max W(2tau, a, c) - W(tau, a, b) - W(tau, b, c)
  double monotonicity_violation = 0.0; // max of W(2) - W(1), W(1) - W(1/2)
  double convexity_violation = 0.0;    // max W(1) - (2/3) W(1/2) - (1/3) W(2)
  double symmetry_violation = 0.0;     // max |W(a, b) - W(b, a)|
  double scaling_violation = 0.0;      // max |W(tau) - W_tau(1)|
};

/// Sampled worst-case violations of the cost axioms on random positive measures of unit mass.
CostAxiomsReport cost_axioms_check(const GraphSystem& system, const DissipationSpec& spec, int samples,
                                   std::uint64_t seed = 1, const DVTOptions& options = {});

}  // namespace ggflow
