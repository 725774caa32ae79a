#pragma once

#include <vector>

#include "ggflow/graph_core.hpp"
#include "ggflow/potentials.hpp"

namespace ggflow {

struct MMOptions {
  /// Time intervals of the inner transport problem.
  int M = 8;
  /// Smoothing of alpha in the inner problem (0 = none).
  double eps = 0.0;
  double kkt_tol = 1e-10;
  int max_iter = 200;
};

struct MMStep {
  Measure rho;
  /// Transport part W(tau, rho_prev, rho) of the minimized objective.
  double w_value = 0.0;
  double energy = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Inner optimal curve on [0, tau].
  CurveWithFlux curve;
};

/// One minimizing-movement step: argmin_v W(tau, rho_prev, v) + E(v). Throws SolverStalled.
MMStep mm_step(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy, double tau,
               const Measure& rho_prev, const MMOptions& options = {});

struct MMRecord {
  double t = 0.0;
  double w_value = 0.0;
  double energy = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  /// E(rho^{n-1}) - W - E(rho^n); nonnegative up to the inner tolerance.
  double edi_slack = 0.0;
};

struct MMRun {
  double tau = 0.0;
  std::vector<double> times;
  std::vector<Measure> steps;
  /// records[n - 1] describes the step producing steps[n].
  std::vector<MMRecord> records;
  /// sum_n W + E(rho^N) - E(rho^0); nonpositive up to accumulated tolerance.
  double discrete_edi_excess = 0.0;
  bool energy_nonincreasing = true;

  /// rho^n for t in ((n - 1) tau, n tau], rho^0 at t = 0.
  const Measure& piecewise_constant(double t) const;
  /// rho^{n - 1} for t in ((n - 1) tau, n tau].
  const Measure& lagged(double t) const;
};

/// Iterates mm_step up to T (the last step is shortened to end at T).
MMRun mm_solve(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy,
               const Measure& rho0, double T, double tau, const MMOptions& options = {});

struct MoreauYosida {
  double value = 0.0;
  Measure minimizer;
  double w_value = 0.0;
};

/// inf_mu W(r, rho, mu) + E(mu).
MoreauYosida moreau_yosida(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy,
                           double r, const Measure& rho, const MMOptions& options = {});

struct SlopeEstimate {
  /// max over r of (E(rho) - gen(r, rho)) / r; a lower bound for the limsup as r -> 0.
  double estimate = 0.0;
  std::vector<double> quotients;
  std::vector<double> gen_values;
  /// quotients nondecreasing along the (decreasing) r list.
  bool nondecreasing = true;
};

SlopeEstimate generalized_slope_estimate(const GraphSystem& system, const DissipationSpec& spec,
                                         const EntropySpec& entropy, const Measure& rho,
                                         const std::vector<double>& r_list, const MMOptions& options = {});

/// De Giorgi interpolant at the requested times: for t in (t_{n-1}, t_n] the minimizer of
/// W(t - t_{n-1}, rho^{n-1}, .) + E(.).
std::vector<Measure> variational_interpolant(const GraphSystem& system, const DissipationSpec& spec,
                                             const EntropySpec& entropy, const MMRun& run,
                                             const std::vector<double>& sample_times,
                                             const MMOptions& options = {});

}  // namespace ggflow
