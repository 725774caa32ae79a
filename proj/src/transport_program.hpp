#pragma once

// Discretized minimal-action problem shared by the transport cost and the
// minimizing-movement step:
//
//   minimize   sum_m dt * 1/2 sum_{(i,j)} theta_ij * lambda * Upsilon_eps(ubar_i, ubar_j, w_ij / lambda)
//              [+ energy_weight * sum_i phi(u^M_i) pi_i   when the endpoint is free]
//   subject to pi_i (u^{m+1}_i - u^m_i) + dt/2 sum_k theta_ik (w_ik - w_ki) = 0,
//
// with ubar = (u^m + u^{m+1}) / 2, w piecewise constant per interval and
// u^0 (and u^M unless free) fixed. Solved by feasible Newton on the KKT system.

#include <vector>

#include "ggflow/graph_core.hpp"
#include "ggflow/potentials.hpp"

namespace ggflow::detail {

struct TransportProgram {
  const GraphSystem* system = nullptr;
  const DissipationSpec* spec = nullptr;
  const EntropySpec* entropy = nullptr;  // required when free_end
  Vector u_start;
  Vector u_end;  // ignored when free_end
  bool free_end = false;
  double energy_weight = 1.0;
  int M = 16;
  double tau = 1.0;
  double eps = 0.0;
  double lambda = 1.0;
};

struct TransportIterate {
  std::vector<Vector> u;  // M + 1 densities
  std::vector<Matrix> w;  // M edge fields (n x n, zero off the edge set)
};

struct NewtonOptions {
  double kkt_tol = 1e-10;
  int max_iter = 200;
};

struct TransportResult {
  TransportIterate x;
  double action = 0.0;
  double energy = 0.0;  // energy term at the endpoint (free end only)
  double objective = 0.0;
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// A strictly positive feasible iterate. Throws Infeasible when the masses of the
/// endpoints differ on some connected component.
TransportIterate feasible_start(const TransportProgram& prog);

/// Value of the objective at an iterate (+inf outside the domain).
double transport_objective(const TransportProgram& prog, const TransportIterate& x, double* action = nullptr);

/// Max-norm residual of the continuity constraints.
double transport_constraint_residual(const TransportProgram& prog, const TransportIterate& x);

TransportResult solve_transport(const TransportProgram& prog, const TransportIterate* warm,
                                const NewtonOptions& opts);

}  // namespace ggflow::detail
