#pragma once

#include <cstddef>
#include <vector>

#include "ggflow/graph_core.hpp"
#include "ggflow/potentials.hpp"

namespace ggflow {

struct SolveOptions {
  double T = 1.0;
  /// Spacing of the output grid; the last interval is shortened to end at T.
  double dt = 1e-2;
  double rtol = 1e-8;
  double atol = 1e-12;
  /// Initial trial step; 0 picks min(dt / 2, 1e-3).
  double h_init = 0.0;
  double h_min = 1e-14;
  std::size_t max_steps = 50'000'000;
};

/// Solution of du/dt = sum_j F(u_i, u_j) kappa_ij on an output grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<Measure> states;
  /// One flux per interval, 2 j = -F theta at the interval's midpoint state.
  std::vector<Flux> fluxes;
  /// State at the midpoint of each interval.
  std::vector<Measure> midpoints;
  std::size_t steps = 0;
  std::size_t rejections = 0;
  /// max_t |sum rho_t - sum rho_0| / sum rho_0
  double mass_drift = 0.0;
  double min_density = 0.0;
  double max_density = 0.0;

  CurveWithFlux curve() const;
};

/// The field used by the solver: the continuous extension when one is known,
/// else F itself on the positive quadrant with a finiteness check.
FieldFunction evolution_field(const DissipationSpec& spec, const EntropySpec& entropy);

/// Right-hand side (1/pi_i) sum_j F(u_i, u_j) theta_ij with exactly skew pair contributions.
Vector evolution_rhs(const GraphSystem& system, const FieldFunction& field, const Vector& u);

/// Adaptive RK4 (step doubling) with reject-and-halve positivity control.
/// Throws StepSizeUnderflow or NonFiniteField.
Trajectory solve_forward(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy,
                         const Vector& u0, const SolveOptions& opts);
Trajectory solve_forward(const GraphSystem& system, const FieldFunction& field, const Vector& u0,
                         const SolveOptions& opts);

/// Sampled one-sided Lipschitz constant max((F(u', v) - F(u, v)) / (u' - u), 0) over u < u', v in [lo, hi].
double estimate_one_sided_lipschitz(const FieldFunction& field, double lo, double hi, int samples = 1000,
                                    unsigned seed = 3);

struct ContractionReport {
  /// max over the grid of ||u_t - v_t|| / (exp(2 |kappa| l t) ||u_0 - v_0||), in L1(pi); 0 when u_0 = v_0.
  double ratio = 0.0;
  double ell_hat = 0.0;
  /// u_0 <= v_0 componentwise implies u_t <= v_t + tol on the grid (true when the premise fails).
  bool order_preserved = true;
};
ContractionReport l1_contraction_check(const GraphSystem& system, const DissipationSpec& spec,
                                       const EntropySpec& entropy, const Vector& u0, const Vector& v0,
                                       const SolveOptions& opts, double order_tol = 1e-9);

struct StationarityReport {
  double fisher_final = 0.0;
  double tv_distance_to_c_pi = 0.0;
  bool energy_monotone = true;
  double worst_energy_increase = 0.0;
};
StationarityReport stationarity_report(const GraphSystem& system, const DissipationSpec& spec,
                                       const EntropySpec& entropy, const Trajectory& traj,
                                       double energy_tol = 1e-12);

}  // namespace ggflow
