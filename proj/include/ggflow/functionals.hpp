#pragma once

#include <string>
#include <vector>

#include "ggflow/extended_real.hpp"
#include "ggflow/graph_core.hpp"
#include "ggflow/potentials.hpp"

namespace ggflow {

/// E(rho) = sum_i phi(u_i) pi_i.
double energy(const EntropySpec& entropy, const GraphSystem& system, const Measure& rho);

/// R(rho, j) = 1/2 sum_{theta_ij > 0} Upsilon(u_i, u_j, 2 j_ij / theta_ij) theta_ij,
/// and +inf when an edge without mass carries flux.
ExtReal r_action(const DissipationSpec& spec, const GraphSystem& system, const Measure& rho, const Flux& flux);

/// The three edge Fisher integrands at (u, v).
struct DPhi {
  /// Psi*(A) alpha, and 0 where alpha = 0.
  ExtReal lower;
  /// Psi*(A) alpha where alpha > 0; 0 if alpha = 0 and u = v; +inf otherwise.
  ExtReal upper;
  /// Lower semicontinuous envelope of `upper`; equal to `upper` when no closed form is known.
  ExtReal envelope;
  /// false when `envelope` is the fallback `upper`, which may overestimate on the boundary.
  bool envelope_exact = false;
};
DPhi d_phi_variants(const DissipationSpec& spec, const EntropySpec& entropy, double u, double v);

/// True when d_phi_variants has a closed-form envelope for this pair.
bool has_exact_envelope(const DissipationSpec& spec, const EntropySpec& entropy);

/// D(rho) = 1/2 sum D_phi(u_i, u_j) theta_ij.
ExtReal fisher(const DissipationSpec& spec, const EntropySpec& entropy, const GraphSystem& system,
               const Measure& rho);
/// 1/2 sum D^-_phi(u_i, u_j) theta_ij.
ExtReal fisher_lower(const DissipationSpec& spec, const EntropySpec& entropy, const GraphSystem& system,
                     const Measure& rho);

/// Edgewise chain-rule integrand sum_ij A_phi(u_i, u_j) j_ij (= 1/2 sum B_phi theta).
ExtReal chain_rule_rate(const EntropySpec& entropy, const GraphSystem& system, const Vector& u, const Flux& flux);

/// max over intervals of |Delta int phi dpi - int sum A_phi j dt|.
double chain_rule_residual(const EntropySpec& entropy, const GraphSystem& system, const CurveWithFlux& curve);

struct EDBReport {
  double energy_start = 0.0;
  double energy_end = 0.0;
  double action_integral = 0.0;
  double fisher_integral = 0.0;
  /// action + fisher + E(end) - E(start)
  double deficit = 0.0;
  double ce_residual = 0.0;
  double max_step = 0.0;
  /// Quadrature used: "midpoint" or "trapezoid" for the action; the Fisher term is always trapezoidal.
  std::string action_quadrature;
  bool fisher_envelope_exact = false;
};

/// Energy-Dissipation deficit of a curve. Throws ContinuityEquationViolated when
/// ce_residual(curve) exceeds ce_tol.
EDBReport edb_deficit(const DissipationSpec& spec, const EntropySpec& entropy, const GraphSystem& system,
                      const CurveWithFlux& curve, double ce_tol = 1e-6);

/// max over edges with theta > 0 of |2 j_ij / theta_ij + F(u_i, u_j)|: zero exactly when the
/// flux realizes the Fenchel equality edgewise.
double fenchel_equality_residual(const DissipationSpec& spec, const EntropySpec& entropy,
                                 const GraphSystem& system, const Vector& u, const Flux& flux);

struct EdgeDiagnostic {
  double t;
  Index i;
  Index j;
  double u_i;
  double u_j;
  double w;
  ExtReal upsilon;
  ExtReal d_phi;
  ExtReal b_phi;
};

/// Per-interval, per-edge (i < j) values at the interval midpoint.
std::vector<EdgeDiagnostic> edge_diagnostics(const DissipationSpec& spec, const EntropySpec& entropy,
                                             const GraphSystem& system, const CurveWithFlux& curve);

}  // namespace ggflow
