#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ggflow/graph_core.hpp"
#include "ggflow/potentials.hpp"

namespace ggflow {

/// Philox4x32-10 counter-based generator.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;
  static Counter block(Counter ctr, Key key);
};

/// Independent stream of uniforms keyed by (seed, stream id).
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream);
  std::uint32_t next_u32();
  /// Uniform double in (0, 1) with 53 random bits.
  double next_double();

 private:
  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
};

struct JumpEvent {
  double t;
  std::uint32_t particle;
  std::uint32_t from;
  std::uint32_t to;
};

struct ParticleEnsemble {
  std::size_t n = 0;
  double T = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> initial_states;
  /// Sorted by (time, particle).
  std::vector<JumpEvent> events;
};

/// Exact-event simulation of n independent copies of the jump process. Initial states are
/// drawn i.i.d. from `initial` (a probability vector; pi / pi(V) when empty). Each particle
/// owns the stream (seed, particle), so results do not depend on `threads`.
ParticleEnsemble gillespie(const GraphSystem& system, std::size_t n, double T, std::uint64_t seed,
                           const Vector& initial = Vector(), unsigned threads = 0);

struct EmpiricalPath {
  /// Bin edges.
  std::vector<double> times;
  /// Empirical measure at each bin edge.
  std::vector<Measure> states;
  /// Time average of the empirical measure over each bin.
  std::vector<Measure> bin_average;
  /// Jump counts per edge in each bin divided by n (flux mass, not rate).
  std::vector<Matrix> flux_mass;

  /// As a curve with per-interval flux rates flux_mass / dt.
  CurveWithFlux curve() const;
};

EmpiricalPath empirical_path(const GraphSystem& system, const ParticleEnsemble& ens, const std::vector<double>& bins);

/// Evenly spaced bin edges on [0, T].
std::vector<double> uniform_bins(double T, int count);

/// a log(a / b) - a + b, with the conventions 0 -> b and +inf when b = 0 < a.
double eta_hat(double a, double b);

/// sum over bins and edges of eta_hat(flux_mass_ij, rho_avg_i kappa_ij dt).
double rate_I(const GraphSystem& system, const EmpiricalPath& path);
double rate_I(const GraphSystem& system, const std::vector<double>& times, const std::vector<Measure>& bin_average,
              const std::vector<Matrix>& flux_mass);

/// (sqrt(cd)/2) {Psi(2s / sqrt(cd)) + Psi*(-log(d/c))} + s log(d/c) for the cosh pair.
double psi_closed_form(double s, double c, double d);
/// inf { eta_hat(a, c) + eta_hat(a - 2s, d) : a >= max(0, 2s) } by golden-section search.
double psi_brute_force(double s, double c, double d, double tol = 1e-13);

struct PsiReduction {
  double closed_form = 0.0;
  double brute_force = 0.0;
  double difference = 0.0;
};
PsiReduction psi_reduction(const DissipationSpec& spec_cosh, double s, double c, double d);

}  // namespace ggflow
