#include "ggflow/jko.hpp"

#include <algorithm>
#include <cmath>

#include "ggflow/errors.hpp"
#include "ggflow/functionals.hpp"
#include "transport_program.hpp"

namespace ggflow {

MMStep mm_step(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy, double tau,
               const Measure& rho_prev, const MMOptions& options) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (rho_prev.size() != system.size()) throw DimensionMismatch("measure and system differ in size");
  detail::TransportProgram prog;
  prog.system = &system;
  prog.spec = &spec;
  prog.entropy = &entropy;
  prog.u_start = rho_prev.u();
  prog.free_end = true;
  prog.M = options.M;
  prog.tau = tau;
  prog.eps = options.eps;
  const detail::TransportResult res =
      detail::solve_transport(prog, nullptr, detail::NewtonOptions{options.kkt_tol, options.max_iter});
  if (!res.converged)
    throw SolverStalled("minimizing-movement step did not converge", res.objective, res.kkt_residual);

  const int M = options.M;
  CurveWithFlux curve;
  for (int m = 0; m <= M; ++m) {
    curve.times.push_back(tau * m / M);
    curve.states.push_back(Measure::from_density(system, res.x.u[m].cwiseMax(0.0)));
  }
  for (int m = 0; m < M; ++m) {
    curve.fluxes.push_back(Flux{0.5 * res.x.w[m].cwiseProduct(system.theta())});
    curve.midpoints.push_back(Measure::from_density(system, (0.5 * (res.x.u[m] + res.x.u[m + 1])).cwiseMax(0.0)));
  }
  Measure end = curve.states.back();
  return MMStep{std::move(end), res.action, res.energy, res.kkt_residual, res.iterations, std::move(curve)};
}

const Measure& MMRun::piecewise_constant(double t) const {
  if (t <= times.front()) return steps.front();
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * tau);
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(it - times.begin()), steps.size() - 1);
  return steps[n];
}

const Measure& MMRun::lagged(double t) const {
  if (t <= times.front()) return steps.front();
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12 * tau);
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(it - times.begin()), steps.size() - 1);
  return steps[n == 0 ? 0 : n - 1];
}

MMRun mm_solve(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy,
               const Measure& rho0, double T, double tau, const MMOptions& options) {
  if (!(T > 0.0) || !(tau > 0.0)) throw InvalidArgument("mm_solve needs T, tau > 0");
  MMRun run;
  run.tau = tau;
  run.times.push_back(0.0);
  run.steps.push_back(rho0);
  double e_prev = energy(entropy, system, rho0);
  const double e0 = e_prev;
  double w_sum = 0.0;
  const auto n_steps = static_cast<std::size_t>(std::ceil(T / tau - 1e-9));
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const double t_prev = run.times.back();
    const double t = std::min(T, static_cast<double>(n) * tau);
    MMStep st = mm_step(system, spec, entropy, t - t_prev, run.steps.back(), options);
    const double e = energy(entropy, system, st.rho);
    MMRecord rec{t, st.w_value, e, st.kkt_residual, st.iterations, e_prev - st.w_value - e};
    if (e > e_prev + 1e-12 * (1.0 + std::abs(e_prev))) run.energy_nonincreasing = false;
    w_sum += st.w_value;
    e_prev = e;
    run.records.push_back(rec);
    run.times.push_back(t);
    run.steps.push_back(std::move(st.rho));
  }
  run.discrete_edi_excess = w_sum + e_prev - e0;
  return run;
}

MoreauYosida moreau_yosida(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy,
                           double r, const Measure& rho, const MMOptions& options) {
  MMStep st = mm_step(system, spec, entropy, r, rho, options);
  return MoreauYosida{st.w_value + st.energy, std::move(st.rho), st.w_value};
}

SlopeEstimate generalized_slope_estimate(const GraphSystem& system, const DissipationSpec& spec,
                                         const EntropySpec& entropy, const Measure& rho,
                                         const std::vector<double>& r_list, const MMOptions& options) {
  SlopeEstimate out;
  const double e = energy(entropy, system, rho);
  for (std::size_t k = 0; k < r_list.size(); ++k) {
    if (k > 0 && !(r_list[k] < r_list[k - 1])) throw InvalidArgument("r_list must be decreasing");
    const double gen = moreau_yosida(system, spec, entropy, r_list[k], rho, options).value;
    const double qk = (e - gen) / r_list[k];
    if (!out.quotients.empty() && qk < out.quotients.back() - 1e-9 * (1.0 + std::abs(qk))) out.nondecreasing = false;
    out.gen_values.push_back(gen);
    out.quotients.push_back(qk);
    out.estimate = std::max(out.estimate, qk);
  }
  return out;
}

std::vector<Measure> variational_interpolant(const GraphSystem& system, const DissipationSpec& spec,
                                             const EntropySpec& entropy, const MMRun& run,
                                             const std::vector<double>& sample_times, const MMOptions& options) {
  std::vector<Measure> out;
  out.reserve(sample_times.size());
  for (double t : sample_times) {
    if (t <= run.times.front()) {
      out.push_back(run.steps.front());
      continue;
    }
    const auto it = std::lower_bound(run.times.begin(), run.times.end(), t - 1e-12 * run.tau);
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(it - run.times.begin()), run.steps.size() - 1);
    const double r = t - run.times[n - 1];
    if (r <= 1e-14 * run.tau) {
      out.push_back(run.steps[n - 1]);
      continue;
    }
    out.push_back(moreau_yosida(system, spec, entropy, r, run.steps[n - 1], options).minimizer);
  }
  return out;
}

}  // namespace ggflow
