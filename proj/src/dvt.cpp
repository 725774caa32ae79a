#include "ggflow/dvt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ggflow/errors.hpp"
#include "ggflow/functionals.hpp"
#include "transport_program.hpp"

namespace ggflow {

namespace {

CurveWithFlux curve_from_iterate(const GraphSystem& sys, const detail::TransportIterate& x, double tau) {
  CurveWithFlux c;
  const int M = static_cast<int>(x.w.size());
  for (int m = 0; m <= M; ++m) {
    c.times.push_back(tau * m / M);
    c.states.push_back(Measure::from_density(sys, x.u[m].cwiseMax(0.0)));
  }
  for (int m = 0; m < M; ++m) {
    c.fluxes.push_back(Flux{0.5 * x.w[m].cwiseProduct(sys.theta())});
    c.midpoints.push_back(Measure::from_density(sys, (0.5 * (x.u[m] + x.u[m + 1])).cwiseMax(0.0)));
  }
  return c;
}

}  // namespace

DVTSolution dvt_cost(const DVTProblem& pb) {
  const GraphSystem& sys = pb.system;
  const DVTOptions& opt = pb.options;
  if (!(pb.tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (opt.M < 1) throw InvalidArgument("M must be at least 1");
  if (pb.rho0.size() != sys.size() || pb.rho1.size() != sys.size())
    throw DimensionMismatch("endpoint measures have wrong length");
  const double m0 = pb.rho0.mass(), m1 = pb.rho1.mass();
  if (std::abs(m0 - m1) > 1e-12 * std::max(1.0, std::max(m0, m1)))
    throw Infeasible("endpoint masses differ: " + std::to_string(m0) + " vs " + std::to_string(m1));

  detail::TransportProgram prog;
  prog.system = &sys;
  prog.spec = &pb.spec;
  prog.u_start = pb.rho0.u();
  prog.u_end = pb.rho1.u();
  prog.M = opt.M;
  prog.tau = pb.tau;
  prog.lambda = opt.lambda;
  const detail::NewtonOptions nopt{opt.kkt_tol, opt.max_iter};

  DVTSolution sol;
  const bool positive = pb.rho0.u().minCoeff() > 0.0 && pb.rho1.u().minCoeff() > 0.0;
  std::vector<double> levels = opt.eps_schedule;
  if (positive && opt.exact_final) levels.push_back(0.0);
  if (levels.empty()) throw InvalidArgument("no smoothing level to solve");

  detail::TransportResult last;
  bool have = false;
  for (double eps : levels) {
    prog.eps = eps;
    last = detail::solve_transport(prog, have ? &last.x : nullptr, nopt);
    have = true;
    sol.iterations += last.iterations;
    if (!last.converged)
      throw SolverStalled("transport solve did not converge at eps = " + std::to_string(eps), last.objective,
                          last.kkt_residual);
    sol.eps_values.emplace_back(eps, last.objective);
  }
  sol.kkt_residual = last.kkt_residual;
  sol.constraint_residual = last.constraint_residual;
  sol.curve = curve_from_iterate(sys, last.x, pb.tau);
  if (sol.eps_values.back().first == 0.0) {
    sol.value = sol.eps_values.back().second;
  } else if (sol.eps_values.size() >= 2) {
    const auto [e1, v1] = sol.eps_values[sol.eps_values.size() - 2];
    const auto [e2, v2] = sol.eps_values.back();
    sol.value = v2 - e2 * (v1 - v2) / (e1 - e2);
    sol.extrapolated = true;
  } else {
    sol.value = sol.eps_values.back().second;
  }
  return sol;
}

DVTSolution dvt_cost(const GraphSystem& system, const DissipationSpec& spec, double tau, const Measure& rho0,
                     const Measure& rho1, const DVTOptions& options) {
  return dvt_cost(DVTProblem{system, spec, tau, rho0, rho1, options});
}

WActionReport w_action(const GraphSystem& system, const DissipationSpec& spec, const std::vector<double>& times,
                       const std::vector<Measure>& states, int depth, int M0, const DVTOptions& options) {
  if (times.size() != states.size() || times.size() < 2) throw GridMismatch("w_action: times and states differ");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw GridMismatch("w_action: times must increase");
  const std::size_t N = times.size() - 1;
  const std::size_t finest = std::size_t{1} << depth;
  if (depth < 0 || N % finest != 0) throw GridMismatch("w_action: interval count must be a multiple of 2^depth");
  WActionReport rep;
  for (int k = 0; k <= depth; ++k) {
    const std::size_t parts = std::size_t{1} << k;
    const std::size_t stride = N / parts;
    DVTOptions opt = options;
    opt.M = M0 << (depth - k);
    double sum = 0.0;
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t a = p * stride, b = a + stride;
      sum += dvt_cost(system, spec, times[b] - times[a], states[a], states[b], opt).value;
    }
    if (!rep.level_values.empty() && sum < rep.level_values.back() - 1e-9 * (1.0 + std::abs(sum)))
      rep.monotone = false;
    rep.level_values.push_back(sum);
  }
  rep.value = rep.level_values.back();
  return rep;
}

FeasibleCurve feasible_curve(const GraphSystem& system, const DissipationSpec& spec, const Measure& rho0,
                             const Measure& rho1, double tau, double gamma, double p, int samples) {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (!(p > 1.0) || !(gamma > p - 1.0)) throw InvalidArgument("feasible_curve needs p > 1 and gamma > p - 1");
  if (samples < 1) throw InvalidArgument("samples must be positive");
  const Index n = system.size();
  const Vector& u0 = rho0.u();
  const Vector& u1 = rho1.u();
  if (u0.minCoeff() <= 0.0 || u1.minCoeff() <= 0.0) throw InvalidArgument("feasible_curve needs positive endpoints");

  const Vector rhs = -(rho1.rho() - rho0.rho());
  const Matrix lap = system.laplacian();
  const Vector psi = Eigen::CompleteOrthogonalDecomposition<Matrix>(lap).solve(rhs);
  if ((lap * psi - rhs).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
    std::vector<std::vector<std::size_t>> comps;
    for (const auto& c : system.components()) comps.emplace_back(c.begin(), c.end());
    throw SingularLaplacian(std::move(comps));
  }
  Matrix j0 = Matrix::Zero(n, n);
  for (const Edge& e : system.edges()) j0(e.from, e.to) = 0.5 * e.theta * (psi(e.from) - psi(e.to));

  auto profile = [&](double t) { return std::pow(t / tau, gamma); };
  auto rate = [&](double t) { return gamma * std::pow(t / tau, gamma - 1.0) / tau; };
  auto state = [&](double t) { return Measure::from_density(system, u0 + profile(t) * (u1 - u0)); };

  FeasibleCurve out;
  auto integrand = [&](double t) {
    return r_action(spec, system, state(t), Flux{rate(t) * j0}).value();
  };
  out.action_bound =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, tau, 15, 1e-12);

  for (int k = 0; k <= samples; ++k) {
    const double t = tau * k / samples;
    out.curve.times.push_back(t);
    out.curve.states.push_back(state(t));
  }
  for (int k = 0; k < samples; ++k) {
    const double ta = out.curve.times[k], tb = out.curve.times[k + 1];
    out.curve.fluxes.push_back(Flux{(profile(tb) - profile(ta)) / (tb - ta) * j0});
    out.curve.midpoints.push_back(state(0.5 * (ta + tb)));
  }
  return out;
}

namespace {

double poincare_quotient(const GraphSystem& sys, const Vector& xi, double q, Vector* grad) {
  const Index n = sys.size();
  const Vector& pi = sys.pi();
  double num = 0.0, den = 0.0;
  Vector gnum = Vector::Zero(n), gden = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const double a = std::abs(xi(i));
    num += std::pow(a, q) * pi(i);
    gnum(i) = q * std::pow(a, q - 1.0) * (xi(i) >= 0 ? 1.0 : -1.0) * pi(i);
  }
  for (const Edge& e : sys.edges()) {
    const double d = xi(e.to) - xi(e.from);
    den += std::pow(std::abs(d), q) * e.theta;
    const double gd = q * std::pow(std::abs(d), q - 1.0) * (d >= 0 ? 1.0 : -1.0) * e.theta;
    gden(e.to) += gd;
    gden(e.from) -= gd;
  }
  if (grad) *grad = gnum / num - gden / den;  // gradient of log(num / den)
  return num / den;
}

}  // namespace

double poincare_constant(const GraphSystem& system, double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw InvalidArgument("Poincare exponent must be in (1, inf)");
  if (!system.connected()) throw Disconnected("Poincare constant is infinite on a disconnected graph");
  const Index n = system.size();
  if (n < 2) return 0.0;
  const Matrix lap = system.laplacian();
  const Matrix P = system.pi().asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(lap, P);
  const double lambda2 = ges.eigenvalues()(1);
  if (q == 2.0) return 1.0 / (2.0 * lambda2);

  const Vector& pi = system.pi();
  auto project = [&](Vector x) {
    x.array() -= pi.dot(x) / pi.squaredNorm() * pi.array();
    return Vector(x / x.cwiseAbs().maxCoeff());
  };
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int restart = 0; restart < 8; ++restart) {
    Vector x(n);
    if (restart == 0) {
      x = ges.eigenvectors().col(1);
    } else {
      for (Index i = 0; i < n; ++i) x(i) = normal(rng);
    }
    x = project(x);
    Vector g;
    double val = poincare_quotient(system, x, q, &g);
    double step = 0.1;
    for (int it = 0; it < 500 && step > 1e-14; ++it) {
      Vector gp = g;
      gp.array() -= pi.dot(gp) / pi.squaredNorm() * pi.array();
      const Vector cand = project(x + step * gp);
      Vector gc;
      const double vc = poincare_quotient(system, cand, q, &gc);
      if (vc > val) {
        x = cand;
        val = vc;
        g = gc;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, val);
  }
  return best;
}

CostAxiomsReport cost_axioms_check(const GraphSystem& system, const DissipationSpec& spec, int samples,
                                   std::uint64_t seed, const DVTOptions& options) {
  CostAxiomsReport rep;
  rep.samples = samples;
  rep.tolerance = 100.0 * options.kkt_tol;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  const Index n = system.size();
  auto draw = [&] {
    Vector u(n);
    for (Index i = 0; i < n; ++i) u(i) = unif(rng);
    u /= u.dot(system.pi());
    return Measure::from_density(system, u);
  };
  auto W = [&](double tau, const Measure& a, const Measure& b, int M, double lambda = 1.0) {
    DVTOptions o = options;
    o.M = M;
    o.lambda = lambda;
    return dvt_cost(system, spec, tau, a, b, o).value;
  };
  const int M = options.M;
  for (int s = 0; s < samples; ++s) {
    const Measure a = draw(), b = draw(), c = draw();
    rep.zero_violation = std::max(rep.zero_violation, W(1.0, a, a, M));
    const double wab = W(1.0, a, b, M), wbc = W(1.0, b, c, M), wac2 = W(2.0, a, c, 2 * M);
    rep.triangle_violation = std::max(rep.triangle_violation, wac2 - wab - wbc);
    const double wh = W(0.5, a, c, M), w1 = W(1.0, a, c, M), w2 = W(2.0, a, c, M);
    rep.monotonicity_violation = std::max({rep.monotonicity_violation, w2 - w1, w1 - wh});
    rep.convexity_violation = std::max(rep.convexity_violation, w1 - (2.0 / 3.0) * wh - (1.0 / 3.0) * w2);
    rep.symmetry_violation = std::max(rep.symmetry_violation, std::abs(w1 - W(1.0, c, a, M)));
    rep.scaling_violation = std::max(rep.scaling_violation, std::abs(w2 - W(1.0, a, c, M, 2.0)));
  }
  return rep;
}

}  // namespace ggflow
