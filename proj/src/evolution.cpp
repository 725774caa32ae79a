#include "ggflow/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ggflow/errors.hpp"
#include "ggflow/functionals.hpp"

namespace ggflow {

CurveWithFlux Trajectory::curve() const {
  CurveWithFlux c;
  c.times = times;
  c.states = states;
  c.fluxes = fluxes;
  c.midpoints = midpoints;
  return c;
}

FieldFunction evolution_field(const DissipationSpec& spec, const EntropySpec& entropy) {
  if (auto f = continuous_field(spec, entropy)) return *f;
  return [spec, entropy](double u, double v) {
    const ExtReal f = field_F(spec, entropy, u, v);
    if (!f.is_finite())
      throw NonFiniteField("field is infinite at (" + std::to_string(u) + ", " + std::to_string(v) +
                           "); no continuous extension is known for this pair");
    return f.value();
  };
}

Vector evolution_rhs(const GraphSystem& system, const FieldFunction& field, const Vector& u) {
  const Index n = system.size();
  Vector acc = Vector::Zero(n);
  const Matrix& theta = system.theta();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (!(theta(i, j) > 0.0)) continue;
      const double f = field(std::max(u(i), 0.0), std::max(u(j), 0.0));
      if (!std::isfinite(f))
        throw NonFiniteField("field is not finite on edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      const double g = f * theta(i, j);
      acc(i) += g;
      acc(j) -= g;
    }
  }
  return acc.cwiseQuotient(system.pi());
}

namespace {

Vector rk4_step(const GraphSystem& sys, const FieldFunction& field, const Vector& y, double h) {
  const Vector k1 = evolution_rhs(sys, field, y);
  const Vector k2 = evolution_rhs(sys, field, y + 0.5 * h * k1);
  const Vector k3 = evolution_rhs(sys, field, y + 0.5 * h * k2);
  const Vector k4 = evolution_rhs(sys, field, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Flux midpoint_flux(const GraphSystem& sys, const FieldFunction& field, const Vector& u) {
  const Index n = sys.size();
  Flux f = Flux::zero(n);
  const Matrix& theta = sys.theta();
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (!(theta(i, j) > 0.0)) continue;
      const double jij = -0.5 * field(std::max(u(i), 0.0), std::max(u(j), 0.0)) * theta(i, j);
      f.j(i, j) = jij;
      f.j(j, i) = -jij;
    }
  return f;
}

class Integrator {
 public:
  Integrator(const GraphSystem& sys, const FieldFunction& field, const SolveOptions& opts)
      : sys_(sys), field_(field), opts_(opts) {
    h_ = opts.h_init > 0.0 ? opts.h_init : std::min(0.5 * opts.dt, 1e-3);
  }

  void advance(double& t, Vector& y, double target) {
    while (t < target) {
      const bool clipped = t + h_ >= target;
      const double h = clipped ? target - t : h_;
      if (h < opts_.h_min && !clipped)
        throw StepSizeUnderflow(t, h, std::vector<double>(y.data(), y.data() + y.size()));
      const Vector y1 = rk4_step(sys_, field_, y, h);
      const Vector yh = rk4_step(sys_, field_, y, 0.5 * h);
      const Vector y2 = rk4_step(sys_, field_, yh, 0.5 * h);
      double err = 0.0;
      for (Index i = 0; i < y.size(); ++i)
        err = std::max(err, std::abs(y2(i) - y1(i)) / 15.0 / (opts_.atol + opts_.rtol * std::abs(y2(i))));
      if (++steps_ > opts_.max_steps)
        throw StepSizeUnderflow(t, h, std::vector<double>(y.data(), y.data() + y.size()));
      if (!y2.allFinite()) throw NonFiniteField("integrator produced a non-finite state");
      if (y2.minCoeff() < -opts_.atol) {
        ++rejections_;
        h_ = 0.5 * h;
        if (h_ < opts_.h_min) throw StepSizeUnderflow(t, h_, std::vector<double>(y.data(), y.data() + y.size()));
        continue;
      }
      const double factor = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 4.0) : 4.0;
      if (err > 1.0) {
        ++rejections_;
        h_ = h * factor;
        if (h_ < opts_.h_min) throw StepSizeUnderflow(t, h_, std::vector<double>(y.data(), y.data() + y.size()));
        continue;
      }
      t = clipped ? target : t + h;
      y = y2;
      if (!clipped || factor < 1.0) h_ = h * factor;
    }
  }

  std::size_t steps() const { return steps_; }
  std::size_t rejections() const { return rejections_; }

 private:
  const GraphSystem& sys_;
  const FieldFunction& field_;
  const SolveOptions& opts_;
  double h_;
  std::size_t steps_ = 0;
  std::size_t rejections_ = 0;
};

}  // namespace

Trajectory solve_forward(const GraphSystem& system, const FieldFunction& field, const Vector& u0,
                         const SolveOptions& opts) {
  if (u0.size() != system.size()) throw DimensionMismatch("u0 has wrong length");
  if (!(opts.T > 0.0) || !(opts.dt > 0.0) || !(opts.rtol > 0.0) || !(opts.atol > 0.0))
    throw InvalidArgument("solve_forward needs T, dt, rtol, atol > 0");
  for (Index i = 0; i < u0.size(); ++i)
    if (!(u0(i) >= 0.0) || !std::isfinite(u0(i))) throw NegativeMass("initial density must be finite and >= 0");

  Trajectory tr;
  const auto intervals = static_cast<std::size_t>(std::ceil(opts.T / opts.dt - 1e-9));
  tr.times.reserve(intervals + 1);
  for (std::size_t k = 0; k < intervals; ++k) tr.times.push_back(static_cast<double>(k) * opts.dt);
  tr.times.push_back(opts.T);

  Integrator integ(system, field, opts);
  Vector y = u0;
  double t = 0.0;
  tr.states.push_back(Measure::from_density(system, y));
  const double mass0 = tr.states.front().mass();
  tr.min_density = y.minCoeff();
  tr.max_density = y.maxCoeff();
  for (std::size_t k = 0; k + 1 < tr.times.size(); ++k) {
    const double tm = 0.5 * (tr.times[k] + tr.times[k + 1]);
    integ.advance(t, y, tm);
    const Vector ym = y.cwiseMax(0.0);
    tr.midpoints.push_back(Measure::from_density(system, ym));
    tr.fluxes.push_back(midpoint_flux(system, field, ym));
    integ.advance(t, y, tr.times[k + 1]);
    tr.states.push_back(Measure::from_density(system, y.cwiseMax(0.0)));
    tr.mass_drift = std::max(tr.mass_drift, std::abs(tr.states.back().mass() - mass0) / std::max(mass0, 1e-300));
    tr.min_density = std::min({tr.min_density, y.minCoeff(), ym.minCoeff()});
    tr.max_density = std::max({tr.max_density, y.maxCoeff(), ym.maxCoeff()});
  }
  tr.steps = integ.steps();
  tr.rejections = integ.rejections();
  return tr;
}

Trajectory solve_forward(const GraphSystem& system, const DissipationSpec& spec, const EntropySpec& entropy,
                         const Vector& u0, const SolveOptions& opts) {
  return solve_forward(system, evolution_field(spec, entropy), u0, opts);
}

double estimate_one_sided_lipschitz(const FieldFunction& field, double lo, double hi, int samples, unsigned seed) {
  if (!(hi > lo)) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  double ell = 0.0;
  for (int k = 0; k < samples; ++k) {
    double u = unif(rng), u2 = unif(rng);
    const double v = unif(rng);
    if (u == u2) continue;
    if (u > u2) std::swap(u, u2);
    ell = std::max(ell, (field(u2, v) - field(u, v)) / (u2 - u));
  }
  return ell;
}

ContractionReport l1_contraction_check(const GraphSystem& system, const DissipationSpec& spec,
                                       const EntropySpec& entropy, const Vector& u0, const Vector& v0,
                                       const SolveOptions& opts, double order_tol) {
  ContractionReport rep;
  const FieldFunction field = evolution_field(spec, entropy);
  const Trajectory a = solve_forward(system, field, u0, opts);
  const Trajectory b = solve_forward(system, field, v0, opts);
  const double lo = std::min(u0.minCoeff(), v0.minCoeff());
  const double hi = std::max(u0.maxCoeff(), v0.maxCoeff());
  rep.ell_hat = estimate_one_sided_lipschitz(field, std::max(lo, 0.0), hi);
  const Vector& pi = system.pi();
  const double d0 = (u0 - v0).cwiseAbs().dot(pi);
  const bool ordered = (u0.array() <= v0.array()).all();
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const Vector& ua = a.states[k].u();
    const Vector& ub = b.states[k].u();
    if (d0 > 0.0) {
      const double bound = std::exp(2.0 * system.kappa_sup() * rep.ell_hat * a.times[k]) * d0;
      rep.ratio = std::max(rep.ratio, (ua - ub).cwiseAbs().dot(pi) / bound);
    }
    if (ordered && ((ua - ub).array() > order_tol).any()) rep.order_preserved = false;
  }
  return rep;
}

StationarityReport stationarity_report(const GraphSystem& system, const DissipationSpec& spec,
                                       const EntropySpec& entropy, const Trajectory& traj, double energy_tol) {
  StationarityReport rep;
  const Measure& last = traj.states.back();
  rep.fisher_final = fisher(spec, entropy, system, last).value();
  const double c = last.mass() / system.total_pi();
  rep.tv_distance_to_c_pi = tv_distance(last, Measure::uniform_density(system, c));
  double prev = energy(entropy, system, traj.states.front());
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    const double e = energy(entropy, system, traj.states[k]);
    rep.worst_energy_increase = std::max(rep.worst_energy_increase, e - prev);
    if (e > prev + energy_tol * (1.0 + std::abs(prev))) rep.energy_monotone = false;
    prev = e;
  }
  return rep;
}

}  // namespace ggflow
