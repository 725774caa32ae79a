#include "ggflow/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "ggflow/errors.hpp"

namespace ggflow {

double energy(const EntropySpec& entropy, const GraphSystem& system, const Measure& rho) {
  if (rho.size() != system.size()) throw DimensionMismatch("measure and system differ in size");
  double e = 0.0;
  for (Index i = 0; i < rho.size(); ++i) e += entropy.phi(std::max(rho.u()(i), 0.0)) * system.pi()(i);
  return e;
}

ExtReal r_action(const DissipationSpec& spec, const GraphSystem& system, const Measure& rho, const Flux& flux) {
  const Index n = system.size();
  if (rho.size() != n || flux.j.rows() != n || flux.j.cols() != n)
    throw DimensionMismatch("r_action: dimension mismatch");
  const Matrix& theta = system.theta();
  const Vector& u = rho.u();
  ExtReal sum(0.0);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < n; ++k) {
      if (i == k) continue;
      const double jk = flux.j(i, k);
      if (theta(i, k) > 0.0) {
        const double w = 2.0 * jk / theta(i, k);
        sum += upsilon(spec, std::max(u(i), 0.0), std::max(u(k), 0.0), w) * ExtReal(theta(i, k));
      } else if (jk != 0.0) {
        return ExtReal::pos_inf();
      }
    }
  }
  return ExtReal(0.5) * sum;
}

namespace {

enum class Envelope { None, Geometric, LogMean, PowerField };

struct EnvelopeInfo {
  Envelope kind = Envelope::None;
  double gamma = 1.0;
  double q = 1.0;
};

EnvelopeInfo envelope_info(const DissipationSpec& spec, const EntropySpec& entropy) {
  EnvelopeInfo info;
  const auto gamma = entropy.boltzmann_gamma();
  if (!gamma) return info;
  const std::string& fam = spec.family();
  const bool geometric = fam == "cosh" || (fam == "power_mean" && spec.params().at("p").get<double>() == 0.0);
  if (geometric && *gamma <= 1.0) {
    info.kind = Envelope::Geometric;
    info.gamma = *gamma;
  } else if (fam == "quadratic" && *gamma == 1.0) {
    info.kind = Envelope::LogMean;
  } else if (fam == "power_field" && *gamma == 1.0 && spec.params().at("p").get<double>() == 0.0) {
    info.kind = Envelope::PowerField;
    info.q = spec.params().at("q").get<double>();
  }
  return info;
}

DPhi d_phi_impl(const DissipationSpec& spec, const EntropySpec& entropy, const EnvelopeInfo& info, double u,
                double v) {
  u = std::max(u, 0.0);
  v = std::max(v, 0.0);
  DPhi d;
  const double a = spec.alpha(u, v);
  const ExtReal A = a_phi(entropy, u, v);
  if (a > 0.0) {
    const double ps = A.is_finite() ? spec.psi_star(A.value()) : std::numeric_limits<double>::infinity();
    d.lower = d.upper = ExtReal(ps) * ExtReal(a);
  } else {
    d.lower = ExtReal(0.0);
    d.upper = u == v ? ExtReal(0.0) : ExtReal::pos_inf();
  }
  switch (info.kind) {
    case Envelope::Geometric: {
      const double lo = 0.5 * (1.0 - info.gamma), hi = 0.5 * (1.0 + info.gamma);
      const double val = 2.0 * (std::pow(u, lo) * std::pow(v, hi) + std::pow(u, hi) * std::pow(v, lo)) -
                         4.0 * std::sqrt(u * v);
      d.envelope = ExtReal(std::max(val, 0.0));
      d.envelope_exact = true;
      break;
    }
    case Envelope::PowerField: {
      const double diff = std::pow(u, 0.5 * info.q) - std::pow(v, 0.5 * info.q);
      d.envelope = ExtReal(2.0 / info.q * diff * diff);
      d.envelope_exact = true;
      break;
    }
    case Envelope::LogMean:
      d.envelope = d.upper;
      d.envelope_exact = true;
      break;
    case Envelope::None:
      d.envelope = d.upper;
      d.envelope_exact = false;
      break;
  }
  return d;
}

}  // namespace

DPhi d_phi_variants(const DissipationSpec& spec, const EntropySpec& entropy, double u, double v) {
  return d_phi_impl(spec, entropy, envelope_info(spec, entropy), u, v);
}

bool has_exact_envelope(const DissipationSpec& spec, const EntropySpec& entropy) {
  return envelope_info(spec, entropy).kind != Envelope::None;
}

namespace {

template <class Pick>
ExtReal fisher_sum(const DissipationSpec& spec, const EntropySpec& entropy, const GraphSystem& system,
                   const Measure& rho, Pick pick) {
  if (rho.size() != system.size()) throw DimensionMismatch("measure and system differ in size");
  const EnvelopeInfo info = envelope_info(spec, entropy);
  const Vector& u = rho.u();
  ExtReal sum(0.0);
  for (const Edge& e : system.edges()) sum += pick(d_phi_impl(spec, entropy, info, u(e.from), u(e.to))) * ExtReal(e.theta);
  return ExtReal(0.5) * sum;
}

}  // namespace

ExtReal fisher(const DissipationSpec& spec, const EntropySpec& entropy, const GraphSystem& system,
               const Measure& rho) {
  return fisher_sum(spec, entropy, system, rho, [](const DPhi& d) { return d.envelope; });
}

ExtReal fisher_lower(const DissipationSpec& spec, const EntropySpec& entropy, const GraphSystem& system,
                     const Measure& rho) {
  return fisher_sum(spec, entropy, system, rho, [](const DPhi& d) { return d.lower; });
}

ExtReal chain_rule_rate(const EntropySpec& entropy, const GraphSystem& system, const Vector& u, const Flux& flux) {
  const Index n = system.size();
  ExtReal sum(0.0);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < n; ++k) {
      if (i == k) continue;
      const double jk = 0.5 * (flux.j(i, k) - flux.j(k, i));
      if (jk == 0.0) continue;
      sum += a_phi(entropy, std::max(u(i), 0.0), std::max(u(k), 0.0)) * ExtReal(jk);
    }
  return sum;
}

double chain_rule_residual(const EntropySpec& entropy, const GraphSystem& system, const CurveWithFlux& curve) {
  curve.validate();
  double worst = 0.0;
  auto pot = [&](const Measure& m) { return energy(entropy, system, m); };
  for (std::size_t k = 0; k < curve.intervals(); ++k) {
    const double dt = curve.times[k + 1] - curve.times[k];
    ExtReal integral;
    if (curve.fluxes_per_interval()) {
      integral = ExtReal(dt) * chain_rule_rate(entropy, system, curve.midpoint_density(k), curve.fluxes[k]);
    } else {
      integral = ExtReal(0.5 * dt) * (chain_rule_rate(entropy, system, curve.states[k].u(), curve.fluxes[k]) +
                                      chain_rule_rate(entropy, system, curve.states[k + 1].u(), curve.fluxes[k + 1]));
    }
    const double change = pot(curve.states[k + 1]) - pot(curve.states[k]);
    const double err = integral.is_finite() ? std::abs(change - integral.value()) : std::numeric_limits<double>::infinity();
    worst = std::max(worst, err);
  }
  return worst;
}

EDBReport edb_deficit(const DissipationSpec& spec, const EntropySpec& entropy, const GraphSystem& system,
                      const CurveWithFlux& curve, double ce_tol) {
  const CEResidual ce = ce_residual(system, curve);
  if (ce.residual > ce_tol) throw ContinuityEquationViolated(ce.residual, ce_tol);

  EDBReport rep;
  rep.ce_residual = ce.residual;
  rep.energy_start = energy(entropy, system, curve.states.front());
  rep.energy_end = energy(entropy, system, curve.states.back());
  rep.fisher_envelope_exact = has_exact_envelope(spec, entropy);

  ExtReal action(0.0), fish(0.0);
  std::vector<ExtReal> node_fisher;
  node_fisher.reserve(curve.states.size());
  for (const auto& s : curve.states) node_fisher.push_back(fisher(spec, entropy, system, s));

  for (std::size_t k = 0; k < curve.intervals(); ++k) {
    const double dt = curve.times[k + 1] - curve.times[k];
    rep.max_step = std::max(rep.max_step, dt);
    if (curve.fluxes_per_interval()) {
      const Measure mid = curve.midpoints.empty() ? Measure::from_density(system, curve.midpoint_density(k))
                                                  : curve.midpoints[k];
      action += ExtReal(dt) * r_action(spec, system, mid, curve.fluxes[k]);
    } else {
      action += ExtReal(0.5 * dt) * (r_action(spec, system, curve.states[k], curve.fluxes[k]) +
                                     r_action(spec, system, curve.states[k + 1], curve.fluxes[k + 1]));
    }
    fish += ExtReal(0.5 * dt) * (node_fisher[k] + node_fisher[k + 1]);
  }
  rep.action_quadrature = curve.fluxes_per_interval() ? "midpoint" : "trapezoid";
  rep.action_integral = action.value();
  rep.fisher_integral = fish.value();
  rep.deficit = rep.action_integral + rep.fisher_integral + rep.energy_end - rep.energy_start;
  return rep;
}

double fenchel_equality_residual(const DissipationSpec& spec, const EntropySpec& entropy,
                                 const GraphSystem& system, const Vector& u, const Flux& flux) {
  double worst = 0.0;
  for (const Edge& e : system.edges()) {
    const double w = 2.0 * flux.j(e.from, e.to) / e.theta;
    const ExtReal f = field_F(spec, entropy, std::max(u(e.from), 0.0), std::max(u(e.to), 0.0));
    const double err = f.is_finite() ? std::abs(w + f.value()) : std::numeric_limits<double>::infinity();
    worst = std::max(worst, err);
  }
  return worst;
}

std::vector<EdgeDiagnostic> edge_diagnostics(const DissipationSpec& spec, const EntropySpec& entropy,
                                             const GraphSystem& system, const CurveWithFlux& curve) {
  curve.validate();
  std::vector<EdgeDiagnostic> out;
  for (std::size_t k = 0; k < curve.intervals(); ++k) {
    const double t = 0.5 * (curve.times[k] + curve.times[k + 1]);
    const Vector u = curve.midpoint_density(k);
    const Matrix j = curve.fluxes_per_interval() ? curve.fluxes[k].j
                                                 : Matrix(0.5 * (curve.fluxes[k].j + curve.fluxes[k + 1].j));
    for (const Edge& e : system.edges()) {
      if (e.from > e.to) continue;
      const double ui = std::max(u(e.from), 0.0), uj = std::max(u(e.to), 0.0);
      const double w = (j(e.from, e.to) - j(e.to, e.from)) / e.theta;
      EdgeDiagnostic d{t, e.from, e.to, ui, uj, w, upsilon(spec, ui, uj, w),
                       d_phi_variants(spec, entropy, ui, uj).envelope, a_phi(entropy, ui, uj) * ExtReal(w)};
      out.push_back(d);
    }
  }
  return out;
}

}  // namespace ggflow
