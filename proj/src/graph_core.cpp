#include "ggflow/graph_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ggflow/errors.hpp"

namespace ggflow {

DetailedBalanceViolation::DetailedBalanceViolation(std::size_t from_, std::size_t to_, double rel)
    : Error([&] {
        std::ostringstream os;
        os << "detailed balance violated on edge (" << from_ << ", " << to_
           << "): relative mismatch " << rel;
        return os.str();
      }()),
      from(from_),
      to(to_),
      relative_error(rel) {}

ContinuityEquationViolated::ContinuityEquationViolated(double r, double tol)
    : Error("continuity equation residual " + std::to_string(r) + " exceeds tolerance " +
            std::to_string(tol)),
      residual(r),
      tolerance(tol) {}

StepSizeUnderflow::StepSizeUnderflow(double t, double h, std::vector<double> s)
    : Error("step size underflow at t=" + std::to_string(t) + " (h=" + std::to_string(h) + ")"),
      time(t),
      step(h),
      state(std::move(s)) {}

SolverStalled::SolverStalled(const std::string& what, double best, double kkt)
    : Error(what), best_value(best), kkt_residual(kkt) {}

SingularLaplacian::SingularLaplacian(std::vector<std::vector<std::size_t>> comps)
    : Error([&] {
        std::ostringstream os;
        os << "graph Laplacian is singular beyond constants: " << comps.size() << " components {";
        for (std::size_t c = 0; c < comps.size(); ++c) {
          os << (c ? "} {" : "");
          for (std::size_t k = 0; k < comps[c].size(); ++k) os << (k ? "," : "") << comps[c][k];
        }
        os << "}";
        return os.str();
      }()),
      components(std::move(comps)) {}

namespace {

std::vector<std::vector<Index>> find_components(const Matrix& theta) {
  const Index n = theta.rows();
  std::vector<Index> label(n, -1);
  std::vector<std::vector<Index>> comps;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::vector<Index> comp{s};
    label[s] = static_cast<Index>(comps.size());
    for (std::size_t k = 0; k < comp.size(); ++k) {
      const Index i = comp[k];
      for (Index j = 0; j < n; ++j) {
        if (label[j] < 0 && theta(i, j) > 0.0) {
          label[j] = label[s];
          comp.push_back(j);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace

GraphSystem GraphSystem::build(const Vector& pi, const Matrix& kappa, double tol_db) {
  const Index n = pi.size();
  if (n == 0) throw DimensionMismatch("empty state space");
  if (kappa.rows() != n || kappa.cols() != n)
    throw DimensionMismatch("kappa must be " + std::to_string(n) + "x" + std::to_string(n));
  for (Index i = 0; i < n; ++i) {
    if (!(pi(i) > 0.0) || !std::isfinite(pi(i)))
      throw NonPositivePi("pi[" + std::to_string(i) + "] = " + std::to_string(pi(i)) + " is not positive");
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (!(kappa(i, j) >= 0.0) || !std::isfinite(kappa(i, j)))
        throw NegativeRate("kappa[" + std::to_string(i) + "][" + std::to_string(j) + "] = " +
                           std::to_string(kappa(i, j)));

  GraphSystem sys;
  sys.pi_ = pi;
  sys.kappa_ = kappa;
  sys.kappa_.diagonal().setZero();

  Matrix raw = pi.asDiagonal() * sys.kappa_;
  double worst = 0.0;
  Index wi = 0, wj = 0;
  constexpr double kAbsFloor = 1e-300;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double a = raw(i, j), b = raw(j, i);
      const double rel = std::abs(a - b) / (a + b + kAbsFloor);
      if (std::abs(a - b) > tol_db * (a + b + kAbsFloor) && rel > worst) {
        worst = rel;
        wi = i;
        wj = j;
      }
    }
  }
  if (worst > 0.0) throw DetailedBalanceViolation(wi, wj, worst);

  sys.theta_ = 0.5 * (raw + raw.transpose());
  sys.kappa_sup_ = sys.kappa_.rowwise().sum().maxCoeff();
  sys.components_ = find_components(sys.theta_);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && sys.theta_(i, j) > 0.0) sys.edges_.push_back(Edge{i, j, sys.theta_(i, j)});
  return sys;
}

Matrix GraphSystem::laplacian() const {
  Matrix lap = -theta_;
  lap.diagonal() = theta_.rowwise().sum();
  return lap;
}

GraphSystem random_detailed_balance_system(Index n, std::uint64_t seed, double edge_density,
                                           double rate_scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vector pi(n);
    for (Index i = 0; i < n; ++i) pi(i) = 0.5 + unif(rng);
    pi /= pi.sum();
    Matrix theta = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (unif(rng) < edge_density) theta(i, j) = theta(j, i) = rate_scale * (0.2 + unif(rng)) / n;
    Matrix kappa = pi.cwiseInverse().asDiagonal() * theta;
    GraphSystem sys = GraphSystem::build(pi, kappa);
    if (sys.connected()) return sys;
  }
  throw InvalidArgument("could not draw a connected system; increase edge_density");
}

Measure Measure::from_density(const GraphSystem& system, const Vector& u) {
  if (u.size() != system.size()) throw DimensionMismatch("density has wrong length");
  Vector rho = u.cwiseProduct(system.pi());
  const double scale = 1.0 + rho.cwiseAbs().sum();
  for (Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u(i))) throw InvalidArgument("density is not finite");
    if (rho(i) < -1e-12 * scale) throw NegativeMass("negative mass at state " + std::to_string(i));
  }
  return Measure(std::move(rho), u);
}

Measure Measure::from_mass(const GraphSystem& system, const Vector& rho) {
  if (rho.size() != system.size()) throw DimensionMismatch("measure has wrong length");
  return from_density(system, rho.cwiseQuotient(system.pi()));
}

Measure Measure::uniform_density(const GraphSystem& system, double c) {
  return from_density(system, Vector::Constant(system.size(), c));
}

double tv_distance(const Measure& a, const Measure& b) { return (a.rho() - b.rho()).cwiseAbs().sum(); }

Matrix graph_grad(const Vector& phi) {
  const Index n = phi.size();
  Matrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = phi(j) - phi(i);
  return g;
}

Vector graph_div(const Matrix& j) {
  Matrix off = j;
  off.diagonal().setZero();
  return off.rowwise().sum() - off.colwise().sum().transpose();
}

void CurveWithFlux::validate() const {
  if (times.size() < 2) throw GridMismatch("curve needs at least two time points");
  if (states.size() != times.size()) throw GridMismatch("states and times differ in length");
  if (fluxes.size() != times.size() && fluxes.size() + 1 != times.size())
    throw GridMismatch("fluxes must be given per interval or per node");
  if (!midpoints.empty() && midpoints.size() + 1 != times.size())
    throw GridMismatch("midpoints must be given per interval");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw GridMismatch("times must increase strictly");
  const Index n = states.front().size();
  for (const auto& s : states)
    if (s.size() != n) throw GridMismatch("states differ in dimension");
  for (const auto& f : fluxes)
    if (f.j.rows() != n || f.j.cols() != n) throw GridMismatch("flux dimension mismatch");
}

Vector CurveWithFlux::midpoint_density(std::size_t k) const {
  if (!midpoints.empty()) return midpoints[k].u();
  return 0.5 * (states[k].u() + states[k + 1].u());
}

Matrix CurveWithFlux::integrated_flux(std::size_t k) const {
  const double dt = times[k + 1] - times[k];
  if (fluxes_per_interval()) return dt * fluxes[k].j;
  return 0.5 * dt * (fluxes[k].j + fluxes[k + 1].j);
}

CEResidual ce_residual(const GraphSystem& system, const CurveWithFlux& curve, double quad_tol) {
  curve.validate();
  if (curve.states.front().size() != system.size()) throw GridMismatch("curve and system differ in size");
  CEResidual out;
  out.tv_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < curve.intervals(); ++k) {
    const Vector drho = curve.states[k + 1].rho() - curve.states[k].rho();
    Matrix jint = curve.integrated_flux(k);
    jint.diagonal().setZero();
    // For phi = indicator of i, <grad phi, j> = sum_x j(x, i) - sum_y j(i, y) = -(div j)(i).
    const Vector transport = -graph_div(jint);
    out.residual = std::max(out.residual, (drho - transport).cwiseAbs().maxCoeff());
    double abs_flux = 0.0;
    if (curve.fluxes_per_interval()) {
      abs_flux = (curve.times[k + 1] - curve.times[k]) * curve.fluxes[k].j.cwiseAbs().sum();
    } else {
      abs_flux = 0.5 * (curve.times[k + 1] - curve.times[k]) *
                 (curve.fluxes[k].j.cwiseAbs().sum() + curve.fluxes[k + 1].j.cwiseAbs().sum());
    }
    const double excess = drho.cwiseAbs().sum() - 2.0 * abs_flux;
    out.tv_excess = std::max(out.tv_excess, excess);
    if (excess > quad_tol) out.tv_bound_holds = false;
  }
  return out;
}

}  // namespace ggflow
