#include "transport_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "ggflow/errors.hpp"

namespace ggflow::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Index bookkeeping for the flattened variable vector.
struct Layout {
  const TransportProgram& prog;
  Index n;
  Index E;
  int M;
  Index n_free_u_levels;
  Index nu;
  Index nw;

  explicit Layout(const TransportProgram& p)
      : prog(p),
        n(p.system->size()),
        E(static_cast<Index>(p.system->edges().size())),
        M(p.M),
        n_free_u_levels(p.free_end ? p.M : p.M - 1),
        nu(n_free_u_levels * n),
        nw(static_cast<Index>(p.M) * E) {}

  Index size() const { return nu + nw; }
  /// -1 for fixed endpoint values.
  Index u_index(int m, Index i) const {
    if (m == 0) return -1;
    if (m == M && !prog.free_end) return -1;
    return static_cast<Index>(m - 1) * n + i;
  }
  Index w_index(int m, Index e) const { return nu + static_cast<Index>(m) * E + e; }

  double u_value(const Vector& x, int m, Index i) const {
    const Index k = u_index(m, i);
    if (k >= 0) return x(k);
    return m == 0 ? prog.u_start(i) : prog.u_end(i);
  }

  Vector flatten(const TransportIterate& it) const {
    Vector x(size());
    for (int m = 1; m <= M; ++m)
      for (Index i = 0; i < n; ++i)
        if (const Index k = u_index(m, i); k >= 0) x(k) = it.u[m](i);
    const auto& edges = prog.system->edges();
    for (int m = 0; m < M; ++m)
      for (Index e = 0; e < E; ++e) x(w_index(m, e)) = it.w[m](edges[e].from, edges[e].to);
    return x;
  }

  TransportIterate unflatten(const Vector& x) const {
    TransportIterate it;
    it.u.resize(M + 1);
    for (int m = 0; m <= M; ++m) {
      it.u[m].resize(n);
      for (Index i = 0; i < n; ++i) it.u[m](i) = u_value(x, m, i);
    }
    const auto& edges = prog.system->edges();
    it.w.assign(M, Matrix::Zero(n, n));
    for (int m = 0; m < M; ++m)
      for (Index e = 0; e < E; ++e) it.w[m](edges[e].from, edges[e].to) = x(w_index(m, e));
    return it;
  }
};

double dt_of(const TransportProgram& p) { return p.tau / p.M; }

/// Component roots whose rows are dropped in the last interval when the endpoint is pinned.
std::vector<bool> dropped_rows(const TransportProgram& p) {
  std::vector<bool> drop(p.system->size(), false);
  if (!p.free_end)
    for (const auto& c : p.system->components()) drop[c.front()] = true;
  return drop;
}

void build_constraints(const Layout& L, SpMat& A, Vector& b) {
  const TransportProgram& p = L.prog;
  const Vector& pi = p.system->pi();
  const double half_dt = 0.5 * dt_of(p);
  const auto& edges = p.system->edges();
  const std::vector<bool> drop = dropped_rows(p);
  std::vector<Triplet> trip;
  std::vector<double> rhs;
  Index row = 0;
  for (int m = 0; m < L.M; ++m) {
    for (Index i = 0; i < L.n; ++i) {
      if (m == L.M - 1 && drop[i]) continue;
      double r = 0.0;
      if (const Index k = L.u_index(m + 1, i); k >= 0)
        trip.emplace_back(row, k, pi(i));
      else
        r -= pi(i) * p.u_end(i);
      if (const Index k = L.u_index(m, i); k >= 0)
        trip.emplace_back(row, k, -pi(i));
      else
        r += pi(i) * p.u_start(i);
      for (Index e = 0; e < L.E; ++e) {
        if (edges[e].from == i) trip.emplace_back(row, L.w_index(m, e), half_dt * edges[e].theta);
        if (edges[e].to == i) trip.emplace_back(row, L.w_index(m, e), -half_dt * edges[e].theta);
      }
      rhs.push_back(r);
      ++row;
    }
  }
  A.resize(row, L.size());
  A.setFromTriplets(trip.begin(), trip.end());
  b = Eigen::Map<Vector>(rhs.data(), static_cast<Index>(rhs.size()));
}

double objective_flat(const Layout& L, const Vector& x, double* action_out, double* energy_out) {
  const TransportProgram& p = L.prog;
  const double dt = dt_of(p);
  const auto& edges = p.system->edges();
  double action = 0.0;
  for (int m = 0; m < L.M; ++m) {
    for (Index e = 0; e < L.E; ++e) {
      const double us = 0.5 * (L.u_value(x, m, edges[e].from) + L.u_value(x, m + 1, edges[e].from));
      const double ut = 0.5 * (L.u_value(x, m, edges[e].to) + L.u_value(x, m + 1, edges[e].to));
      const double w = x(L.w_index(m, e));
      if (!(us > 0.0) || !(ut > 0.0)) {
        // Zero densities are admissible only with zero flux through a vanishing weight.
        const double v = upsilon_smoothed(*p.spec, std::max(us, 0.0), std::max(ut, 0.0), w, p.eps, p.lambda);
        if (us < 0.0 || ut < 0.0 || !std::isfinite(v)) return kInf;
        action += 0.5 * dt * edges[e].theta * v;
        continue;
      }
      action += 0.5 * dt * edges[e].theta * upsilon_smoothed(*p.spec, us, ut, w, p.eps, p.lambda);
    }
  }
  double en = 0.0;
  if (p.free_end) {
    const Vector& pi = p.system->pi();
    for (Index i = 0; i < L.n; ++i) {
      const double u = L.u_value(x, L.M, i);
      if (u < 0.0) return kInf;
      en += p.energy_weight * pi(i) * p.entropy->phi(u);
    }
  }
  if (action_out) *action_out = action;
  if (energy_out) *energy_out = en;
  return action + en;
}

void assemble_newton(const Layout& L, const Vector& x, Vector& g, std::vector<Triplet>& hess) {
  const TransportProgram& p = L.prog;
  const double dt = dt_of(p);
  const auto& edges = p.system->edges();
  g.setZero(L.size());
  hess.clear();
  for (int m = 0; m < L.M; ++m) {
    for (Index e = 0; e < L.E; ++e) {
      const Index s = edges[e].from, t = edges[e].to;
      const double us = 0.5 * (L.u_value(x, m, s) + L.u_value(x, m + 1, s));
      const double ut = 0.5 * (L.u_value(x, m, t) + L.u_value(x, m + 1, t));
      const UpsilonJet jet = upsilon_jet(*p.spec, us, ut, x(L.w_index(m, e)), p.eps, p.lambda);
      const double c = 0.5 * dt * edges[e].theta;
      struct Var {
        Index idx;
        int dir;
        double factor;
      };
      Var vars[5];
      int nv = 0;
      auto push = [&](Index idx, int dir, double f) {
        if (idx >= 0) vars[nv++] = Var{idx, dir, f};
      };
      push(L.u_index(m, s), 0, 0.5);
      push(L.u_index(m + 1, s), 0, 0.5);
      push(L.u_index(m, t), 1, 0.5);
      push(L.u_index(m + 1, t), 1, 0.5);
      push(L.w_index(m, e), 2, 1.0);
      for (int a = 0; a < nv; ++a) {
        g(vars[a].idx) += c * vars[a].factor * jet.grad[vars[a].dir];
        for (int b = 0; b < nv; ++b) {
          const double h = c * vars[a].factor * vars[b].factor * jet.hess[vars[a].dir][vars[b].dir];
          if (h != 0.0) hess.emplace_back(vars[a].idx, vars[b].idx, h);
        }
      }
    }
  }
  if (p.free_end) {
    const Vector& pi = p.system->pi();
    for (Index i = 0; i < L.n; ++i) {
      const Index k = L.u_index(L.M, i);
      const double u = x(k);
      g(k) += p.energy_weight * pi(i) * p.entropy->phi_prime(u).value();
      hess.emplace_back(k, k, p.energy_weight * pi(i) * p.entropy->phi_second(u));
    }
  }
}

}  // namespace

TransportIterate feasible_start(const TransportProgram& prog) {
  const GraphSystem& sys = *prog.system;
  const Index n = sys.size();
  if (prog.M < 1) throw InvalidArgument("transport program needs M >= 1");
  if (prog.u_start.size() != n || (!prog.free_end && prog.u_end.size() != n))
    throw DimensionMismatch("endpoint densities have wrong length");
  const Vector& pi = sys.pi();

  // Per-component uniform level.
  Vector level(n);
  for (const auto& comp : sys.components()) {
    double m0 = 0.0, m1 = 0.0, pc = 0.0;
    for (Index i : comp) {
      m0 += pi(i) * prog.u_start(i);
      if (!prog.free_end) m1 += pi(i) * prog.u_end(i);
      pc += pi(i);
    }
    if (!prog.free_end && std::abs(m0 - m1) > 1e-12 * (1.0 + std::abs(m0) + std::abs(m1)))
      throw Infeasible("endpoint masses differ on a connected component (" + std::to_string(m0) + " vs " +
                       std::to_string(m1) + ")");
    if (!(m0 > 0.0)) throw Infeasible("a connected component carries no mass");
    for (Index i : comp) level(i) = m0 / pc;
  }

  const int M = prog.M;
  TransportIterate it;
  it.u.resize(M + 1);
  const Vector u_end = prog.free_end ? prog.u_start : prog.u_end;
  for (int m = 0; m <= M; ++m) {
    const double s = static_cast<double>(m) / M;
    const Vector lin = (1.0 - s) * prog.u_start + s * u_end;
    double blend = 0.0;
    if (prog.free_end)
      blend = (m == 0 || prog.u_start.minCoeff() > 0.0) ? 0.0 : 0.25;
    else
      blend = s * (1.0 - s);
    it.u[m] = (1.0 - blend) * lin + blend * level;
  }
  if (!prog.free_end) it.u[M] = prog.u_end;
  it.u[0] = prog.u_start;

  const Eigen::CompleteOrthogonalDecomposition<Matrix> lap(sys.laplacian());
  const double dt = prog.tau / M;
  it.w.assign(M, Matrix::Zero(n, n));
  for (int m = 0; m < M; ++m) {
    const Vector rhs = -pi.cwiseProduct(it.u[m + 1] - it.u[m]) / dt;
    if (rhs.cwiseAbs().maxCoeff() == 0.0) continue;
    const Vector psi = lap.solve(rhs);
    for (const Edge& e : sys.edges()) it.w[m](e.from, e.to) = psi(e.from) - psi(e.to);
  }
  return it;
}

double transport_objective(const TransportProgram& prog, const TransportIterate& x, double* action) {
  const Layout L(prog);
  return objective_flat(L, L.flatten(x), action, nullptr);
}

double transport_constraint_residual(const TransportProgram& prog, const TransportIterate& x) {
  const Layout L(prog);
  SpMat A;
  Vector b;
  build_constraints(L, A, b);
  // Include the dropped rows as well, so the reported residual covers every node.
  const Vector& pi = prog.system->pi();
  const double dt = prog.tau / prog.M;
  double worst = (A * L.flatten(x) - b).cwiseAbs().maxCoeff();
  for (int m = 0; m < prog.M; ++m) {
    Vector div = Vector::Zero(L.n);
    for (const Edge& e : prog.system->edges()) {
      const double flow = 0.5 * e.theta * x.w[m](e.from, e.to);
      div(e.from) += flow;
      div(e.to) -= flow;
    }
    worst = std::max(worst, (pi.cwiseProduct(x.u[m + 1] - x.u[m]) + dt * div).cwiseAbs().maxCoeff());
  }
  return worst;
}

TransportResult solve_transport(const TransportProgram& prog, const TransportIterate* warm,
                                const NewtonOptions& opts) {
  const Layout L(prog);
  if (prog.free_end && prog.entropy == nullptr) throw InvalidArgument("free endpoint needs an entropy");
  SpMat A;
  Vector b;
  build_constraints(L, A, b);
  const SpMat At = A.transpose();

  Vector x = L.flatten(warm ? *warm : feasible_start(prog));
  double f = objective_flat(L, x, nullptr, nullptr);
  if (!std::isfinite(f)) {
    x = L.flatten(feasible_start(prog));
    f = objective_flat(L, x, nullptr, nullptr);
  }

  const Index nv = L.size(), nc = A.rows();
  Vector g;
  std::vector<Triplet> hess;
  Eigen::SparseLU<SpMat> lu;
  TransportResult res;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    res.iterations = iter + 1;
    assemble_newton(L, x, g, hess);
    double hmax = 0.0;
    for (const auto& t : hess)
      if (t.row() == t.col()) hmax = std::max(hmax, std::abs(t.value()));
    const double delta = 1e-13 * std::max(1.0, hmax);

    std::vector<Triplet> kkt = hess;
    kkt.reserve(hess.size() + 2 * A.nonZeros() + nv);
    for (Index k = 0; k < nv; ++k) kkt.emplace_back(k, k, delta);
    for (Index c = 0; c < A.outerSize(); ++c)
      for (SpMat::InnerIterator it(A, c); it; ++it) {
        kkt.emplace_back(nv + it.row(), it.col(), it.value());
        kkt.emplace_back(it.col(), nv + it.row(), it.value());
      }
    SpMat K(nv + nc, nv + nc);
    K.setFromTriplets(kkt.begin(), kkt.end());
    K.makeCompressed();
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw SolverStalled("KKT factorization failed", f, kInf);
    Vector rhs(nv + nc);
    rhs.head(nv) = -g;
    rhs.tail(nc) = b - A * x;
    const Vector sol = lu.solve(rhs);
    const Vector dx = sol.head(nv);
    const Vector nu = sol.tail(nc);
    res.kkt_residual = (g + At * nu).cwiseAbs().maxCoeff();
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();

    // Fraction-to-boundary on the density variables.
    double step = 1.0;
    for (Index k = 0; k < L.nu; ++k)
      if (dx(k) < 0.0) step = std::min(step, 0.99 * x(k) / -dx(k));
    const double slope = g.dot(dx);
    bool accepted = false;
    Vector xn;
    double fn = f;
    for (int ls = 0; ls < 80; ++ls) {
      xn = x + step * dx;
      fn = objective_flat(L, xn, nullptr, nullptr);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * std::min(slope, 0.0) + 1e-14 * (1.0 + std::abs(f))) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      x = xn;
      f = fn;
    }
    if (res.kkt_residual <= opts.kkt_tol * scale && (accepted || step < 1e-12)) {
      res.converged = true;
      break;
    }
    if (!accepted) break;
    if (step == 1.0 && std::abs(slope) <= 1e-18 * (1.0 + std::abs(f))) {
      res.converged = res.kkt_residual <= 1e3 * opts.kkt_tol * scale;
      if (res.converged) break;
    }
  }

  res.x = L.unflatten(x);
  res.objective = objective_flat(L, x, &res.action, &res.energy);
  res.constraint_residual = transport_constraint_residual(prog, res.x);
  return res;
}

}  // namespace ggflow::detail
