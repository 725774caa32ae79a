#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace ggflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// An ordered pair (from, to) carrying positive edge mass theta(from, to).
struct Edge {
  Index from;
  Index to;
  double theta;
};

/// Finite state space with invariant measure pi, jump rates kappa and the
/// symmetric edge measure theta(i, j) = pi(i) * kappa(i, j).
///
/// Instances are immutable after construction. Self-loops are removed
/// (kappa's diagonal is zeroed), since the graph gradient vanishes on the
/// diagonal. theta is stored symmetrized, so every computation that sums
/// F(u_i, u_j) * theta(i, j) over i, j telescopes exactly.
class GraphSystem {
 public:
  static constexpr double kDefaultDetailedBalanceTol = 1e-10;

  /// Validates and builds a system.
  /// Throws DimensionMismatch, NonPositivePi, NegativeRate or DetailedBalanceViolation.
  static GraphSystem build(const Vector& pi, const Matrix& kappa,
                           double tol_db = kDefaultDetailedBalanceTol);

  Index size() const { return pi_.size(); }
  const Vector& pi() const { return pi_; }
  const Matrix& kappa() const { return kappa_; }
  const Matrix& theta() const { return theta_; }

  /// max_i sum_j kappa(i, j)
  double kappa_sup() const { return kappa_sup_; }
  double total_pi() const { return pi_.sum(); }

  /// Weighted graph Laplacian diag(sum_j theta(i, j)) - theta.
  Matrix laplacian() const;

  /// Connected components of the support of theta, each sorted ascending.
  const std::vector<std::vector<Index>>& components() const { return components_; }
  bool connected() const { return components_.size() == 1; }

  /// Ordered edges (i, j), i != j, with theta(i, j) > 0, in row-major order.
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  GraphSystem() = default;

  Vector pi_;
  Matrix kappa_;
  Matrix theta_;
  double kappa_sup_ = 0.0;
  std::vector<std::vector<Index>> components_;
  std::vector<Edge> edges_;
};

/// Random connected system with detailed balance: pi uniform on [0.5, 1.5]
/// (normalised to total mass 1), symmetric theta with the given edge density.
GraphSystem random_detailed_balance_system(Index n, std::uint64_t seed, double edge_density = 1.0,
                                           double rate_scale = 1.0);

/// A nonnegative measure rho together with its density u = rho / pi.
class Measure {
 public:
  static Measure from_density(const GraphSystem& system, const Vector& u);
  static Measure from_mass(const GraphSystem& system, const Vector& rho);
  /// c * pi where c = mass / pi(V).
  static Measure uniform_density(const GraphSystem& system, double c = 1.0);

  const Vector& rho() const { return rho_; }
  const Vector& u() const { return u_; }
  double mass() const { return rho_.sum(); }
  Index size() const { return rho_.size(); }

 private:
  Measure(Vector rho, Vector u) : rho_(std::move(rho)), u_(std::move(u)) {}
  Vector rho_;
  Vector u_;
};

/// Total variation norm |mu - nu|(V) = sum_i |mu_i - nu_i|.
double tv_distance(const Measure& a, const Measure& b);

/// Edge masses j(i, j) of a flux; the diagonal is ignored.
struct Flux {
  Matrix j;

  static Flux zero(Index n) { return Flux{Matrix::Zero(n, n)}; }
  /// (j - j^T) / 2
  Flux skew() const { return Flux{0.5 * (j - j.transpose())}; }
};

/// (grad phi)(i, j) = phi(j) - phi(i).
Matrix graph_grad(const Vector& phi);

/// (div j)(i) = sum_k (j(i, k) - j(k, i)).
Vector graph_div(const Matrix& j);
inline Vector graph_div(const Flux& flux) { return graph_div(flux.j); }

/// Time-gridded pair (rho_t, j_t).
///
/// `fluxes` holds either one flux per interval (interpreted at the interval
/// midpoint) or one flux per grid node (trapezoidal quadrature).
/// `midpoints` optionally holds the state at each interval midpoint; when
/// empty, the average of the two endpoint states is used.
struct CurveWithFlux {
  std::vector<double> times;
  std::vector<Measure> states;
  std::vector<Flux> fluxes;
  std::vector<Measure> midpoints;

  std::size_t intervals() const { return times.empty() ? 0 : times.size() - 1; }
  bool fluxes_per_interval() const { return fluxes.size() + 1 == times.size(); }
  /// Throws GridMismatch unless sizes are consistent and times increase strictly.
  void validate() const;
  /// State at the midpoint of interval k.
  Vector midpoint_density(std::size_t k) const;
  /// Time integral of the flux over interval k.
  Matrix integrated_flux(std::size_t k) const;
};

struct CEResidual {
  /// max over intervals and coordinate indicators of
  /// |<phi, rho_t2 - rho_t1> - int <grad phi, j> dt|
  double residual = 0.0;
  /// ||rho_t2 - rho_t1||_TV <= 2 int |j|(E) dt on every interval, up to quad_tol
  bool tv_bound_holds = true;
  /// largest ||drho||_TV - 2 int |j| seen (negative when the bound holds with room)
  double tv_excess = 0.0;
};

CEResidual ce_residual(const GraphSystem& system, const CurveWithFlux& curve, double quad_tol = 1e-9);

}  // namespace ggflow
