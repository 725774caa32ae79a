#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ggflow/extended_real.hpp"

namespace ggflow {

/// Value, gradient and Hessian of the edge weight alpha at (u, v).
struct AlphaJet {
  double value = 0.0;
  double du = 0.0;
  double dv = 0.0;
  double duu = 0.0;
  double duv = 0.0;
  double dvv = 0.0;
};

/// User-supplied dissipation pair for DissipationSpec::custom.
struct CustomDissipation {
  std::string name = "custom";
  std::function<double(double)> psi_star;
  std::function<double(double)> psi_star_prime;
  /// Optional; central differences of psi_star_prime when absent.
  std::function<double(double)> psi_star_second;
  std::function<double(double, double)> alpha;
  /// The caller asserts alpha is concave; it is verified on 10^4 sampled triples regardless.
  bool asserted_concave = false;
  /// Degree of homogeneity of alpha, when it has one.
  std::optional<double> homogeneity;
};

/// A dissipation pair (Psi*, alpha) with derived objects: the Legendre dual
/// Psi, its derivatives, and the weight alpha with its jets.
///
/// Psi is always obtained from Psi* by the Legendre transform: Psi'(s) is
/// the root of (Psi*)'(xi) = s and Psi(s) = s xi - Psi*(xi).
class DissipationSpec {
 public:
  class Model;

  /// Psi*(xi) = 4(cosh(xi/2) - 1), alpha = sqrt(uv).
  static DissipationSpec cosh();
  /// Psi*(xi) = xi^2/2, alpha the logarithmic mean.
  static DissipationSpec quadratic();
  /// alpha the power mean m_p, Psi* from its generating function; p in (-inf, 0].
  static DissipationSpec power_mean(double p);
  /// alpha the Stolarsky mean c_{p,q}, Psi* from its generating function; min(p, q) <= 0.
  static DissipationSpec stolarsky(double p, double q);
  /// alpha = 1 and Psi*(xi) = xi^2/2 (the Dirichlet-form structure).
  static DissipationSpec constant_alpha();
  /// alpha = m_p(u^q, v^q), Psi*(xi) = Psi*_p(q xi)/q; gives F(u, v) = v^q - u^q with Boltzmann entropy.
  static DissipationSpec power_field(double q, double p = 0.0);
  static DissipationSpec custom(CustomDissipation fns);

  const std::string& family() const;
  const nlohmann::json& params() const;

  double psi_star(double xi) const;
  double psi_star_prime(double xi) const;
  double psi_star_second(double xi) const;

  /// Legendre dual of Psi*.
  double psi(double s) const;
  /// Psi'(s) = ((Psi*)')^{-1}(s).
  double psi_prime(double s) const;
  /// Psi''(s) = 1 / (Psi*)''(Psi'(s)).
  double psi_second(double s) const;

  double alpha(double u, double v) const;
  /// Jet of alpha; requires u, v > 0.
  AlphaJet alpha_jet(double u, double v) const;

  /// Degree of homogeneity of alpha when known (1 for all mean-based families).
  std::optional<double> alpha_homogeneity() const;
  /// alpha^infinity(u, v) = 0 whenever uv = 0.
  bool alpha_recession_vanishes() const;

 private:
  explicit DissipationSpec(std::shared_ptr<const Model> m) : model_(std::move(m)) {}
  std::shared_ptr<const Model> model_;
};

/// Builds a spec from a family name and JSON parameters.
/// Families: cosh, quadratic, power_mean {p}, stolarsky {p, q}, constant_alpha, power_field {q, p}.
/// Throws UnsupportedParameter for p = 1 (and every p in (0, 1]), or unknown families.
DissipationSpec make_dissipation(std::string_view family, const nlohmann::json& params = nlohmann::json::object());

/// Energy density phi: convex, nonnegative, superlinear, min phi = 0.
class EntropySpec {
 public:
  /// phi(s) = gamma (s log s - s + 1).
  static EntropySpec boltzmann(double gamma = 1.0);
  /// phi(s) = s^2 / 2.
  static EntropySpec quadratic();
  /// phi(s) = (s^q - 1 - q(s - 1)) / (q(q - 1)), q > 1.
  static EntropySpec power(double q);
  static EntropySpec custom(std::string name, std::function<double(double)> phi,
                            std::function<double(double)> phi_prime,
                            std::function<double(double)> phi_second, double phi_prime_at_zero);

  const std::string& family() const { return name_; }
  const nlohmann::json& params() const { return params_; }
  double phi(double s) const { return phi_(s); }
  /// phi'(s); at s = 0 returns phi'(0) in [-inf, inf).
  ExtReal phi_prime(double s) const;
  double phi_second(double s) const { return phi_second_(s); }
  /// gamma for the Boltzmann family, nullopt otherwise.
  std::optional<double> boltzmann_gamma() const;

 private:
  std::string name_;
  nlohmann::json params_;
  std::function<double(double)> phi_;
  std::function<double(double)> phi_prime_;
  std::function<double(double)> phi_second_;
  double phi_prime_zero_ = 0.0;
};

EntropySpec make_entropy(std::string_view family, const nlohmann::json& params = nlohmann::json::object());

/// Upsilon(u, v, w) = Psi(w / alpha) alpha, with value 0 for alpha = w = 0 and +inf for alpha = 0 != w.
ExtReal upsilon(const DissipationSpec& spec, double u, double v, double w);

/// Value, gradient and Hessian of the smoothed perspective
/// lambda * Upsilon_eps(u, v, w / lambda), where alpha is replaced by alpha + eps.
/// Requires u, v > 0 and alpha(u, v) + eps > 0.
struct UpsilonJet {
  double value = 0.0;
  double grad[3] = {0, 0, 0};     // d/du, d/dv, d/dw
  double hess[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};
UpsilonJet upsilon_jet(const DissipationSpec& spec, double u, double v, double w, double eps = 0.0,
                       double lambda = 1.0);
/// Value only; +inf outside the domain.
double upsilon_smoothed(const DissipationSpec& spec, double u, double v, double w, double eps = 0.0,
                        double lambda = 1.0);

/// A_phi(u, v) = phi'(v) - phi'(u) with A(0, 0) = 0 and +-inf when phi'(0) = -inf.
ExtReal a_phi(const EntropySpec& entropy, double u, double v);

/// The boundary-extended field F_0(u, v) = (Psi*)'(A_phi(u, v)) alpha(u, v), and 0 where alpha = 0.
ExtReal field_F(const DissipationSpec& spec, const EntropySpec& entropy, double u, double v);

using FieldFunction = std::function<double(double, double)>;

/// The continuous extension of F to the closed quadrant, when the pair has a known one
/// (v - u for the compatible linear structures, v^q - u^q for power_field, and the
/// gamma-entropy cosh field).
std::optional<FieldFunction> continuous_field(const DissipationSpec& spec, const EntropySpec& entropy);

/// max over grid pairs of |F(u, v) - (v - u)|.
double compatibility_residual(const DissipationSpec& spec, const EntropySpec& entropy,
                              const std::vector<double>& grid);

/// count points log-spaced in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);

/// Sampled structural checks of a dissipation spec (each entry is a worst-case violation; 0 is perfect).
struct DissipationCheck {
  double psi_star_at_zero = 0.0;
  double psi_star_asymmetry = 0.0;
  bool superlinear = true;
  double psi_at_zero = 0.0;
  double fenchel_young_gap = 0.0;      // max |Psi(s) + Psi*(Psi'(s)) - s Psi'(s)|
  double fenchel_young_violation = 0.0;  // max (s xi - Psi(s) - Psi*(xi))_+
  double alpha_asymmetry = 0.0;
  double alpha_concavity_violation = 0.0;
};
DissipationCheck check_dissipation(const DissipationSpec& spec, int samples = 2000, unsigned seed = 7);

/// Worst sampled violation of midpoint concavity of alpha on random triples.
double alpha_concavity_violation(const std::function<double(double, double)>& alpha, int samples,
                                 unsigned seed);

}  // namespace ggflow
