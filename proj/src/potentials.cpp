#include "ggflow/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "ggflow/errors.hpp"

namespace ggflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// The Psi* side of a dissipation pair.

class Conjugate {
 public:
  virtual ~Conjugate() = default;
  virtual double value(double xi) const = 0;
  virtual double d1(double xi) const = 0;
  virtual double d2(double xi) const = 0;

  /// Root of d1(xi) = s; d1 is odd and strictly increasing.
  virtual double inv_d1(double s) const {
    if (s == 0.0) return 0.0;
    if (s < 0.0) return -inv_d1(-s);
    if (!std::isfinite(s)) return kInf;
    double lo = 0.0, hi = 1.0;
    while (d1(hi) < s) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e300) return kInf;
    }
    double xi = std::clamp(s / d2(0.0), lo, hi);
    for (int it = 0; it < 200; ++it) {
      const double g = d1(xi) - s;
      if (g == 0.0) return xi;
      (g > 0.0 ? hi : lo) = xi;
      const double slope = d2(xi);
      double next = xi - g / slope;
      if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
      if (std::abs(next - xi) <= 1e-16 * std::max(1.0, std::abs(xi)) || hi - lo <= 1e-16 * hi) return next;
      xi = next;
    }
    return xi;
  }

  virtual double dual(double s) const {
    const double xi = inv_d1(s);
    if (!std::isfinite(xi)) return kInf;
    return s * xi - value(xi);
  }
};

class CoshConjugate final : public Conjugate {
 public:
  double value(double xi) const override {
    const double t = std::sinh(0.25 * xi);
    return 8.0 * t * t;
  }
  double d1(double xi) const override { return 2.0 * std::sinh(0.5 * xi); }
  double d2(double xi) const override { return std::cosh(0.5 * xi); }
  double inv_d1(double s) const override { return 2.0 * std::asinh(0.5 * s); }
  double dual(double s) const override {
    return 2.0 * s * std::asinh(0.5 * s) - 2.0 * s * s / (std::sqrt(s * s + 4.0) + 2.0);
  }
};

class QuadraticConjugate final : public Conjugate {
 public:
  double value(double xi) const override { return 0.5 * xi * xi; }
  double d1(double xi) const override { return xi; }
  double d2(double) const override { return 1.0; }
  double inv_d1(double s) const override { return s; }
  double dual(double s) const override { return 0.5 * s * s; }
};

/// Psi* built from a mean's generating function f: (Psi*)'(xi) = (e^xi - 1) / f(e^xi).
class GeneratedConjugate : public Conjugate {
 public:
  double value(double xi) const override {
    const double x = std::abs(xi);
    if (x == 0.0) return 0.0;
    if (x > 700.0) return kInf;
    // (Psi*)' is analytic near the real axis, so fixed 30-point Gauss panels of length <= 1/2 are
    // accurate to rounding; adaptive schemes stall on their relative tolerance when x is tiny.
    auto integrand = [this](double t) { return d1(t); };
    const int panels = std::max(1, static_cast<int>(std::ceil(2.0 * x)));
    const double h = x / panels;
    double total = 0.0;
    for (int k = 0; k < panels; ++k)
      total += boost::math::quadrature::gauss<double, 30>::integrate(integrand, k * h, (k + 1) * h);
    return total;
  }
  double d1(double xi) const override {
    if (xi < 0.0) return -d1(-xi);
    if (xi == 0.0) return 0.0;
    return positive_d1(xi);
  }
  double d2(double xi) const override {
    const double x = std::abs(xi);
    return positive_d2(x);
  }

 protected:
  virtual double positive_d1(double xi) const = 0;
  virtual double positive_d2(double xi) const {
    const double h = 1e-5 * (1.0 + xi);
    return (d1(xi + h) - d1(xi - h)) / (2.0 * h);
  }
};

class PowerMeanConjugate final : public GeneratedConjugate {
 public:
  explicit PowerMeanConjugate(double p) : p_(p), c_(std::pow(2.0, 1.0 / p)) {}

 protected:
  double positive_d1(double xi) const override {
    return c_ * std::expm1(xi) * std::pow(std::exp(p_ * xi) + 1.0, -1.0 / p_);
  }
  double positive_d2(double xi) const override {
    const double ep = std::exp(p_ * xi);
    return c_ * std::pow(ep + 1.0, -1.0 / p_) * (std::exp(xi) - std::expm1(xi) * ep / (ep + 1.0));
  }

 private:
  double p_;
  double c_;
};

/// Stolarsky generating function f(e^x) evaluated from x = log r.
double stolarsky_profile_log(double p, double q, double x) {
  if (x == 0.0) return 1.0;
  if (p == 0.0 && q == 0.0) return std::exp(0.5 * x);
  if (p == 0.0) std::swap(p, q);
  if (q == 0.0) return std::pow(std::expm1(p * x) / (p * x), 1.0 / p);
  if (p == q) return std::exp(-1.0 / p + x * std::exp(p * x) / std::expm1(p * x));
  return std::pow((p / q) * std::expm1(q * x) / std::expm1(p * x), 1.0 / (q - p));
}

class StolarskyConjugate final : public GeneratedConjugate {
 public:
  StolarskyConjugate(double p, double q) : p_(p), q_(q) {}

 protected:
  double positive_d1(double xi) const override {
    return std::expm1(xi) / stolarsky_profile_log(p_, q_, xi);
  }

 private:
  double p_;
  double q_;
};

/// Psi*(xi) = base(q xi) / q.
class ScaledConjugate final : public Conjugate {
 public:
  ScaledConjugate(std::shared_ptr<const Conjugate> base, double q) : base_(std::move(base)), q_(q) {}
  double value(double xi) const override { return base_->value(q_ * xi) / q_; }
  double d1(double xi) const override { return base_->d1(q_ * xi); }
  double d2(double xi) const override { return q_ * base_->d2(q_ * xi); }
  double inv_d1(double s) const override { return base_->inv_d1(s) / q_; }
  double dual(double s) const override { return base_->dual(s) / q_; }

 private:
  std::shared_ptr<const Conjugate> base_;
  double q_;
};

class CustomConjugate final : public Conjugate {
 public:
  explicit CustomConjugate(const CustomDissipation& c)
      : f_(c.psi_star), f1_(c.psi_star_prime), f2_(c.psi_star_second) {}
  double value(double xi) const override { return f_(xi); }
  double d1(double xi) const override { return f1_(xi); }
  double d2(double xi) const override {
    if (f2_) return f2_(xi);
    const double h = 1e-5 * (1.0 + std::abs(xi));
    return (f1_(xi + h) - f1_(xi - h)) / (2.0 * h);
  }

 private:
  std::function<double(double)> f_, f1_, f2_;
};

// ---------------------------------------------------------------------------
// The alpha side.

class Weight {
 public:
  virtual ~Weight() = default;
  virtual double value(double u, double v) const = 0;
  virtual AlphaJet jet(double u, double v) const {
    AlphaJet j;
    j.value = value(u, v);
    const double hu = 1e-4 * u, hv = 1e-4 * v;
    const double fpu = value(u + hu, v), fmu = value(u - hu, v);
    const double fpv = value(u, v + hv), fmv = value(u, v - hv);
    j.du = (fpu - fmu) / (2.0 * hu);
    j.dv = (fpv - fmv) / (2.0 * hv);
    j.duu = (fpu - 2.0 * j.value + fmu) / (hu * hu);
    j.dvv = (fpv - 2.0 * j.value + fmv) / (hv * hv);
    j.duv = (value(u + hu, v + hv) - value(u + hu, v - hv) - value(u - hu, v + hv) + value(u - hu, v - hv)) /
            (4.0 * hu * hv);
    return j;
  }
  virtual std::optional<double> homogeneity() const { return std::nullopt; }
  virtual bool recession_vanishes() const { return true; }
};

/// Profile k(r) = alpha(r, 1) of a homogeneous weight, with derivatives in r, for r in (0, 1].
class Profile {
 public:
  virtual ~Profile() = default;
  virtual double k(double r) const = 0;
  /// Central differences with one Richardson step (fourth order).
  virtual void derivs(double r, double& k0, double& k1, double& k2) const {
    const double h = 2e-3 * r;
    k0 = k(r);
    const double p1 = k(r + h), m1 = k(r - h), p2 = k(r + 0.5 * h), m2 = k(r - 0.5 * h);
    const double d1_h = (p1 - m1) / (2.0 * h), d1_half = (p2 - m2) / h;
    const double d2_h = (p1 - 2.0 * k0 + m1) / (h * h), d2_half = (p2 - 2.0 * k0 + m2) / (0.25 * h * h);
    k1 = (4.0 * d1_half - d1_h) / 3.0;
    k2 = (4.0 * d2_half - d2_h) / 3.0;
  }
};

class GeometricProfile final : public Profile {
 public:
  double k(double r) const override { return std::sqrt(r); }
  void derivs(double r, double& k0, double& k1, double& k2) const override {
    k0 = std::sqrt(r);
    k1 = 0.5 / k0;
    k2 = -0.25 / (r * k0);
  }
};

/// h(x) = (e^x - 1)/x and its first two derivatives.
void expm1_quotient(double x, double& h0, double& h1, double& h2) {
  if (std::abs(x) < 1.0) {
    // Series: h^{(k)}(x) = sum_{n>=k} n!/(n-k)! x^{n-k}/(n+1)!.
    h0 = h1 = h2 = 0.0;
    double inv_fact = 1.0;  // 1/(n+1)!
    for (int n = 0; n < 30; ++n) {
      inv_fact /= (n + 1);
      h0 += std::pow(x, n) * inv_fact;
      if (n >= 1) h1 += n * std::pow(x, n - 1) * inv_fact;
      if (n >= 2) h2 += n * (n - 1) * std::pow(x, n - 2) * inv_fact;
    }
    return;
  }
  const double e = std::exp(x), em1 = std::expm1(x);
  h0 = em1 / x;
  h1 = (x * e - em1) / (x * x);
  h2 = (x * x * e - 2.0 * x * e + 2.0 * em1) / (x * x * x);
}

class LogMeanProfile final : public Profile {
 public:
  double k(double r) const override {
    double h0, h1, h2;
    expm1_quotient(std::log(r), h0, h1, h2);
    return h0;
  }
  void derivs(double r, double& k0, double& k1, double& k2) const override {
    double h0, h1, h2;
    expm1_quotient(std::log(r), h0, h1, h2);
    k0 = h0;
    k1 = h1 / r;
    k2 = (h2 - h1) / (r * r);
  }
};

class PowerMeanProfile final : public Profile {
 public:
  explicit PowerMeanProfile(double p) : p_(p), c_(std::pow(2.0, -1.0 / p)) {}
  double k(double r) const override { return c_ * std::pow(std::pow(r, p_) + 1.0, 1.0 / p_); }
  void derivs(double r, double& k0, double& k1, double& k2) const override {
    const double rp = std::pow(r, p_);
    k0 = c_ * std::pow(rp + 1.0, 1.0 / p_);
    k1 = c_ * std::pow(rp + 1.0, 1.0 / p_ - 1.0) * rp / r;
    k2 = c_ * (p_ - 1.0) * std::pow(rp + 1.0, 1.0 / p_ - 2.0) * rp / (r * r);
  }

 private:
  double p_;
  double c_;
};

class StolarskyProfile final : public Profile {
 public:
  StolarskyProfile(double p, double q) : p_(p), q_(q) {}
  double k(double r) const override { return stolarsky_profile_log(p_, q_, std::log(r)); }

 private:
  double p_;
  double q_;
};

/// K(r) = f(r^q).
class PowerComposedProfile final : public Profile {
 public:
  PowerComposedProfile(std::shared_ptr<const Profile> base, double q) : base_(std::move(base)), q_(q) {}
  double k(double r) const override { return base_->k(std::pow(r, q_)); }
  void derivs(double r, double& k0, double& k1, double& k2) const override {
    const double rq = std::pow(r, q_);
    double f0, f1, f2;
    base_->derivs(rq, f0, f1, f2);
    k0 = f0;
    k1 = f1 * q_ * rq / r;
    k2 = f2 * q_ * q_ * rq * rq / (r * r) + f1 * q_ * (q_ - 1.0) * rq / (r * r);
  }

 private:
  std::shared_ptr<const Profile> base_;
  double q_;
};

/// alpha(u, v) = v^q k(u / v), symmetric, vanishing when uv = 0.
class HomogeneousWeight final : public Weight {
 public:
  HomogeneousWeight(std::shared_ptr<const Profile> profile, double degree)
      : profile_(std::move(profile)), q_(degree) {}

  double value(double u, double v) const override {
    if (!(u > 0.0) || !(v > 0.0)) return 0.0;
    if (u > v) std::swap(u, v);
    return std::pow(v, q_) * profile_->k(u / v);
  }

  AlphaJet jet(double u, double v) const override {
    const bool swapped = u > v;
    if (swapped) std::swap(u, v);
    const double r = u / v;
    double k0, k1, k2;
    profile_->derivs(r, k0, k1, k2);
    const double vq = std::pow(v, q_);
    AlphaJet j;
    j.value = vq * k0;
    j.du = vq / v * k1;
    j.dv = vq / v * (q_ * k0 - r * k1);
    j.duu = vq / (v * v) * k2;
    j.duv = vq / (v * v) * ((q_ - 1.0) * k1 - r * k2);
    j.dvv = vq / (v * v) * (q_ * (q_ - 1.0) * k0 - 2.0 * (q_ - 1.0) * r * k1 + r * r * k2);
    if (swapped) {
      std::swap(j.du, j.dv);
      std::swap(j.duu, j.dvv);
    }
    return j;
  }

  std::optional<double> homogeneity() const override { return q_; }

 private:
  std::shared_ptr<const Profile> profile_;
  double q_;
};

class ConstantWeight final : public Weight {
 public:
  double value(double, double) const override { return 1.0; }
  AlphaJet jet(double, double) const override {
    AlphaJet j;
    j.value = 1.0;
    return j;
  }
  std::optional<double> homogeneity() const override { return 0.0; }
};

class CustomWeight final : public Weight {
 public:
  CustomWeight(std::function<double(double, double)> f, std::optional<double> degree)
      : f_(std::move(f)), degree_(degree) {}
  double value(double u, double v) const override { return f_(u, v); }
  std::optional<double> homogeneity() const override { return degree_; }
  bool recession_vanishes() const override {
    if (degree_ && *degree_ < 1.0) return true;
    constexpr double t = 1e8;
    return f_(0.0, t) / t < 1e-6 && f_(t, 0.0) / t < 1e-6;
  }

 private:
  std::function<double(double, double)> f_;
  std::optional<double> degree_;
};

}  // namespace

class DissipationSpec::Model {
 public:
  std::string family;
  nlohmann::json params;
  std::shared_ptr<const Conjugate> conj;
  std::shared_ptr<const Weight> weight;
};

namespace {

std::shared_ptr<const Conjugate> power_mean_conjugate(double p) {
  if (p == 0.0) return std::make_shared<CoshConjugate>();
  return std::make_shared<PowerMeanConjugate>(p);
}

std::shared_ptr<const Profile> power_mean_profile(double p) {
  if (p == 0.0) return std::make_shared<GeometricProfile>();
  return std::make_shared<PowerMeanProfile>(p);
}

void require_power_mean_exponent(double p) {
  if (!std::isfinite(p) || p > 0.0)
    throw UnsupportedParameter("power mean exponent p = " + std::to_string(p) +
                               " is not supported; p must be finite and <= 0");
}

}  // namespace

DissipationSpec DissipationSpec::cosh() {
  auto m = std::make_shared<Model>();
  m->family = "cosh";
  m->params = nlohmann::json::object();
  m->conj = std::make_shared<CoshConjugate>();
  m->weight = std::make_shared<HomogeneousWeight>(std::make_shared<GeometricProfile>(), 1.0);
  return DissipationSpec(m);
}

DissipationSpec DissipationSpec::quadratic() {
  auto m = std::make_shared<Model>();
  m->family = "quadratic";
  m->params = nlohmann::json::object();
  m->conj = std::make_shared<QuadraticConjugate>();
  m->weight = std::make_shared<HomogeneousWeight>(std::make_shared<LogMeanProfile>(), 1.0);
  return DissipationSpec(m);
}

DissipationSpec DissipationSpec::power_mean(double p) {
  require_power_mean_exponent(p);
  auto m = std::make_shared<Model>();
  m->family = "power_mean";
  m->params = {{"p", p}};
  m->conj = power_mean_conjugate(p);
  m->weight = std::make_shared<HomogeneousWeight>(power_mean_profile(p), 1.0);
  return DissipationSpec(m);
}

DissipationSpec DissipationSpec::stolarsky(double p, double q) {
  if (!std::isfinite(p) || !std::isfinite(q) || std::min(p, q) > 0.0)
    throw UnsupportedParameter("Stolarsky mean needs finite p, q with min(p, q) <= 0");
  auto m = std::make_shared<Model>();
  m->family = "stolarsky";
  m->params = {{"p", p}, {"q", q}};
  m->conj = std::make_shared<StolarskyConjugate>(p, q);
  auto weight = std::make_shared<HomogeneousWeight>(std::make_shared<StolarskyProfile>(p, q), 1.0);
  const double viol = alpha_concavity_violation([&](double a, double b) { return weight->value(a, b); }, 4000, 11);
  if (viol > 1e-9)
    throw NonConcaveAlpha("Stolarsky mean c_{" + std::to_string(p) + "," + std::to_string(q) +
                          "} fails sampled concavity by " + std::to_string(viol));
  m->weight = weight;
  return DissipationSpec(m);
}

DissipationSpec DissipationSpec::constant_alpha() {
  auto m = std::make_shared<Model>();
  m->family = "constant_alpha";
  m->params = nlohmann::json::object();
  m->conj = std::make_shared<QuadraticConjugate>();
  m->weight = std::make_shared<ConstantWeight>();
  return DissipationSpec(m);
}

DissipationSpec DissipationSpec::power_field(double q, double p) {
  if (!(q > 0.0 && q <= 1.0)) throw UnsupportedParameter("power_field needs q in (0, 1]");
  require_power_mean_exponent(p);
  auto m = std::make_shared<Model>();
  m->family = "power_field";
  m->params = {{"q", q}, {"p", p}};
  m->conj = std::make_shared<ScaledConjugate>(power_mean_conjugate(p), q);
  m->weight = std::make_shared<HomogeneousWeight>(
      std::make_shared<PowerComposedProfile>(power_mean_profile(p), q), q);
  return DissipationSpec(m);
}

DissipationSpec DissipationSpec::custom(CustomDissipation fns) {
  if (!fns.psi_star || !fns.psi_star_prime || !fns.alpha)
    throw InvalidArgument("custom dissipation needs psi_star, psi_star_prime and alpha");
  if (!fns.asserted_concave) throw NonConcaveAlpha("custom alpha must be asserted concave");
  const double viol = alpha_concavity_violation(fns.alpha, 10000, 13);
  if (viol > 1e-9) throw NonConcaveAlpha("custom alpha fails sampled concavity by " + std::to_string(viol));
  auto m = std::make_shared<Model>();
  m->family = fns.name;
  m->params = nlohmann::json::object();
  m->conj = std::make_shared<CustomConjugate>(fns);
  m->weight = std::make_shared<CustomWeight>(fns.alpha, fns.homogeneity);
  return DissipationSpec(m);
}

const std::string& DissipationSpec::family() const { return model_->family; }
const nlohmann::json& DissipationSpec::params() const { return model_->params; }
double DissipationSpec::psi_star(double xi) const { return model_->conj->value(xi); }
double DissipationSpec::psi_star_prime(double xi) const { return model_->conj->d1(xi); }
double DissipationSpec::psi_star_second(double xi) const { return model_->conj->d2(xi); }
double DissipationSpec::psi(double s) const { return model_->conj->dual(s); }
double DissipationSpec::psi_prime(double s) const { return model_->conj->inv_d1(s); }
double DissipationSpec::psi_second(double s) const { return 1.0 / model_->conj->d2(model_->conj->inv_d1(s)); }
double DissipationSpec::alpha(double u, double v) const { return model_->weight->value(u, v); }
AlphaJet DissipationSpec::alpha_jet(double u, double v) const { return model_->weight->jet(u, v); }
std::optional<double> DissipationSpec::alpha_homogeneity() const { return model_->weight->homogeneity(); }
bool DissipationSpec::alpha_recession_vanishes() const { return model_->weight->recession_vanishes(); }

namespace {

double param_or(const nlohmann::json& params, const char* key, double fallback) {
  if (!params.is_object() || !params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw InvalidArgument(std::string("parameter '") + key + "' must be a number");
  return v.get<double>();
}

double param_required(const nlohmann::json& params, const char* key) {
  if (!params.is_object() || !params.contains(key))
    throw InvalidArgument(std::string("missing parameter '") + key + "'");
  return param_or(params, key, 0.0);
}

}  // namespace

DissipationSpec make_dissipation(std::string_view family, const nlohmann::json& params) {
  if (family == "cosh") return DissipationSpec::cosh();
  if (family == "quadratic") return DissipationSpec::quadratic();
  if (family == "constant_alpha") return DissipationSpec::constant_alpha();
  if (family == "power_mean") return DissipationSpec::power_mean(param_required(params, "p"));
  if (family == "stolarsky")
    return DissipationSpec::stolarsky(param_required(params, "p"), param_required(params, "q"));
  if (family == "power_field")
    return DissipationSpec::power_field(param_required(params, "q"), param_or(params, "p", 0.0));
  throw UnsupportedParameter("unknown dissipation family '" + std::string(family) + "'");
}

// ---------------------------------------------------------------------------

EntropySpec EntropySpec::boltzmann(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("boltzmann gamma must be positive");
  EntropySpec e;
  e.name_ = "boltzmann";
  e.params_ = {{"gamma", gamma}};
  e.phi_ = [gamma](double s) { return s > 0.0 ? gamma * (s * std::log(s) - s + 1.0) : gamma; };
  e.phi_prime_ = [gamma](double s) { return gamma * std::log(s); };
  e.phi_second_ = [gamma](double s) { return gamma / s; };
  e.phi_prime_zero_ = -kInf;
  return e;
}

EntropySpec EntropySpec::quadratic() {
  EntropySpec e;
  e.name_ = "quadratic";
  e.params_ = nlohmann::json::object();
  e.phi_ = [](double s) { return 0.5 * s * s; };
  e.phi_prime_ = [](double s) { return s; };
  e.phi_second_ = [](double) { return 1.0; };
  e.phi_prime_zero_ = 0.0;
  return e;
}

EntropySpec EntropySpec::power(double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw UnsupportedParameter("power entropy needs q > 1");
  EntropySpec e;
  e.name_ = "power";
  e.params_ = {{"q", q}};
  e.phi_ = [q](double s) { return (std::pow(s, q) - 1.0 - q * (s - 1.0)) / (q * (q - 1.0)); };
  e.phi_prime_ = [q](double s) { return (std::pow(s, q - 1.0) - 1.0) / (q - 1.0); };
  e.phi_second_ = [q](double s) { return std::pow(s, q - 2.0); };
  e.phi_prime_zero_ = -1.0 / (q - 1.0);
  return e;
}

EntropySpec EntropySpec::custom(std::string name, std::function<double(double)> phi,
                                std::function<double(double)> phi_prime,
                                std::function<double(double)> phi_second, double phi_prime_at_zero) {
  if (!phi || !phi_prime || !phi_second) throw InvalidArgument("custom entropy needs phi, phi', phi''");
  EntropySpec e;
  e.name_ = std::move(name);
  e.params_ = nlohmann::json::object();
  e.phi_ = std::move(phi);
  e.phi_prime_ = std::move(phi_prime);
  e.phi_second_ = std::move(phi_second);
  e.phi_prime_zero_ = phi_prime_at_zero;
  return e;
}

ExtReal EntropySpec::phi_prime(double s) const {
  if (s <= 0.0) return ExtReal(phi_prime_zero_);
  return ExtReal(phi_prime_(s));
}

std::optional<double> EntropySpec::boltzmann_gamma() const {
  if (name_ != "boltzmann") return std::nullopt;
  return params_.at("gamma").get<double>();
}

EntropySpec make_entropy(std::string_view family, const nlohmann::json& params) {
  if (family == "boltzmann") return EntropySpec::boltzmann(param_or(params, "gamma", 1.0));
  if (family == "quadratic") return EntropySpec::quadratic();
  if (family == "power") return EntropySpec::power(param_required(params, "q"));
  throw UnsupportedParameter("unknown entropy family '" + std::string(family) + "'");
}

// ---------------------------------------------------------------------------

ExtReal upsilon(const DissipationSpec& spec, double u, double v, double w) {
  const double a = spec.alpha(u, v);
  if (a > 0.0) return ExtReal(a * spec.psi(w / a));
  return w == 0.0 ? ExtReal(0.0) : ExtReal::pos_inf();
}

double upsilon_smoothed(const DissipationSpec& spec, double u, double v, double w, double eps, double lambda) {
  if (u < 0.0 || v < 0.0) return kInf;
  const double a = spec.alpha(u, v) + eps;
  if (!(a > 0.0)) return w == 0.0 ? 0.0 : kInf;
  return lambda * a * spec.psi(w / (lambda * a));
}

UpsilonJet upsilon_jet(const DissipationSpec& spec, double u, double v, double w, double eps, double lambda) {
  const AlphaJet aj = spec.alpha_jet(u, v);
  const double a = aj.value + eps;
  if (!(a > 0.0)) throw InvalidArgument("upsilon_jet needs alpha + eps > 0");
  const double s = w / (lambda * a);
  const double xi = spec.psi_prime(s);
  const double psi_s = s * xi - spec.psi_star(xi);
  const double psi2 = 1.0 / spec.psi_star_second(xi);

  const double g_w = xi;
  const double g_a = lambda * (psi_s - s * xi);
  const double g_ww = psi2 / (lambda * a);
  const double g_aw = -s * psi2 / a;
  const double g_aa = lambda * s * s * psi2 / a;

  UpsilonJet out;
  out.value = lambda * a * psi_s;
  out.grad[0] = g_a * aj.du;
  out.grad[1] = g_a * aj.dv;
  out.grad[2] = g_w;
  out.hess[0][0] = g_aa * aj.du * aj.du + g_a * aj.duu;
  out.hess[1][1] = g_aa * aj.dv * aj.dv + g_a * aj.dvv;
  out.hess[0][1] = out.hess[1][0] = g_aa * aj.du * aj.dv + g_a * aj.duv;
  out.hess[0][2] = out.hess[2][0] = g_aw * aj.du;
  out.hess[1][2] = out.hess[2][1] = g_aw * aj.dv;
  out.hess[2][2] = g_ww;
  return out;
}

ExtReal a_phi(const EntropySpec& entropy, double u, double v) {
  if (u <= 0.0 && v <= 0.0) return ExtReal(0.0);
  return entropy.phi_prime(v) - entropy.phi_prime(u);
}

ExtReal field_F(const DissipationSpec& spec, const EntropySpec& entropy, double u, double v) {
  const double a = spec.alpha(u, v);
  if (!(a > 0.0)) return ExtReal(0.0);
  const ExtReal A = a_phi(entropy, u, v);
  if (A.is_pos_inf()) return ExtReal::pos_inf();
  if (A.is_neg_inf()) return ExtReal::neg_inf();
  return ExtReal(spec.psi_star_prime(A.value()) * a);
}

std::optional<FieldFunction> continuous_field(const DissipationSpec& spec, const EntropySpec& entropy) {
  const std::string& fam = spec.family();
  const auto gamma = entropy.boltzmann_gamma();
  const bool geometric = fam == "cosh" || (fam == "power_mean" && spec.params().at("p").get<double>() == 0.0);

  if (gamma && *gamma == 1.0 &&
      (fam == "cosh" || fam == "quadratic" || fam == "power_mean" || fam == "stolarsky"))
    return FieldFunction([](double u, double v) { return v - u; });
  if (gamma && *gamma == 1.0 && fam == "power_field") {
    const double q = spec.params().at("q").get<double>();
    return FieldFunction([q](double u, double v) { return std::pow(v, q) - std::pow(u, q); });
  }
  if (gamma && geometric && *gamma <= 1.0) {
    const double lo = 0.5 * (1.0 - *gamma), hi = 0.5 * (1.0 + *gamma);
    return FieldFunction([lo, hi](double u, double v) {
      return std::pow(u, lo) * std::pow(v, hi) - std::pow(u, hi) * std::pow(v, lo);
    });
  }
  if (fam == "constant_alpha" && entropy.family() == "quadratic")
    return FieldFunction([](double u, double v) { return v - u; });
  if (!entropy.phi_prime(0.0).is_neg_inf()) {
    return FieldFunction([spec, entropy](double u, double v) { return field_F(spec, entropy, u, v).value(); });
  }
  return std::nullopt;
}

double compatibility_residual(const DissipationSpec& spec, const EntropySpec& entropy,
                              const std::vector<double>& grid) {
  double worst = 0.0;
  for (double u : grid) {
    if (!(u > 0.0)) throw InvalidArgument("compatibility grid must be positive");
    for (double v : grid) {
      const ExtReal f = field_F(spec, entropy, u, v);
      const double err = f.is_finite() ? std::abs(f.value() - (v - u)) : kInf;
      worst = std::max(worst, err);
    }
  }
  return worst;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw InvalidArgument("log_grid needs 0 < lo <= hi, count >= 1");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int k = 0; k < count; ++k) g[k] = std::exp(a + (b - a) * k / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

double alpha_concavity_violation(const std::function<double(double, double)>& alpha, int samples,
                                 unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&] {
    // Mix of scales, with occasional boundary points.
    const double r = unif(rng);
    if (r < 0.05) return 0.0;
    return std::pow(10.0, -3.0 + 5.0 * unif(rng));
  };
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double u1 = draw(), v1 = draw(), u2 = draw(), v2 = draw();
    const double lam = unif(rng);
    const double a1 = alpha(u1, v1), a2 = alpha(u2, v2);
    const double am = alpha(lam * u1 + (1 - lam) * u2, lam * v1 + (1 - lam) * v2);
    const double chord = lam * a1 + (1 - lam) * a2;
    const double viol = (chord - am) / (1.0 + std::abs(chord));
    worst = std::max(worst, viol);
  }
  return worst;
}

DissipationCheck check_dissipation(const DissipationSpec& spec, int samples, unsigned seed) {
  DissipationCheck c;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  std::uniform_real_distribution<double> pos(0.0, 10.0);

  c.psi_star_at_zero = std::abs(spec.psi_star(0.0));
  c.psi_at_zero = std::abs(spec.psi(0.0));
  const double ref = 10.0 * spec.psi_star(1.0);
  c.superlinear = spec.psi_star(1e3) / 1e3 > ref && spec.psi_star(-1e3) / 1e3 > ref;

  for (int k = 0; k < samples; ++k) {
    const double xi = unif(rng);
    const double ps = spec.psi_star(xi);
    c.psi_star_asymmetry = std::max(c.psi_star_asymmetry, std::abs(ps - spec.psi_star(-xi)) / (1.0 + std::abs(ps)));

    const double s = unif(rng);
    const double xs = spec.psi_prime(s);
    const double gap = spec.psi(s) + spec.psi_star(xs) - s * xs;
    c.fenchel_young_gap = std::max(c.fenchel_young_gap, std::abs(gap) / (1.0 + std::abs(s * xs)));
    const double viol = s * xi - spec.psi(s) - ps;
    c.fenchel_young_violation = std::max(c.fenchel_young_violation, viol / (1.0 + std::abs(s * xi)));

    const double u = pos(rng), v = pos(rng);
    const double a = spec.alpha(u, v);
    c.alpha_asymmetry = std::max(c.alpha_asymmetry, std::abs(a - spec.alpha(v, u)) / (1.0 + a));
  }
  c.alpha_concavity_violation =
      alpha_concavity_violation([&](double u, double v) { return spec.alpha(u, v); }, samples, seed + 1);
  return c;
}

}  // namespace ggflow
