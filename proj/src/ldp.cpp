#include "ggflow/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "ggflow/errors.hpp"

namespace ggflow {

namespace {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

std::uint32_t PhiloxStream::next_u32() {
  if (used_ == 4) {
    buffer_ = Philox4x32::block({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                 static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                                key_);
    ++counter_;
    used_ = 0;
  }
  return buffer_[used_++];
}

double PhiloxStream::next_double() {
  const std::uint64_t hi = next_u32() >> 5;  // 27 bits
  const std::uint64_t lo = next_u32() >> 6;  // 26 bits
  const std::uint64_t bits = (hi << 26) | lo;
  // (bits + 0.5) / 2^53 lies strictly inside (0, 1).
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

namespace {

std::uint32_t sample_index(const Vector& cumulative, double x) {
  const auto it = std::upper_bound(cumulative.data(), cumulative.data() + cumulative.size(), x * cumulative(cumulative.size() - 1));
  return static_cast<std::uint32_t>(std::min<Index>(it - cumulative.data(), cumulative.size() - 1));
}

}  // namespace

ParticleEnsemble gillespie(const GraphSystem& system, std::size_t n, double T, std::uint64_t seed,
                           const Vector& initial, unsigned threads) {
  if (n < 1) throw InvalidArgument("particle count must be at least 1");
  if (!(T >= 0.0)) throw InvalidArgument("horizon must be nonnegative");
  const Index N = system.size();
  Vector init = initial.size() == 0 ? Vector(system.pi() / system.total_pi()) : initial;
  if (init.size() != N) throw DimensionMismatch("initial distribution has wrong length");
  if ((init.array() < 0.0).any() || !(init.sum() > 0.0)) throw InvalidArgument("initial distribution must be nonnegative");

  Vector init_cum(N);
  std::partial_sum(init.data(), init.data() + N, init_cum.data());
  const Matrix& kappa = system.kappa();
  std::vector<Vector> row_cum(N, Vector(N));
  Vector exit_rate(N);
  for (Index i = 0; i < N; ++i) {
    const Vector row = kappa.row(i).transpose();
    std::partial_sum(row.data(), row.data() + N, row_cum[i].data());
    exit_rate(i) = row_cum[i](N - 1);
  }

  ParticleEnsemble ens;
  ens.n = n;
  ens.T = T;
  ens.seed = seed;
  ens.initial_states.resize(n);
  std::vector<std::vector<JumpEvent>> per_particle(n);

  auto simulate = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      PhiloxStream rng(seed, p);
      std::uint32_t x = sample_index(init_cum, rng.next_double());
      ens.initial_states[p] = x;
      double t = 0.0;
      auto& out = per_particle[p];
      while (true) {
        const double rate = exit_rate(x);
        if (!(rate > 0.0)) break;
        t += -std::log(rng.next_double()) / rate;
        if (t > T) break;
        const std::uint32_t y = sample_index(row_cum[x], rng.next_double());
        out.push_back(JumpEvent{t, static_cast<std::uint32_t>(p), x, y});
        x = y;
      }
    }
  };

  unsigned nt = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, n));
  if (nt <= 1) {
    simulate(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned k = 0; k < nt; ++k) {
      const std::size_t b = k * chunk, e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(simulate, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::size_t total = 0;
  for (const auto& v : per_particle) total += v.size();
  ens.events.reserve(total);
  for (auto& v : per_particle) ens.events.insert(ens.events.end(), v.begin(), v.end());
  std::sort(ens.events.begin(), ens.events.end(), [](const JumpEvent& a, const JumpEvent& b) {
    return a.t != b.t ? a.t < b.t : a.particle < b.particle;
  });
  return ens;
}

std::vector<double> uniform_bins(double T, int count) {
  if (!(T > 0.0) || count < 1) throw InvalidArgument("uniform_bins needs T > 0 and count >= 1");
  std::vector<double> b(count + 1);
  for (int k = 0; k <= count; ++k) b[k] = T * k / count;
  b.back() = T;
  return b;
}

CurveWithFlux EmpiricalPath::curve() const {
  CurveWithFlux c;
  c.times = times;
  c.states = states;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) c.fluxes.push_back(Flux{flux_mass[k] / (times[k + 1] - times[k])});
  c.midpoints = bin_average;
  return c;
}

EmpiricalPath empirical_path(const GraphSystem& system, const ParticleEnsemble& ens, const std::vector<double>& bins) {
  if (bins.size() < 2) throw GridMismatch("need at least one bin");
  for (std::size_t k = 1; k < bins.size(); ++k)
    if (!(bins[k] > bins[k - 1])) throw GridMismatch("bin edges must increase");
  const Index N = system.size();
  const double inv_n = 1.0 / static_cast<double>(ens.n);
  std::vector<double> count(N, 0.0);
  for (auto x : ens.initial_states) count[x] += 1.0;

  auto measure_of = [&](const std::vector<double>& c) {
    Vector rho(N);
    for (Index i = 0; i < N; ++i) rho(i) = c[i] * inv_n;
    return Measure::from_mass(system, rho);
  };

  EmpiricalPath path;
  path.times = bins;
  std::size_t ev = 0;
  // Skip events before the first edge.
  while (ev < ens.events.size() && ens.events[ev].t <= bins.front()) {
    count[ens.events[ev].from] -= 1.0;
    count[ens.events[ev].to] += 1.0;
    ++ev;
  }
  path.states.push_back(measure_of(count));
  for (std::size_t k = 0; k + 1 < bins.size(); ++k) {
    Matrix flux = Matrix::Zero(N, N);
    Vector occupation = Vector::Zero(N);
    double t_last = bins[k];
    while (ev < ens.events.size() && ens.events[ev].t <= bins[k + 1]) {
      const JumpEvent& e = ens.events[ev];
      for (Index i = 0; i < N; ++i) occupation(i) += count[i] * (e.t - t_last);
      t_last = e.t;
      count[e.from] -= 1.0;
      count[e.to] += 1.0;
      flux(e.from, e.to) += 1.0;
      ++ev;
    }
    for (Index i = 0; i < N; ++i) occupation(i) += count[i] * (bins[k + 1] - t_last);
    path.flux_mass.push_back(flux * inv_n);
    path.bin_average.push_back(Measure::from_mass(system, occupation * (inv_n / (bins[k + 1] - bins[k]))));
    path.states.push_back(measure_of(count));
  }
  return path;
}

double eta_hat(double a, double b) {
  if (a < 0.0 || b < 0.0) return std::numeric_limits<double>::infinity();
  if (a == 0.0) return b;
  if (b == 0.0) return std::numeric_limits<double>::infinity();
  return a * std::log(a / b) - a + b;
}

double rate_I(const GraphSystem& system, const std::vector<double>& times, const std::vector<Measure>& bin_average,
              const std::vector<Matrix>& flux_mass) {
  if (times.size() < 2 || bin_average.size() + 1 != times.size() || flux_mass.size() + 1 != times.size())
    throw GridMismatch("rate_I: bins, measures and fluxes are not aligned");
  const Index N = system.size();
  const Matrix& kappa = system.kappa();
  double total = 0.0;
  for (std::size_t k = 0; k < bin_average.size(); ++k) {
    const double dt = times[k + 1] - times[k];
    const Vector& rho = bin_average[k].rho();
    for (Index i = 0; i < N; ++i)
      for (Index j = 0; j < N; ++j) {
        if (i == j) continue;
        total += eta_hat(flux_mass[k](i, j), rho(i) * kappa(i, j) * dt);
      }
  }
  return total;
}

double rate_I(const GraphSystem& system, const EmpiricalPath& path) {
  return rate_I(system, path.times, path.bin_average, path.flux_mass);
}

namespace {

double psi_closed_form_impl(const DissipationSpec& spec, double s, double c, double d) {
  const double g = std::sqrt(c * d);
  const double x = std::log(d / c);
  return 0.5 * g * (spec.psi(2.0 * s / g) + spec.psi_star(-x)) + s * x;
}

}  // namespace

double psi_closed_form(double s, double c, double d) {
  if (!(c > 0.0) || !(d > 0.0)) throw InvalidArgument("psi needs c, d > 0");
  static const DissipationSpec cosh = DissipationSpec::cosh();
  return psi_closed_form_impl(cosh, s, c, d);
}

double psi_brute_force(double s, double c, double d, double tol) {
  if (!(c > 0.0) || !(d > 0.0)) throw InvalidArgument("psi needs c, d > 0");
  auto f = [&](double a) { return eta_hat(a, c) + eta_hat(a - 2.0 * s, d); };
  double lo = std::max(0.0, 2.0 * s);
  double hi = 2.0 * std::abs(s) + c + d + 1.0;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol * (1.0 + hi)) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({f1, f2, f(0.5 * (lo + hi)), f(std::max(0.0, 2.0 * s))});
}

PsiReduction psi_reduction(const DissipationSpec& spec_cosh, double s, double c, double d) {
  if (spec_cosh.family() != "cosh") throw UnsupportedParameter("psi reduction is stated for the cosh pair");
  if (!(c > 0.0) || !(d > 0.0)) throw InvalidArgument("psi needs c, d > 0");
  PsiReduction r;
  r.closed_form = psi_closed_form_impl(spec_cosh, s, c, d);
  r.brute_force = psi_brute_force(s, c, d);
  r.difference = std::abs(r.closed_form - r.brute_force);
  return r;
}

}  // namespace ggflow
