#include <doctest.h>

#include <cmath>
#include <random>

#include "ggflow/errors.hpp"
#include "ggflow/evolution.hpp"
#include "ggflow/ldp.hpp"
#include "test_support.hpp"

using namespace ggflow;
using testing_support::vec;

namespace {

double sup_tv_to_ode(const GraphSystem& sys, const EmpiricalPath& path, const Vector& p0) {
  SolveOptions o;
  o.T = path.times.back();
  o.dt = path.times[1] - path.times[0];
  o.rtol = 1e-10;
  o.atol = 1e-13;
  const Trajectory tr =
      solve_forward(sys, DissipationSpec::cosh(), EntropySpec::boltzmann(), p0.cwiseQuotient(sys.pi()), o);
  double gap = 0.0;
  for (std::size_t k = 0; k < path.states.size(); ++k) gap = std::max(gap, tv_distance(path.states[k], tr.states[k]));
  return gap;
}

}  // namespace

TEST_SUITE("ldp") {

TEST_CASE("Philox known answers") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("Philox streams") {
  PhiloxStream a(42, 7), b(42, 7), c(42, 8);
  double mean = 0.0;
  bool differs = false;
  for (int k = 0; k < 10000; ++k) {
    const double x = a.next_double();
    CHECK(x == b.next_double());
    CHECK(x > 0.0);
    CHECK(x < 1.0);
    differs = differs || x != c.next_double();
    mean += x / 10000.0;
  }
  CHECK(differs);
  CHECK(std::abs(mean - 0.5) <= 3.0 * std::sqrt(1.0 / 12.0 / 10000.0));
}

TEST_CASE("no rates, no events") {
  const GraphSystem sys = GraphSystem::build(vec({0.5, 0.5}), Matrix::Zero(2, 2));
  const ParticleEnsemble ens = gillespie(sys, 100, 5.0, 1);
  CHECK(ens.events.empty());
  const EmpiricalPath p = empirical_path(sys, ens, uniform_bins(5.0, 10));
  for (const Measure& m : p.states) CHECK((m.rho() - p.states[0].rho()).cwiseAbs().maxCoeff() == 0.0);
  for (const Matrix& f : p.flux_mass) CHECK(f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("event log is consistent") {
  const GraphSystem sys = testing_support::three_state();
  const ParticleEnsemble ens = gillespie(sys, 500, 2.0, 3);
  std::vector<std::uint32_t> state = ens.initial_states;
  double last = 0.0;
  for (const JumpEvent& e : ens.events) {
    CHECK(e.t >= last);
    CHECK(e.t <= 2.0);
    CHECK(state[e.particle] == e.from);
    CHECK(e.from != e.to);
    CHECK(sys.kappa()(e.from, e.to) > 0.0);
    state[e.particle] = e.to;
    last = e.t;
  }
}

TEST_CASE("event count is Poisson") {
  // Every particle leaves its state at rate 1, so the total count is Poisson(n T).
  const GraphSystem sys = testing_support::two_state();
  const ParticleEnsemble ens = gillespie(sys, 10000, 1.0, 11);
  const double mean = 10000.0;
  CHECK(std::abs(static_cast<double>(ens.events.size()) - mean) <= 3.0 * std::sqrt(mean));
}

TEST_CASE("stationary start keeps the time average at pi") {
  const GraphSystem sys = testing_support::two_state();
  const std::size_t n = 10000;
  const double T = 1.0;
  const ParticleEnsemble ens = gillespie(sys, n, T, 5);
  const EmpiricalPath p = empirical_path(sys, ens, uniform_bins(T, 20));
  double avg = 0.0;
  for (std::size_t k = 0; k < p.bin_average.size(); ++k)
    avg += p.bin_average[k].rho()(0) * (p.times[k + 1] - p.times[k]) / T;
  // Occupation time of one state: stationary variance 1/4, correlation exp(-2s).
  const double var = 2.0 * 0.25 * (0.5 - (1.0 - std::exp(-2.0 * T)) / (4.0 * T)) / T / static_cast<double>(n);
  CHECK(std::abs(avg - 0.5) <= 3.0 * std::sqrt(var));
}

TEST_CASE("counting identity") {
  const GraphSystem sys = testing_support::three_state();
  const ParticleEnsemble ens = gillespie(sys, 2000, 1.0, 9);
  const EmpiricalPath p = empirical_path(sys, ens, uniform_bins(1.0, 25));
  REQUIRE(p.states.size() == 26);
  for (std::size_t k = 0; k + 1 < p.states.size(); ++k) {
    const Vector delta = p.states[k + 1].rho() - p.states[k].rho();
    CHECK((delta + graph_div(p.flux_mass[k])).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(p.states[k].mass() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(ce_residual(sys, p.curve()).residual <= 1e-9);
}

TEST_CASE("results do not depend on the thread count") {
  const GraphSystem sys = testing_support::three_state();
  const ParticleEnsemble a = gillespie(sys, 3000, 1.0, 21, Vector(), 1);
  const ParticleEnsemble b = gillespie(sys, 3000, 1.0, 21, Vector(), 4);
  CHECK(a.initial_states == b.initial_states);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t k = 0; k < a.events.size(); ++k) {
    CHECK(a.events[k].t == b.events[k].t);
    CHECK(a.events[k].particle == b.events[k].particle);
    CHECK(a.events[k].to == b.events[k].to);
  }
}

TEST_CASE("eta_hat conventions") {
  CHECK(eta_hat(0.0, 2.0) == 2.0);
  CHECK(eta_hat(3.0, 3.0) == 0.0);
  CHECK(std::isinf(eta_hat(1.0, 0.0)));
  CHECK(eta_hat(0.0, 0.0) == 0.0);
  CHECK(eta_hat(2.0, 1.0) == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-15));
}

TEST_CASE("rate functional") {
  const GraphSystem sys = testing_support::three_state();
  const std::vector<double> times = {0.0, 0.5, 1.0};
  std::vector<Measure> avg = {Measure::from_mass(sys, vec({0.2, 0.3, 0.5})), Measure::from_mass(sys, vec({0.4, 0.4, 0.2}))};
  std::vector<Matrix> flux;
  double mass = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    Matrix f = avg[k].rho().asDiagonal() * sys.kappa() * 0.5;
    mass += f.sum();
    flux.push_back(f);
  }
  CHECK(rate_I(sys, times, avg, flux) == doctest::Approx(0.0).epsilon(1e-15));
  for (auto& f : flux) f *= 2.0;
  const double doubled = rate_I(sys, times, avg, flux);
  CHECK(doubled == doctest::Approx((2.0 * std::log(2.0) - 1.0) * mass).epsilon(1e-13));
  CHECK(doubled >= (2.0 * std::log(2.0) - 1.0) * mass / 2.0);
  CHECK_THROWS_AS(rate_I(sys, {0.0, 1.0}, avg, flux), GridMismatch);
}

TEST_CASE("law of large numbers and concentration of the rate") {
  const GraphSystem sys = testing_support::three_state();
  const Vector p0 = vec({0.6, 0.3, 0.1});
  const std::vector<double> bins = uniform_bins(1.0, 100);
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const EmpiricalPath p = empirical_path(sys, gillespie(sys, 10000, 1.0, seed, p0), bins);
    within += sup_tv_to_ode(sys, p, p0) <= 0.05 ? 1 : 0;
  }
  CHECK(within == 3);
  const double i_small = rate_I(sys, empirical_path(sys, gillespie(sys, 1000, 1.0, 4, p0), bins));
  const double i_large = rate_I(sys, empirical_path(sys, gillespie(sys, 10000, 1.0, 4, p0), bins));
  CHECK(i_large < i_small);
  CHECK(i_large <= 0.05);
}

TEST_CASE("psi closed form against the brute-force infimum") {
  const DissipationSpec cosh = DissipationSpec::cosh();
  CHECK(psi_closed_form(0.0, 1.7, 1.7) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(psi_closed_form(0.0, 1.7, 1.7)) <= 1e-14);
  CHECK(psi_closed_form(0.5, 1.0, 1.0) == doctest::Approx(0.5 * cosh.psi(1.0)).epsilon(1e-13));
  CHECK(std::abs(psi_closed_form(0.5, 1.0, 1.0) - psi_brute_force(0.5, 1.0, 1.0)) <= 1e-8);
  CHECK(std::abs(psi_closed_form(0.3, 2.0, 0.5) - psi_brute_force(0.3, 2.0, 0.5)) <= 1e-8);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> S(-5.0, 5.0), L(-3.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const PsiReduction r = psi_reduction(cosh, S(rng), std::exp(L(rng)), std::exp(L(rng)));
    worst = std::max(worst, r.difference);
  }
  CHECK(worst <= 1e-8);
}

}  // TEST_SUITE
