#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "ggflow/errors.hpp"
#include "ggflow/evolution.hpp"
#include "ggflow/functionals.hpp"
#include "test_support.hpp"

using namespace ggflow;
using testing_support::vec;

namespace {

SolveOptions tight(double T, double dt) {
  SolveOptions o;
  o.T = T;
  o.dt = dt;
  o.rtol = 1e-8;
  o.atol = 1e-12;
  return o;
}

// Density generator of the linear equation: (L u)_i = sum_j kappa_ij (u_j - u_i).
Matrix density_generator(const GraphSystem& sys) {
  Matrix L = sys.kappa();
  L.diagonal() = -sys.kappa().rowwise().sum();
  return L;
}

double l1_pi(const GraphSystem& sys, const Vector& a) { return a.cwiseAbs().dot(sys.pi()); }

}  // namespace

TEST_SUITE("evolution") {

TEST_CASE("constant data stays constant") {
  const GraphSystem sys = testing_support::three_state();
  const Trajectory tr = solve_forward(sys, DissipationSpec::cosh(), EntropySpec::boltzmann(),
                                      Vector::Constant(3, 1.7), tight(2.0, 0.1));
  for (const Measure& m : tr.states) CHECK((m.u().array() - 1.7).abs().maxCoeff() == 0.0);
  for (const Flux& f : tr.fluxes) CHECK(f.j.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear case matches the matrix exponential") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GraphSystem sys = random_detailed_balance_system(10, seed);
    std::mt19937_64 rng(seed);
    const Vector u0 = testing_support::random_vector(rng, 10, 0.1, 3.0);
    const Trajectory tr =
        solve_forward(sys, DissipationSpec::cosh(), EntropySpec::boltzmann(), u0, tight(1.0, 0.05));
    const Matrix L = density_generator(sys);
    for (std::size_t k = 0; k < tr.times.size(); k += 5) {
      const Vector exact = (tr.times[k] * L).exp() * u0;
      CHECK((tr.states[k].u() - exact).cwiseAbs().maxCoeff() <= 1e-6);
    }
    const Vector exact_T = L.exp() * u0;
    CHECK((tr.states.back().u() - exact_T).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(tr.times.back() == 1.0);
  }
}

TEST_CASE("quadratic pair gives the same linear flow") {
  const GraphSystem sys = testing_support::three_state();
  const Vector u0 = vec({3.0, 1.0, 0.2});
  const Trajectory a = solve_forward(sys, DissipationSpec::cosh(), EntropySpec::boltzmann(), u0, tight(1.0, 0.1));
  const Trajectory b =
      solve_forward(sys, DissipationSpec::quadratic(), EntropySpec::boltzmann(), u0, tight(1.0, 0.1));
  const Vector exact = density_generator(sys).exp() * u0;
  CHECK((b.states.back().u() - exact).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((a.states.back().u() - b.states.back().u()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("right-hand side conserves mass") {
  const GraphSystem sys = random_detailed_balance_system(8, 4);
  std::mt19937_64 rng(9);
  for (const auto& spec : {DissipationSpec::cosh(), DissipationSpec::power_field(0.5), DissipationSpec::power_mean(-1.0)}) {
    const FieldFunction field = evolution_field(spec, EntropySpec::boltzmann());
    for (int k = 0; k < 10; ++k) {
      const Vector u = testing_support::random_vector(rng, 8, 0.01, 5.0);
      CHECK(std::abs(evolution_rhs(sys, field, u).dot(sys.pi())) <= 1e-12);
    }
  }
}

TEST_CASE("nonlinear q = 1/2 field conserves mass and keeps bounds") {
  const GraphSystem sys = testing_support::three_state();
  const Vector u0 = vec({2.0, 1.0, 0.5});
  const SolveOptions o = tight(2.0, 1e-2);
  const Trajectory tr = solve_forward(sys, DissipationSpec::power_field(0.5), EntropySpec::boltzmann(), u0, o);
  CHECK(tr.mass_drift <= 1e-10);
  CHECK(tr.min_density >= 0.5 - o.atol);
  CHECK(tr.max_density <= 2.0 + o.atol);
  for (const Measure& m : tr.states) {
    CHECK(m.u().minCoeff() >= 0.5 - o.atol);
    CHECK(m.u().maxCoeff() <= 2.0 + o.atol);
  }
  // Field value check against v^q - u^q.
  const FieldFunction f = evolution_field(DissipationSpec::power_field(0.5), EntropySpec::boltzmann());
  CHECK(f(0.25, 4.0) == doctest::Approx(1.5).epsilon(1e-13));
  CHECK(f(0.0, 4.0) == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("data with zeros stays nonnegative") {
  const GraphSystem sys = testing_support::three_state();
  const Trajectory tr = solve_forward(sys, DissipationSpec::power_field(0.5), EntropySpec::boltzmann(),
                                      vec({0.0, 0.0, 2.0}), tight(1.0, 1e-2));
  CHECK(tr.min_density >= -1e-12);
  CHECK(tr.mass_drift <= 1e-10);
}

TEST_CASE("fluxes satisfy the continuity equation and the balance") {
  const GraphSystem sys = testing_support::three_state();
  const Vector u0 = vec({2.0, 1.0, 0.5});
  for (const auto& spec : {DissipationSpec::cosh(), DissipationSpec::power_field(0.5)}) {
    CAPTURE(spec.family());
    SolveOptions o = tight(1.0, 1e-3);
    o.rtol = 1e-10;
    o.atol = 1e-13;
    const Trajectory tr = solve_forward(sys, spec, EntropySpec::boltzmann(), u0, o);
    const CEResidual ce = ce_residual(sys, tr.curve());
    CHECK(ce.residual <= 1e-6);
    const EDBReport r1 = edb_deficit(spec, EntropySpec::boltzmann(), sys, tr.curve());
    CHECK(std::abs(r1.deficit) <= 1e-4 * r1.energy_start);
    o.dt = 2e-3;
    const EDBReport r2 = edb_deficit(spec, EntropySpec::boltzmann(), sys,
                                     solve_forward(sys, spec, EntropySpec::boltzmann(), u0, o).curve());
    CHECK(std::abs(r2.deficit) / std::abs(r1.deficit) == doctest::Approx(4.0).epsilon(0.25));
  }
}

TEST_CASE("L1 contraction and order preservation") {
  const GraphSystem sys = testing_support::three_state();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const SolveOptions o = tight(1.0, 0.05);

  const Vector u0 = vec({1.5, 0.7, 1.1});
  const ContractionReport same =
      l1_contraction_check(sys, DissipationSpec::cosh(), EntropySpec::boltzmann(), u0, u0, o);
  CHECK(same.ratio == 0.0);

  for (const auto& spec : {DissipationSpec::cosh(), DissipationSpec::power_field(0.5)}) {
    for (int k = 0; k < 5; ++k) {
      const Vector a = testing_support::random_vector(rng, 3, 0.2, 3.0);
      Vector b = a;
      for (Index i = 0; i < 3; ++i) b(i) += 1e-3 * U(rng);
      const ContractionReport r = l1_contraction_check(sys, spec, EntropySpec::boltzmann(), a, b, o);
      CHECK(r.ratio <= 1.01);
    }
  }

  // Linear case: 20 random ordered pairs, with an independent check on the endpoint.
  const Matrix E = density_generator(sys).exp();
  for (int k = 0; k < 20; ++k) {
    const Vector a = testing_support::random_vector(rng, 3, 0.0, 2.0);
    const Vector b = a + testing_support::random_vector(rng, 3, 0.0, 1.0);
    const ContractionReport r = l1_contraction_check(sys, DissipationSpec::cosh(), EntropySpec::boltzmann(), a, b, o);
    CHECK(r.order_preserved);
    CHECK(r.ell_hat == 0.0);
    CHECK(r.ratio <= 1.0 + 1e-8);
    CHECK(((E * b) - (E * a)).minCoeff() >= 0.0);
    CHECK(l1_pi(sys, E * (b - a)) <= l1_pi(sys, b - a) * (1.0 + 1e-12));
  }
}

TEST_CASE("one-sided Lipschitz estimate") {
  CHECK(estimate_one_sided_lipschitz([](double u, double v) { return v - u; }, 0.1, 10.0) == 0.0);
  CHECK(estimate_one_sided_lipschitz([](double u, double v) { return u - v; }, 0.1, 10.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stationarity") {
  const GraphSystem sys = testing_support::three_state();
  const EntropySpec boltz = EntropySpec::boltzmann();

  SUBCASE("start at c pi") {
    const Trajectory tr = solve_forward(sys, DissipationSpec::cosh(), boltz, Vector::Constant(3, 0.6), tight(1.0, 0.1));
    const StationarityReport r = stationarity_report(sys, DissipationSpec::cosh(), boltz, tr);
    CHECK(r.fisher_final == 0.0);
    CHECK(r.tv_distance_to_c_pi == 0.0);
    CHECK(r.energy_monotone);
  }
  SUBCASE("cosh flow reaches c pi by T = 20") {
    const Vector u0 = vec({3.0, 1.0, 0.2});
    const Trajectory tr = solve_forward(sys, DissipationSpec::cosh(), boltz, u0, tight(20.0, 0.1));
    const StationarityReport r = stationarity_report(sys, DissipationSpec::cosh(), boltz, tr);
    CHECK(r.tv_distance_to_c_pi <= 1e-6);
    CHECK(r.energy_monotone);
    CHECK(r.fisher_final <= 1e-10);
    // Decay rate bounded by the spectral gap of the generator.
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        sys.pi().cwiseSqrt().asDiagonal() * density_generator(sys) * sys.pi().cwiseSqrt().cwiseInverse().asDiagonal());
    const double gap = -es.eigenvalues()(1);
    CHECK(gap > 0.0);
    // Floored at rounding level.
    CHECK(r.tv_distance_to_c_pi <= std::max(10.0 * std::exp(-gap * 20.0), 1e-13));
  }
  SUBCASE("gamma = 1/2 keeps indicator data stationary") {
    const EntropySpec half = EntropySpec::boltzmann(0.5);
    const Trajectory tr = solve_forward(sys, DissipationSpec::cosh(), half, vec({1.0, 0.0, 0.0}), tight(1.0, 0.1));
    for (const Measure& m : tr.states) CHECK((m.u() - vec({1.0, 0.0, 0.0})).cwiseAbs().maxCoeff() == 0.0);
    const StationarityReport r = stationarity_report(sys, DissipationSpec::cosh(), half, tr);
    CHECK(r.fisher_final == 0.0);
    CHECK(r.tv_distance_to_c_pi > 0.1);
    // Same data under gamma = 1 moves.
    const Trajectory moving = solve_forward(sys, DissipationSpec::cosh(), boltz, vec({1.0, 0.0, 0.0}), tight(1.0, 0.1));
    CHECK(moving.states.back().u()(1) > 0.01);
  }
}

TEST_CASE("non-finite fields are rejected") {
  const GraphSystem sys = testing_support::two_state();
  const FieldFunction bad = [](double u, double v) {
    return u > 1.5 ? std::numeric_limits<double>::quiet_NaN() : v - u;
  };
  CHECK_THROWS_AS(solve_forward(sys, bad, vec({2.0, 1.0}), tight(1.0, 0.1)), NonFiniteField);
}

}  // TEST_SUITE
