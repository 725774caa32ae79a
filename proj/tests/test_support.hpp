#pragma once

#include <cmath>
#include <random>

#include "ggflow/graph_core.hpp"

namespace testing_support {

inline ggflow::GraphSystem two_state() {
  ggflow::Vector pi(2);
  pi << 0.5, 0.5;
  ggflow::Matrix kappa(2, 2);
  kappa << 0, 1, 1, 0;
  return ggflow::GraphSystem::build(pi, kappa);
}

inline ggflow::GraphSystem three_state() {
  ggflow::Vector pi(3);
  pi << 0.2, 0.3, 0.5;
  ggflow::Matrix kappa(3, 3);
  kappa << 0.0, 1.5, 1.0,
           1.0, 0.0, 2.0,
           0.4, 1.2, 0.0;
  return ggflow::GraphSystem::build(pi, kappa);
}

inline ggflow::Vector vec(std::initializer_list<double> xs) {
  ggflow::Vector v(static_cast<ggflow::Index>(xs.size()));
  ggflow::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline ggflow::Vector random_vector(std::mt19937_64& rng, ggflow::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> U(lo, hi);
  ggflow::Vector v(n);
  for (ggflow::Index i = 0; i < n; ++i) v(i) = U(rng);
  return v;
}

}  // namespace testing_support
