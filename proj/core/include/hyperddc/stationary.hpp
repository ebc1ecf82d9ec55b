#pragma once

// Infinite-horizon stationary perception-perfect equilibria.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hyperddc/model.hpp"

namespace hyperddc {

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StationaryEquilibrium {
  ChoiceProbabilities s_star;
  Vector v_star;
  int iterations = 0;
  double residual = 0.0;  // sup-norm of pi(s) - s at s_star
};

struct StationaryOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  double damping = 0.5;
  int n_starts = 1;
  std::uint64_t seed = 20200527;
};

struct StationarySolution {
  /// Distinct fixed points, sorted lexicographically by their CCP entries.
  std::vector<StationaryEquilibrium> fixed_points;
  int starts = 0;
  int converged_starts = 0;

  const StationaryEquilibrium& primary() const { return fixed_points.front(); }
};

/// A(beta, delta) = I - delta [beta Q_K + (1 - beta) sum_k S_k Q_k].
Matrix a_matrix(const Matrix& s, const Transitions& transitions, const DiscountPair& disc);

/// Perceived long-run values A^{-1}(-ln s_K + u_K) with u_K = 0.
Vector stationary_values(const Matrix& s, const Transitions& transitions, const DiscountPair& disc);

/// Choice-specific values under perceived future choice probabilities s_tilde.
std::vector<Vector> omega(const ChoiceProbabilities& s_tilde, const StationaryModel& model);

/// Logit best response to s_tilde.
ChoiceProbabilities pi_map(const ChoiceProbabilities& s_tilde, const StationaryModel& model);

/// Damped successive approximation s <- (1 - damping) s + damping pi(s).
/// The first start is pi(uniform); further starts are random simplex points.
/// Throws NonConvergence when no start converges.
StationarySolution solve_stationary(const StationaryModel& model, const StationaryOptions& opts = {});

/// The unique utilities rationalizing s at (beta, delta).
StationaryModel recover_utilities_stationary(const ChoiceProbabilities& s,
                                             const Transitions& transitions,
                                             const DiscountPair& disc);

}  // namespace hyperddc
