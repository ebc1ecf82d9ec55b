#pragma once

// Independent reference computations used only by tests.

#include <cstdint>
#include <random>
#include <vector>

#include <hyperddc/model.hpp>
#include <hyperddc/polynomial.hpp>
#include <hyperddc/stationary.hpp>

namespace oracle {

using hyperddc::Matrix;
using hyperddc::Transitions;
using hyperddc::Vector;

Matrix random_stochastic(std::mt19937_64& rng, int J);
hyperddc::FiniteModel random_finite_model(std::mt19937_64& rng, int J, int T, int K, double u_range = 5.0);
hyperddc::StationaryModel random_stationary_model(std::mt19937_64& rng, int J, int K, double beta, double delta,
                                                  double u_range = 5.0);

/// Textbook geometric backward induction: J x K probabilities per period.
std::vector<Matrix> geometric_backward_induction(const hyperddc::FiniteModel& m, double delta);

/// Geometric stationary value iteration; returns J x K probabilities.
Matrix geometric_value_iteration(const hyperddc::StationaryModel& m, double delta, double tol = 1e-15);

struct MonteCarloCcp {
  std::vector<Matrix> p;   // per period J x K frequencies
  int draws = 0;
};

/// Sophisticated backward induction with every expectation over the shocks
/// replaced by an average over `draws` Gumbel draws per (t, x).
MonteCarloCcp monte_carlo_ccp(const hyperddc::FiniteModel& m, double beta, double delta, int draws,
                              std::uint64_t seed);

/// Term-by-term sum of c(i, j) x1^i x2^j with explicit powers.
double naive_eval(const Matrix& c, double x1, double x2);

/// f_a = a1 gamma + a0 and f_b = b2 gamma^2 + (b11 delta + b12) gamma + b0
/// for two same-period restrictions in a three-period model.
struct Example1Coefficients {
  double a0 = 0, a1 = 0, b0 = 0, b11 = 0, b12 = 0, b2 = 0;
  /// Zero of the 3x3 Sylvester determinant in delta.
  double delta_root() const;
  /// (a0 a1 b12 + a1^2 b0 + a0^2 b2) / (a0 a1 b11), the form with the b12 sign flipped.
  double printed_root() const;
};

Example1Coefficients example1_coefficients(const hyperddc::ChoiceProbabilities& s, const Transitions& q, int k,
                                            int xa1, int xa2, int xb1, int xb2);

/// Three-period closed form for the delta root of two same-period
/// restrictions: restriction a at the middle period, b at the first one.
double three_period_delta_root(const hyperddc::ChoiceProbabilities& s, const Transitions& q, int k, int xa1,
                               int xa2, int xb1, int xb2);

}  // namespace oracle
