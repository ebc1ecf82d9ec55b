#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <hyperddc/stationary.hpp>

#include "oracles.hpp"

using namespace hyperddc;

TEST(Omega, DeltaZeroGivesUtilities) {
  std::mt19937_64 rng(11);
  const StationaryModel m = oracle::random_stationary_model(rng, 4, 3, 0.7, 0.0);
  const Matrix s = Matrix::Constant(4, 3, 1.0 / 3);
  const auto w = omega(ChoiceProbabilities::stationary(s), m);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(w[k], m.utility_vector(k));
}

TEST(Omega, GeometricRenewalForm) {
  std::mt19937_64 rng(12);
  const StationaryModel m = oracle::random_stationary_model(rng, 5, 2, 1.0, 0.8);
  Matrix s(5, 2);
  for (int x = 0; x < 5; ++x) s.row(x) << 0.1 + 0.1 * x, 0.9 - 0.1 * x;
  const auto w = omega(ChoiceProbabilities::stationary(s), m);
  const Vector mK = -s.col(1).array().log().matrix();
  const Matrix a = Matrix::Identity(5, 5) - 0.8 * m.transition(1);
  const Vector v = a.inverse() * mK;
  for (int k = 0; k < 2; ++k)
    EXPECT_LE((w[k] - (m.utility_vector(k) + 0.8 * m.transition(k) * v)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Omega, SingleStateScalarFormula) {
  const Matrix one = Matrix::Ones(1, 1);
  Vector u(1);
  u << 0.4;
  const StationaryModel m({one, one}, {u}, {0.6, 0.9});
  Matrix s(1, 2);
  s << 0.3, 0.7;
  const auto w = omega(ChoiceProbabilities::stationary(s), m);
  const double cont = 0.6 * 0.9 * (-std::log(0.7)) / (1 - 0.9);
  EXPECT_NEAR(w[0](0), 0.4 + cont, 1e-13);
  EXPECT_NEAR(w[1](0), cont, 1e-13);
}

TEST(PiMap, SymmetricModelKeepsUniform) {
  const Matrix q = Matrix::Constant(3, 3, 1.0 / 3);
  Vector u = Vector::Zero(3);
  const StationaryModel m({q, q, q}, {u, u}, {0.5, 0.9});
  const auto p = pi_map(ChoiceProbabilities::stationary(Matrix::Constant(3, 3, 1.0 / 3)), m);
  EXPECT_LE((p.period(0).array() - 1.0 / 3).abs().maxCoeff(), 1e-15);
}

TEST(PiMap, RowsOnSimplex) {
  std::mt19937_64 rng(13);
  const StationaryModel m = oracle::random_stationary_model(rng, 6, 4, 0.5, 0.9);
  Matrix s = Matrix::Constant(6, 4, 0.25);
  const auto p = pi_map(ChoiceProbabilities::stationary(s), m).period(0);
  EXPECT_LE((p.rowwise().sum().array() - 1).abs().maxCoeff(), 1e-12);
  EXPECT_TRUE((p.array() > 0).all());
}

TEST(SolveStationary, DeltaZeroConvergesInOneIteration) {
  std::mt19937_64 rng(14);
  const StationaryModel m = oracle::random_stationary_model(rng, 4, 3, 0.8, 0.0);
  const auto sol = solve_stationary(m);
  EXPECT_EQ(sol.primary().iterations, 1);
  for (int x = 0; x < 4; ++x) {
    RowVector u(3);
    for (int k = 0; k < 3; ++k) u(k) = m.utility(k, x);
    EXPECT_LE((sol.primary().s_star.period(0).row(x) - logit(u)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(SolveStationary, GeometricMatchesValueIteration) {
  std::mt19937_64 rng(15);
  for (int rep = 0; rep < 10; ++rep) {
    const double delta = 0.5 + 0.04 * rep;
    const StationaryModel m = oracle::random_stationary_model(rng, 5, 3, 1.0, delta);
    const auto sol = solve_stationary(m);
    const Matrix ref = oracle::geometric_value_iteration(m, delta);
    EXPECT_LE((sol.primary().s_star.period(0) - ref).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SolveStationary, ResidualAtTolerance) {
  std::mt19937_64 rng(16);
  const StationaryModel m = oracle::random_stationary_model(rng, 2, 2, 0.6, 0.9);
  const auto sol = solve_stationary(m);
  const auto& eq = sol.primary();
  const Matrix p = pi_map(eq.s_star, m).period(0);
  EXPECT_LE((p - eq.s_star.period(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SolveStationary, MultistartIsDeterministicAndSorted) {
  std::mt19937_64 rng(17);
  const StationaryModel m = oracle::random_stationary_model(rng, 4, 3, 0.5, 0.95);
  StationaryOptions opts;
  opts.n_starts = 6;
  const auto a = solve_stationary(m, opts);
  const auto b = solve_stationary(m, opts);
  ASSERT_EQ(a.fixed_points.size(), b.fixed_points.size());
  for (std::size_t i = 0; i < a.fixed_points.size(); ++i)
    EXPECT_EQ(a.fixed_points[i].s_star.period(0), b.fixed_points[i].s_star.period(0));
  EXPECT_EQ(a.starts, 6);
  EXPECT_GE(a.converged_starts, 1);
}

TEST(SolveStationary, ReportsNonConvergence) {
  std::mt19937_64 rng(18);
  const StationaryModel m = oracle::random_stationary_model(rng, 3, 2, 0.5, 0.9);
  StationaryOptions opts;
  opts.max_iter = 1;
  opts.tol = 0.0;
  EXPECT_THROW(solve_stationary(m, opts), NonConvergence);
}

TEST(SolveStationary, RejectsDeltaOne) {
  std::mt19937_64 rng(19);
  const StationaryModel m = oracle::random_stationary_model(rng, 3, 2, 0.5, 1.0);
  EXPECT_THROW(solve_stationary(m), InvalidModel);
}

TEST(RecoverStationary, RoundTrip) {
  std::mt19937_64 rng(20);
  for (int rep = 0; rep < 10; ++rep) {
    const StationaryModel m = oracle::random_stationary_model(rng, 3 + rep % 4, 2 + rep % 3, 0.3 + 0.07 * rep,
                                                              0.2 + 0.07 * rep);
    const auto sol = solve_stationary(m);
    const auto r = recover_utilities_stationary(sol.primary().s_star, m.transitions(), m.discount());
    for (int k = 0; k + 1 < m.choices(); ++k)
      EXPECT_LE((r.utility_vector(k) - m.utility_vector(k)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(RecoverStationary, UniformWithIdenticalTransitionsGivesZero) {
  const Matrix q = Matrix::Constant(3, 3, 1.0 / 3);
  const auto r = recover_utilities_stationary(ChoiceProbabilities::stationary(Matrix::Constant(3, 2, 0.5)), {q, q},
                                              {0.7, 0.9});
  EXPECT_LE(r.utility_vector(0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RecoverStationary, ForwardSolveReproducesData) {
  Matrix s(4, 3);
  s << 0.2, 0.3, 0.5, 0.6, 0.3, 0.1, 0.25, 0.25, 0.5, 0.05, 0.15, 0.8;
  std::mt19937_64 rng(21);
  Transitions q{oracle::random_stochastic(rng, 4), oracle::random_stochastic(rng, 4), oracle::random_stochastic(rng, 4)};
  const DiscountPair d{0.55, 0.85};
  const auto r = recover_utilities_stationary(ChoiceProbabilities::stationary(s), q, d);
  const Matrix p = pi_map(ChoiceProbabilities::stationary(s), r).period(0);
  EXPECT_LE((p - s).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(RecoverStationary, ZeroProbabilityRejected) {
  Matrix s(2, 2);
  s << 1.0, 0.0, 0.5, 0.5;
  const Matrix q = Matrix::Constant(2, 2, 0.5);
  EXPECT_THROW(recover_utilities_stationary(ChoiceProbabilities::stationary(s), {q, q}, {0.5, 0.5}), DomainError);
}
