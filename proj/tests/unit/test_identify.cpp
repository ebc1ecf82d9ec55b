#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <hyperddc/identify.hpp>
#include <hyperddc/stationary.hpp>

#include "oracles.hpp"

using namespace hyperddc;

namespace {

using R = ExclusionRestriction;

ChoiceData dgp_data(const DiscountPair& d) {
  const FiniteModel m = three_period_dgp();
  return {solve_finite(m, d).ccp, m.transitions()};
}

const std::vector<R> kMainPair{R::same_period(0, 1, 1, 2), R::same_period(0, 0, 0, 1)};
const std::vector<R> kLastPair{R::same_period(0, 1, 1, 2), R::same_period(0, 1, 0, 3)};

StationaryModel with_restriction(const StationaryModel& m, int x1, int x2) {
  std::vector<Vector> u = m.all_utilities();
  u[0](x2) = u[0](x1);
  return StationaryModel(m.transitions(), u, m.discount());
}

ChoiceData stationary_data(const StationaryModel& m) {
  return {solve_stationary(m).primary().s_star, m.transitions()};
}

}  // namespace

TEST(Restriction, Validation) {
  EXPECT_NO_THROW(validate_restriction(R::same_period(0, 1, 1, 2), 3, 2, 4));
  EXPECT_THROW(validate_restriction(R::same_period(0, 2, 1, 2), 3, 2, 4), DomainError);
  EXPECT_THROW(validate_restriction(R::same_period(0, 1, 2, 2), 3, 2, 4), DomainError);
  EXPECT_THROW(validate_restriction(R::same_period(1, 1, 1, 2), 3, 2, 4), DomainError);
  EXPECT_THROW(validate_restriction(R::same_period(0, 1, 1, 4), 3, 2, 4), DomainError);
  EXPECT_NO_THROW(validate_restriction(R::stationary(0, 0, 1), 0, 2, 4));
  EXPECT_THROW(validate_restriction(R::stationary(0, 0, 1), 3, 2, 4), DomainError);
}

TEST(FiniteMoment, LastRestrictionIsGammaLinear) {
  const ChoiceData data = dgp_data(three_period_discount());
  const BivariatePoly p = build_finite_moment(data, kLastPair[0]);
  EXPECT_EQ(p.degree(1), 0);
  EXPECT_LE(p.degree(0), 1);
  EXPECT_EQ(p.total_degree(), 1);
  const double contrast = log_odds(data.s, 0, 1, 1) - log_odds(data.s, 0, 1, 2);
  EXPECT_NEAR(p.coeffs()(0, 0), -contrast, 1e-14);
}

TEST(FiniteMoment, VanishesAtTruthOnBenchmark) {
  const ChoiceData data = dgp_data(three_period_discount());
  for (const R& r : kMainPair) {
    const BivariatePoly p = build_finite_moment(data, r);
    EXPECT_LE(std::abs(eval_beta_delta(p, 0.8, 0.5)), 1e-10);
  }
}

TEST(FiniteMoment, CrossPeriodVanishesAtTruth) {
  std::mt19937_64 rng(51);
  FiniteModel m = oracle::random_finite_model(rng, 3, 4, 2);
  std::vector<Matrix> u = m.all_utilities();
  u[0](2, 0) = u[0](1, 2);
  m = FiniteModel(4, m.transitions(), u);
  const DiscountPair d{0.7, 0.9};
  const ChoiceData data{solve_finite(m, d).ccp, m.transitions()};
  const BivariatePoly p = build_finite_moment(data, R::cross_period(0, 2, 1, 0, 2));
  EXPECT_LE(std::abs(eval_beta_delta(p, 0.7, 0.9)), 1e-10 * std::max(1.0, p.scale()));
}

TEST(FiniteMoment, DegreeInPeriod) {
  std::mt19937_64 rng(52);
  const FiniteModel m = oracle::random_finite_model(rng, 3, 5, 3);
  const ChoiceData data{solve_finite(m, {0.6, 0.9}).ccp, m.transitions()};
  for (int t = 0; t <= 3; ++t) EXPECT_LE(build_finite_moment(data, R::same_period(1, t, 0, 2)).total_degree(), 4 - t);
}

TEST(StationaryMoment, SingleStateHandAlgebra) {
  Matrix one = Matrix::Ones(1, 1);
  Vector m(1);
  m << 0.35;
  RowVector dq(1);
  dq << 0.2;
  const double L = -0.6;
  const BivariatePoly p = stationary_moment_from_terms(one, one, m, dq, L);
  // (1 - delta) L - gamma dq m
  EXPECT_NEAR(p.coeffs()(0, 0), L, 1e-12);
  EXPECT_NEAR(p.coeffs()(0, 1), -L, 1e-12);
  EXPECT_NEAR(p.coeffs()(1, 0), -0.2 * 0.35, 1e-12);
  EXPECT_EQ(p.total_degree(), 1);
}

TEST(StationaryMoment, BetaOneSliceIsGeometricMoment) {
  std::mt19937_64 rng(53);
  const StationaryModel m = with_restriction(oracle::random_stationary_model(rng, 4, 3, 0.6, 0.8), 0, 2);
  const ChoiceData data = stationary_data(m);
  const R r = R::stationary(0, 0, 2);
  const BivariatePoly p = build_stationary_moment(data, r);
  const Matrix& s = data.s.period(0);
  const Vector mk = -s.col(2).array().log().matrix();
  const RowVector dq = (data.q[0].row(0) - data.q[2].row(0)) - (data.q[0].row(2) - data.q[2].row(2));
  const double L = log_odds(data.s, 0, 0, 0) - log_odds(data.s, 0, 0, 2);
  for (double delta : {0.1, 0.45, 0.8, 0.97}) {
    const Matrix b = Matrix::Identity(4, 4) - delta * data.q[2];
    const double det = b.determinant();
    const double geo = det * L - delta * dq * (det * b.inverse() * mk);
    EXPECT_NEAR(eval_beta_delta(p, 1.0, delta), geo, 1e-8 * std::max(1.0, p.scale()));
  }
}

TEST(StationaryMoment, VanishesAtTruth) {
  std::mt19937_64 rng(54);
  for (int rep = 0; rep < 5; ++rep) {
    const double beta = 0.5 + 0.1 * rep, delta = 0.6 + 0.05 * rep;
    const StationaryModel m =
        with_restriction(oracle::random_stationary_model(rng, 3 + rep % 3, 2 + rep % 2, beta, delta), 0, 1);
    const BivariatePoly p = build_stationary_moment(stationary_data(m), R::stationary(0, 0, 1));
    EXPECT_LE(std::abs(eval_beta_delta(p, beta, delta)), 1e-8 * std::max(1.0, p.scale()));
  }
}

TEST(StationaryMoment, InterpolationMatchesDirectLinearAlgebra) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const int J = 2 + rep % 5;
    const Matrix qbar = oracle::random_stochastic(rng, J), qk = oracle::random_stochastic(rng, J);
    Vector m(J);
    for (int i = 0; i < J; ++i) m(i) = 0.1 + 2 * u(rng);
    const RowVector dq = oracle::random_stochastic(rng, J).row(0) - oracle::random_stochastic(rng, J).row(0);
    const double L = u(rng) - 0.5;
    const BivariatePoly p = stationary_moment_from_terms(qbar, qk, m, dq, L);
    EXPECT_LE(p.total_degree(), J);
    for (int k = 0; k < 5; ++k) {
      const double g = u(rng), d = u(rng);
      const double direct = stationary_moment_direct(qbar, qk, m, dq, L, g, d);
      EXPECT_LE(std::abs(p(g, d) - direct), 1e-8 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(ToBetaDelta, Substitution) {
  std::mt19937_64 rng(56);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd c(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = u(rng);
  const BivariatePoly p(c, kGammaDelta);
  const BivariatePoly q = to_beta_delta(p);
  EXPECT_EQ(q.vars(), kBetaDelta);
  for (int k = 0; k < 5; ++k) {
    const double b = u(rng), d = u(rng);
    EXPECT_NEAR(q(b, d), p(b * d, d), 1e-13);
    EXPECT_NEAR(eval_beta_delta(p, b, d), p(b * d, d), 1e-13);
  }
}

TEST(IdentifiedSet, BenchmarkSingleton) {
  const MomentSystem ms = build_moment_system(dgp_data(three_period_discount()), kMainPair);
  const IdentifiedSet set = solve_identified_set(ms, IdentifyDomain::finite());
  ASSERT_EQ(set.candidates.size(), 1u);
  EXPECT_NEAR(set.candidates[0].beta, 0.8, 1e-6);
  EXPECT_NEAR(set.candidates[0].delta, 0.5, 1e-6);
  EXPECT_FALSE(set.common_factor_detected);
  EXPECT_FALSE(set.empty_model_rejected);
  EXPECT_EQ(set.bezout_bound, 2);
  const auto oracle = grid_oracle(ms, IdentifyDomain::finite(), 400);
  ASSERT_EQ(oracle.size(), 1u);
  EXPECT_NEAR(oracle[0].beta, 0.8, 1e-4);
  EXPECT_NEAR(oracle[0].delta, 0.5, 1e-4);
}

TEST(IdentifiedSet, LastPeriodPairOnlyPinsProduct) {
  const MomentSystem ms = build_moment_system(dgp_data(three_period_discount()), kLastPair);
  const IdentifiedSet set = solve_identified_set(ms, IdentifyDomain::finite());
  EXPECT_TRUE(set.common_factor_detected);
  EXPECT_TRUE(set.candidates.empty());
  ASSERT_TRUE(set.identified_product.has_value());
  EXPECT_NEAR(*set.identified_product, 0.40, 1e-8);
}

TEST(IdentifiedSet, ShiftedLogOddsRejectsModel) {
  MomentSystem ms = build_moment_system(dgp_data(three_period_discount()), kMainPair);
  ms.polys[0] = ms.polys[0] - BivariatePoly::constant(10.0, kGammaDelta);
  const IdentifiedSet set = solve_identified_set(ms, IdentifyDomain::finite());
  EXPECT_TRUE(set.candidates.empty());
  EXPECT_TRUE(set.empty_model_rejected);
  EXPECT_TRUE(grid_oracle(ms, IdentifyDomain::finite(), 400).empty());
}

TEST(IdentifiedSet, ZeroMomentsReportedDegenerate) {
  MomentSystem ms = build_moment_system(dgp_data(three_period_discount()), kMainPair);
  ms.polys[0] = BivariatePoly::constant(0.0, kGammaDelta);
  ms.polys[1] = BivariatePoly::constant(0.0, kGammaDelta);
  const IdentifiedSet set = solve_identified_set(ms, IdentifyDomain::finite());
  EXPECT_TRUE(set.degenerate);
  EXPECT_FALSE(set.warnings.empty());
}

TEST(IdentifiedSet, StationaryConstantUtilityIsDegenerate) {
  std::mt19937_64 rng(57);
  const StationaryModel m =
      with_restriction(with_restriction(oracle::random_stationary_model(rng, 3, 2, 0.6, 0.7, 3.0), 0, 1), 1, 2);
  const MomentSystem ms = build_moment_system(stationary_data(m), {R::stationary(0, 0, 1), R::stationary(0, 1, 2)});
  EXPECT_TRUE(ms.polys[0].is_zero());
  EXPECT_TRUE(ms.polys[1].is_zero());
  EXPECT_TRUE(solve_identified_set(ms, IdentifyDomain::stationary()).degenerate);
}

TEST(IdentifiedSet, ThirdRestrictionFilters) {
  const ChoiceData data = dgp_data(three_period_discount());
  std::vector<R> rs = kMainPair;
  rs.push_back(kLastPair[1]);
  const IdentifiedSet ok = solve_identified_set(build_moment_system(data, rs), IdentifyDomain::finite());
  ASSERT_EQ(ok.candidates.size(), 1u);
  EXPECT_EQ(ok.candidates[0].residuals.size(), 3u);
  MomentSystem bad = build_moment_system(data, rs);
  bad.polys[2] = bad.polys[2] - BivariatePoly::constant(1.0, kGammaDelta);
  EXPECT_TRUE(solve_identified_set(bad, IdentifyDomain::finite()).empty_model_rejected);
}

TEST(IdentifiedSet, ClosedFormDeltaRoot) {
  std::mt19937_64 rng(57);
  for (int rep = 0; rep < 10; ++rep) {
    FiniteModel m = oracle::random_finite_model(rng, 4, 3, 2, 2.0);
    std::vector<Matrix> u = m.all_utilities();
    u[0](2, 1) = u[0](1, 1);
    u[0](1, 0) = u[0](0, 0);
    m = FiniteModel(3, m.transitions(), u);
    const DiscountPair d{0.4 + 0.05 * rep, 0.3 + 0.1 * rep};
    const ChoiceData data{solve_finite(m, d).ccp, m.transitions()};
    const double closed = oracle::three_period_delta_root(data.s, data.q, 0, 1, 2, 0, 1);
    EXPECT_NEAR(closed, d.delta, 1e-10);
    const IdentifiedSet set = solve_identified_set(build_moment_system(data, kMainPair), IdentifyDomain::finite());
    EXPECT_TRUE(std::any_of(set.delta_roots.begin(), set.delta_roots.end(),
                            [&](double r) { return std::abs(r - closed) < 1e-10; }))
        << rep;
  }
}

TEST(Geometric, ContainsTrueDelta) {
  const ChoiceData data = dgp_data({1.0, 0.6});
  for (const R& r : kMainPair) {
    const GeometricSet g = geometric_identified_set(data, r, IdentifyDomain::finite());
    EXPECT_TRUE(std::any_of(g.deltas.begin(), g.deltas.end(), [](double d) { return std::abs(d - 0.6) < 1e-8; }));
  }
}

TEST(Geometric, LastPeriodRootIsProduct) {
  const GeometricSet g = geometric_identified_set(dgp_data(three_period_discount()), kLastPair[0],
                                                  IdentifyDomain::finite());
  ASSERT_EQ(g.deltas.size(), 1u);
  EXPECT_NEAR(g.deltas[0], 0.40, 1e-8);
}

TEST(Geometric, StationaryRootCountBounded) {
  std::mt19937_64 rng(58);
  for (int rep = 0; rep < 10; ++rep) {
    const int J = 2 + rep % 4;
    const StationaryModel m = with_restriction(oracle::random_stationary_model(rng, J, 2, 0.7, 0.85), 0, 1);
    const GeometricSet g = geometric_identified_set(stationary_data(m), R::stationary(0, 0, 1),
                                                    IdentifyDomain::stationary());
    EXPECT_LE(static_cast<int>(g.deltas.size()), J);
  }
}

TEST(Geometric, ZeroMomentSignalsNonidentification) {
  const Matrix q = Matrix::Constant(2, 2, 0.5);
  const ChoiceData data{ChoiceProbabilities::stationary(Matrix::Constant(2, 2, 0.5)), {q, q}};
  EXPECT_TRUE(geometric_identified_set(data, R::stationary(0, 0, 1), IdentifyDomain::stationary()).nonidentified);
}

namespace {

// Four brand prices (two levels each) and a loyalty state over brands 0..3
// plus "none"; choice 4 is the outside option.
StateStructure brand_structure() {
  StateStructure st;
  for (int b = 0; b < 4; ++b) st.factors.push_back({"price" + std::to_string(b), 2, false});
  st.factors.push_back({"loyalty", 5, true});
  st.choices = 5;
  for (int k = 0; k < 4; ++k) st.utility_factors.push_back({k, 4});
  return st;
}

bool has_pair(const std::vector<R>& rs, const R& r) {
  return std::find(rs.begin(), rs.end(), r) != rs.end() ||
         std::find(rs.begin(), rs.end(), R::stationary(r.choice, r.state2, r.state1)) != rs.end();
}

}  // namespace

TEST(EnumeratePairs, StateCoding) {
  const StateStructure st = brand_structure();
  EXPECT_EQ(st.state_count(), 16 * 5);
  for (int x = 0; x < st.state_count(); ++x) EXPECT_EQ(st.encode(st.decode(x)), x);
  EXPECT_EQ(st.decode(1), (std::vector<int>{0, 0, 0, 0, 1}));
}

TEST(EnumeratePairs, RivalPriceShiftIncluded) {
  const StateStructure st = brand_structure();
  const auto rs = enumerate_exclusion_pairs(st);
  // Choice 0, loyalty to brand 2, rival price 1 moves.
  const int x1 = st.encode({0, 0, 1, 0, 2}), x2 = st.encode({0, 1, 1, 0, 2});
  EXPECT_TRUE(has_pair(rs, R::stationary(0, x1, x2)));
  for (const R& r : rs) {
    const auto a = st.decode(r.state1), b = st.decode(r.state2);
    EXPECT_EQ(a[r.choice], b[r.choice]);
    EXPECT_EQ(a[4], b[4]);
  }
}

TEST(EnumeratePairs, OwnLoyaltyExcluded) {
  const StateStructure st = brand_structure();
  const auto rs = enumerate_exclusion_pairs(st);
  const int x1 = st.encode({0, 0, 1, 0, 0}), x2 = st.encode({0, 1, 1, 0, 0});
  EXPECT_FALSE(has_pair(rs, R::stationary(0, x1, x2)));
  for (const R& r : rs) EXPECT_NE(st.decode(r.state1)[4], r.choice);
}

TEST(EnumeratePairs, DenseUtilitiesGiveNothing) {
  StateStructure st = brand_structure();
  for (auto& f : st.utility_factors) f = {0, 1, 2, 3, 4};
  EXPECT_TRUE(enumerate_exclusion_pairs(st).empty());
}

TEST(EnumeratePairs, NumericTransitionsFilter) {
  StateStructure st;
  st.factors = {{"a", 2, false}, {"b", 2, false}};
  st.choices = 2;
  st.utility_factors = {{0}};
  const Matrix same = Matrix::Constant(4, 4, 0.25);
  st.transitions = Transitions{same, same};
  EXPECT_TRUE(enumerate_exclusion_pairs(st).empty());
  Matrix moved = same;
  moved.row(1) << 0.7, 0.1, 0.1, 0.1;
  st.transitions = Transitions{moved, same};
  const auto rs = enumerate_exclusion_pairs(st);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0], R::stationary(0, 0, 1));
}
