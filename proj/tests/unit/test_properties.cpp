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

bool contains_point(const std::vector<Candidate>& cs, double beta, double delta, double tol) {
  return std::any_of(cs.begin(), cs.end(), [&](const Candidate& c) {
    return std::abs(c.beta - beta) <= tol && std::abs(c.delta - delta) <= tol;
  });
}

struct FiniteInstance {
  FiniteModel model;
  DiscountPair disc;
  std::vector<R> rs;
};

FiniteInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick_t(3, 4), pick_j(3, 4);
  std::uniform_real_distribution<double> ub(0.3, 1.0), ud(0.3, 1.5);
  const int T = pick_t(rng), J = pick_j(rng);
  FiniteModel m = oracle::random_finite_model(rng, J, T, 2, 2.0);
  std::vector<Matrix> u = m.all_utilities();
  u[0](1, T - 2) = u[0](0, T - 2);
  u[0](2, T - 3) = u[0](1, T - 3);
  std::vector<R> rs{R::same_period(0, T - 2, 0, 1), R::same_period(0, T - 3, 1, 2)};
  return {FiniteModel(T, m.transitions(), u), {ub(rng), ud(rng)}, rs};
}

}  // namespace

TEST(Properties, FiniteTruthInSetAndBounded) {
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 30; ++rep) {
    const FiniteInstance in = random_instance(rng);
    const MomentSystem ms =
        build_moment_system({solve_finite(in.model, in.disc).ccp, in.model.transitions()}, in.rs);
    const IdentifiedSet set = solve_identified_set(ms, IdentifyDomain::finite());
    EXPECT_TRUE(contains_point(set.candidates, in.disc.beta, in.disc.delta, 1e-6)) << rep;
    EXPECT_LE(static_cast<int>(set.candidates.size()), cardinality_bound(ms));
    for (const Candidate& c : set.candidates)
      for (std::size_t i = 0; i < ms.polys.size(); ++i)
        EXPECT_LE(std::abs(eval_beta_delta(ms.polys[i], c.beta, c.delta)), kMembershipTol * ms.polys[i].scale());
  }
}

TEST(Properties, FiniteResultantAgreesWithGridOracle) {
  std::mt19937_64 rng(72);
  for (int rep = 0; rep < 8; ++rep) {
    const FiniteInstance in = random_instance(rng);
    const MomentSystem ms =
        build_moment_system({solve_finite(in.model, in.disc).ccp, in.model.transitions()}, in.rs);
    const IdentifyDomain dom = IdentifyDomain::finite();
    const IdentifiedSet set = solve_identified_set(ms, dom);
    const auto grid = grid_oracle(ms, dom, 500);
    for (const Candidate& c : grid) EXPECT_TRUE(contains_point(set.candidates, c.beta, c.delta, 1e-4)) << rep;
    for (const Candidate& c : set.candidates) EXPECT_TRUE(contains_point(grid, c.beta, c.delta, 1e-4)) << rep;
  }
}

TEST(Properties, StationaryTruthInSetAndBounded) {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> ub(0.3, 1.0), ud(0.3, 0.95);
  for (int rep = 0; rep < 15; ++rep) {
    const int J = 4 + rep % 2;
    const DiscountPair d{ub(rng), ud(rng)};
    StationaryModel m = oracle::random_stationary_model(rng, J, 2, d.beta, d.delta, 2.0);
    std::vector<Vector> u = m.all_utilities();
    u[0](1) = u[0](0);
    u[0](J - 1) = u[0](2);
    m = StationaryModel(m.transitions(), u, d);
    const ChoiceData data{solve_stationary(m).primary().s_star, m.transitions()};
    const MomentSystem ms = build_moment_system(data, {R::stationary(0, 0, 1), R::stationary(0, 2, J - 1)});
    const IdentifiedSet set = solve_identified_set(ms, IdentifyDomain::stationary());
    EXPECT_TRUE(contains_point(set.candidates, d.beta, d.delta, 1e-6)) << rep;
    EXPECT_LE(static_cast<int>(set.candidates.size()), J * J);
  }
}

TEST(Properties, FiniteRecoveryRoundTrip) {
  std::mt19937_64 rng(74);
  for (int rep = 0; rep < 20; ++rep) {
    const FiniteModel m = oracle::random_finite_model(rng, 2 + rep % 4, 2 + rep % 3, 2 + rep % 3);
    const DiscountPair d{0.3 + 0.035 * rep, 0.2 + 0.06 * rep};
    const FiniteModel back = recover_utilities_finite(solve_finite(m, d).ccp, m.transitions(), d);
    for (int k = 0; k + 1 < m.choices(); ++k)
      EXPECT_LE((back.utilities(k) - m.utilities(k)).cwiseAbs().maxCoeff(), 1e-8) << rep;
  }
}

TEST(Properties, SolutionRowsOnSimplex) {
  std::mt19937_64 rng(75);
  for (int rep = 0; rep < 20; ++rep) {
    const FiniteModel m = oracle::random_finite_model(rng, 3, 4, 3, 20.0);
    const auto s = solve_finite(m, {0.5, 1.7}).ccp;
    for (int t = 0; t < 4; ++t) {
      EXPECT_LE((s.period(t).rowwise().sum().array() - 1).abs().maxCoeff(), 1e-12);
      EXPECT_TRUE((s.period(t).array() > 0).all());
    }
  }
}
