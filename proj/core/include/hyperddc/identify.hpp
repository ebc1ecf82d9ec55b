#pragma once

// Moment-condition polynomials built from choice data plus exclusion
// restrictions, and enumeration of the identified set of (beta, delta).
//
// Moment polynomials live in the coordinates (gamma, delta) with
// gamma = beta * delta. In these coordinates a finite-horizon restriction at
// period t yields total degree T - t and a stationary restriction total
// degree J, so the Bezout bound of two moments equals the cardinality bound
// of the identified set.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hyperddc/model.hpp"
#include "hyperddc/polynomial.hpp"

namespace hyperddc {

inline const BivariatePoly::Labels kGammaDelta{"gamma", "delta"};
inline const BivariatePoly::Labels kBetaDelta{"beta", "delta"};

/// u_{k,t1}(x1) = u_{k,t2}(x2). Stationary restrictions carry period -1.
struct ExclusionRestriction {
  int choice = 0;
  int period1 = -1;
  int state1 = 0;
  int period2 = -1;
  int state2 = 0;

  bool is_stationary() const { return period1 < 0; }

  static ExclusionRestriction same_period(int k, int t, int x1, int x2) { return {k, t, x1, t, x2}; }
  static ExclusionRestriction cross_period(int k, int t1, int x1, int t2, int x2) {
    return {k, t1, x1, t2, x2};
  }
  static ExclusionRestriction stationary(int k, int x1, int x2) { return {k, -1, x1, -1, x2}; }

  friend bool operator==(const ExclusionRestriction&, const ExclusionRestriction&) = default;
};

/// Throws DomainError when indices are out of range or the two points
/// coincide. Finite restrictions must sit strictly before the last period.
void validate_restriction(const ExclusionRestriction& r, int horizon, int choices, int states);

/// Observed choice and transition probabilities.
struct ChoiceData {
  ChoiceProbabilities s;
  Transitions q;
};

/// gamma * [dQ(x1) V_{t1+1} - dQ(x2) V_{t2+1}] - (log-odds contrast), in
/// (gamma, delta). The constant term is minus the log-odds contrast.
BivariatePoly build_finite_moment(const ChoiceData& data, const ExclusionRestriction& r);

/// |A| * (log-odds contrast) - gamma * d2Q * adj(A) * m, in (gamma, delta),
/// interpolated on a (J+1) x (J+1) Chebyshev tensor grid.
BivariatePoly build_stationary_moment(const ChoiceData& data, const ExclusionRestriction& r);

/// The stationary moment from its raw ingredients: Qbar, Q_K, m = -ln s_K,
/// the transition contrast row and the log-odds contrast.
BivariatePoly stationary_moment_from_terms(const Matrix& qbar, const Matrix& q_ref, const Vector& m,
                                           const RowVector& dq, double log_odds_contrast);

/// Value of the stationary moment at (gamma, delta) by direct linear algebra.
double stationary_moment_direct(const Matrix& qbar, const Matrix& q_ref, const Vector& m,
                                const RowVector& dq, double log_odds_contrast, double gamma,
                                double delta);

/// Rewrites a (gamma, delta) polynomial in (beta, delta).
BivariatePoly to_beta_delta(const BivariatePoly& p);

/// p(beta * delta, delta) at a (beta, delta) point.
double eval_beta_delta(const BivariatePoly& p, double beta, double delta);

struct MomentSystem {
  std::vector<BivariatePoly> polys;
  std::vector<ExclusionRestriction> restrictions;
  bool stationary = false;
  int horizon = 0;  // 0 when stationary
  int states = 0;
  std::string provenance;
};

MomentSystem build_moment_system(const ChoiceData& data, const std::vector<ExclusionRestriction>& rs,
                                 std::string provenance = {});

/// Search box. beta ranges over (beta_lo, beta_hi], delta over (delta_lo, delta_hi].
struct IdentifyDomain {
  double beta_lo = 0.0;
  double beta_hi = 1.0;
  double delta_lo = 0.0;
  double delta_hi = 2.0;

  static IdentifyDomain finite(double delta_max = 2.0) { return {0.0, 1.0, 0.0, delta_max}; }
  static IdentifyDomain stationary() { return {0.0, 1.0, 0.0, 1.0 - 1e-6}; }
  bool contains(double beta, double delta, double tol = 1e-9) const;
};

struct Candidate {
  double beta = 0.0;
  double delta = 0.0;
  std::vector<double> residuals;  // one per moment polynomial

  double gamma() const { return beta * delta; }
};

struct IdentifiedSet {
  std::vector<Candidate> candidates;
  int bezout_bound = 0;
  bool empty_model_rejected = false;
  bool common_factor_detected = false;
  bool degenerate = false;
  /// gamma = beta * delta when a common factor leaves only the product pinned.
  std::optional<double> identified_product;
  /// Resultant of the first two moments with gamma eliminated, in delta.
  UnivariatePoly resultant;
  std::vector<double> delta_roots;
  std::vector<std::string> warnings;
};

/// Membership tolerance: |p| <= kMembershipTol * (coefficient scale of p).
inline constexpr double kMembershipTol = 1e-6;

/// Cardinality bound of the identified set for the first two restrictions.
int cardinality_bound(const MomentSystem& ms);

IdentifiedSet solve_identified_set(const MomentSystem& ms, const IdentifyDomain& domain);

/// Independent check of solve_identified_set: lattice search for local minima
/// of the largest scaled residual followed by Newton polishing.
std::vector<Candidate> grid_oracle(const MomentSystem& ms, const IdentifyDomain& domain, int grid_n);

struct GeometricSet {
  std::vector<double> deltas;
  bool nonidentified = false;  // the beta = 1 slice vanishes identically
};

/// Roots in delta of the beta = 1 slice of the restriction's moment.
GeometricSet geometric_identified_set(const ChoiceData& data, const ExclusionRestriction& r,
                                      const IdentifyDomain& domain);

/// Product state space: one factor per state component. State indices are
/// mixed-radix with the last factor varying fastest.
struct StateFactor {
  std::string name;
  int levels = 1;
  bool controlled = false;  // moved by choices; otherwise exogenous
};

struct StateStructure {
  std::vector<StateFactor> factors;
  int choices = 2;  // K, reference is K-1
  /// utility_factors[k]: factors that u_k depends on, k = 0..K-2.
  std::vector<std::vector<int>> utility_factors;
  /// Next level of a controlled factor given (choice, factor index, level).
  /// Defaults to the loyalty rule: an inside choice k sets the level to k,
  /// the reference choice keeps it.
  std::function<int(int, int, int)> controlled_next;
  /// When set, d2Q_k != 0 is checked on these matrices instead of the
  /// structural rule.
  std::optional<Transitions> transitions;

  int state_count() const;
  std::vector<int> decode(int state) const;
  int encode(const std::vector<int>& levels) const;
};

/// State pairs that satisfy the exclusion restriction for some choice k and
/// the necessary nonzero condition d2Q_k != 0.
std::vector<ExclusionRestriction> enumerate_exclusion_pairs(const StateStructure& structure);

}  // namespace hyperddc
