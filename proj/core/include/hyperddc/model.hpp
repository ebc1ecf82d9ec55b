#pragma once

// Finite-horizon dynamic discrete choice with sophisticated quasi-hyperbolic
// discounting: model primitives, the backward-induction solver, CCP inversion
// and constructive utility recovery.
//
// Indexing is 0-based throughout. Choice K-1 is the reference choice whose
// flow utility is normalized to zero and never stored.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hyperddc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// One J x J row-stochastic matrix per choice; the last one belongs to the
/// reference choice.
using Transitions = std::vector<Matrix>;

/// Probabilities below this are treated as zero by every operation that takes
/// choice probabilities as data. They are rejected, never clamped.
inline constexpr double kProbabilityFloor = 1e-300;

/// Tolerance for row sums of stochastic matrices and CCP rows.
inline constexpr double kStochasticTol = 1e-12;

/// Raised when an input lies outside the domain of an operation (zero or
/// missing probabilities, non-finite utilities, out-of-range indices).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a model fails validation before solving.
class InvalidModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DiscountPair {
  double beta = 1.0;   // present-bias factor, (0, 1]
  double delta = 0.0;  // standard discount factor, >= 0 (< 1 when stationary)

  double gamma() const { return beta * delta; }
};

class FiniteModel {
 public:
  /// `utilities[k]` is a J x T matrix (rows are states, columns periods) for
  /// each non-reference choice k = 0..K-2.
  FiniteModel(int horizon, Transitions transitions, std::vector<Matrix> utilities);

  int horizon() const { return horizon_; }
  int choices() const { return static_cast<int>(transitions_.size()); }
  int states() const { return static_cast<int>(transitions_.front().rows()); }
  int reference() const { return choices() - 1; }

  /// u_{k,t}(x); zero for the reference choice.
  double utility(int k, int t, int x) const;
  const Matrix& utilities(int k) const { return utilities_.at(k); }
  const std::vector<Matrix>& all_utilities() const { return utilities_; }
  const Transitions& transitions() const { return transitions_; }
  const Matrix& transition(int k) const { return transitions_.at(k); }

 private:
  int horizon_;
  Transitions transitions_;
  std::vector<Matrix> utilities_;
};

class StationaryModel {
 public:
  /// `utilities[k]` is a J-vector for each non-reference choice.
  StationaryModel(Transitions transitions, std::vector<Vector> utilities, DiscountPair discount);

  int choices() const { return static_cast<int>(transitions_.size()); }
  int states() const { return static_cast<int>(transitions_.front().rows()); }
  int reference() const { return choices() - 1; }

  double utility(int k, int x) const;
  /// J-vector of flow utilities for choice k (zeros for the reference choice).
  Vector utility_vector(int k) const;
  const std::vector<Vector>& all_utilities() const { return utilities_; }
  const Transitions& transitions() const { return transitions_; }
  const Matrix& transition(int k) const { return transitions_.at(k); }
  const DiscountPair& discount() const { return discount_; }

 private:
  Transitions transitions_;
  std::vector<Vector> utilities_;
  DiscountPair discount_;
};

/// Conditional choice probabilities. Each period holds a J x K matrix whose
/// rows are states and columns choices. The stationary case has exactly one
/// period and ignores the period argument.
class ChoiceProbabilities {
 public:
  ChoiceProbabilities() = default;
  static ChoiceProbabilities finite(std::vector<Matrix> by_period);
  static ChoiceProbabilities stationary(Matrix probabilities);

  bool is_stationary() const { return stationary_; }
  int periods() const { return static_cast<int>(by_period_.size()); }
  int states() const { return static_cast<int>(by_period_.front().rows()); }
  int choices() const { return static_cast<int>(by_period_.front().cols()); }
  int reference() const { return choices() - 1; }

  double operator()(int k, int t, int x) const { return period(t)(x, k); }
  const Matrix& period(int t) const { return by_period_.at(stationary_ ? 0 : t); }
  const std::vector<Matrix>& all_periods() const { return by_period_; }

 private:
  std::vector<Matrix> by_period_;
  bool stationary_ = false;
};

/// w[k] is J x T (current choice-specific values), v is J x T (perceived
/// long-run values). Stationary bundles have a single column.
struct ValueBundle {
  std::vector<Matrix> w;
  Matrix v;
};

struct FiniteSolution {
  ChoiceProbabilities ccp;
  ValueBundle values;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_discount(const DiscountPair& disc, bool stationary);
ValidationReport validate_model(const FiniteModel& model,
                                std::optional<DiscountPair> disc = std::nullopt);
ValidationReport validate_model(const StationaryModel& model);
ValidationReport validate_transitions(const Transitions& transitions);

/// Logit probabilities of a value vector, computed with the max subtracted.
RowVector logit(const RowVector& values);
double log_sum_exp(const RowVector& values);

/// Backward induction for the perception-perfect equilibrium.
FiniteSolution solve_finite(const FiniteModel& model, const DiscountPair& disc);

/// ln(s_k / s_K) at (t, x).
double log_odds(const ChoiceProbabilities& s, int k, int t, int x);

/// McFadden surplus m_t(x) = -ln s_{K,t}(x) for every state.
Vector surplus(const ChoiceProbabilities& s, int t);

/// Behavior-weighted transition: row x is sum_k s_t(x,k) Q_k(x).
Matrix mean_transition(const Matrix& s_t, const Transitions& transitions);

/// Q^pb_t(beta) = beta Q_K + (1 - beta) Qbar_t.
Matrix pb_transition(double beta, const Matrix& s_t, const Transitions& transitions);

/// Perceived long-run values implied by data and (beta, delta) alone.
/// Column t holds v_t for t = 0..T-1; column 0 is included for completeness.
Matrix perceived_values_from_data(const ChoiceProbabilities& s, const Transitions& transitions,
                                  const DiscountPair& disc);

/// The unique utilities that rationalize `s` at the given discount factors.
FiniteModel recover_utilities_finite(const ChoiceProbabilities& s, const Transitions& transitions,
                                     const DiscountPair& disc);

/// Throws DomainError unless every entry exceeds the probability floor.
void require_positive(const ChoiceProbabilities& s);

/// The three-period, six-state binary-choice benchmark DGP. Its transition
/// rows are published to two decimals and are divided by their row sums.
FiniteModel three_period_dgp();
DiscountPair three_period_discount();

}  // namespace hyperddc
