#include "hyperddc/model.hpp"

#include <cmath>
#include <sstream>

namespace hyperddc {

namespace {

std::string str(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_square_family(const Transitions& transitions) {
  if (transitions.size() < 2) throw std::invalid_argument("need at least two choices");
  const auto J = transitions.front().rows();
  if (J < 1) throw std::invalid_argument("need at least one state");
  for (const auto& q : transitions) {
    if (q.rows() != J || q.cols() != J)
      throw std::invalid_argument("every transition matrix must be J x J");
  }
}

}  // namespace

FiniteModel::FiniteModel(int horizon, Transitions transitions, std::vector<Matrix> utilities)
    : horizon_(horizon), transitions_(std::move(transitions)), utilities_(std::move(utilities)) {
  check_square_family(transitions_);
  if (utilities_.size() + 1 != transitions_.size())
    throw std::invalid_argument("utilities must be given for every non-reference choice");
  for (const auto& u : utilities_) {
    if (u.rows() != states() || u.cols() != horizon_)
      throw std::invalid_argument("utility block must be J x T");
  }
}

double FiniteModel::utility(int k, int t, int x) const {
  if (k == reference()) return 0.0;
  return utilities_.at(k)(x, t);
}

StationaryModel::StationaryModel(Transitions transitions, std::vector<Vector> utilities,
                                 DiscountPair discount)
    : transitions_(std::move(transitions)), utilities_(std::move(utilities)), discount_(discount) {
  check_square_family(transitions_);
  if (utilities_.size() + 1 != transitions_.size())
    throw std::invalid_argument("utilities must be given for every non-reference choice");
  for (const auto& u : utilities_) {
    if (u.size() != states()) throw std::invalid_argument("utility vector must have J entries");
  }
}

double StationaryModel::utility(int k, int x) const {
  if (k == reference()) return 0.0;
  return utilities_.at(k)(x);
}

Vector StationaryModel::utility_vector(int k) const {
  if (k == reference()) return Vector::Zero(states());
  return utilities_.at(k);
}

ChoiceProbabilities ChoiceProbabilities::finite(std::vector<Matrix> by_period) {
  if (by_period.empty()) throw std::invalid_argument("no periods");
  for (const auto& p : by_period) {
    if (p.rows() != by_period.front().rows() || p.cols() != by_period.front().cols())
      throw std::invalid_argument("inconsistent CCP period shapes");
  }
  ChoiceProbabilities s;
  s.by_period_ = std::move(by_period);
  s.stationary_ = false;
  return s;
}

ChoiceProbabilities ChoiceProbabilities::stationary(Matrix probabilities) {
  ChoiceProbabilities s;
  s.by_period_.push_back(std::move(probabilities));
  s.stationary_ = true;
  return s;
}

ValidationReport validate_discount(const DiscountPair& disc, bool stationary) {
  ValidationReport r;
  if (!std::isfinite(disc.beta) || disc.beta <= 0.0 || disc.beta > 1.0)
    r.violations.push_back("beta = " + str(disc.beta) +
                           " outside (0, 1]; present bias must stay bounded away from zero");
  if (!std::isfinite(disc.delta) || disc.delta < 0.0)
    r.violations.push_back("delta = " + str(disc.delta) + " must be finite and non-negative");
  else if (stationary && disc.delta >= 1.0)
    r.violations.push_back("delta = " + str(disc.delta) + " must be < 1 for a stationary model");
  return r;
}

ValidationReport validate_transitions(const Transitions& transitions) {
  ValidationReport r;
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    const Matrix& q = transitions[k];
    for (Eigen::Index x = 0; x < q.rows(); ++x) {
      bool finite_nonneg = true;
      for (Eigen::Index y = 0; y < q.cols(); ++y) {
        if (!std::isfinite(q(x, y)) || q(x, y) < 0.0) finite_nonneg = false;
      }
      if (!finite_nonneg) {
        r.violations.push_back("transition " + std::to_string(k) + " row " + std::to_string(x) +
                               " has a negative or non-finite entry");
        continue;
      }
      const double sum = q.row(x).sum();
      if (std::abs(sum - 1.0) > kStochasticTol)
        r.violations.push_back("transition " + std::to_string(k) + " row " + std::to_string(x) +
                               " sums to " + str(sum) + ", not 1");
    }
  }
  return r;
}

ValidationReport validate_model(const FiniteModel& model, std::optional<DiscountPair> disc) {
  ValidationReport r;
  if (model.horizon() < 2) r.violations.push_back("horizon must be at least 2");
  auto tr = validate_transitions(model.transitions());
  r.violations.insert(r.violations.end(), tr.violations.begin(), tr.violations.end());
  for (int k = 0; k + 1 < model.choices(); ++k) {
    if (!model.utilities(k).allFinite())
      r.violations.push_back("utilities of choice " + std::to_string(k) + " are not finite");
  }
  if (disc) {
    auto dr = validate_discount(*disc, false);
    r.violations.insert(r.violations.end(), dr.violations.begin(), dr.violations.end());
  }
  return r;
}

ValidationReport validate_model(const StationaryModel& model) {
  ValidationReport r = validate_transitions(model.transitions());
  for (int k = 0; k + 1 < model.choices(); ++k) {
    if (!model.all_utilities()[k].allFinite())
      r.violations.push_back("utilities of choice " + std::to_string(k) + " are not finite");
  }
  auto dr = validate_discount(model.discount(), true);
  r.violations.insert(r.violations.end(), dr.violations.begin(), dr.violations.end());
  return r;
}

double log_sum_exp(const RowVector& values) {
  const double mx = values.maxCoeff();
  return mx + std::log((values.array() - mx).exp().sum());
}

RowVector logit(const RowVector& values) {
  const double mx = values.maxCoeff();
  RowVector e = (values.array() - mx).exp().matrix();
  return e / e.sum();
}

FiniteSolution solve_finite(const FiniteModel& model, const DiscountPair& disc) {
  if (auto rep = validate_model(model, disc); !rep.ok())
    throw InvalidModel("solve_finite: " + rep.violations.front());

  const int T = model.horizon();
  const int K = model.choices();
  const int J = model.states();
  const double gamma = disc.gamma();

  std::vector<Matrix> probs(T, Matrix(J, K));
  ValueBundle values;
  values.w.assign(K, Matrix(J, T));
  values.v = Matrix(J, T);

  Vector v_next = Vector::Zero(J);
  for (int t = T - 1; t >= 0; --t) {
    const bool last = (t == T - 1);
    for (int k = 0; k < K; ++k) {
      Vector w = Vector::Zero(J);
      if (k != model.reference()) w = model.utilities(k).col(t);
      if (!last) w += gamma * model.transition(k) * v_next;
      values.w[k].col(t) = w;
    }
    Vector emax(J);
    for (int x = 0; x < J; ++x) {
      RowVector row(K);
      for (int k = 0; k < K; ++k) row(k) = values.w[k](x, t);
      const double lse = log_sum_exp(row);
      emax(x) = lse;
      probs[t].row(x) = (row.array() - lse).exp().matrix();
    }
    Vector v = emax;
    if (!last) v += disc.delta * (1.0 - disc.beta) * (mean_transition(probs[t], model.transitions()) * v_next);
    values.v.col(t) = v;
    v_next = v;
  }
  return {ChoiceProbabilities::finite(std::move(probs)), std::move(values)};
}

namespace {

double checked_probability(const ChoiceProbabilities& s, int k, int t, int x) {
  if (k < 0 || k >= s.choices() || x < 0 || x >= s.states() ||
      (!s.is_stationary() && (t < 0 || t >= s.periods())))
    throw DomainError("choice probability index out of range");
  const double p = s(k, t, x);
  if (!(p > kProbabilityFloor))
    throw DomainError("choice probability at (choice " + std::to_string(k) + ", period " +
                      std::to_string(t) + ", state " + std::to_string(x) +
                      ") is zero or missing");
  return p;
}

}  // namespace

void require_positive(const ChoiceProbabilities& s) {
  for (int t = 0; t < s.periods(); ++t)
    for (int x = 0; x < s.states(); ++x)
      for (int k = 0; k < s.choices(); ++k) checked_probability(s, k, t, x);
}

double log_odds(const ChoiceProbabilities& s, int k, int t, int x) {
  const double pk = checked_probability(s, k, t, x);
  const double pK = checked_probability(s, s.reference(), t, x);
  return std::log(pk) - std::log(pK);
}

Vector surplus(const ChoiceProbabilities& s, int t) {
  Vector m(s.states());
  for (int x = 0; x < s.states(); ++x) m(x) = -std::log(checked_probability(s, s.reference(), t, x));
  return m;
}

Matrix mean_transition(const Matrix& s_t, const Transitions& transitions) {
  const auto J = transitions.front().rows();
  Matrix qbar = Matrix::Zero(J, J);
  for (std::size_t k = 0; k < transitions.size(); ++k)
    qbar += s_t.col(static_cast<Eigen::Index>(k)).asDiagonal() * transitions[k];
  return qbar;
}

Matrix pb_transition(double beta, const Matrix& s_t, const Transitions& transitions) {
  return beta * transitions.back() + (1.0 - beta) * mean_transition(s_t, transitions);
}

Matrix perceived_values_from_data(const ChoiceProbabilities& s, const Transitions& transitions,
                                  const DiscountPair& disc) {
  const int T = s.periods();
  const int J = s.states();
  std::vector<Vector> m(T);
  std::vector<Matrix> qpb(T);
  for (int t = 0; t < T; ++t) {
    m[t] = surplus(s, t);
    qpb[t] = pb_transition(disc.beta, s.period(t), transitions);
  }
  Matrix v(J, T);
  for (int a = 0; a < T; ++a) {
    Vector acc = m[a];
    Matrix product = Matrix::Identity(J, J);
    double weight = 1.0;
    for (int tau = a + 1; tau < T; ++tau) {
      product = product * qpb[tau - 1];
      weight *= disc.delta;
      acc += weight * (product * m[tau]);
    }
    v.col(a) = acc;
  }
  return v;
}

FiniteModel recover_utilities_finite(const ChoiceProbabilities& s, const Transitions& transitions,
                                     const DiscountPair& disc) {
  require_positive(s);
  const int T = s.periods();
  const int K = s.choices();
  const int J = s.states();
  const Matrix v = perceived_values_from_data(s, transitions, disc);
  const Matrix& qK = transitions.back();
  std::vector<Matrix> utilities(K - 1, Matrix(J, T));
  for (int k = 0; k + 1 < K; ++k) {
    const Matrix dq = transitions[k] - qK;
    for (int t = 0; t < T; ++t) {
      for (int x = 0; x < J; ++x) {
        double u = log_odds(s, k, t, x);
        if (t + 1 < T) u -= disc.gamma() * dq.row(x).dot(v.col(t + 1));
        utilities[k](x, t) = u;
      }
    }
  }
  return FiniteModel(T, transitions, std::move(utilities));
}

FiniteModel three_period_dgp() {
  Matrix u1(6, 3);
  u1 << 1.00, -1.00, 1.00,
        1.00, 2.00, 1.00,
        1.00, 2.00, 4.00,
        1.00, -1.00, 4.00,
        4.00, 2.00, 1.00,
        1.00, 5.00, 3.00;
  Matrix q1(6, 6);
  q1 << 0.19, 0.22, 0.06, 0.28, 0.06, 0.19,
        0.11, 0.32, 0.07, 0.11, 0.14, 0.25,
        0.28, 0.11, 0.17, 0.28, 0.06, 0.11,
        0.21, 0.14, 0.24, 0.24, 0.07, 0.10,
        0.03, 0.24, 0.24, 0.24, 0.22, 0.03,
        0.10, 0.14, 0.10, 0.19, 0.05, 0.43;
  Matrix q2(6, 6);
  q2 << 0.25, 0.19, 0.12, 0.12, 0.12, 0.19,
        0.08, 0.08, 0.31, 0.15, 0.23, 0.15,
        0.27, 0.07, 0.27, 0.07, 0.20, 0.13,
        0.23, 0.23, 0.31, 0.08, 0.08, 0.08,
        0.19, 0.25, 0.12, 0.06, 0.25, 0.12,
        0.19, 0.12, 0.19, 0.19, 0.25, 0.06;
  for (Matrix* q : {&q1, &q2}) {
    const Vector sums = q->rowwise().sum();
    *q = sums.cwiseInverse().asDiagonal() * *q;
  }
  return FiniteModel(3, {q1, q2}, {u1});
}

DiscountPair three_period_discount() { return {0.8, 0.5}; }

}  // namespace hyperddc
