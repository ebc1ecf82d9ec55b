#include "hyperddc/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hyperddc/parallel.hpp"

namespace hyperddc {

namespace {

Vector solve_linear(const Matrix& a, const Vector& rhs) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 0.0) || !std::isfinite(rcond))
    throw DomainError("A(beta, delta) is numerically singular");
  return lu.solve(rhs);
}

Vector log_reference(const Matrix& s) {
  Vector m(s.rows());
  for (Eigen::Index x = 0; x < s.rows(); ++x) {
    const double p = s(x, s.cols() - 1);
    if (!(p > kProbabilityFloor)) throw DomainError("reference choice probability is zero");
    m(x) = -std::log(p);
  }
  return m;
}

Matrix logit_rows(const std::vector<Vector>& w) {
  const auto J = w.front().size();
  const auto K = static_cast<Eigen::Index>(w.size());
  Matrix p(J, K);
  for (Eigen::Index x = 0; x < J; ++x) {
    RowVector row(K);
    for (Eigen::Index k = 0; k < K; ++k) row(k) = w[k](x);
    p.row(x) = logit(row);
  }
  return p;
}

Matrix random_simplex_rows(Eigen::Index J, Eigen::Index K, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix p(J, K);
  for (Eigen::Index x = 0; x < J; ++x) {
    for (Eigen::Index k = 0; k < K; ++k) p(x, k) = -std::log(1.0 - unif(rng));
    p.row(x) /= p.row(x).sum();
  }
  return p;
}

struct StartOutcome {
  bool converged = false;
  Matrix s;
  int iterations = 0;
  double residual = 0.0;
};

StartOutcome iterate(Matrix s, const StationaryModel& model, const StationaryOptions& opts) {
  StartOutcome out;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Matrix p = pi_map(ChoiceProbabilities::stationary(s), model).period(0);
    const double res = (p - s).cwiseAbs().maxCoeff();
    out.iterations = it;
    out.residual = res;
    if (res <= opts.tol) {
      out.converged = true;
      break;
    }
    s = (1.0 - opts.damping) * s + opts.damping * p;
  }
  out.s = std::move(s);
  return out;
}

bool lexicographically_less(const Matrix& a, const Matrix& b) {
  for (Eigen::Index x = 0; x < a.rows(); ++x)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      if (a(x, k) != b(x, k)) return a(x, k) < b(x, k);
  return false;
}

}  // namespace

Matrix a_matrix(const Matrix& s, const Transitions& transitions, const DiscountPair& disc) {
  const auto J = transitions.front().rows();
  return Matrix::Identity(J, J) - disc.delta * pb_transition(disc.beta, s, transitions);
}

Vector stationary_values(const Matrix& s, const Transitions& transitions, const DiscountPair& disc) {
  return solve_linear(a_matrix(s, transitions, disc), log_reference(s));
}

std::vector<Vector> omega(const ChoiceProbabilities& s_tilde, const StationaryModel& model) {
  const auto& disc = model.discount();
  const Matrix& s = s_tilde.period(0);
  const Vector v = stationary_values(s, model.transitions(), disc);
  std::vector<Vector> w(model.choices());
  for (int k = 0; k < model.choices(); ++k)
    w[k] = model.utility_vector(k) + disc.gamma() * (model.transition(k) * v);
  return w;
}

ChoiceProbabilities pi_map(const ChoiceProbabilities& s_tilde, const StationaryModel& model) {
  return ChoiceProbabilities::stationary(logit_rows(omega(s_tilde, model)));
}

StationarySolution solve_stationary(const StationaryModel& model, const StationaryOptions& opts) {
  if (auto rep = validate_model(model); !rep.ok())
    throw InvalidModel("solve_stationary: " + rep.violations.front());
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::invalid_argument("damping must lie in (0, 1]");

  const int J = model.states();
  const int K = model.choices();
  const int starts = std::max(1, opts.n_starts);

  std::vector<StartOutcome> outcomes(starts);
  parallel_for(static_cast<std::size_t>(starts), [&](std::size_t i) {
    Matrix s0;
    if (i == 0) {
      const Matrix uniform = Matrix::Constant(J, K, 1.0 / K);
      s0 = pi_map(ChoiceProbabilities::stationary(uniform), model).period(0);
    } else {
      std::mt19937_64 rng(opts.seed + i);
      s0 = random_simplex_rows(J, K, rng);
    }
    outcomes[i] = iterate(std::move(s0), model, opts);
  });

  StationarySolution sol;
  sol.starts = starts;
  double best_residual = INFINITY;
  for (auto& o : outcomes) {
    best_residual = std::min(best_residual, o.residual);
    if (!o.converged) continue;
    ++sol.converged_starts;
    const bool seen = std::any_of(sol.fixed_points.begin(), sol.fixed_points.end(), [&](const auto& e) {
      return (e.s_star.period(0) - o.s).cwiseAbs().maxCoeff() <= 1e-6;
    });
    if (seen) continue;
    StationaryEquilibrium eq;
    eq.v_star = stationary_values(o.s, model.transitions(), model.discount());
    eq.s_star = ChoiceProbabilities::stationary(o.s);
    eq.iterations = o.iterations;
    eq.residual = o.residual;
    sol.fixed_points.push_back(std::move(eq));
  }
  if (sol.fixed_points.empty())
    throw NonConvergence("solve_stationary: no start converged within " +
                         std::to_string(opts.max_iter) + " iterations (best residual " +
                         std::to_string(best_residual) + "); try a smaller damping step");
  std::sort(sol.fixed_points.begin(), sol.fixed_points.end(), [](const auto& a, const auto& b) {
    return lexicographically_less(a.s_star.period(0), b.s_star.period(0));
  });
  return sol;
}

StationaryModel recover_utilities_stationary(const ChoiceProbabilities& s,
                                             const Transitions& transitions,
                                             const DiscountPair& disc) {
  if (auto rep = validate_discount(disc, true); !rep.ok())
    throw DomainError("recover_utilities_stationary: " + rep.violations.front());
  require_positive(s);
  const Matrix& p = s.period(0);
  const int K = s.choices();
  const Vector v = stationary_values(p, transitions, disc);
  const Vector w_ref = disc.gamma() * (transitions.back() * v);
  const Vector log_ref = p.col(K - 1).array().log().matrix();
  std::vector<Vector> utilities(K - 1);
  for (int k = 0; k + 1 < K; ++k) {
    const Vector w = w_ref + (p.col(k).array().log().matrix() - log_ref);
    utilities[k] = w - disc.gamma() * (transitions[k] * v);
  }
  return StationaryModel(transitions, std::move(utilities), disc);
}

}  // namespace hyperddc
