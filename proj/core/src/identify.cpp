#include "hyperddc/identify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>

#include "hyperddc/parallel.hpp"

namespace hyperddc {

namespace {

Matrix padded(const Matrix& c, Eigen::Index rows, Eigen::Index cols) {
  Matrix out = Matrix::Zero(rows, cols);
  out.topLeftCorner(c.rows(), c.cols()) = c;
  return out;
}

RowVector choice_contrast(const Transitions& q, int k, int x) {
  return q[k].row(x) - q.back().row(x);
}

// gamma * row * V_{t+1}(beta, delta) as a (gamma, delta) coefficient grid.
Matrix continuation_grid(const ChoiceData& data, const RowVector& row, int t) {
  const int T = data.s.periods();
  const int deg = T - 1 - t;
  Matrix g = Matrix::Zero(deg + 1, deg + 1);
  const Matrix& q_ref = data.q.back();
  g(1, 0) += row.dot(surplus(data.s, t + 1));
  MatrixPolynomial r{{row}};
  for (int tau = t + 2; tau < T; ++tau) {
    const Matrix qbar = mean_transition(data.s.period(tau - 1), data.q);
    r = r * MatrixPolynomial{{qbar, q_ref - qbar}};
    const int n = tau - t - 1;
    const Vector m = surplus(data.s, tau);
    for (int i = 0; i < static_cast<int>(r.terms.size()); ++i) g(1 + i, n - i) += r.terms[i].row(0).dot(m);
  }
  return g;
}

Matrix derivative_grid(const Matrix& c, int var) {
  if (var == 0) {
    if (c.rows() < 2) return Matrix::Zero(1, c.cols());
    Matrix d(c.rows() - 1, c.cols());
    for (Eigen::Index i = 1; i < c.rows(); ++i) d.row(i - 1) = static_cast<double>(i) * c.row(i);
    return d;
  }
  if (c.cols() < 2) return Matrix::Zero(c.rows(), 1);
  Matrix d(c.rows(), c.cols() - 1);
  for (Eigen::Index j = 1; j < c.cols(); ++j) d.col(j - 1) = static_cast<double>(j) * c.col(j);
  return d;
}

// Value and gradient of a polynomial given by its grid.
struct Differentiable {
  BivariatePoly p, d1, d2;
  explicit Differentiable(const BivariatePoly& poly)
      : p(poly),
        d1(derivative_grid(poly.coeffs(), 0), poly.vars()),
        d2(derivative_grid(poly.coeffs(), 1), poly.vars()) {}
};

// Gauss-Newton on a square or overdetermined system; minimum-norm steps keep
// it usable when the Jacobian is rank deficient.
bool polish(const std::vector<Differentiable>& fs, double& x1, double& x2, int max_iter = 60) {
  const auto n = static_cast<Eigen::Index>(fs.size());
  Vector f(n);
  Matrix jac(n, 2);
  for (int it = 0; it < max_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      f(i) = fs[i].p(x1, x2);
      jac(i, 0) = fs[i].d1(x1, x2);
      jac(i, 1) = fs[i].d2(x1, x2);
    }
    if (!f.allFinite() || !jac.allFinite()) return false;
    const Eigen::Vector2d step = jac.completeOrthogonalDecomposition().solve(f);
    if (!step.allFinite()) return false;
    x1 -= step(0);
    x2 -= step(1);
    if (step.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, std::max(std::abs(x1), std::abs(x2)))) break;
  }
  return std::isfinite(x1) && std::isfinite(x2);
}

std::vector<double> scaled_residuals(const MomentSystem& ms, double gamma, double delta, double& worst) {
  std::vector<double> res;
  worst = 0.0;
  for (const auto& p : ms.polys) {
    const double r = p(gamma, delta);
    res.push_back(r);
    const double sc = p.scale();
    worst = std::max(worst, sc > 0.0 ? std::abs(r) / sc : std::abs(r));
  }
  return res;
}

void add_unique(std::vector<Candidate>& out, Candidate c, double tol) {
  for (const auto& e : out)
    if (std::abs(e.beta - c.beta) <= tol && std::abs(e.delta - c.delta) <= tol) return;
  out.push_back(std::move(c));
}

void sort_candidates(std::vector<Candidate>& cs) {
  std::sort(cs.begin(), cs.end(), [](const Candidate& a, const Candidate& b) {
    return a.delta != b.delta ? a.delta < b.delta : a.beta < b.beta;
  });
}

// Common gamma-roots of two polynomials free of delta.
std::optional<double> shared_gamma_root(const BivariatePoly& fa, const BivariatePoly& fb, double hi) {
  if (fa.degree(1) > 0 || fb.degree(1) > 0) return std::nullopt;
  const UnivariatePoly pa = fa.slice(1, 0.0);
  const UnivariatePoly pb = fb.slice(1, 0.0);
  const UnivariatePoly& p = pa.is_zero() ? pb : pa;
  const RootSet rs = uni_roots(p, {0.0, hi});
  std::vector<double> shared;
  for (double g : rs.roots) {
    const double sb = pb.scale() > 0 ? std::abs(pb(g)) / pb.scale() : 0.0;
    if (sb <= kMembershipTol && g > 0.0) shared.push_back(g);
  }
  if (shared.size() != 1) return std::nullopt;
  return shared.front();
}

}  // namespace

void validate_restriction(const ExclusionRestriction& r, int horizon, int choices, int states) {
  if (r.choice < 0 || r.choice >= choices - 1)
    throw DomainError("restriction choice must be a non-reference choice");
  if (r.state1 < 0 || r.state1 >= states || r.state2 < 0 || r.state2 >= states)
    throw DomainError("restriction state out of range");
  if (horizon <= 0) {
    if (!r.is_stationary()) throw DomainError("stationary restriction cannot carry a period");
    if (r.state1 == r.state2) throw DomainError("restriction states must differ");
    return;
  }
  if (r.is_stationary() || r.period2 < 0) throw DomainError("finite restriction needs periods");
  for (int t : {r.period1, r.period2})
    if (t < 0 || t > horizon - 2)
      throw DomainError("restriction period " + std::to_string(t + 1) + " must lie before the last period " +
                        std::to_string(horizon));
  if (r.period1 == r.period2 && r.state1 == r.state2)
    throw DomainError("restriction points must differ");
}

BivariatePoly build_finite_moment(const ChoiceData& data, const ExclusionRestriction& r) {
  require_positive(data.s);
  if (data.s.is_stationary()) throw DomainError("finite moment needs finite-horizon choice data");
  const int T = data.s.periods();
  validate_restriction(r, T, data.s.choices(), data.s.states());
  const Matrix g1 = continuation_grid(data, choice_contrast(data.q, r.choice, r.state1), r.period1);
  const Matrix g2 = continuation_grid(data, choice_contrast(data.q, r.choice, r.state2), r.period2);
  const auto n = std::max(g1.rows(), g2.rows());
  Matrix g = padded(g1, n, n) - padded(g2, n, n);
  g(0, 0) -= log_odds(data.s, r.choice, r.period1, r.state1) - log_odds(data.s, r.choice, r.period2, r.state2);
  return BivariatePoly(std::move(g), kGammaDelta);
}

double stationary_moment_direct(const Matrix& qbar, const Matrix& q_ref, const Vector& m, const RowVector& dq,
                                double log_odds_contrast, double gamma, double delta) {
  const auto J = qbar.rows();
  const Matrix a = Matrix::Identity(J, J) - delta * qbar - gamma * (q_ref - qbar);
  const Eigen::PartialPivLU<Matrix> lu(a);
  const double det_a = lu.determinant();
  // dq adj(A) m = det(A + m dq) - det(A)
  double adj_term;
  if (det_a != 0.0) {
    adj_term = det_a * dq.dot(lu.solve(m));
  } else {
    const Matrix shifted = a + m * dq;
    adj_term = shifted.partialPivLu().determinant();
  }
  return det_a * log_odds_contrast - gamma * adj_term;
}

BivariatePoly stationary_moment_from_terms(const Matrix& qbar, const Matrix& q_ref, const Vector& m,
                                           const RowVector& dq, double log_odds_contrast) {
  const int J = static_cast<int>(qbar.rows());
  const int n = J + 1;
  const Interval box{0.0, 1.0};
  const std::vector<double> nodes = chebyshev_nodes(n, box);

  // First along delta for each gamma node, then along gamma per delta power.
  Matrix by_gamma_node(n, n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> vals(n);
    for (int j = 0; j < n; ++j)
      vals[j] = stationary_moment_direct(qbar, q_ref, m, dq, log_odds_contrast, nodes[i], nodes[j]);
    const UnivariatePoly pd = ChebyshevSeries::interpolate(vals, box).to_monomial();
    for (int b = 0; b < n; ++b) by_gamma_node(i, b) = pd.coefficient(b);
  }
  Matrix c(n, n);
  for (int b = 0; b < n; ++b) {
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = by_gamma_node(i, b);
    const UnivariatePoly pg = ChebyshevSeries::interpolate(vals, box).to_monomial();
    for (int a = 0; a < n; ++a) c(a, b) = pg.coefficient(a);
  }
  // Total degree is at most J.
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a + b > J) c(a, b) = 0.0;
  // pure gamma^J term vanishes when dq sums to zero
  if (std::abs(dq.sum()) <= 1e-12 * std::max(1.0, dq.cwiseAbs().sum())) c(J, 0) = 0.0;
  BivariatePoly p(std::move(c), kGammaDelta);
  // rounding-level output: identically zero
  const double ref = std::max(std::abs(log_odds_contrast), m.cwiseAbs().maxCoeff() * dq.cwiseAbs().sum());
  if (p.scale() <= 1e-12 * ref) return BivariatePoly(Matrix::Zero(1, 1), kGammaDelta);

  const double probes[][2] = {{0.37, 0.61}, {0.9, 0.13}, {0.05, 0.95}, {0.5, 0.5}};
  double worst = 0.0, sc = p.scale();
  for (const auto& pt : probes) {
    const double exact = stationary_moment_direct(qbar, q_ref, m, dq, log_odds_contrast, pt[0], pt[1]);
    sc = std::max(sc, std::abs(exact));
    worst = std::max(worst, std::abs(exact - p(pt[0], pt[1])));
  }
  if (worst > 1e-8 * std::max(1.0, sc))
    throw InterpolationError("stationary moment interpolation residual " + std::to_string(worst));
  return p;
}

BivariatePoly build_stationary_moment(const ChoiceData& data, const ExclusionRestriction& r) {
  require_positive(data.s);
  validate_restriction(r, 0, data.s.choices(), data.s.states());
  const Matrix& s = data.s.period(0);
  const Matrix qbar = mean_transition(s, data.q);
  const RowVector dq = choice_contrast(data.q, r.choice, r.state1) - choice_contrast(data.q, r.choice, r.state2);
  const double lo = log_odds(data.s, r.choice, 0, r.state1) - log_odds(data.s, r.choice, 0, r.state2);
  return stationary_moment_from_terms(qbar, data.q.back(), surplus(data.s, 0), dq, lo);
}

BivariatePoly to_beta_delta(const BivariatePoly& p) {
  const Matrix& c = p.coeffs();
  Matrix out = Matrix::Zero(c.rows(), c.rows() + c.cols() - 1);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) out(i, i + j) = c(i, j);
  return BivariatePoly(std::move(out), kBetaDelta);
}

double eval_beta_delta(const BivariatePoly& p, double beta, double delta) { return p(beta * delta, delta); }

MomentSystem build_moment_system(const ChoiceData& data, const std::vector<ExclusionRestriction>& rs,
                                 std::string provenance) {
  MomentSystem ms;
  ms.stationary = data.s.is_stationary();
  ms.horizon = ms.stationary ? 0 : data.s.periods();
  ms.states = data.s.states();
  ms.restrictions = rs;
  ms.provenance = std::move(provenance);
  for (const auto& r : rs)
    ms.polys.push_back(ms.stationary ? build_stationary_moment(data, r) : build_finite_moment(data, r));
  return ms;
}

bool IdentifyDomain::contains(double beta, double delta, double tol) const {
  return beta > beta_lo + tol && beta <= beta_hi + tol && delta > delta_lo + tol && delta <= delta_hi + tol;
}

int cardinality_bound(const MomentSystem& ms) {
  if (ms.polys.size() < 2) return 0;
  if (ms.stationary) return ms.states * ms.states;
  const auto deg = [&](const ExclusionRestriction& r) {
    return ms.horizon - 1 - std::min(r.period1, r.period2);
  };
  return deg(ms.restrictions[0]) * deg(ms.restrictions[1]);
}

namespace {

// Divides out powers of (1 - delta), a factor of every stationary moment.
BivariatePoly deflate_unit_delta(BivariatePoly p) {
  while (!p.is_zero() && p.degree(1) > 0) {
    const Eigen::MatrixXd& c = p.coeffs();
    Eigen::MatrixXd q(c.rows(), c.cols() - 1);
    double rem = 0.0;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      double acc = 0.0;
      for (Eigen::Index j = c.cols() - 1; j >= 1; --j) {
        acc += c(i, j);
        q(i, j - 1) = -acc;
      }
      rem = std::max(rem, std::abs(c(i, 0) + acc));
    }
    if (rem > 1e-8 * p.scale()) break;
    p = BivariatePoly(q, p.vars());
  }
  return p;
}

std::vector<std::complex<double>> complex_roots(const UnivariatePoly& p) {
  const int n = p.degree();
  if (n < 1) return {};
  const auto& c = p.coeffs();
  Matrix comp = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) comp(0, i) = -c[n - 1 - i] / c[n];
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  const Eigen::VectorXcd ev = comp.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

bool slices_share_root(const UnivariatePoly& a, const UnivariatePoly& b) {
  if (a.is_zero() || b.is_zero()) return true;
  const auto ra = complex_roots(a), rb = complex_roots(b);
  for (const auto& x : ra)
    for (const auto& y : rb)
      if (std::abs(x - y) <= 1e-6 * std::max(1.0, std::abs(x))) return true;
  return false;
}

// A factor of positive degree in one variable shows up as a shared root of
// the slices at every value of the other variable.
bool slices_confirm_factor(const BivariatePoly& fa, const BivariatePoly& fb) {
  if (fa.is_zero() || fb.is_zero()) return true;
  constexpr double probes[] = {0.3137, 0.5719, 0.8423};
  for (int fixed = 0; fixed < 2; ++fixed) {
    bool all = true;
    for (double v : probes) all = all && slices_share_root(fa.slice(fixed, v), fb.slice(fixed, v));
    if (all) return true;
  }
  return false;
}

}  // namespace

IdentifiedSet solve_identified_set(const MomentSystem& ms, const IdentifyDomain& domain) {
  if (ms.polys.size() < 2) throw std::invalid_argument("solve_identified_set needs at least two moments");
  IdentifiedSet out;
  out.bezout_bound = cardinality_bound(ms);
  const BivariatePoly fa = ms.stationary ? deflate_unit_delta(ms.polys[0]) : ms.polys[0];
  const BivariatePoly fb = ms.stationary ? deflate_unit_delta(ms.polys[1]) : ms.polys[1];

  ResultantOptions ro;
  ro.nodes = {domain.delta_lo, domain.delta_hi};
  CommonFactor cf = common_factor_test(fa, fb, 1e-10, ro);
  // confirm with shared slice roots
  if (cf == CommonFactor::common_factor && !slices_confirm_factor(fa, fb)) cf = CommonFactor::none;
  if (cf == CommonFactor::degenerate) {
    out.degenerate = true;
    out.warnings.push_back("both moment polynomials are identically zero");
    return out;
  }
  if (cf == CommonFactor::common_factor) {
    out.common_factor_detected = true;
    if (fa.is_zero() || fb.is_zero()) out.warnings.push_back("a moment polynomial is identically zero");
    out.identified_product = shared_gamma_root(fa, fb, domain.delta_hi * domain.beta_hi);
    out.warnings.push_back("moments share a common factor; the identified set is not finite");
    return out;
  }

  const ChebyshevSeries series = resultant_series(fa, fb, "gamma", ro);
  out.resultant = series.to_monomial();
  for (double d : series.roots())
    if (d > domain.delta_lo + 1e-12 && d <= domain.delta_hi + 1e-9) out.delta_roots.push_back(d);

  const std::vector<Differentiable> sys{Differentiable(fa), Differentiable(fb)};
  for (double d : out.delta_roots) {
    std::vector<double> gammas;
    for (const BivariatePoly* f : {&fa, &fb}) {
      const UnivariatePoly sl = f->slice(1, d);
      if (sl.is_zero()) continue;
      const double hi = d * domain.beta_hi;
      const RootSet rs = uni_roots(sl, {-1e-6 * std::max(1.0, hi), hi * (1.0 + 1e-6) + 1e-9});
      gammas.insert(gammas.end(), rs.roots.begin(), rs.roots.end());
    }
    for (double g : gammas) {
      double gg = g, dd = d;
      if (!polish(sys, gg, dd)) continue;
      if (!(dd > 0.0)) continue;
      const double beta = gg / dd;
      if (!domain.contains(beta, dd)) continue;
      double worst = 0.0;
      Candidate c{beta, dd, scaled_residuals(ms, gg, dd, worst)};
      if (worst > kMembershipTol) continue;
      add_unique(out.candidates, std::move(c), 1e-7);
    }
  }
  sort_candidates(out.candidates);
  out.empty_model_rejected = out.candidates.empty();
  return out;
}

std::vector<Candidate> grid_oracle(const MomentSystem& ms, const IdentifyDomain& domain, int grid_n) {
  if (ms.polys.empty() || grid_n < 1) return {};
  const int n = grid_n;
  std::vector<BivariatePoly> bd;
  std::vector<double> scales;
  for (const auto& p : ms.polys) {
    bd.push_back(to_beta_delta(p));
    scales.push_back(p.scale() > 0.0 ? p.scale() : 1.0);
  }
  const auto beta_at = [&](int i) { return domain.beta_lo + (domain.beta_hi - domain.beta_lo) * (i + 1) / n; };
  const auto delta_at = [&](int j) {
    return domain.delta_lo + (domain.delta_hi - domain.delta_lo) * (j + 1) / n;
  };

  // F(i, j) stored row-major by delta index.
  std::vector<double> f(static_cast<std::size_t>(n) * n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    const double d = delta_at(static_cast<int>(j));
    std::vector<UnivariatePoly> in_beta;
    for (const auto& p : bd) in_beta.push_back(p.slice(1, d));
    for (int i = 0; i < n; ++i) {
      const double b = beta_at(i);
      double worst = 0.0;
      for (std::size_t k = 0; k < in_beta.size(); ++k) worst = std::max(worst, std::abs(in_beta[k](b)) / scales[k]);
      f[j * n + i] = worst;
    }
  });

  std::vector<std::pair<double, std::pair<int, int>>> minima;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = f[static_cast<std::size_t>(j) * n + i];
      bool is_min = true;
      for (int dj = -1; dj <= 1 && is_min; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (!di && !dj) continue;
          const int ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
          if (f[static_cast<std::size_t>(jj) * n + ii] < v) {
            is_min = false;
            break;
          }
        }
      if (is_min) minima.push_back({v, {i, j}});
    }
  std::sort(minima.begin(), minima.end());
  if (minima.size() > 5000) minima.resize(5000);

  std::vector<Differentiable> sys;
  for (std::size_t k = 0; k < std::min<std::size_t>(2, bd.size()); ++k) sys.emplace_back(bd[k]);
  std::vector<std::optional<Candidate>> polished(minima.size());
  parallel_for(minima.size(), [&](std::size_t m) {
    double b = beta_at(minima[m].second.first);
    double d = delta_at(minima[m].second.second);
    if (!polish(sys, b, d)) return;
    if (!domain.contains(b, d)) return;
    double worst = 0.0;
    Candidate c{b, d, scaled_residuals(ms, b * d, d, worst)};
    if (worst <= kMembershipTol) polished[m] = std::move(c);
  });
  std::vector<Candidate> out;
  for (auto& c : polished)
    if (c) add_unique(out, std::move(*c), 1e-6);
  sort_candidates(out);
  return out;
}

GeometricSet geometric_identified_set(const ChoiceData& data, const ExclusionRestriction& r,
                                      const IdentifyDomain& domain) {
  const BivariatePoly p = data.s.is_stationary() ? build_stationary_moment(data, r) : build_finite_moment(data, r);
  const Matrix& c = p.coeffs();
  std::vector<double> q(c.rows() + c.cols() - 1, 0.0);
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) q[i + j] += c(i, j);
  GeometricSet out;
  const RootSet rs = uni_roots(UnivariatePoly(std::move(q)), {domain.delta_lo, domain.delta_hi});
  out.nonidentified = rs.identically_zero;
  out.deltas = rs.roots;
  return out;
}

int StateStructure::state_count() const {
  int n = 1;
  for (const auto& f : factors) n *= f.levels;
  return n;
}

std::vector<int> StateStructure::decode(int state) const {
  std::vector<int> levels(factors.size());
  for (int f = static_cast<int>(factors.size()) - 1; f >= 0; --f) {
    levels[f] = state % factors[f].levels;
    state /= factors[f].levels;
  }
  return levels;
}

int StateStructure::encode(const std::vector<int>& levels) const {
  int s = 0;
  for (std::size_t f = 0; f < factors.size(); ++f) s = s * factors[f].levels + levels[f];
  return s;
}

std::vector<ExclusionRestriction> enumerate_exclusion_pairs(const StateStructure& st) {
  const int K = st.choices;
  const int ref = K - 1;
  const int n = st.state_count();
  if (static_cast<int>(st.utility_factors.size()) != K - 1)
    throw std::invalid_argument("utility_factors needs one entry per non-reference choice");
  const auto next = [&](int k, int f, int level) {
    if (st.controlled_next) return st.controlled_next(k, f, level);
    return k == ref ? level : k;
  };
  // Structural test of Q_k(x) != Q_K(x).
  const auto shifts = [&](int k, const std::vector<int>& lv) {
    for (std::size_t f = 0; f < st.factors.size(); ++f)
      if (st.factors[f].controlled && next(k, static_cast<int>(f), lv[f]) != next(ref, static_cast<int>(f), lv[f]))
        return true;
    return false;
  };

  std::vector<ExclusionRestriction> out;
  for (int k = 0; k + 1 < K; ++k) {
    const auto& rel = st.utility_factors[k];
    for (int x1 = 0; x1 < n; ++x1) {
      const std::vector<int> l1 = st.decode(x1);
      for (int x2 = x1 + 1; x2 < n; ++x2) {
        const std::vector<int> l2 = st.decode(x2);
        if (!std::all_of(rel.begin(), rel.end(), [&](int f) { return l1[f] == l2[f]; })) continue;
        bool informative;
        if (st.transitions) {
          const auto& q = *st.transitions;
          const RowVector d2 = (q[k].row(x1) - q[ref].row(x1)) - (q[k].row(x2) - q[ref].row(x2));
          informative = d2.cwiseAbs().maxCoeff() > 1e-12;
        } else {
          informative = shifts(k, l1) || shifts(k, l2);
        }
        if (informative) out.push_back(ExclusionRestriction::stationary(k, x1, x2));
      }
    }
  }
  return out;
}

}  // namespace hyperddc
