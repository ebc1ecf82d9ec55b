#include "hyperddc/simest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>
#include <random>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "hyperddc/parallel.hpp"

namespace hyperddc {

namespace {

constexpr int kBlock = 1024;

std::mt19937_64 block_rng(std::uint64_t seed, std::size_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
  return std::mt19937_64(seq);
}

double draw_uniform(std::mt19937_64& rng) {
  for (;;) {
    const double u = uniform_open(rng());
    if (u > 0.0) return u;
  }
}

int draw_index(const RowVector& probs, double u) {
  double acc = 0.0;
  const auto n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  return n - 1;
}

RowVector initial_distribution(int J, const std::optional<Vector>& initial) {
  if (!initial) return RowVector::Constant(J, 1.0 / J);
  if (initial->size() != J) throw std::invalid_argument("initial distribution has wrong length");
  if (std::abs(initial->sum() - 1.0) > 1e-9 || (initial->array() < 0.0).any())
    throw std::invalid_argument("initial distribution must lie on the simplex");
  return initial->transpose();
}

int argmax_with_shocks(const std::vector<double>& w, std::mt19937_64& rng) {
  int best = 0;
  double best_v = -INFINITY;
  for (int k = 0; k < static_cast<int>(w.size()); ++k) {
    const double v = w[k] + gumbel(draw_uniform(rng));
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

// values(x, t, k) lookup for both horizons.
template <class ValueAt>
Panel simulate(int J, int K, int periods, bool stationary, const Transitions& q, ValueAt value_at, int n_agents,
               std::uint64_t seed, const std::optional<Vector>& initial) {
  if (n_agents < 0) throw std::invalid_argument("n_agents must be nonnegative");
  Panel p;
  p.agents = n_agents;
  p.periods = periods;
  p.states = J;
  p.choices = K;
  p.stationary = stationary;
  p.seed = seed;
  p.state.resize(static_cast<std::size_t>(n_agents) * periods);
  p.choice.resize(p.state.size());
  const RowVector init = initial_distribution(J, initial);
  const std::size_t blocks = (static_cast<std::size_t>(n_agents) + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::mt19937_64 rng = block_rng(seed, b);
    std::vector<double> w(K);
    const int end = static_cast<int>(std::min<std::size_t>((b + 1) * kBlock, n_agents));
    for (int i = static_cast<int>(b * kBlock); i < end; ++i) {
      int x = draw_index(init, draw_uniform(rng));
      for (int t = 0; t < periods; ++t) {
        for (int k = 0; k < K; ++k) w[k] = value_at(x, t, k);
        const int d = argmax_with_shocks(w, rng);
        const std::size_t at = static_cast<std::size_t>(i) * periods + t;
        p.state[at] = x;
        p.choice[at] = d;
        if (t + 1 < periods) x = draw_index(q[d].row(x), draw_uniform(rng));
      }
    }
  });
  return p;
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

struct Objective {
  const MomentSystem* ms;
  const Matrix* weight;
  const EstimationOptions* opts;

  int dim() const { return opts->geometric ? 1 : 2; }
  void unpack(const double* x, double& beta, double& delta) const {
    if (opts->geometric) {
      beta = 1.0;
      delta = x[0];
    } else {
      beta = x[0];
      delta = x[1];
    }
  }
  double lo(int i) const { return dim() == 1 || i == 1 ? opts->delta_lo : opts->beta_lo; }
  double hi(int i) const { return dim() == 1 || i == 1 ? opts->delta_hi : opts->beta_hi; }

  // Projection onto the box plus a quadratic penalty on the distance.
  double operator()(const double* x) const {
    double y[2];
    double pen = 0.0;
    for (int i = 0; i < dim(); ++i) {
      y[i] = std::clamp(x[i], lo(i), hi(i));
      pen += (x[i] - y[i]) * (x[i] - y[i]);
    }
    double b, d;
    unpack(y, b, d);
    return criterion(*ms, *weight, b, d) + 1e3 * pen;
  }
};

double gsl_objective(const gsl_vector* v, void* params) {
  const auto* obj = static_cast<const Objective*>(params);
  double x[2] = {gsl_vector_get(v, 0), obj->dim() == 2 ? gsl_vector_get(v, 1) : 0.0};
  return (*obj)(x);
}

LocalMinimum simplex_from(const Objective& obj, const double* start) {
  const int n = obj.dim();
  gsl_multimin_function fn{&gsl_objective, static_cast<std::size_t>(n), const_cast<Objective*>(&obj)};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  for (int i = 0; i < n; ++i) {
    gsl_vector_set(x, i, start[i]);
    gsl_vector_set(step, i, 0.1 * (obj.hi(i) - obj.lo(i)));
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, step);
  int status = GSL_CONTINUE;
  for (int it = 0; it < obj.opts->max_iter && status == GSL_CONTINUE; ++it) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), obj.opts->simplex_tol);
  }
  double y[2] = {0.0, 0.0};
  for (int i = 0; i < n; ++i) y[i] = std::clamp(gsl_vector_get(s->x, i), obj.lo(i), obj.hi(i));
  LocalMinimum m;
  obj.unpack(y, m.beta, m.delta);
  m.criterion = obj(y);
  m.converged = status == GSL_SUCCESS;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(step);
  return m;
}

void newton_polish(const Objective& obj, LocalMinimum& m) {
  const int n = obj.dim();
  double x[2] = {n == 1 ? m.delta : m.beta, m.delta};
  double f0 = obj(x);
  for (int it = 0; it < 50; ++it) {
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    Eigen::Matrix2d h = Eigen::Matrix2d::Identity();
    for (int i = 0; i < n; ++i) {
      const double hg = 1e-6 * std::max(1.0, std::abs(x[i]));
      double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
      xp[i] += hg;
      xm[i] -= hg;
      g(i) = (obj(xp) - obj(xm)) / (2.0 * hg);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double hi = 1e-4 * std::max(1.0, std::abs(x[i]));
        const double hj = 1e-4 * std::max(1.0, std::abs(x[j]));
        const auto at = [&](double si, double sj) {
          double y[2] = {x[0], x[1]};
          y[i] += si;
          y[j] += sj;
          return obj(y);
        };
        h(i, j) = (at(hi, hj) - at(hi, -hj) - at(-hi, hj) + at(-hi, -hj)) / (4.0 * hi * hj);
      }
    const Eigen::Matrix2d hs = h;
    Eigen::Vector2d p = Eigen::Vector2d::Zero();
    if (n == 1) {
      if (!(hs(0, 0) > 0.0)) break;
      p(0) = -g(0) / hs(0, 0);
    } else {
      Eigen::LLT<Eigen::Matrix2d> llt(hs);
      if (llt.info() != Eigen::Success) break;
      p = llt.solve(-g);
    }
    bool improved = false;
    for (double a = 1.0; a >= 1.0 / 64; a *= 0.5) {
      double y[2] = {x[0], x[1]};
      for (int i = 0; i < n; ++i) y[i] = std::clamp(x[i] + a * p(i), obj.lo(i), obj.hi(i));
      const double f1 = obj(y);
      if (f1 < f0) {
        x[0] = y[0];
        x[1] = y[1];
        f0 = f1;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  obj.unpack(x, m.beta, m.delta);
  m.criterion = f0;
}

}  // namespace

double uniform_open(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double gumbel(double u) { return -std::log(-std::log(u)); }

Panel simulate_panel(const FiniteModel& model, const DiscountPair& disc, int n_agents, std::uint64_t seed,
                     std::optional<Vector> initial) {
  const FiniteSolution sol = solve_finite(model, disc);
  const auto& w = sol.values.w;
  return simulate(model.states(), model.choices(), model.horizon(), false, model.transitions(),
                  [&](int x, int t, int k) { return w[k](x, t); }, n_agents, seed, initial);
}

Panel simulate_panel(const StationaryModel& model, const StationaryEquilibrium& eq, int n_agents, int periods,
                     std::uint64_t seed, std::optional<Vector> initial) {
  if (periods < 1) throw std::invalid_argument("periods must be positive");
  const std::vector<Vector> w = omega(eq.s_star, model);
  return simulate(model.states(), model.choices(), periods, true, model.transitions(),
                  [&](int x, int, int k) { return w[k](x); }, n_agents, seed, initial);
}

CcpEstimate estimate_ccp(const Panel& panel, double smoothing) {
  if (smoothing < 0.0) throw std::invalid_argument("smoothing must be nonnegative");
  const int P = panel.stationary ? 1 : panel.periods;
  const int J = panel.states, K = panel.choices;
  CcpEstimate est;
  est.counts.assign(P, Matrix::Zero(J, K));
  for (int i = 0; i < panel.agents; ++i)
    for (int t = 0; t < panel.periods; ++t) est.counts[panel.stationary ? 0 : t](panel.x(i, t), panel.d(i, t)) += 1.0;
  std::vector<Matrix> probs(P, Matrix(J, K));
  for (int t = 0; t < P; ++t)
    for (int x = 0; x < J; ++x) {
      const double visits = est.counts[t].row(x).sum();
      if (visits == 0.0 && smoothing == 0.0) {
        probs[t].row(x).setConstant(std::nan(""));
        est.empty_cells.push_back({t, x});
        continue;
      }
      probs[t].row(x) = (est.counts[t].row(x).array() + smoothing) / (visits + K * smoothing);
    }
  est.s = panel.stationary ? ChoiceProbabilities::stationary(probs.front())
                           : ChoiceProbabilities::finite(std::move(probs));
  return est;
}

TransitionEstimate estimate_transitions(const Panel& panel) {
  const int J = panel.states, K = panel.choices;
  TransitionEstimate est;
  est.counts.assign(K, Matrix::Zero(J, J));
  for (int i = 0; i < panel.agents; ++i)
    for (int t = 0; t + 1 < panel.periods; ++t) est.counts[panel.d(i, t)](panel.x(i, t), panel.x(i, t + 1)) += 1.0;
  est.q.assign(K, Matrix(J, J));
  for (int k = 0; k < K; ++k)
    for (int x = 0; x < J; ++x) {
      const double n = est.counts[k].row(x).sum();
      if (n == 0.0) {
        est.q[k].row(x).setConstant(1.0 / J);
        est.empty_rows.push_back({k, x});
      } else {
        est.q[k].row(x) = est.counts[k].row(x) / n;
      }
    }
  return est;
}

void require_cells(const CcpEstimate& est, const std::vector<ExclusionRestriction>& rs) {
  if (est.empty_cells.empty()) return;
  int first = est.s.is_stationary() ? 0 : est.s.periods();
  for (const auto& r : rs) first = std::min(first, std::max(0, std::min(r.period1, r.period2)));
  for (const auto& c : est.empty_cells)
    if (est.s.is_stationary() || c.period >= first)
      throw EmptyCellError("no observations at period " + std::to_string(c.period + 1) + ", state " +
                           std::to_string(c.state + 1) + "; enable smoothing or enlarge the panel");
}

double criterion(const MomentSystem& ms, const Matrix& weight, double beta, double delta) {
  const auto n = static_cast<Eigen::Index>(ms.polys.size());
  Vector psi(n);
  for (Eigen::Index i = 0; i < n; ++i) psi(i) = eval_beta_delta(ms.polys[i], beta, delta);
  return psi.dot(weight * psi);
}

EstimationResult minimum_distance(const MomentSystem& ms, const EstimationOptions& opts) {
  const auto n = static_cast<Eigen::Index>(ms.polys.size());
  if (n < (opts.geometric ? 1 : 2))
    throw std::invalid_argument(opts.geometric ? "geometric estimation needs one restriction"
                                               : "hyperbolic estimation needs two restrictions");
  if (!(opts.beta_lo < opts.beta_hi) || !(opts.delta_lo < opts.delta_hi))
    throw std::invalid_argument("empty estimation box");
  const Matrix weight = opts.weight ? *opts.weight : Matrix::Identity(n, n);
  if (weight.rows() != n || weight.cols() != n) throw std::invalid_argument("weight matrix has wrong shape");

  gsl_set_error_handler_off();
  Objective obj{&ms, &weight, &opts};
  const int per_axis = std::max(1, static_cast<int>(std::lround(std::sqrt(std::max(1, opts.starts)))));
  std::vector<std::array<double, 2>> starts;
  const auto interior = [](double lo, double hi, int i, int m) { return lo + (hi - lo) * (i + 0.5) / m; };
  if (opts.geometric) {
    const int m = std::max(1, opts.starts);
    for (int i = 0; i < m; ++i) starts.push_back({interior(opts.delta_lo, opts.delta_hi, i, m), 0.0});
  } else {
    for (int i = 0; i < per_axis; ++i)
      for (int j = 0; j < per_axis; ++j)
        starts.push_back({interior(opts.beta_lo, opts.beta_hi, i, per_axis),
                          interior(opts.delta_lo, opts.delta_hi, j, per_axis)});
  }

  std::vector<LocalMinimum> found(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    LocalMinimum m = simplex_from(obj, starts[i].data());
    newton_polish(obj, m);
    found[i] = m;
  });

  EstimationResult res;
  res.weight_matrix = opts.weight ? "custom" : "identity";
  for (const auto& m : found) {
    const bool seen = std::any_of(res.starts.begin(), res.starts.end(), [&](const LocalMinimum& e) {
      return std::abs(e.beta - m.beta) <= 1e-6 && std::abs(e.delta - m.delta) <= 1e-6;
    });
    if (!seen) res.starts.push_back(m);
  }
  std::stable_sort(res.starts.begin(), res.starts.end(),
                   [](const LocalMinimum& a, const LocalMinimum& b) { return a.criterion < b.criterion; });
  const LocalMinimum& best = res.starts.front();
  res.beta_hat = best.beta;
  res.delta_hat = best.delta;
  res.criterion_value = best.criterion;
  res.converged = best.converged;
  return res;
}

MonteCarloSummary summarize(const std::vector<ReplicationRow>& rows) {
  std::vector<double> b, d, g;
  for (const auto& r : rows)
    if (r.error.empty()) {
      b.push_back(r.beta_hat);
      d.push_back(r.delta_hat);
      g.push_back(r.gamma_hat);
    }
  MonteCarloSummary s;
  s.succeeded = static_cast<int>(b.size());
  if (b.empty()) return s;
  const auto mean = [](const std::vector<double>& v) {
    double a = 0.0;
    for (double x : v) a += x;
    return a / static_cast<double>(v.size());
  };
  s.mean_beta = mean(b);
  s.mean_delta = mean(d);
  s.mean_gamma = mean(g);
  s.sd_beta = sample_sd(b, s.mean_beta);
  s.sd_delta = sample_sd(d, s.mean_delta);
  s.sd_gamma = sample_sd(g, s.mean_gamma);
  return s;
}

MonteCarloTable monte_carlo(const FiniteModel& model, const DiscountPair& disc,
                            const std::vector<ExclusionRestriction>& rs, const MonteCarloOptions& opts) {
  if (opts.replications < 1) throw std::invalid_argument("replications must be positive");
  MonteCarloTable table;
  table.rows.resize(opts.replications);
  parallel_for(static_cast<std::size_t>(opts.replications), [&](std::size_t i) {
    ReplicationRow& row = table.rows[i];
    row.rep = static_cast<int>(i) + 1;
    try {
      const Panel panel = simulate_panel(model, disc, opts.n_agents, opts.seed0 + row.rep);
      const CcpEstimate ccp = estimate_ccp(panel, opts.smoothing);
      require_cells(ccp, rs);
      ChoiceData data{ccp.s, opts.estimate_transitions ? estimate_transitions(panel).q : model.transitions()};
      const MomentSystem ms = build_moment_system(data, rs);
      const EstimationResult est = minimum_distance(ms, opts.estimation);
      row.beta_hat = est.beta_hat;
      row.delta_hat = est.delta_hat;
      row.gamma_hat = est.gamma_hat();
      row.criterion = est.criterion_value;
      row.converged = est.converged;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  table.summary = summarize(table.rows);
  return table;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("grid needs at least one point");
  if (n == 1) return {lo};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

Matrix criterion_surface(const MomentSystem& ms, const std::vector<double>& betas, const std::vector<double>& deltas,
                         const std::optional<Matrix>& weight) {
  const auto n = static_cast<Eigen::Index>(ms.polys.size());
  const Matrix w = weight ? *weight : Matrix::Identity(n, n);
  Matrix s(betas.size(), deltas.size());
  parallel_for(betas.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < deltas.size(); ++j) s(i, j) = criterion(ms, w, betas[i], deltas[j]);
  });
  return s;
}

TroughSummary sublevel_summary(const Matrix& surface, const std::vector<double>& betas,
                               const std::vector<double>& deltas, double factor) {
  TroughSummary t;
  Eigen::Index bi = 0, dj = 0;
  t.s_min = surface.minCoeff(&bi, &dj);
  t.argmin_beta = static_cast<int>(bi);
  t.argmin_delta = static_cast<int>(dj);
  t.threshold = factor * t.s_min;
  const auto nb = surface.rows(), nd = surface.cols();
  std::vector<char> in(nb * nd), seen(nb * nd, 0);
  double dlo = INFINITY, dhi = -INFINITY;
  for (Eigen::Index i = 0; i < nb; ++i)
    for (Eigen::Index j = 0; j < nd; ++j) {
      in[i * nd + j] = surface(i, j) <= t.threshold;
      if (in[i * nd + j]) {
        ++t.cells;
        dlo = std::min(dlo, deltas[j]);
        dhi = std::max(dhi, deltas[j]);
      }
    }
  t.delta_span = t.cells ? dhi - dlo : 0.0;
  std::queue<std::pair<Eigen::Index, Eigen::Index>> q;
  q.push({bi, dj});
  seen[bi * nd + dj] = 1;
  int reached = 0;
  while (!q.empty()) {
    const auto [i, j] = q.front();
    q.pop();
    ++reached;
    for (int di = -1; di <= 1; ++di)
      for (int dd = -1; dd <= 1; ++dd) {
        const auto ii = i + di, jj = j + dd;
        if (ii < 0 || jj < 0 || ii >= nb || jj >= nd) continue;
        if (!in[ii * nd + jj] || seen[ii * nd + jj]) continue;
        seen[ii * nd + jj] = 1;
        q.push({ii, jj});
      }
  }
  t.connected = reached == t.cells;
  (void)betas;
  return t;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_replications_csv(std::ostream& os, const MonteCarloTable& table) {
  os << "rep,beta_hat,delta_hat,gamma_hat,criterion,converged\n";
  for (const auto& r : table.rows) {
    if (!r.error.empty()) {
      os << r.rep << ",nan,nan,nan,nan,0\n";
      continue;
    }
    os << r.rep << ',' << fmt17(r.beta_hat) << ',' << fmt17(r.delta_hat) << ',' << fmt17(r.gamma_hat) << ','
       << fmt17(r.criterion) << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

void write_surface_csv(std::ostream& os, const Matrix& surface, const std::vector<double>& betas,
                       const std::vector<double>& deltas) {
  os << "beta,delta,S\n";
  for (std::size_t i = 0; i < betas.size(); ++i)
    for (std::size_t j = 0; j < deltas.size(); ++j)
      os << fmt17(betas[i]) << ',' << fmt17(deltas[j]) << ',' << fmt17(surface(i, j)) << '\n';
}

void write_ccp_csv(std::ostream& os, const ChoiceProbabilities& s) {
  os << "period,state,choice,probability\n";
  for (int t = 0; t < s.periods(); ++t)
    for (int k = 0; k < s.choices(); ++k)
      for (int x = 0; x < s.states(); ++x)
        os << (s.is_stationary() ? 0 : t + 1) << ',' << x + 1 << ',' << k + 1 << ',' << fmt17(s(k, t, x)) << '\n';
}

}  // namespace hyperddc
