#include "hyperddc/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace hyperddc {

namespace {

std::vector<double> trimmed(std::vector<double> c, double rel_tol) {
  double mx = 0.0;
  for (double v : c) mx = std::max(mx, std::abs(v));
  if (mx == 0.0 || !std::isfinite(mx)) {
    if (!std::isfinite(mx)) return c;
    return {};
  }
  while (!c.empty() && std::abs(c.back()) <= rel_tol * mx) c.pop_back();
  return c;
}

// Diagonal similarity scaling (Parlett-Reinsch) so that row and column norms
// are comparable before the eigenvalue solve.
void balance(Eigen::MatrixXd& a) {
  const auto n = a.rows();
  constexpr double radix = 2.0;
  bool done = false;
  for (int sweep = 0; sweep < 100 && !done; ++sweep) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

std::vector<std::complex<double>> eigenvalues(Eigen::MatrixXd a) {
  balance(a);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  std::vector<std::complex<double>> out;
  if (es.info() != Eigen::Success) return out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

std::vector<double> dedup_sorted(std::vector<double> r, double tol) {
  std::sort(r.begin(), r.end());
  std::vector<double> out;
  for (double v : r) {
    if (out.empty() || std::abs(v - out.back()) > tol * std::max(1.0, std::abs(v))) out.push_back(v);
  }
  return out;
}

double abs_scale_at(const std::vector<double>& c, double x) {
  double s = 0.0, p = 1.0;
  for (double v : c) {
    s += std::abs(v) * p;
    p *= std::abs(x);
  }
  return s;
}

Eigen::MatrixXd trim_grid(Eigen::MatrixXd c) {
  const double mx = c.cwiseAbs().maxCoeff();
  if (mx == 0.0) return Eigen::MatrixXd::Zero(1, 1);
  const double tol = kTrimTol * mx;
  Eigen::Index rows = c.rows(), cols = c.cols();
  while (rows > 1 && c.row(rows - 1).head(cols).cwiseAbs().maxCoeff() <= tol) --rows;
  while (cols > 1 && c.col(cols - 1).head(rows).cwiseAbs().maxCoeff() <= tol) --cols;
  return c.topLeftCorner(rows, cols);
}

void require_same_labels(const BivariatePoly& a, const BivariatePoly& b) {
  if (a.vars() != b.vars())
    throw LabelMismatch("polynomial variables differ: (" + a.vars()[0] + ", " + a.vars()[1] +
                        ") vs (" + b.vars()[0] + ", " + b.vars()[1] + ")");
}

}  // namespace

// ---------------------------------------------------------------- univariate

UnivariatePoly::UnivariatePoly(std::vector<double> ascending)
    : coeffs_(trimmed(std::move(ascending), kTrimTol)) {}

double UnivariatePoly::coefficient(int i) const {
  return (i >= 0 && i < static_cast<int>(coeffs_.size())) ? coeffs_[i] : 0.0;
}

double UnivariatePoly::scale() const {
  double mx = 0.0;
  for (double v : coeffs_) mx = std::max(mx, std::abs(v));
  return mx;
}

double UnivariatePoly::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

UnivariatePoly UnivariatePoly::derivative() const {
  if (coeffs_.size() <= 1) return {};
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
  return UnivariatePoly(std::move(d));
}

UnivariatePoly operator+(const UnivariatePoly& a, const UnivariatePoly& b) {
  std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) c[i] += a.coeffs_[i];
  for (std::size_t i = 0; i < b.coeffs_.size(); ++i) c[i] += b.coeffs_[i];
  return UnivariatePoly(std::move(c));
}

UnivariatePoly operator-(const UnivariatePoly& a, const UnivariatePoly& b) { return a + (-1.0) * b; }

UnivariatePoly operator*(const UnivariatePoly& a, const UnivariatePoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return UnivariatePoly(std::move(c));
}

UnivariatePoly operator*(double c, const UnivariatePoly& a) {
  std::vector<double> out = a.coeffs_;
  for (double& v : out) v *= c;
  return UnivariatePoly(std::move(out));
}

// ----------------------------------------------------------------- bivariate

BivariatePoly::BivariatePoly(Eigen::MatrixXd coeffs, Labels vars)
    : coeffs_(trim_grid(std::move(coeffs))), vars_(std::move(vars)) {}

BivariatePoly BivariatePoly::constant(double c, Labels vars) {
  return BivariatePoly(Eigen::MatrixXd::Constant(1, 1, c), std::move(vars));
}

BivariatePoly BivariatePoly::variable(int which, Labels vars) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  if (which == 0) c(1, 0) = 1.0;
  else c(0, 1) = 1.0;
  return BivariatePoly(c, std::move(vars));
}

int BivariatePoly::var_index(const std::string& label) const {
  if (label == vars_[0]) return 0;
  if (label == vars_[1]) return 1;
  throw LabelMismatch("polynomial has no variable '" + label + "'");
}

bool BivariatePoly::is_zero() const { return coeffs_.cwiseAbs().maxCoeff() == 0.0; }

int BivariatePoly::degree(int var) const {
  if (is_zero()) return -1;
  return static_cast<int>((var == 0 ? coeffs_.rows() : coeffs_.cols()) - 1);
}

int BivariatePoly::total_degree() const {
  if (is_zero()) return -1;
  const double tol = kTrimTol * scale();
  int d = 0;
  for (Eigen::Index i = 0; i < coeffs_.rows(); ++i)
    for (Eigen::Index j = 0; j < coeffs_.cols(); ++j)
      if (std::abs(coeffs_(i, j)) > tol) d = std::max(d, static_cast<int>(i + j));
  return d;
}

double BivariatePoly::scale() const { return coeffs_.cwiseAbs().maxCoeff(); }

double BivariatePoly::operator()(double x1, double x2) const {
  double acc = 0.0;
  for (Eigen::Index i = coeffs_.rows() - 1; i >= 0; --i) {
    double row = 0.0;
    for (Eigen::Index j = coeffs_.cols() - 1; j >= 0; --j) row = row * x2 + coeffs_(i, j);
    acc = acc * x1 + row;
  }
  return acc;
}

UnivariatePoly BivariatePoly::slice(int fixed, double value) const {
  if (fixed == 0) {
    std::vector<double> c(coeffs_.cols(), 0.0);
    for (Eigen::Index j = 0; j < coeffs_.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index i = coeffs_.rows() - 1; i >= 0; --i) acc = acc * value + coeffs_(i, j);
      c[j] = acc;
    }
    return UnivariatePoly(std::move(c));
  }
  std::vector<double> c(coeffs_.rows(), 0.0);
  for (Eigen::Index i = 0; i < coeffs_.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = coeffs_.cols() - 1; j >= 0; --j) acc = acc * value + coeffs_(i, j);
    c[i] = acc;
  }
  return UnivariatePoly(std::move(c));
}

UnivariatePoly BivariatePoly::coefficient_in(int var, int power) const {
  if (var == 0) {
    if (power >= coeffs_.rows()) return {};
    const Eigen::RowVectorXd r = coeffs_.row(power);
    return UnivariatePoly(std::vector<double>(r.data(), r.data() + r.size()));
  }
  if (power >= coeffs_.cols()) return {};
  const Eigen::VectorXd c = coeffs_.col(power);
  return UnivariatePoly(std::vector<double>(c.data(), c.data() + c.size()));
}

BivariatePoly operator+(const BivariatePoly& a, const BivariatePoly& b) {
  require_same_labels(a, b);
  const auto r = std::max(a.coeffs_.rows(), b.coeffs_.rows());
  const auto c = std::max(a.coeffs_.cols(), b.coeffs_.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r, c);
  out.topLeftCorner(a.coeffs_.rows(), a.coeffs_.cols()) += a.coeffs_;
  out.topLeftCorner(b.coeffs_.rows(), b.coeffs_.cols()) += b.coeffs_;
  return BivariatePoly(out, a.vars_);
}

BivariatePoly operator-(const BivariatePoly& a, const BivariatePoly& b) { return a + (-1.0) * b; }

BivariatePoly operator*(const BivariatePoly& a, const BivariatePoly& b) {
  require_same_labels(a, b);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.coeffs_.rows() + b.coeffs_.rows() - 1,
                                              a.coeffs_.cols() + b.coeffs_.cols() - 1);
  for (Eigen::Index i = 0; i < a.coeffs_.rows(); ++i)
    for (Eigen::Index j = 0; j < a.coeffs_.cols(); ++j) {
      if (a.coeffs_(i, j) == 0.0) continue;
      out.block(i, j, b.coeffs_.rows(), b.coeffs_.cols()) += a.coeffs_(i, j) * b.coeffs_;
    }
  return BivariatePoly(out, a.vars_);
}

BivariatePoly operator*(double c, const BivariatePoly& a) { return BivariatePoly(c * a.coeffs_, a.vars_); }

double poly_eval(const BivariatePoly& p, double x1, double x2) { return p(x1, x2); }
BivariatePoly poly_add(const BivariatePoly& p, const BivariatePoly& q) { return p + q; }
BivariatePoly poly_mul(const BivariatePoly& p, const BivariatePoly& q) { return p * q; }

// ----------------------------------------------------------------- sylvester

Eigen::MatrixXd SylvesterMatrix::at(double base_value) const {
  Eigen::MatrixXd m(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) m(r, c) = (*this)(r, c)(base_value);
  return m;
}

int SylvesterMatrix::degree_bound() const {
  int by_col = 0, by_row = 0;
  for (int c = 0; c < size; ++c) {
    int mx = 0;
    for (int r = 0; r < size; ++r) mx = std::max(mx, (*this)(r, c).degree());
    by_col += mx;
  }
  for (int r = 0; r < size; ++r) {
    int mx = 0;
    for (int c = 0; c < size; ++c) mx = std::max(mx, (*this)(r, c).degree());
    by_row += mx;
  }
  return std::min(by_col, by_row);
}

SylvesterMatrix sylvester(const BivariatePoly& qa, const BivariatePoly& qb, const std::string& base) {
  require_same_labels(qa, qb);
  if (qa.is_zero() || qb.is_zero()) throw DegeneratePolynomial("sylvester: zero polynomial");
  const int b = qa.var_index(base);
  const int e = 1 - b;
  const int l = qa.degree(e);
  const int m = qb.degree(e);
  SylvesterMatrix s;
  s.size = l + m;
  s.base = base;
  s.entries.assign(static_cast<std::size_t>(s.size) * s.size, UnivariatePoly{});
  for (int j = 0; j < m; ++j)
    for (int i = 0; i <= l; ++i) s.entries[(j + l - i) * s.size + j] = qa.coefficient_in(e, i);
  for (int j = 0; j < l; ++j)
    for (int i = 0; i <= m; ++i) s.entries[(j + m - i) * s.size + (m + j)] = qb.coefficient_in(e, i);
  return s;
}

// ----------------------------------------------------------------- chebyshev

std::vector<double> chebyshev_nodes(int n, Interval domain) {
  std::vector<double> x(n);
  const double mid = 0.5 * (domain.lo + domain.hi);
  const double half = 0.5 * (domain.hi - domain.lo);
  for (int j = 0; j < n; ++j) x[j] = mid + half * std::cos(std::numbers::pi * (j + 0.5) / n);
  return x;
}

ChebyshevSeries::ChebyshevSeries(std::vector<double> coeffs, Interval domain)
    : coeffs_(std::move(coeffs)), domain_(domain) {}

ChebyshevSeries ChebyshevSeries::interpolate(const std::vector<double>& values, Interval domain) {
  const int n = static_cast<int>(values.size());
  std::vector<double> c(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += values[j] * std::cos(std::numbers::pi * i * (j + 0.5) / n);
    c[i] = (i == 0 ? 1.0 : 2.0) * acc / n;
  }
  return ChebyshevSeries(std::move(c), domain);
}

double ChebyshevSeries::scale() const {
  double mx = 0.0;
  for (double v : coeffs_) mx = std::max(mx, std::abs(v));
  return mx;
}

bool ChebyshevSeries::is_zero(double abs_tol) const { return scale() <= abs_tol; }

double ChebyshevSeries::operator()(double x) const {
  const double y = (2.0 * x - domain_.lo - domain_.hi) / (domain_.hi - domain_.lo);
  double b1 = 0.0, b2 = 0.0;
  for (auto i = static_cast<int>(coeffs_.size()) - 1; i >= 1; --i) {
    const double b0 = coeffs_[i] + 2.0 * y * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  const double c0 = coeffs_.empty() ? 0.0 : coeffs_[0];
  return c0 + y * b1 - b2;
}

UnivariatePoly ChebyshevSeries::to_monomial() const {
  // Expand in y first, then substitute y = a x + b by Horner.
  const std::size_t n = coeffs_.size();
  std::vector<double> in_y(n, 0.0);
  std::vector<double> t_prev{1.0}, t_cur{0.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& t = (i == 0) ? t_prev : t_cur;
    for (std::size_t k = 0; k < t.size() && k < n; ++k) in_y[k] += coeffs_[i] * t[k];
    if (i >= 1) {
      std::vector<double> t_next(t_cur.size() + 1, 0.0);
      for (std::size_t k = 0; k < t_cur.size(); ++k) t_next[k + 1] += 2.0 * t_cur[k];
      for (std::size_t k = 0; k < t_prev.size(); ++k) t_next[k] -= t_prev[k];
      t_prev = std::move(t_cur);
      t_cur = std::move(t_next);
    }
  }
  const double a = 2.0 / (domain_.hi - domain_.lo);
  const double b = -(domain_.lo + domain_.hi) / (domain_.hi - domain_.lo);
  const UnivariatePoly lin({b, a});
  UnivariatePoly acc;
  for (auto i = static_cast<int>(n) - 1; i >= 0; --i) acc = acc * lin + UnivariatePoly({in_y[i]});
  return acc;
}

std::vector<double> ChebyshevSeries::roots(double imag_tol) const {
  std::vector<double> c = trimmed(coeffs_, 1e-12);
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return {};
  std::vector<double> candidates;
  if (n == 1) {
    candidates.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXd col = Eigen::MatrixXd::Zero(n, n);
    col(0, 1) = 1.0;
    for (int i = 1; i < n - 1; ++i) {
      col(i, i - 1) = 0.5;
      col(i, i + 1) = 0.5;
    }
    col(n - 1, n - 2) += 0.5;
    for (int j = 0; j < n; ++j) col(n - 1, j) -= c[j] / (2.0 * c[n]);
    for (const auto& ev : eigenvalues(col)) {
      if (std::abs(ev.imag()) <= imag_tol * std::max(1.0, std::abs(ev.real())))
        candidates.push_back(ev.real());
    }
  }
  // Newton polish in y with the derivative series.
  std::vector<double> d(n, 0.0);
  for (int k = n; k >= 1; --k) {
    const double prev = (k + 1 <= n - 1) ? d[k + 1] : 0.0;
    d[k - 1] = prev + 2.0 * k * c[k];
  }
  if (!d.empty()) d[0] *= 0.5;
  const auto clenshaw = [](const std::vector<double>& s, double y) {
    double b1 = 0.0, b2 = 0.0;
    for (auto i = static_cast<int>(s.size()) - 1; i >= 1; --i) {
      const double b0 = s[i] + 2.0 * y * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return (s.empty() ? 0.0 : s[0]) + y * b1 - b2;
  };
  std::vector<double> out;
  const double mid = 0.5 * (domain_.lo + domain_.hi);
  const double half = 0.5 * (domain_.hi - domain_.lo);
  for (double y : candidates) {
    if (y < -1.0 - 1e-6 || y > 1.0 + 1e-6) continue;
    double best = y, best_val = std::abs(clenshaw(c, y));
    for (int it = 0; it < 50; ++it) {
      const double f = clenshaw(c, y);
      const double fp = clenshaw(d, y);
      if (fp == 0.0 || !std::isfinite(f / fp)) break;
      const double step = f / fp;
      y -= step;
      const double v = std::abs(clenshaw(c, y));
      if (v < best_val) {
        best_val = v;
        best = y;
      }
      if (std::abs(step) <= 1e-16) break;
    }
    if (best < -1.0 - 1e-9 || best > 1.0 + 1e-9) continue;
    out.push_back(mid + half * std::clamp(best, -1.0, 1.0));
  }
  return dedup_sorted(std::move(out), 1e-10);
}

// ----------------------------------------------------------------- resultant

ChebyshevSeries resultant_series(const BivariatePoly& qa, const BivariatePoly& qb,
                                 const std::string& eliminate, const ResultantOptions& opts) {
  require_same_labels(qa, qb);
  const int e = qa.var_index(eliminate);
  const std::string base = qa.vars()[1 - e];
  const SylvesterMatrix syl = sylvester(qa, qb, base);
  if (syl.size == 0) return ChebyshevSeries({1.0}, opts.nodes);

  const int bound = std::min(syl.degree_bound(), qa.total_degree() * qb.total_degree());
  const int n = bound + 1;
  // Hadamard's bound on |det| sets the scale of rounding noise in each value.
  double hadamard = 0.0;
  const auto det_at = [&](double x) {
    const Eigen::MatrixXd s = syl.at(x);
    hadamard = std::max(hadamard, s.colwise().norm().prod());
    return s.partialPivLu().determinant();
  };

  const std::vector<double> nodes = chebyshev_nodes(n, opts.nodes);
  std::vector<double> values(n);
  double vmax = 0.0;
  for (int j = 0; j < n; ++j) {
    values[j] = det_at(nodes[j]);
    vmax = std::max(vmax, std::abs(values[j]));
  }
  ChebyshevSeries series = ChebyshevSeries::interpolate(values, opts.nodes);

  // Off-node check at the Chebyshev extrema, which interleave the nodes.
  const double mid = 0.5 * (opts.nodes.lo + opts.nodes.hi);
  const double half = 0.5 * (opts.nodes.hi - opts.nodes.lo);
  double worst = 0.0, check_scale = std::max(vmax, 1e-4 * hadamard);
  for (int j = 0; j <= n; ++j) {
    const double x = mid + half * std::cos(std::numbers::pi * j / n);
    const double exact = det_at(x);
    check_scale = std::max(check_scale, std::abs(exact));
    worst = std::max(worst, std::abs(exact - series(x)));
  }
  if (check_scale > 0.0 && worst > opts.residual_tol * check_scale)
    throw InterpolationError("resultant interpolation residual " + std::to_string(worst / check_scale) +
                             " exceeds tolerance at degree bound " + std::to_string(bound));
  return series;
}

UnivariatePoly resultant(const BivariatePoly& qa, const BivariatePoly& qb, const std::string& eliminate,
                         const ResultantOptions& opts) {
  return resultant_series(qa, qb, eliminate, opts).to_monomial();
}

// --------------------------------------------------------------------- roots

RootSet uni_roots(const UnivariatePoly& p, Interval interval, const RootOptions& opts) {
  RootSet out;
  if (p.is_zero()) {
    out.identically_zero = true;
    return out;
  }
  const auto& c = p.coeffs();
  const int n = p.degree();
  if (n < 1) return out;

  std::vector<double> candidates;
  if (n == 1) {
    candidates.push_back(-c[0] / c[1]);
  } else {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
    for (const auto& ev : eigenvalues(comp)) {
      if (std::abs(ev.imag()) <= opts.imag_tol * std::max(1.0, std::abs(ev.real())))
        candidates.push_back(ev.real());
    }
  }

  const UnivariatePoly dp = p.derivative();
  const double width = interval.hi - interval.lo;
  const double slack = 1e-8 * std::max(1.0, width);
  std::vector<double> accepted;
  for (double x : candidates) {
    double best = x, best_val = std::abs(p(x));
    for (int it = 0; it < 100; ++it) {
      const double d = dp(x);
      if (d == 0.0) break;
      const double step = p(x) / d;
      if (!std::isfinite(step)) break;
      x -= step;
      const double v = std::abs(p(x));
      if (v < best_val) {
        best_val = v;
        best = x;
      }
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    if (best < interval.lo - slack || best > interval.hi + slack) continue;
    if (best_val > 1e-8 * abs_scale_at(c, best)) continue;
    accepted.push_back(std::clamp(best, interval.lo, interval.hi));
  }
  out.roots = dedup_sorted(std::move(accepted), opts.dedup_tol);
  return out;
}

// ------------------------------------------------------------- common factor

const char* to_string(CommonFactor c) {
  switch (c) {
    case CommonFactor::none: return "none";
    case CommonFactor::common_factor: return "common_factor";
    case CommonFactor::degenerate: return "degenerate";
  }
  return "unknown";
}

CommonFactor common_factor_test(const BivariatePoly& qa, const BivariatePoly& qb, double tol,
                                const ResultantOptions& opts) {
  require_same_labels(qa, qb);
  if (qa.is_zero() && qb.is_zero()) return CommonFactor::degenerate;
  // a zero polynomial is divisible by the other one
  if (qa.is_zero() || qb.is_zero()) return CommonFactor::common_factor;
  const double m = std::max(qa.scale(), qb.scale());
  for (const auto& var : qa.vars()) {
    const ChebyshevSeries res = resultant_series(qa, qb, var, opts);
    const int dim = sylvester(qa, qb, qa.vars()[1 - qa.var_index(var)]).size;
    if (dim == 0) continue;
    if (res.is_zero(tol * std::pow(m, dim))) return CommonFactor::common_factor;
  }
  return CommonFactor::none;
}

// ---------------------------------------------------------- matrix polynomial

Eigen::MatrixXd MatrixPolynomial::operator()(double x) const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(terms.front().rows(), terms.front().cols());
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) acc = acc * x + *it;
  return acc;
}

MatrixPolynomial operator*(const MatrixPolynomial& a, const MatrixPolynomial& b) {
  MatrixPolynomial out;
  const auto rows = a.terms.front().rows();
  const auto cols = b.terms.front().cols();
  out.terms.assign(a.terms.size() + b.terms.size() - 1, Eigen::MatrixXd::Zero(rows, cols));
  for (std::size_t i = 0; i < a.terms.size(); ++i)
    for (std::size_t j = 0; j < b.terms.size(); ++j) out.terms[i + j] += a.terms[i] * b.terms[j];
  return out;
}

}  // namespace hyperddc
