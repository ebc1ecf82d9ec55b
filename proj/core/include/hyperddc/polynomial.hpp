#pragma once

// Dense real polynomials in one and two variables, Sylvester matrices,
// resultants by evaluation-interpolation at Chebyshev nodes, common-factor
// detection and real root extraction.

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hyperddc {

/// Relative tolerance for trimming trailing coefficients.
inline constexpr double kTrimTol = 1e-13;

class DegeneratePolynomial : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InterpolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LabelMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Coefficients in ascending powers; degree is tight.
class UnivariatePoly {
 public:
  UnivariatePoly() = default;
  explicit UnivariatePoly(std::vector<double> ascending);

  bool is_zero() const { return coeffs_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double coefficient(int i) const;
  const std::vector<double>& coeffs() const { return coeffs_; }
  double scale() const;

  double operator()(double x) const;
  UnivariatePoly derivative() const;

  friend UnivariatePoly operator+(const UnivariatePoly& a, const UnivariatePoly& b);
  friend UnivariatePoly operator-(const UnivariatePoly& a, const UnivariatePoly& b);
  friend UnivariatePoly operator*(const UnivariatePoly& a, const UnivariatePoly& b);
  friend UnivariatePoly operator*(double c, const UnivariatePoly& a);

 private:
  std::vector<double> coeffs_;
};

/// Entry (i, j) of the coefficient grid multiplies var1^i var2^j.
class BivariatePoly {
 public:
  using Labels = std::array<std::string, 2>;

  BivariatePoly() : BivariatePoly(Eigen::MatrixXd::Zero(1, 1), {"x1", "x2"}) {}
  BivariatePoly(Eigen::MatrixXd coeffs, Labels vars);

  static BivariatePoly constant(double c, Labels vars);
  /// The polynomial equal to variable `which` (0 or 1).
  static BivariatePoly variable(int which, Labels vars);

  const Eigen::MatrixXd& coeffs() const { return coeffs_; }
  const Labels& vars() const { return vars_; }
  /// Index of a variable label; throws LabelMismatch when absent.
  int var_index(const std::string& label) const;

  bool is_zero() const;
  int degree(int var) const;
  int total_degree() const;
  double scale() const;

  double operator()(double x1, double x2) const;
  /// Fix variable `fixed` at `value`; the result is a polynomial in the other.
  UnivariatePoly slice(int fixed, double value) const;
  /// Coefficient of var^power as a polynomial in the other variable.
  UnivariatePoly coefficient_in(int var, int power) const;

  friend BivariatePoly operator+(const BivariatePoly& a, const BivariatePoly& b);
  friend BivariatePoly operator-(const BivariatePoly& a, const BivariatePoly& b);
  friend BivariatePoly operator*(const BivariatePoly& a, const BivariatePoly& b);
  friend BivariatePoly operator*(double c, const BivariatePoly& a);

 private:
  Eigen::MatrixXd coeffs_;
  Labels vars_;
};

double poly_eval(const BivariatePoly& p, double x1, double x2);
BivariatePoly poly_add(const BivariatePoly& p, const BivariatePoly& q);
BivariatePoly poly_mul(const BivariatePoly& p, const BivariatePoly& q);

/// Sylvester matrix of two polynomials, eliminating the non-base variable.
/// Column j < m holds the first polynomial's coefficients a_l..a_0 starting
/// at row j; column m + j holds b_m..b_0 starting at row j.
struct SylvesterMatrix {
  int size = 0;
  std::string base;
  std::vector<UnivariatePoly> entries;  // row-major

  const UnivariatePoly& operator()(int r, int c) const { return entries[r * size + c]; }
  Eigen::MatrixXd at(double base_value) const;
  /// A priori degree bound for the determinant in the base variable.
  int degree_bound() const;
};

SylvesterMatrix sylvester(const BivariatePoly& qa, const BivariatePoly& qb, const std::string& base);

/// Chebyshev series on an interval: sum_i c_i T_i(y), y = (2x - lo - hi)/(hi - lo).
class ChebyshevSeries {
 public:
  ChebyshevSeries() = default;
  ChebyshevSeries(std::vector<double> coeffs, Interval domain);

  /// Fits the degree n-1 interpolant through values at the n Chebyshev nodes.
  static ChebyshevSeries interpolate(const std::vector<double>& values, Interval domain);

  const std::vector<double>& coeffs() const { return coeffs_; }
  const Interval& domain() const { return domain_; }
  double scale() const;
  bool is_zero(double abs_tol) const;
  double operator()(double x) const;
  UnivariatePoly to_monomial() const;
  /// Real roots in the domain from colleague-matrix eigenvalues.
  std::vector<double> roots(double imag_tol = 1e-8) const;

 private:
  std::vector<double> coeffs_;
  Interval domain_;
};

/// The n Chebyshev points of the first kind mapped onto `domain`.
std::vector<double> chebyshev_nodes(int n, Interval domain);

struct ResultantOptions {
  Interval nodes{-1.0, 1.0};       // interval hosting the interpolation nodes
  double residual_tol = 1e-8;      // relative, checked at off-node points
};

/// det Syl as a Chebyshev series in the remaining variable.
ChebyshevSeries resultant_series(const BivariatePoly& qa, const BivariatePoly& qb,
                                 const std::string& eliminate, const ResultantOptions& opts = {});

/// det Syl as a monomial polynomial in the remaining variable.
UnivariatePoly resultant(const BivariatePoly& qa, const BivariatePoly& qb,
                         const std::string& eliminate, const ResultantOptions& opts = {});

struct RootOptions {
  double imag_tol = 1e-8;
  double dedup_tol = 1e-8;
};

struct RootSet {
  std::vector<double> roots;
  bool identically_zero = false;
};

/// Real roots in [lo, hi] via companion-matrix eigenvalues and Newton polish.
RootSet uni_roots(const UnivariatePoly& p, Interval interval, const RootOptions& opts = {});

enum class CommonFactor { none, common_factor, degenerate };

const char* to_string(CommonFactor c);

/// Declares a common factor when either resultant is identically zero
/// relative to tol * (max input coefficient)^(Sylvester dimension), or when
/// exactly one input is zero. Two zero inputs are degenerate.
CommonFactor common_factor_test(const BivariatePoly& qa, const BivariatePoly& qb, double tol = 1e-10,
                                const ResultantOptions& opts = {});

/// Matrix-valued polynomial in one variable: sum_i terms[i] x^i.
struct MatrixPolynomial {
  std::vector<Eigen::MatrixXd> terms;

  Eigen::MatrixXd operator()(double x) const;
  friend MatrixPolynomial operator*(const MatrixPolynomial& a, const MatrixPolynomial& b);
};

}  // namespace hyperddc
