#include "hyperddc/spec_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace hyperddc {

namespace {

int line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

struct Reader {
  std::string source;

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const { throw SpecError(source, line_of(n), msg); }

  YAML::Node require(const YAML::Node& parent, const char* key) const {
    const YAML::Node n = parent[key];
    if (!n) fail(parent, std::string("missing field '") + key + "'");
    return n;
  }

  double real(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    double v;
    try {
      v = n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be a number, got '" + n.Scalar() + "'");
    }
    if (!std::isfinite(v)) fail(n, what + " must be finite");
    return v;
  }

  int integer(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be an integer");
    try {
      return n.as<int>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be an integer, got '" + n.Scalar() + "'");
    }
  }

  std::vector<std::string> labels(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence() || n.size() == 0) fail(n, what + " must be a non-empty list of labels");
    std::vector<std::string> out;
    for (const auto& e : n) {
      if (!e.IsScalar()) fail(e, what + " entries must be labels");
      if (std::find(out.begin(), out.end(), e.Scalar()) != out.end()) fail(e, "duplicate label '" + e.Scalar() + "'");
      out.push_back(e.Scalar());
    }
    return out;
  }

  Vector vector(const YAML::Node& n, std::size_t len, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list");
    if (n.size() != len) fail(n, what + " has " + std::to_string(n.size()) + " entries, expected " + std::to_string(len));
    Vector v(static_cast<Eigen::Index>(len));
    for (std::size_t i = 0; i < len; ++i) v(static_cast<Eigen::Index>(i)) = real(n[i], what);
    return v;
  }

  Matrix matrix(const YAML::Node& n, std::size_t rows, std::size_t cols, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of rows");
    if (n.size() != rows) fail(n, what + " has " + std::to_string(n.size()) + " rows, expected " + std::to_string(rows));
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) m.row(static_cast<Eigen::Index>(r)) = vector(n[r], cols, what).transpose();
    return m;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

YAML::Node parse_yaml(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SpecError(source, e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
  }
}

}  // namespace

SpecError::SpecError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

int ModelSpec::choice_index(const std::string& label) const {
  const auto it = std::find(choice_labels.begin(), choice_labels.end(), label);
  return it == choice_labels.end() ? -1 : static_cast<int>(it - choice_labels.begin());
}

int ModelSpec::state_index(const std::string& label) const {
  const auto it = std::find(state_labels.begin(), state_labels.end(), label);
  return it == state_labels.end() ? -1 : static_cast<int>(it - state_labels.begin());
}

FiniteModel ModelSpec::finite_model() const {
  if (is_stationary()) throw std::logic_error("model spec is stationary");
  return FiniteModel(*horizon, transitions, finite_utilities);
}

StationaryModel ModelSpec::stationary_model(const DiscountPair& disc) const {
  if (!is_stationary()) throw std::logic_error("model spec has a finite horizon");
  return StationaryModel(transitions, stationary_utilities, disc);
}

ModelSpec parse_model_spec(const std::string& text, const std::string& source) {
  const Reader rd{source};
  const YAML::Node root = parse_yaml(text, source);
  if (!root.IsMap()) throw SpecError(source, line_of(root), "model spec must be a mapping");

  ModelSpec spec;
  if (const YAML::Node h = root["horizon"]) {
    const int T = rd.integer(h, "horizon");
    if (T < 2) rd.fail(h, "horizon must be at least 2");
    spec.horizon = T;
  }
  spec.choice_labels = rd.labels(rd.require(root, "choices"), "choices");
  if (spec.choice_labels.size() < 2) rd.fail(root["choices"], "at least two choices are required");
  spec.state_labels = rd.labels(rd.require(root, "states"), "states");
  const std::size_t K = spec.choice_labels.size();
  const std::size_t J = spec.state_labels.size();

  bool normalize = false;
  if (const YAML::Node n = root["normalize_transitions"]) {
    try {
      normalize = n.as<bool>();
    } catch (const YAML::Exception&) {
      rd.fail(n, "normalize_transitions must be true or false");
    }
  }

  const YAML::Node tr = rd.require(root, "transitions");
  if (!tr.IsMap()) rd.fail(tr, "transitions must map each choice label to a matrix");
  for (const auto& kv : tr)
    if (spec.choice_index(kv.first.Scalar()) < 0) rd.fail(kv.first, "unknown choice '" + kv.first.Scalar() + "'");
  for (std::size_t k = 0; k < K; ++k) {
    const std::string& label = spec.choice_labels[k];
    const YAML::Node m = tr[label];
    if (!m) rd.fail(tr, "missing transition matrix for choice '" + label + "'");
    Matrix q = rd.matrix(m, J, J, "transitions." + label);
    for (Eigen::Index x = 0; x < q.rows(); ++x) {
      const YAML::Node row = m[static_cast<std::size_t>(x)];
      if ((q.row(x).array() < 0.0).any()) rd.fail(row, "transition row has a negative entry");
      const double sum = q.row(x).sum();
      if (normalize) {
        if (!(sum > 0.0)) rd.fail(row, "transition row sums to zero");
        q.row(x) /= sum;
      } else if (std::abs(sum - 1.0) > kStochasticTol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transition row sums to " << sum << ", not 1 (set normalize_transitions: true to rescale)";
        rd.fail(row, msg.str());
      }
    }
    spec.transitions.push_back(std::move(q));
  }

  const YAML::Node ut = rd.require(root, "utilities");
  if (!ut.IsMap()) rd.fail(ut, "utilities must map each non-reference choice label to its values");
  for (const auto& kv : ut) {
    const int k = spec.choice_index(kv.first.Scalar());
    if (k < 0) rd.fail(kv.first, "unknown choice '" + kv.first.Scalar() + "'");
    if (k == static_cast<int>(K) - 1)
      rd.fail(kv.first, "the reference choice '" + kv.first.Scalar() + "' has utility fixed at zero");
  }
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const std::string& label = spec.choice_labels[k];
    const YAML::Node u = ut[label];
    if (!u) rd.fail(ut, "missing utilities for choice '" + label + "'");
    if (spec.horizon)
      spec.finite_utilities.push_back(rd.matrix(u, J, static_cast<std::size_t>(*spec.horizon), "utilities." + label));
    else
      spec.stationary_utilities.push_back(rd.vector(u, J, "utilities." + label));
  }

  if (const YAML::Node d = root["discount"]) {
    if (!d.IsMap()) rd.fail(d, "discount must contain beta and delta");
    DiscountPair disc{rd.real(rd.require(d, "beta"), "beta"), rd.real(rd.require(d, "delta"), "delta")};
    if (auto rep = validate_discount(disc, spec.is_stationary()); !rep.ok()) rd.fail(d, rep.violations.front());
    spec.discount = disc;
  }
  for (const auto& kv : root) {
    static const char* known[] = {"horizon", "choices", "states", "transitions", "utilities", "discount",
                                  "normalize_transitions"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return kv.first.Scalar() == k; }))
      rd.fail(kv.first, "unknown field '" + kv.first.Scalar() + "'");
  }
  return spec;
}

ModelSpec load_model_spec(const std::string& path) { return parse_model_spec(slurp(path), path); }

std::vector<ExclusionRestriction> parse_restrictions(const std::string& text, const ModelSpec& spec,
                                                     const std::string& source) {
  const Reader rd{source};
  const YAML::Node root = parse_yaml(text, source);
  const YAML::Node list = root.IsMap() ? root["restrictions"] : root;
  if (!list || !list.IsSequence() || list.size() == 0)
    throw SpecError(source, line_of(root), "expected a non-empty 'restrictions' list");

  std::vector<ExclusionRestriction> out;
  for (const auto& e : list) {
    if (!e.IsMap()) rd.fail(e, "each restriction must be a mapping");
    const YAML::Node c = rd.require(e, "choice");
    const int k = spec.choice_index(c.Scalar());
    if (k < 0) rd.fail(c, "unknown choice '" + c.Scalar() + "'");
    if (k == static_cast<int>(spec.choice_labels.size()) - 1) rd.fail(c, "restrictions apply to non-reference choices");
    const YAML::Node st = rd.require(e, "states");
    if (!st.IsSequence() || st.size() != 2) rd.fail(st, "states must list exactly two labels");
    int x[2];
    for (std::size_t i = 0; i < 2; ++i) {
      x[i] = spec.state_index(st[i].Scalar());
      if (x[i] < 0) rd.fail(st[i], "unknown state '" + st[i].Scalar() + "'");
    }
    ExclusionRestriction r;
    if (spec.is_stationary()) {
      if (e["period"] || e["periods"]) rd.fail(e, "stationary restrictions take no period");
      r = ExclusionRestriction::stationary(k, x[0], x[1]);
    } else if (const YAML::Node p = e["period"]) {
      const int t = rd.integer(p, "period");
      r = ExclusionRestriction::same_period(k, t - 1, x[0], x[1]);
    } else if (const YAML::Node ps = e["periods"]) {
      if (!ps.IsSequence() || ps.size() != 2) rd.fail(ps, "periods must list exactly two periods");
      r = ExclusionRestriction::cross_period(k, rd.integer(ps[0], "period") - 1, x[0],
                                             rd.integer(ps[1], "period") - 1, x[1]);
    } else {
      rd.fail(e, "finite-horizon restriction needs 'period' or 'periods'");
    }
    try {
      validate_restriction(r, spec.horizon.value_or(0), static_cast<int>(spec.choice_labels.size()),
                           static_cast<int>(spec.state_labels.size()));
    } catch (const DomainError& err) {
      rd.fail(e, err.what());
    }
    out.push_back(r);
  }
  return out;
}

std::vector<ExclusionRestriction> load_restrictions(const std::string& path, const ModelSpec& spec) {
  return parse_restrictions(slurp(path), spec, path);
}

}  // namespace hyperddc
