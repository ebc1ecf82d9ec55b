#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <hyperddc/identify.hpp>
#include <hyperddc/model.hpp>
#include <hyperddc/polynomial.hpp>
#include <hyperddc/simest.hpp>
#include <hyperddc/spec_file.hpp>
#include <hyperddc/stationary.hpp>

namespace hyperddc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string spec;
  std::string restrictions;
  std::optional<double> beta;
  std::optional<double> delta;
  std::uint64_t seed = 20200527;
  int n_agents = 0;
  int replications = 50;
  int grid = 0;
  std::string out = ".";
  bool paper_scale = false;
  bool geometric = false;
  std::optional<double> tol;
};

struct Loaded {
  ModelSpec spec;
  DiscountPair disc;
  std::vector<ExclusionRestriction> rs;
};

DiscountPair resolve_discount(const ModelSpec& spec, const RunConfig& c) {
  DiscountPair d;
  if (spec.discount) d = *spec.discount;
  else if (!c.beta || !c.delta)
    throw InputError("no discount block in the spec; pass --beta and --delta");
  if (c.beta) d.beta = *c.beta;
  if (c.delta) d.delta = *c.delta;
  const ValidationReport rep = validate_discount(d, spec.is_stationary());
  if (!rep.ok()) throw InputError(rep.violations.front());
  return d;
}

Loaded load(const RunConfig& c, bool need_restrictions) {
  Loaded l{load_model_spec(c.spec), {}, {}};
  l.disc = resolve_discount(l.spec, c);
  if (need_restrictions) {
    if (c.restrictions.empty()) throw InputError("--restrictions is required");
    l.rs = load_restrictions(c.restrictions, l.spec);
    if (l.rs.size() < 2) throw InputError("at least two restrictions are required");
  }
  return l;
}

fs::path out_dir(const RunConfig& c) {
  fs::path p(c.out);
  fs::create_directories(p);
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw InputError("cannot write " + p.string());
  return f;
}

StationaryOptions stationary_options(const RunConfig& c) {
  StationaryOptions o;
  if (c.tol) o.tol = *c.tol;
  return o;
}

ChoiceProbabilities exact_ccp(const Loaded& l, const RunConfig& c) {
  if (l.spec.is_stationary())
    return solve_stationary(l.spec.stationary_model(l.disc), stationary_options(c)).primary().s_star;
  return solve_finite(l.spec.finite_model(), l.disc).ccp;
}

// Exact CCPs with the true transitions, or frequencies from a simulated panel.
ChoiceData choice_data(const Loaded& l, const RunConfig& c) {
  if (c.n_agents <= 0) return {exact_ccp(l, c), l.spec.transitions};
  Panel p;
  if (l.spec.is_stationary()) {
    const StationaryModel m = l.spec.stationary_model(l.disc);
    p = simulate_panel(m, solve_stationary(m, stationary_options(c)).primary(), c.n_agents, 20, c.seed);
  } else {
    p = simulate_panel(l.spec.finite_model(), l.disc, c.n_agents, c.seed);
  }
  const CcpEstimate est = estimate_ccp(p);
  require_cells(est, l.rs);
  return {est.s, estimate_transitions(p).q};
}

EstimationOptions estimation_options(const Loaded& l, const RunConfig& c) {
  EstimationOptions o = l.spec.is_stationary() ? EstimationOptions::stationary() : EstimationOptions{};
  o.geometric = c.geometric;
  if (c.tol) o.simplex_tol = *c.tol;
  return o;
}

json candidate_json(const Candidate& cd) {
  return {{"beta", cd.beta}, {"delta", cd.delta}, {"gamma", cd.gamma()}, {"residuals", cd.residuals}};
}

json restriction_json(const ExclusionRestriction& r, const ModelSpec& s) {
  json j{{"choice", s.choice_labels[r.choice]},
         {"states", {s.state_labels[r.state1], s.state_labels[r.state2]}}};
  if (!r.is_stationary()) j["periods"] = {r.period1 + 1, r.period2 + 1};
  return j;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const Loaded l = load(c, false);
  const fs::path dir = out_dir(c);
  const auto& st = l.spec.state_labels;
  const auto& ch = l.spec.choice_labels;
  auto values = open_out(dir / "values.csv");
  values << "period,state";
  for (const auto& k : ch) values << ",w_" << k;
  values << ",v\n";
  const auto write_values = [&](const ValueBundle& vb, int periods, bool stationary) {
    for (int t = 0; t < periods; ++t)
      for (int x = 0; x < static_cast<int>(st.size()); ++x) {
        values << (stationary ? 0 : t + 1) << ',' << st[x];
        for (const auto& w : vb.w) values << ',' << fmt17(w(x, t));
        values << ',' << fmt17(vb.v(x, t)) << '\n';
      }
  };
  ChoiceProbabilities s;
  if (l.spec.is_stationary()) {
    const StationaryModel m = l.spec.stationary_model(l.disc);
    const StationarySolution sol = solve_stationary(m, stationary_options(c));
    const StationaryEquilibrium& eq = sol.primary();
    s = eq.s_star;
    const std::vector<Vector> w = omega(eq.s_star, m);
    ValueBundle vb;
    for (const Vector& wk : w) vb.w.push_back(wk);
    vb.v = eq.v_star;
    write_values(vb, 1, true);
    auto fp = open_out(dir / "fixed_point.txt");
    fp << "iterations " << eq.iterations << "\nresidual " << fmt17(eq.residual) << "\nfixed_points "
       << sol.fixed_points.size() << '\n';
    out << "fixed point after " << eq.iterations << " iterations, residual " << eq.residual << '\n';
  } else {
    const FiniteSolution sol = solve_finite(l.spec.finite_model(), l.disc);
    s = sol.ccp;
    write_values(sol.values, s.periods(), false);
    out << "solved " << s.periods() << " periods\n";
  }
  auto ccp = open_out(dir / "ccp.csv");
  write_ccp_csv(ccp, s);
  out << "wrote " << (dir / "ccp.csv").string() << " and " << (dir / "values.csv").string() << '\n';
  return kExitOk;
}

int cmd_identify(const RunConfig& c, std::ostream& out) {
  const Loaded l = load(c, true);
  const ChoiceData data = choice_data(l, c);
  const MomentSystem ms = build_moment_system(data, l.rs, c.spec);
  const IdentifyDomain dom = l.spec.is_stationary() ? IdentifyDomain::stationary() : IdentifyDomain::finite();
  const IdentifiedSet set = solve_identified_set(ms, dom);

  json rep;
  rep["spec"] = c.spec;
  rep["data"] = c.n_agents > 0 ? "simulated" : "exact";
  rep["restrictions"] = json::array();
  for (const auto& r : l.rs) rep["restrictions"].push_back(restriction_json(r, l.spec));
  rep["candidates"] = json::array();
  for (const auto& cd : set.candidates) rep["candidates"].push_back(candidate_json(cd));
  rep["bezout_bound"] = set.bezout_bound;
  rep["model_rejected"] = set.empty_model_rejected;
  rep["common_factor"] = set.common_factor_detected;
  rep["degenerate"] = set.degenerate;
  rep["identified_product"] = set.identified_product ? json(*set.identified_product) : json(nullptr);
  rep["resultant"] = {{"variable", "delta"}, {"eliminated", "gamma"}, {"coefficients", set.resultant.coeffs()}};
  rep["delta_roots"] = set.delta_roots;
  rep["warnings"] = set.warnings;
  if (c.grid > 0) {
    rep["grid_oracle"] = json::array();
    for (const auto& cd : grid_oracle(ms, dom, c.grid)) rep["grid_oracle"].push_back(candidate_json(cd));
  }
  const fs::path path = out_dir(c) / "identify.json";
  auto f = open_out(path);
  f << rep.dump(2) << '\n';

  if (set.empty_model_rejected) out << "model rejected: no (beta, delta) satisfies the restrictions\n";
  if (set.common_factor_detected) {
    out << "common factor: identified set is not finite\n";
    if (set.identified_product) out << "identified product beta*delta = " << *set.identified_product << '\n';
  }
  for (const auto& cd : set.candidates) out << "candidate beta=" << fmt17(cd.beta) << " delta=" << fmt17(cd.delta) << '\n';
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_estimate(const RunConfig& c, std::ostream& out) {
  const Loaded l = load(c, true);
  const MomentSystem ms = build_moment_system(choice_data(l, c), l.rs, c.spec);
  const EstimationResult r = minimum_distance(ms, estimation_options(l, c));
  json rep{{"beta_hat", r.beta_hat},          {"delta_hat", r.delta_hat},
           {"gamma_hat", r.gamma_hat()},      {"criterion", r.criterion_value},
           {"converged", r.converged},        {"geometric", c.geometric},
           {"weight_matrix", r.weight_matrix}, {"n_agents", c.n_agents},
           {"seed", c.seed}};
  const fs::path path = out_dir(c) / "estimate.json";
  auto f = open_out(path);
  f << rep.dump(2) << '\n';
  out << "beta_hat=" << fmt17(r.beta_hat) << " delta_hat=" << fmt17(r.delta_hat)
      << " criterion=" << fmt17(r.criterion_value) << (r.converged ? "" : " (not converged)") << '\n';
  return r.converged ? kExitOk : kExitNumeric;
}

int cmd_replicate(const RunConfig& c, std::ostream& out) {
  const Loaded l = load(c, true);
  if (l.spec.is_stationary()) throw InputError("replicate needs a finite-horizon spec");
  MonteCarloOptions o;
  o.n_agents = c.paper_scale ? 1000000 : (c.n_agents > 0 ? c.n_agents : 100000);
  o.replications = c.paper_scale ? 100 : c.replications;
  o.seed0 = c.seed;
  o.estimation = estimation_options(l, c);
  const MonteCarloTable t = monte_carlo(l.spec.finite_model(), l.disc, l.rs, o);
  const fs::path dir = out_dir(c);
  auto csv = open_out(dir / "replications.csv");
  write_replications_csv(csv, t);
  const MonteCarloSummary& s = t.summary;
  json rep{{"replications", o.replications}, {"n_agents", o.n_agents},   {"seed0", o.seed0},
           {"succeeded", s.succeeded},       {"mean_beta", s.mean_beta}, {"mean_delta", s.mean_delta},
           {"mean_gamma", s.mean_gamma},     {"sd_beta", s.sd_beta},     {"sd_delta", s.sd_delta},
           {"sd_gamma", s.sd_gamma}};
  auto js = open_out(dir / "summary.json");
  js << rep.dump(2) << '\n';
  out << s.succeeded << "/" << o.replications << " replications; mean beta=" << s.mean_beta
      << " delta=" << s.mean_delta << " gamma=" << s.mean_gamma << "; sd beta=" << s.sd_beta
      << " delta=" << s.sd_delta << " gamma=" << s.sd_gamma << '\n';
  return s.succeeded > 0 ? kExitOk : kExitNumeric;
}

int cmd_surface(const RunConfig& c, std::ostream& out) {
  const Loaded l = load(c, true);
  const MomentSystem ms = build_moment_system(choice_data(l, c), l.rs, c.spec);
  const EstimationOptions box = estimation_options(l, c);
  const int n = c.grid > 0 ? c.grid : 101;
  const auto betas = linspace(box.beta_lo, box.beta_hi, n);
  const auto deltas = linspace(box.delta_lo, box.delta_hi, n);
  const Matrix s = criterion_surface(ms, betas, deltas);
  const fs::path path = out_dir(c) / "surface.csv";
  auto f = open_out(path);
  write_surface_csv(f, s, betas, deltas);
  const TroughSummary tr = sublevel_summary(s, betas, deltas);
  out << "minimum S=" << fmt17(tr.s_min) << " at beta=" << betas[tr.argmin_beta] << " delta=" << deltas[tr.argmin_delta]
      << "; {S <= 10 S_min}: " << tr.cells << " cells, delta span " << tr.delta_span
      << (tr.connected ? ", connected" : ", not connected") << '\n';
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

void add_common(CLI::App* sub, RunConfig& c, bool restrictions) {
  sub->add_option("--spec", c.spec, "Model spec (YAML)")->required()->check(CLI::ExistingFile);
  if (restrictions) sub->add_option("--restrictions", c.restrictions, "Restrictions file (YAML)")->check(CLI::ExistingFile);
  sub->add_option("--beta", c.beta, "Override present-bias factor");
  sub->add_option("--delta", c.delta, "Override discount factor");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--tol", c.tol, "Solver tolerance override")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasi-hyperbolic dynamic discrete choice: solve, identify, estimate"};
  app.require_subcommand(1);
  RunConfig c;

  auto* solve = app.add_subcommand("solve", "Solve the model and write CCP and value tables");
  add_common(solve, c, false);

  auto* identify = app.add_subcommand("identify", "Compute the identified set of (beta, delta)");
  add_common(identify, c, true);
  identify->add_option("--grid", c.grid, "Also run the grid oracle with this lattice size")->check(CLI::NonNegativeNumber);
  identify->add_option("--n-agents", c.n_agents, "Use frequencies from a simulated panel of this size");
  identify->add_option("--seed", c.seed, "Simulation seed");

  auto* estimate = app.add_subcommand("estimate", "Minimum-distance estimate of (beta, delta)");
  add_common(estimate, c, true);
  estimate->add_option("--n-agents", c.n_agents, "Simulated panel size (exact CCPs when omitted)")
      ->check(CLI::NonNegativeNumber);
  estimate->add_option("--seed", c.seed, "Simulation seed");
  estimate->add_flag("--geometric", c.geometric, "Fix beta = 1");

  auto* replicate = app.add_subcommand("replicate", "Monte Carlo replications of the estimator");
  add_common(replicate, c, true);
  replicate->add_option("--n-agents", c.n_agents, "Agents per replication (default 100000)")
      ->check(CLI::PositiveNumber);
  replicate->add_option("--replications", c.replications, "Number of replications")->check(CLI::PositiveNumber);
  replicate->add_option("--seed", c.seed, "Base seed; replication r uses seed + r");
  replicate->add_flag("--paper-scale", c.paper_scale, "N = 1000000, R = 100");
  replicate->add_flag("--geometric", c.geometric, "Fix beta = 1");

  auto* surface = app.add_subcommand("surface", "Criterion surface on a beta x delta grid");
  add_common(surface, c, true);
  surface->add_option("--grid", c.grid, "Points per axis (default 101)")->check(CLI::PositiveNumber);
  surface->add_option("--n-agents", c.n_agents, "Simulated panel size (exact CCPs when omitted)");
  surface->add_option("--seed", c.seed, "Simulation seed");
  surface->add_flag("--geometric", c.geometric, "Restrict to beta = 1");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    if (*solve) return cmd_solve(c, out);
    if (*identify) return cmd_identify(c, out);
    if (*estimate) return cmd_estimate(c, out);
    if (*replicate) return cmd_replicate(c, out);
    if (*surface) return cmd_surface(c, out);
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvalidModel& e) {
    err << "invalid model: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace hyperddc::cli
