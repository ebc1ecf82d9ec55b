#pragma once

// Panel simulation, frequency estimators, minimum-distance estimation of
// (beta, delta), Monte Carlo replications and criterion surfaces.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperddc/identify.hpp"
#include "hyperddc/model.hpp"
#include "hyperddc/stationary.hpp"

namespace hyperddc {

class EmptyCellError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Agent histories stored agent-major: entry i * periods + t.
struct Panel {
  int agents = 0;
  int periods = 0;
  int states = 0;
  int choices = 0;
  bool stationary = false;
  std::uint64_t seed = 0;
  std::vector<int> state;
  std::vector<int> choice;

  int x(int i, int t) const { return state[static_cast<std::size_t>(i) * periods + t]; }
  int d(int i, int t) const { return choice[static_cast<std::size_t>(i) * periods + t]; }
};

/// Uniform draw in (0, 1) from the top 53 bits; zero is redrawn.
double uniform_open(std::uint64_t bits);
/// Standard Gumbel -ln(-ln U).
double gumbel(double u);

/// Each agent draws x_1 from `initial` (uniform when empty), then per period
/// K Gumbel shocks, the argmax of w + eps (ties to the lowest index) and the
/// next state from Q_d. Deterministic in the seed and independent of the
/// number of worker threads.
Panel simulate_panel(const FiniteModel& model, const DiscountPair& disc, int n_agents, std::uint64_t seed,
                     std::optional<Vector> initial = std::nullopt);

/// Stationary panel of `periods` observations per agent at a given equilibrium.
Panel simulate_panel(const StationaryModel& model, const StationaryEquilibrium& eq, int n_agents, int periods,
                     std::uint64_t seed, std::optional<Vector> initial = std::nullopt);

struct CellIndex {
  int period = 0;
  int state = 0;
};

struct CcpEstimate {
  ChoiceProbabilities s;
  std::vector<Matrix> counts;  // per period, J x K
  std::vector<CellIndex> empty_cells;
};

/// Frequencies with add-smoothing (counts + smoothing) / (visits + K smoothing).
/// Cells without visits are NaN and listed when smoothing is zero.
CcpEstimate estimate_ccp(const Panel& panel, double smoothing = 0.0);

struct TransitionEstimate {
  Transitions q;
  std::vector<Matrix> counts;
  /// (choice, state) rows never observed; they are set to uniform.
  std::vector<std::pair<int, int>> empty_rows;
};

TransitionEstimate estimate_transitions(const Panel& panel);

/// Throws EmptyCellError when a cell used by a restriction or a later period
/// feeding its continuation value has no observations.
void require_cells(const CcpEstimate& est, const std::vector<ExclusionRestriction>& rs);

/// psi' W psi with psi the moment polynomials evaluated at (beta, delta).
double criterion(const MomentSystem& ms, const Matrix& weight, double beta, double delta);

struct EstimationOptions {
  double beta_lo = 0.05;
  double beta_hi = 1.0;
  double delta_lo = 0.05;
  double delta_hi = 2.0;
  bool geometric = false;   // beta pinned to 1
  int starts = 9;           // grid of starts over the box
  std::optional<Matrix> weight;  // identity when empty
  double simplex_tol = 1e-10;
  int max_iter = 2000;

  static EstimationOptions stationary() {
    EstimationOptions o;
    o.delta_hi = 1.0 - 1e-6;
    return o;
  }
};

struct LocalMinimum {
  double beta = 0.0;
  double delta = 0.0;
  double criterion = 0.0;
  bool converged = false;
};

struct EstimationResult {
  double beta_hat = 0.0;
  double delta_hat = 0.0;
  double criterion_value = 0.0;
  bool converged = false;
  std::vector<LocalMinimum> starts;  // distinct local minima, best first
  std::string weight_matrix = "identity";

  double gamma_hat() const { return beta_hat * delta_hat; }
};

/// Multistart simplex descent polished by Newton steps on central
/// finite-difference derivatives, all projected onto the box.
EstimationResult minimum_distance(const MomentSystem& ms, const EstimationOptions& opts = {});

struct ReplicationRow {
  int rep = 0;
  double beta_hat = 0.0;
  double delta_hat = 0.0;
  double gamma_hat = 0.0;
  double criterion = 0.0;
  bool converged = false;
  std::string error;
};

struct MonteCarloSummary {
  int succeeded = 0;
  double mean_beta = 0.0, mean_delta = 0.0, mean_gamma = 0.0;
  double sd_beta = 0.0, sd_delta = 0.0, sd_gamma = 0.0;
};

struct MonteCarloTable {
  std::vector<ReplicationRow> rows;
  MonteCarloSummary summary;
};

struct MonteCarloOptions {
  int n_agents = 100000;
  int replications = 50;
  std::uint64_t seed0 = 20200527;
  bool estimate_transitions = true;  // use Q-hat rather than the true Q
  double smoothing = 0.0;
  EstimationOptions estimation;
};

/// Replication r = 1..R simulates with seed seed0 + r and estimates.
MonteCarloTable monte_carlo(const FiniteModel& model, const DiscountPair& disc,
                            const std::vector<ExclusionRestriction>& rs, const MonteCarloOptions& opts);

MonteCarloSummary summarize(const std::vector<ReplicationRow>& rows);

/// S on the tensor grid; entry (i, j) is at (betas[i], deltas[j]).
Matrix criterion_surface(const MomentSystem& ms, const std::vector<double>& betas,
                         const std::vector<double>& deltas, const std::optional<Matrix>& weight = std::nullopt);

std::vector<double> linspace(double lo, double hi, int n);

struct TroughSummary {
  double s_min = 0.0;
  int argmin_beta = 0;
  int argmin_delta = 0;
  double threshold = 0.0;
  int cells = 0;
  bool connected = false;  // 8-connectivity
  double delta_span = 0.0;
};

/// Sublevel set {S <= factor * S_min} of a surface.
TroughSummary sublevel_summary(const Matrix& surface, const std::vector<double>& betas,
                               const std::vector<double>& deltas, double factor = 10.0);

void write_replications_csv(std::ostream& os, const MonteCarloTable& table);
void write_surface_csv(std::ostream& os, const Matrix& surface, const std::vector<double>& betas,
                       const std::vector<double>& deltas);
void write_ccp_csv(std::ostream& os, const ChoiceProbabilities& s);
/// Formats with 17 significant digits.
std::string fmt17(double v);

}  // namespace hyperddc
