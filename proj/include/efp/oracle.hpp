#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "efp/market.hpp"

namespace efp {

class BudgetExceeded : public std::runtime_error {
 public:
  explicit BudgetExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridSpec {
  std::vector<double> lo;  // per-item lower bound (the k=e prices, when known)
  std::vector<double> hi;  // per-item upper bound (the top peak)
  double step = 1e-3;
  long long budget = 10'000'000;  // max price tuples
  int threads = 0;                // 0 = all, 1 = serial reference
};

struct OracleReport {
  PriceVector best_prices;
  double best_revenue = 0.0;
  GridSpec grid;
  long long evaluations = 0;
  double wall_ms = 0.0;  // timing only; keep out of deterministic reports
};

/// Per-item grids over [lo_t, hi_t]: the revenue-optimal prices sit at or
/// above the k=e prices and below the top peak, so the search box can be
/// pinned there. Upper endpoints are included exactly.
GridSpec make_default_grid(const MarketInstance& inst, const PriceVector& k_e_prices,
                           double step, long long budget = 10'000'000);

/// Exhaustive envy-free revenue maximization over the price grid: every
/// tuple is scored with best-response demand and the cheapest envy-free
/// routing. Deterministic regardless of thread count (ties resolve to the
/// lexicographically first tuple). Throws BudgetExceeded when the grid is
/// larger than the configured budget.
OracleReport grid_opt_revenue(const MarketInstance& inst, const GridSpec& grid);

/// Serial reference implementation of the same search, kept for testing the
/// parallel kernel against.
OracleReport grid_opt_revenue_serial(const MarketInstance& inst,
                                     const GridSpec& grid);

/// Revenue of the best-response + cheapest envy-free routing at fixed prices,
/// as the oracle scores one tuple. Exposed for reproducing reports.
double envy_free_revenue(const MarketInstance& inst, const PriceVector& prices);

// ---------------------------------------------------------------------------
// instance generators

struct RandomMarketSpec {
  std::uint64_t seed = 1;
  int buyers = 4;
  int items = 4;
  double peak_spread = 1.0;   // ratio of largest to smallest peak (1 = uniform)
  double edge_density = 0.5;  // chance of each extra edge
  bool doubly_convex_only = false;
  bool allow_uniform_demand = true;
};

/// Seed-deterministic random market: demand families drawn from
/// {linear, exponential, uniform}, costs from {zero, linear, quadratic},
/// every buyer connected. Peaks span [1, peak_spread] with both endpoints
/// realized when spread > 1, so compute_delta() returns the spread exactly.
MarketInstance gen_random_mhr_instance(const RandomMarketSpec& spec);

/// Pricing market encoding a vertex-cover structure: one zero-cost item per
/// vertex, a unit plateau buyer per vertex at value 2, and per edge an
/// aggregate of r unit-slope buyer types (demand 2 - x/r over the two
/// endpoint items).
MarketInstance gen_vertex_cover_gadget(
    int vertices, const std::vector<std::pair<int, int>>& edges, int r);

// ---------------------------------------------------------------------------
// lemma suite: numeric property checks over a corpus

struct LemmaCheck {
  std::string name;
  double worst_slack = 0.0;  // positive = violation
  bool pass = true;
};

struct LemmaSuiteReport {
  std::vector<LemmaCheck> checks;
  bool all_pass = true;
};

/// Runs the flow-structure properties (demand/marginal monotonicity under
/// price domination, cost partitioning across buyer subsets, left-continuity
/// of marginals in a uniform price, profit comparison across dominated
/// prices, mixed-price marginal witness) over seeded random instances, and
/// the hazard-rate numeric properties over the demand families of `corpus`.
LemmaSuiteReport lemma_suite(const std::vector<MarketInstance>& corpus,
                             double tol = 1e-7);

}  // namespace efp
