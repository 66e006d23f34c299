#pragma once

#include <optional>
#include <string>
#include <vector>

#include "efp/market.hpp"

namespace efp {

/// Thrown when a demand vector cannot be routed within item capacities.
/// Carries the binding cut found by the max-flow feasibility pass.
class InfeasibleDemand : public std::runtime_error {
 public:
  InfeasibleDemand(std::string msg, std::vector<int> cut_buyers,
                   std::vector<int> cut_items)
      : std::runtime_error(std::move(msg)),
        cut_buyers(std::move(cut_buyers)),
        cut_items(std::move(cut_items)) {}
  std::vector<int> cut_buyers;
  std::vector<int> cut_items;
};

struct FlowResult {
  Allocation alloc;
  /// Marginal cost faced by each buyer: smallest marginal among the items it
  /// uses (or among accessible items when it routes nothing).
  std::vector<double> buyer_marginal;
  std::vector<double> item_marginal;   // c_t at the final totals
  /// Largest spread between used-item marginals of one buyer; should be ~0
  /// at optimality where the used marginal is unique.
  double marginal_spread = 0.0;
  double kkt_residual = 0.0;
  long iterations = 0;
};

/// Minimum-production-cost routing of `demand` over the bipartite graph.
/// Optional masks restrict the solve to a subgraph (the ascent's active set);
/// excluded buyers route nothing and excluded items receive nothing.
/// Deterministic: ties re-route toward the lowest item index.
FlowResult min_cost_flow(const MarketInstance& inst, const DemandVector& demand,
                         double tol = 1e-9,
                         const std::vector<char>* buyer_mask = nullptr,
                         const std::vector<char>* item_mask = nullptr);

/// max over edges (i,t) of (max marginal used by i) - c_t(y_t), clamped at 0.
/// Zero exactly when every buyer routes only through minimal-marginal items.
double kkt_violation(const MarketInstance& inst, const DemandVector& demand,
                     const Allocation& alloc);

struct WelfareOptimum {
  DemandVector demand;        // x*
  Allocation alloc;           // y*
  PriceVector prices;         // marginal-cost prices c_t(y*_t)
  double objective = 0.0;     // value integral minus production cost
  double foc_residual = 0.0;  // worst first-order-condition slack
  long iterations = 0;
};

/// Maximizes total buyer value minus production cost over feasible (x, y),
/// solved as one routing problem: unserved demand flows to a per-buyer
/// decline channel priced at the marginal buyer's value, and the same
/// pairwise equalization drives all channel marginals together.
/// Certificate: the served value matches the buyer's faced marginal, with
/// one-sided slack at the clamps.
WelfareOptimum welfare_opt(const MarketInstance& inst, double tol = 1e-8);

/// Best-response demand plus the cheapest envy-free allocation at the given
/// prices: flow runs only on each buyer's minimally priced accessible items,
/// min production cost among such routings. Diagnostics included.
Solution solve_at_prices(const MarketInstance& inst, const PriceVector& prices,
                         double tol = 1e-9);

}  // namespace efp
