#pragma once

#include <string>
#include <vector>

#include "efp/functions.hpp"

namespace efp {

struct BuyerType {
  std::string id;
  DemandFn demand;
};

struct Item {
  std::string id;
  CostFn cost;
};

/// Bipartite market: buyer types on one side, items on the other, an edge
/// wherever a type's demand set contains the item. Immutable once validated;
/// all operations on it are pure and safe to share across threads.
class MarketInstance {
 public:
  int add_buyer(std::string id, DemandFn demand);
  int add_item(std::string id, CostFn cost);
  void add_edge(int buyer, int item);
  void add_edge(const std::string& buyer_id, const std::string& item_id);

  int num_buyers() const { return static_cast<int>(buyers_.size()); }
  int num_items() const { return static_cast<int>(items_.size()); }
  const BuyerType& buyer(int i) const { return buyers_[i]; }
  const Item& item(int t) const { return items_[t]; }
  int buyer_index(const std::string& id) const;  // -1 if unknown
  int item_index(const std::string& id) const;

  /// Item indices accessible to buyer i, sorted ascending.
  const std::vector<int>& items_of(int i) const { return buyer_items_[i]; }
  const std::vector<int>& buyers_of(int t) const { return item_buyers_[t]; }
  bool has_edge(int i, int t) const;

  /// Checks structural invariants plus per-family MHR / convexity
  /// certificates. Throws std::invalid_argument naming the offender.
  void validate(int grid_size = 512, double tol = 1e-7) const;

 private:
  std::vector<BuyerType> buyers_;
  std::vector<Item> items_;
  std::vector<std::vector<int>> buyer_items_;
  std::vector<std::vector<int>> item_buyers_;
};

using PriceVector = std::vector<double>;   // indexed by item
using DemandVector = std::vector<double>;  // indexed by buyer

/// Per-edge flow, rows aligned with MarketInstance::items_of(i).
struct Allocation {
  std::vector<std::vector<double>> edge_flow;

  static Allocation zeros(const MarketInstance& inst);
  double item_total(const MarketInstance& inst, int t) const;
  std::vector<double> item_totals(const MarketInstance& inst) const;
  double buyer_total(int i) const;
};

struct Diagnostics {
  double revenue = 0.0;
  double welfare = 0.0;
  double max_envy_residual = 0.0;
  double max_kkt_residual = 0.0;
};

struct Solution {
  PriceVector prices;
  DemandVector demand;
  Allocation alloc;
  Diagnostics diag;
  std::vector<int> frozen_items;       // items pinned at their starting price
  std::vector<std::string> warnings;
};

/// min over t in S_i of prices[t].
double cheapest_price(const PriceVector& prices, int buyer,
                      const MarketInstance& inst);
double cheapest_price(const PriceVector& prices, const std::string& buyer_id,
                      const MarketInstance& inst);

/// Demand vector with x_i = inverse demand at the cheapest accessible price.
DemandVector best_response(const PriceVector& prices, const MarketInstance& inst);

/// Seller profit: sum over items of p_t * y_t - C_t(y_t).
double revenue(const PriceVector& prices, const Allocation& alloc,
               const MarketInstance& inst);

/// Buyer-side accounting, equal to revenue() for envy-free solutions.
double revenue_buyer_side(const PriceVector& prices, const DemandVector& demand,
                          const Allocation& alloc, const MarketInstance& inst);

/// Total buyer value minus production cost.
double social_welfare(const DemandVector& demand, const Allocation& alloc,
                      const MarketInstance& inst);

struct EnvyViolation {
  int buyer;
  int item;  // -1 for a best-response violation, otherwise the priced edge
  double residual;
};

struct EnvyReport {
  double max_residual = 0.0;
  std::vector<EnvyViolation> violations;  // edges with residual above tolerance
};

/// Envy-freeness audit. Per edge carrying flow, residual p_t - cheapest price;
/// per buyer, the clamp-aware best-response residual between demand and the
/// cheapest price. Purely diagnostic.
EnvyReport check_envy_free(const Solution& sol, const MarketInstance& inst,
                           double tol = 1e-7);

Diagnostics compute_diagnostics(const PriceVector& prices,
                                const DemandVector& demand,
                                const Allocation& alloc,
                                const MarketInstance& inst, double tol = 1e-7);

}  // namespace efp
