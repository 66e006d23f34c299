#include "efp/market.hpp"

#include <algorithm>
#include <cmath>

#include "efp/flow.hpp"

namespace efp {

int MarketInstance::add_buyer(std::string id, DemandFn demand) {
  buyers_.push_back(BuyerType{std::move(id), std::move(demand)});
  buyer_items_.emplace_back();
  return num_buyers() - 1;
}

int MarketInstance::add_item(std::string id, CostFn cost) {
  items_.push_back(Item{std::move(id), std::move(cost)});
  item_buyers_.emplace_back();
  return num_items() - 1;
}

void MarketInstance::add_edge(int buyer, int item) {
  if (buyer < 0 || buyer >= num_buyers())
    throw std::invalid_argument("add_edge: unknown buyer index");
  if (item < 0 || item >= num_items())
    throw std::invalid_argument("add_edge: unknown item index");
  auto& row = buyer_items_[buyer];
  auto it = std::lower_bound(row.begin(), row.end(), item);
  if (it != row.end() && *it == item) return;
  row.insert(it, item);
  auto& col = item_buyers_[item];
  col.insert(std::lower_bound(col.begin(), col.end(), buyer), buyer);
}

void MarketInstance::add_edge(const std::string& buyer_id, const std::string& item_id) {
  int b = buyer_index(buyer_id);
  if (b < 0) throw std::invalid_argument("add_edge: unknown buyer id '" + buyer_id + "'");
  int t = item_index(item_id);
  if (t < 0) throw std::invalid_argument("add_edge: unknown item id '" + item_id + "'");
  add_edge(b, t);
}

int MarketInstance::buyer_index(const std::string& id) const {
  for (int i = 0; i < num_buyers(); ++i)
    if (buyers_[i].id == id) return i;
  return -1;
}

int MarketInstance::item_index(const std::string& id) const {
  for (int t = 0; t < num_items(); ++t)
    if (items_[t].id == id) return t;
  return -1;
}

bool MarketInstance::has_edge(int i, int t) const {
  const auto& row = buyer_items_[i];
  return std::binary_search(row.begin(), row.end(), t);
}

void MarketInstance::validate(int grid_size, double tol) const {
  if (num_buyers() == 0) throw std::invalid_argument("instance: no buyers");
  if (num_items() == 0) throw std::invalid_argument("instance: no items");
  for (int i = 0; i < num_buyers(); ++i) {
    const auto& b = buyers_[i];
    if (buyer_items_[i].empty())
      throw std::invalid_argument("instance: buyer '" + b.id + "' has no edges");
    if (!(b.demand.mass() > 0) || !std::isfinite(b.demand.peak()) ||
        !(b.demand.peak() > 0))
      throw std::invalid_argument("instance: buyer '" + b.id +
                                  "' demand needs positive finite peak and mass");
    Certificate mhr = check_mhr(b.demand, grid_size, tol);
    if (!mhr.pass)
      throw std::invalid_argument("instance: buyer '" + b.id +
                                  "' demand fails the MHR check (violation " +
                                  std::to_string(mhr.worst_violation) + " at x=" +
                                  std::to_string(mhr.where) + ")");
  }
  for (int t = 0; t < num_items(); ++t) {
    const auto& it = items_[t];
    if (std::abs(it.cost.total(0.0)) > tol)
      throw std::invalid_argument("instance: item '" + it.id + "' cost C(0) != 0");
    Certificate cvx = check_convex(it.cost, grid_size, tol);
    if (!cvx.pass)
      throw std::invalid_argument("instance: item '" + it.id +
                                  "' cost fails the convexity check");
  }
}

Allocation Allocation::zeros(const MarketInstance& inst) {
  Allocation a;
  a.edge_flow.resize(inst.num_buyers());
  for (int i = 0; i < inst.num_buyers(); ++i)
    a.edge_flow[i].assign(inst.items_of(i).size(), 0.0);
  return a;
}

double Allocation::item_total(const MarketInstance& inst, int t) const {
  double y = 0.0;
  for (int i = 0; i < inst.num_buyers(); ++i) {
    const auto& row = inst.items_of(i);
    for (size_t k = 0; k < row.size(); ++k)
      if (row[k] == t) y += edge_flow[i][k];
  }
  return y;
}

std::vector<double> Allocation::item_totals(const MarketInstance& inst) const {
  std::vector<double> y(inst.num_items(), 0.0);
  for (int i = 0; i < inst.num_buyers(); ++i) {
    const auto& row = inst.items_of(i);
    for (size_t k = 0; k < row.size(); ++k) y[row[k]] += edge_flow[i][k];
  }
  return y;
}

double Allocation::buyer_total(int i) const {
  double x = 0.0;
  for (double f : edge_flow[i]) x += f;
  return x;
}

double cheapest_price(const PriceVector& prices, int buyer,
                      const MarketInstance& inst) {
  if (buyer < 0 || buyer >= inst.num_buyers())
    throw std::invalid_argument("cheapest_price: unknown buyer");
  double best = kInf;
  for (int t : inst.items_of(buyer)) best = std::min(best, prices[t]);
  return best;
}

double cheapest_price(const PriceVector& prices, const std::string& buyer_id,
                      const MarketInstance& inst) {
  int b = inst.buyer_index(buyer_id);
  if (b < 0) throw std::invalid_argument("cheapest_price: unknown buyer id '" + buyer_id + "'");
  return cheapest_price(prices, b, inst);
}

DemandVector best_response(const PriceVector& prices, const MarketInstance& inst) {
  DemandVector x(inst.num_buyers());
  for (int i = 0; i < inst.num_buyers(); ++i)
    x[i] = inst.buyer(i).demand.inverse(cheapest_price(prices, i, inst));
  return x;
}

double revenue(const PriceVector& prices, const Allocation& alloc,
               const MarketInstance& inst) {
  auto y = alloc.item_totals(inst);
  double acc = 0.0;
  for (int t = 0; t < inst.num_items(); ++t)
    acc += prices[t] * y[t] - inst.item(t).cost.total(y[t]);
  return acc;
}

double revenue_buyer_side(const PriceVector& prices, const DemandVector& demand,
                          const Allocation& alloc, const MarketInstance& inst) {
  double pay = 0.0;
  for (int i = 0; i < inst.num_buyers(); ++i)
    pay += cheapest_price(prices, i, inst) * demand[i];
  auto y = alloc.item_totals(inst);
  for (int t = 0; t < inst.num_items(); ++t) pay -= inst.item(t).cost.total(y[t]);
  return pay;
}

double social_welfare(const DemandVector& demand, const Allocation& alloc,
                      const MarketInstance& inst) {
  double acc = 0.0;
  for (int i = 0; i < inst.num_buyers(); ++i)
    acc += inst.buyer(i).demand.integral(0.0, demand[i]);
  auto y = alloc.item_totals(inst);
  for (int t = 0; t < inst.num_items(); ++t) acc -= inst.item(t).cost.total(y[t]);
  return acc;
}

EnvyReport check_envy_free(const Solution& sol, const MarketInstance& inst,
                           double tol) {
  EnvyReport rep;
  for (int i = 0; i < inst.num_buyers(); ++i) {
    double pbar = cheapest_price(sol.prices, i, inst);
    const auto& row = inst.items_of(i);
    for (size_t k = 0; k < row.size(); ++k) {
      if (sol.alloc.edge_flow[i][k] <= tol) continue;
      double res = sol.prices[row[k]] - pbar;
      rep.max_residual = std::max(rep.max_residual, res);
      if (res > tol) rep.violations.push_back({i, row[k], res});
    }
    // clamp-aware best-response residual
    const DemandFn& d = inst.buyer(i).demand;
    double x = sol.demand[i];
    double res;
    if (x <= tol) {
      res = std::max(0.0, d.value(0.0) - pbar);
    } else if (x >= d.mass() - tol) {
      res = std::max(0.0, pbar - d.value(d.mass()));
    } else {
      res = std::abs(d.value(x) - pbar);
    }
    rep.max_residual = std::max(rep.max_residual, res);
    if (res > tol) rep.violations.push_back({i, -1, res});
  }
  return rep;
}

Diagnostics compute_diagnostics(const PriceVector& prices,
                                const DemandVector& demand,
                                const Allocation& alloc,
                                const MarketInstance& inst, double tol) {
  Diagnostics d;
  d.revenue = revenue(prices, alloc, inst);
  d.welfare = social_welfare(demand, alloc, inst);
  Solution view{prices, demand, alloc, {}, {}, {}};
  d.max_envy_residual = check_envy_free(view, inst, tol).max_residual;
  d.max_kkt_residual = kkt_violation(inst, demand, alloc);
  return d;
}

}  // namespace efp
