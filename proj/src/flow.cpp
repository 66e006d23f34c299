#include "efp/flow.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace efp {

namespace {

constexpr double kFlowTol = 1e-12;

// Max-flow feasibility pass for capacitated items (Edmonds-Karp; the
// augmentation count is structural, so real capacities are fine). Returns a
// feasible routing when capacities are present — a greedy fill can deadlock
// even on feasible demand — and nothing when every item is unlimited.
std::optional<std::vector<std::vector<double>>> check_capacity_feasible(
    const MarketInstance& inst, const std::vector<double>& want,
    const std::vector<char>& bmask, const std::vector<char>& tmask) {
  const int B = inst.num_buyers(), S = inst.num_items();
  bool any_cap = false;
  for (int t = 0; t < S; ++t)
    if (tmask[t] && std::isfinite(inst.item(t).cost.capacity())) any_cap = true;
  if (!any_cap) return std::nullopt;

  const int n = B + S + 2, src = 0, snk = n - 1;
  auto bid = [&](int i) { return 1 + i; };
  auto tid = [&](int t) { return 1 + B + t; };
  std::vector<std::vector<double>> cap(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> sent(n, std::vector<double>(n, 0.0));
  double total = 0.0;
  for (int i = 0; i < B; ++i) {
    if (!bmask[i] || want[i] <= 0) continue;
    cap[src][bid(i)] = want[i];
    total += want[i];
    for (int t : inst.items_of(i))
      if (tmask[t]) cap[bid(i)][tid(t)] = kInf;
  }
  for (int t = 0; t < S; ++t) {
    if (!tmask[t]) continue;
    double y = inst.item(t).cost.capacity();
    cap[tid(t)][snk] = std::isfinite(y) ? y : kInf;
  }

  double flow = 0.0;
  while (true) {
    std::vector<int> parent(n, -1);
    parent[src] = src;
    std::queue<int> q;
    q.push(src);
    while (!q.empty() && parent[snk] < 0) {
      int u = q.front();
      q.pop();
      for (int v = 0; v < n; ++v)
        if (parent[v] < 0 && cap[u][v] > kFlowTol) {
          parent[v] = u;
          q.push(v);
        }
    }
    if (parent[snk] < 0) break;
    double push = kInf;
    for (int v = snk; v != src; v = parent[v]) push = std::min(push, cap[parent[v]][v]);
    for (int v = snk; v != src; v = parent[v]) {
      cap[parent[v]][v] -= push;
      cap[v][parent[v]] += push;
      sent[parent[v]][v] += push;
      sent[v][parent[v]] -= push;
    }
    flow += push;
  }
  if (flow < total - 1e-9 * std::max(1.0, total)) {
    // residual-reachable side of the cut
    std::vector<char> seen(n, 0);
    seen[src] = 1;
    std::queue<int> q;
    q.push(src);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v = 0; v < n; ++v)
        if (!seen[v] && cap[u][v] > kFlowTol) {
          seen[v] = 1;
          q.push(v);
        }
    }
    std::vector<int> cb, ct;
    std::string names;
    for (int i = 0; i < B; ++i)
      if (seen[bid(i)]) {
        cb.push_back(i);
        names += (names.empty() ? "" : ",") + inst.buyer(i).id;
      }
    std::string inames;
    for (int t = 0; t < S; ++t)
      if (seen[tid(t)]) {
        ct.push_back(t);
        inames += (inames.empty() ? "" : ",") + inst.item(t).id;
      }
    throw InfeasibleDemand(
        "demand exceeds capacity: buyers {" + names + "} route only to items {" +
            inames + "} with insufficient capacity (short by " +
            std::to_string(total - flow) + ")",
        std::move(cb), std::move(ct));
  }
  std::vector<std::vector<double>> routing(B);
  for (int i = 0; i < B; ++i) {
    const auto& row = inst.items_of(i);
    routing[i].assign(row.size(), 0.0);
    for (size_t k = 0; k < row.size(); ++k)
      routing[i][k] = std::max(0.0, sent[bid(i)][tid(row[k])]);
  }
  return routing;
}

// Amount to shift from src (losing) to dst (gaining) so the two marginals
// meet, capped at dmax. Affine marginals solve in closed form; anything else
// falls back to bisection.
double equalize_step(const CostFn& cs, double ys, const CostFn& cd, double yd,
                     double dmax) {
  auto gap_at = [&](double d) {
    return cd.marginal(yd + d) - cs.marginal(ys - d);
  };
  if (gap_at(dmax) <= 0.0) return dmax;

  auto affine = [](const CostFn& c, double& slope) {
    switch (c.family()) {
      case CostFamily::Zero:
        slope = 0.0;
        return true;
      case CostFamily::Linear:
        slope = 0.0;
        return true;
      case CostFamily::Quadratic:
        slope = 2.0 * c.param_a();
        return true;
      case CostFamily::Power:
        if (c.param_b() == 2.0) {
          slope = 2.0 * c.param_a();
          return true;
        }
        return false;
      default:
        return false;
    }
  };
  double ss = 0.0, sd = 0.0;
  if (affine(cs, ss) && affine(cd, sd) && ss + sd > 0.0) {
    double d = (cs.marginal(ys) - cd.marginal(yd)) / (ss + sd);
    return std::clamp(d, 0.0, dmax);
  }
  double lo = 0.0, hi = dmax;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (gap_at(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FlowResult min_cost_flow(const MarketInstance& inst, const DemandVector& demand,
                         double tol, const std::vector<char>* buyer_mask,
                         const std::vector<char>* item_mask) {
  const int B = inst.num_buyers(), S = inst.num_items();
  if (static_cast<int>(demand.size()) != B)
    throw std::invalid_argument("min_cost_flow: demand size mismatch");
  std::vector<char> bmask(B, 1), tmask(S, 1);
  if (buyer_mask) bmask = *buyer_mask;
  if (item_mask) tmask = *item_mask;

  for (int i = 0; i < B; ++i) {
    if (!bmask[i] || demand[i] <= kFlowTol) continue;
    if (demand[i] > inst.buyer(i).demand.mass() * (1 + 1e-9))
      throw std::invalid_argument("min_cost_flow: demand for buyer '" +
                                  inst.buyer(i).id + "' exceeds its mass");
    bool reachable = false;
    for (int t : inst.items_of(i))
      if (tmask[t]) reachable = true;
    if (!reachable)
      throw InfeasibleDemand("buyer '" + inst.buyer(i).id +
                                 "' has positive demand but no item in the subgraph",
                             {i}, {});
  }
  auto feasible = check_capacity_feasible(inst, demand, bmask, tmask);

  FlowResult res;
  res.alloc = Allocation::zeros(inst);
  std::vector<double> y(S, 0.0);

  auto room = [&](int t) {
    double cap = inst.item(t).cost.capacity();
    return std::isfinite(cap) ? cap - y[t] : kInf;
  };

  if (feasible) {
    // capacities bind somewhere: start from the max-flow routing
    res.alloc.edge_flow = std::move(*feasible);
    for (int i = 0; i < B; ++i) {
      const auto& row = inst.items_of(i);
      for (size_t k = 0; k < row.size(); ++k) y[row[k]] += res.alloc.edge_flow[i][k];
    }
  } else {
    // unlimited supply: fill each buyer's momentarily cheapest item
    for (int i = 0; i < B; ++i) {
      if (!bmask[i] || demand[i] <= kFlowTol) continue;
      const auto& row = inst.items_of(i);
      int best = -1;
      double best_m = kInf;
      for (size_t k = 0; k < row.size(); ++k) {
        int t = row[k];
        if (!tmask[t]) continue;
        double m = inst.item(t).cost.marginal(y[t]);
        if (m < best_m - kFlowTol) {
          best_m = m;
          best = static_cast<int>(k);
        }
      }
      res.alloc.edge_flow[i][best] = demand[i];
      y[row[best]] += demand[i];
    }
  }

  // pairwise marginal equalization until no buyer can improve
  const long max_iter = 500000;
  long iter = 0;
  while (iter < max_iter) {
    int mi = -1, msrc = -1, mdst = -1;
    double mgap = tol;
    for (int i = 0; i < B; ++i) {
      if (!bmask[i] || demand[i] <= kFlowTol) continue;
      const auto& row = inst.items_of(i);
      int src = -1, dst = -1;
      double src_m = -kInf, dst_m = kInf;
      for (size_t k = 0; k < row.size(); ++k) {
        int t = row[k];
        if (!tmask[t]) continue;
        double m = inst.item(t).cost.marginal(y[t]);
        if (res.alloc.edge_flow[i][k] > kFlowTol && m > src_m + kFlowTol) {
          src_m = m;
          src = static_cast<int>(k);
        }
        if (room(t) > kFlowTol && m < dst_m - kFlowTol) {
          dst_m = m;
          dst = static_cast<int>(k);
        }
      }
      if (src < 0 || dst < 0 || src == dst) continue;
      double gap = src_m - dst_m;
      if (gap > mgap) {
        mgap = gap;
        mi = i;
        msrc = src;
        mdst = dst;
      }
    }
    if (mi < 0) break;
    const auto& row = inst.items_of(mi);
    int ts = row[msrc], td = row[mdst];
    double dmax = std::min(res.alloc.edge_flow[mi][msrc], room(td));
    double step = equalize_step(inst.item(ts).cost, y[ts], inst.item(td).cost,
                                y[td], dmax);
    if (step <= kFlowTol) break;  // capacity pinch; nothing movable
    res.alloc.edge_flow[mi][msrc] -= step;
    res.alloc.edge_flow[mi][mdst] += step;
    y[ts] -= step;
    y[td] += step;
    ++iter;
  }
  res.iterations = iter;

  res.item_marginal.resize(S);
  for (int t = 0; t < S; ++t) res.item_marginal[t] = inst.item(t).cost.marginal(y[t]);

  res.buyer_marginal.assign(B, 0.0);
  for (int i = 0; i < B; ++i) {
    if (!bmask[i]) continue;
    const auto& row = inst.items_of(i);
    double used_min = kInf, used_max = -kInf, acc_min = kInf;
    for (size_t k = 0; k < row.size(); ++k) {
      int t = row[k];
      if (!tmask[t]) continue;
      acc_min = std::min(acc_min, res.item_marginal[t]);
      if (res.alloc.edge_flow[i][k] > kFlowTol) {
        used_min = std::min(used_min, res.item_marginal[t]);
        used_max = std::max(used_max, res.item_marginal[t]);
      }
    }
    if (used_min == kInf) {
      res.buyer_marginal[i] = acc_min;
    } else {
      res.buyer_marginal[i] = used_min;
      res.marginal_spread = std::max(res.marginal_spread, used_max - used_min);
      res.kkt_residual = std::max(res.kkt_residual, used_max - acc_min);
    }
  }
  return res;
}

double kkt_violation(const MarketInstance& inst, const DemandVector& demand,
                     const Allocation& alloc) {
  (void)demand;
  auto y = alloc.item_totals(inst);
  std::vector<double> c(inst.num_items());
  for (int t = 0; t < inst.num_items(); ++t) c[t] = inst.item(t).cost.marginal(y[t]);
  double worst = 0.0;
  for (int i = 0; i < inst.num_buyers(); ++i) {
    const auto& row = inst.items_of(i);
    double used_max = -kInf;
    for (size_t k = 0; k < row.size(); ++k)
      if (alloc.edge_flow[i][k] > kFlowTol) used_max = std::max(used_max, c[row[k]]);
    if (used_max == -kInf) continue;
    for (int t : row) worst = std::max(worst, used_max - c[t]);
  }
  return std::max(0.0, worst);
}

// Welfare maximization as a routing problem: every buyer must place its full
// population either on accessible items (production cost) or on a personal
// decline channel whose marginal is the value of the marginal buyer left
// unserved, the convex cost of turning demand away. The same pairwise
// marginal-equalization descent then drives all channel marginals together,
// and its stationary point is exactly the welfare first-order condition:
// served value meets the faced marginal, clamped at the ends.
WelfareOptimum welfare_opt(const MarketInstance& inst, double tol) {
  const int B = inst.num_buyers(), S = inst.num_items();
  WelfareOptimum out;

  std::vector<std::vector<double>> flow(B);
  for (int i = 0; i < B; ++i) flow[i].assign(inst.items_of(i).size(), 0.0);
  DemandVector x(B, 0.0);  // served mass; the rest sits on the decline channel
  std::vector<double> y(S, 0.0);

  auto item_room = [&](int t) {
    double cap = inst.item(t).cost.capacity();
    return std::isfinite(cap) ? cap - y[t] : kInf;
  };
  auto decline_marginal = [&](int i, double served) {
    return inst.buyer(i).demand.value(served);
  };

  const long max_iter = 2000000;
  long iter = 0;
  while (iter < max_iter) {
    // largest marginal gap over (buyer, source channel, target channel)
    int mi = -1, msrc = -2, mdst = -2;  // -1 encodes the decline channel
    double mgap = 0.25 * tol;
    for (int i = 0; i < B; ++i) {
      const auto& row = inst.items_of(i);
      const DemandFn& d = inst.buyer(i).demand;
      double declined = d.mass() - x[i];
      int src = -2, dst = -2;
      double src_m = -kInf, dst_m = kInf;
      if (declined > kFlowTol) {
        src_m = decline_marginal(i, x[i]);
        src = -1;
      }
      if (x[i] > kFlowTol) {  // served mass can still be turned away
        dst_m = decline_marginal(i, x[i]);
        dst = -1;
      }
      for (size_t k = 0; k < row.size(); ++k) {
        int t = row[k];
        double m = inst.item(t).cost.marginal(y[t]);
        if (flow[i][k] > kFlowTol && m > src_m + kFlowTol) {
          src_m = m;
          src = static_cast<int>(k);
        }
        if (item_room(t) > kFlowTol && m < dst_m - kFlowTol) {
          dst_m = m;
          dst = static_cast<int>(k);
        }
      }
      if (src <= -2 || dst <= -2 || src == dst) continue;
      double gap = src_m - dst_m;
      if (gap > mgap) {
        mgap = gap;
        mi = i;
        msrc = src;
        mdst = dst;
      }
    }
    if (mi < 0) break;

    const auto& row = inst.items_of(mi);
    const DemandFn& d = inst.buyer(mi).demand;
    // marginals of the two channels after moving delta from src to dst;
    // the difference is monotone, so bisect the crossing
    auto src_m_after = [&](double delta) {
      if (msrc == -1) return decline_marginal(mi, x[mi] + delta);
      return inst.item(row[msrc]).cost.marginal(y[row[msrc]] - delta);
    };
    auto dst_m_after = [&](double delta) {
      if (mdst == -1) return decline_marginal(mi, x[mi] - delta);
      return inst.item(row[mdst]).cost.marginal(y[row[mdst]] + delta);
    };
    double dmax = msrc == -1 ? d.mass() - x[mi] : flow[mi][msrc];
    if (mdst >= 0) dmax = std::min(dmax, item_room(row[mdst]));
    double step = dmax;
    if (dst_m_after(dmax) - src_m_after(dmax) > 0.0) {
      double lo = 0.0, hi = dmax;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (dst_m_after(mid) - src_m_after(mid) > 0.0 ? hi : lo) = mid;
      }
      step = 0.5 * (lo + hi);
    }
    if (step <= kFlowTol) break;
    if (msrc == -1) {
      x[mi] += step;
    } else {
      flow[mi][msrc] -= step;
      y[row[msrc]] -= step;
    }
    if (mdst == -1) {
      x[mi] -= step;
    } else {
      flow[mi][mdst] += step;
      y[row[mdst]] += step;
    }
    ++iter;
  }
  out.iterations = iter;

  // first-order certificate, clamp-aware
  double foc = 0.0;
  for (int i = 0; i < B; ++i) {
    const DemandFn& d = inst.buyer(i).demand;
    double r = kInf;
    for (int t : inst.items_of(i))
      r = std::min(r, inst.item(t).cost.marginal(y[t]));
    double resid;
    if (x[i] <= 1e-12)
      resid = std::max(0.0, d.value(0.0) - r);
    else if (x[i] >= d.mass() - 1e-12)
      resid = std::max(0.0, r - d.value(d.mass()));
    else
      resid = std::abs(d.value(x[i]) - r);
    foc = std::max(foc, resid);
  }
  out.foc_residual = foc;

  out.demand = x;
  out.alloc.edge_flow = std::move(flow);
  out.prices.resize(S);
  for (int t = 0; t < S; ++t) out.prices[t] = inst.item(t).cost.marginal(y[t]);
  out.objective = 0.0;
  for (int i = 0; i < B; ++i)
    out.objective += inst.buyer(i).demand.integral(0.0, x[i]);
  for (int t = 0; t < S; ++t) out.objective -= inst.item(t).cost.total(y[t]);
  return out;
}

Solution solve_at_prices(const MarketInstance& inst, const PriceVector& prices,
                         double tol) {
  const int B = inst.num_buyers();
  Solution sol;
  sol.prices = prices;
  sol.demand = best_response(prices, inst);

  // envy-free routing: copy the instance's graph but keep only each buyer's
  // minimally priced accessible items
  MarketInstance restricted;
  for (int i = 0; i < B; ++i)
    restricted.add_buyer(inst.buyer(i).id, inst.buyer(i).demand);
  for (int t = 0; t < inst.num_items(); ++t)
    restricted.add_item(inst.item(t).id, inst.item(t).cost);
  for (int i = 0; i < B; ++i) {
    double pbar = cheapest_price(prices, i, inst);
    double tie = 1e-9 * std::max(1.0, std::abs(pbar));
    for (int t : inst.items_of(i))
      if (prices[t] <= pbar + tie) restricted.add_edge(i, t);
  }
  FlowResult fr = min_cost_flow(restricted, sol.demand, tol);

  // map flows back onto the full adjacency
  sol.alloc = Allocation::zeros(inst);
  for (int i = 0; i < B; ++i) {
    const auto& rrow = restricted.items_of(i);
    const auto& frow = inst.items_of(i);
    for (size_t k = 0; k < rrow.size(); ++k) {
      if (fr.alloc.edge_flow[i][k] <= 0.0) continue;
      auto it = std::lower_bound(frow.begin(), frow.end(), rrow[k]);
      sol.alloc.edge_flow[i][it - frow.begin()] = fr.alloc.edge_flow[i][k];
    }
  }
  sol.diag = compute_diagnostics(sol.prices, sol.demand, sol.alloc, inst);
  return sol;
}

}  // namespace efp
