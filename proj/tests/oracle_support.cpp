#include "oracle_support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace efp::testing {

namespace {
constexpr double kTol = 1e-12;
}

double pl_flow_cost(const MarketInstance& inst, const DemandVector& demand,
                    double step) {
  const int B = inst.num_buyers(), S = inst.num_items();
  const int nodes = B + S;

  auto pl_total = [&](int t, double y) {
    double k = std::floor(y / step + 1e-9);
    double y0 = k * step;
    const CostFn& c = inst.item(t).cost;
    double c0 = c.total(y0), c1 = c.total(y0 + step);
    return c0 + (y - y0) / step * (c1 - c0);
  };
  auto fslope = [&](int t, double y) {
    double k = std::floor(y / step + 1e-9);
    const CostFn& c = inst.item(t).cost;
    return (c.total((k + 1) * step) - c.total(k * step)) / step;
  };
  auto bslope = [&](int t, double y) {
    double k = std::ceil(y / step - 1e-9);
    const CostFn& c = inst.item(t).cost;
    return (c.total(k * step) - c.total((k - 1) * step)) / step;
  };

  std::vector<std::vector<double>> flow(B);
  for (int i = 0; i < B; ++i) flow[i].assign(inst.items_of(i).size(), 0.0);
  std::vector<double> y(S, 0.0), left(demand);

  for (long iter = 0; iter < 200000; ++iter) {
    bool supply_left = false;
    for (int i = 0; i < B; ++i)
      if (left[i] > kTol) supply_left = true;
    if (!supply_left) break;

    // Bellman-Ford over buyers (0..B-1) and items (B..B+S-1); alloc arcs are
    // free, the only cost is appending at the terminal item.
    std::vector<double> dist(nodes, kInf);
    std::vector<int> par(nodes, -1);
    for (int i = 0; i < B; ++i)
      if (left[i] > kTol) dist[i] = 0.0;
    for (int round = 0; round < nodes; ++round) {
      bool relaxed = false;
      for (int i = 0; i < B; ++i) {
        const auto& row = inst.items_of(i);
        for (size_t k = 0; k < row.size(); ++k) {
          int t = B + row[k];
          if (dist[i] < dist[t] - 1e-15) {
            dist[t] = dist[i];
            par[t] = i;
            relaxed = true;
          }
          if (flow[i][k] > kTol && dist[t] < dist[i] - 1e-15) {
            dist[i] = dist[t];
            par[i] = t;
            relaxed = true;
          }
        }
      }
      if (!relaxed) break;
    }

    int term = -1;
    double best = kInf;
    for (int t = 0; t < S; ++t) {
      double cap = inst.item(t).cost.capacity();
      if (y[t] >= cap - kTol) continue;
      if (dist[B + t] == kInf) continue;
      double cost = dist[B + t] + fslope(t, y[t]);
      if (cost < best - 1e-15) {
        best = cost;
        term = t;
      }
    }
    if (term < 0) throw std::runtime_error("pl_flow_cost: no augmenting path");

    // walk back to a source buyer, collecting the bottleneck
    std::vector<int> path;  // node ids, buyer,item,buyer,...,item(term)
    int node = B + term;
    path.push_back(node);
    while (par[node] >= 0) {
      node = par[node];
      path.push_back(node);
    }
    std::reverse(path.begin(), path.end());
    int src = path.front();
    if (src >= B || left[src] <= kTol)
      throw std::runtime_error("pl_flow_cost: bad path source");

    double push = left[src];
    {
      double k = std::floor(y[term] / step + 1e-9);
      push = std::min(push, (k + 1) * step - y[term]);
      double cap = inst.item(term).cost.capacity();
      if (std::isfinite(cap)) push = std::min(push, cap - y[term]);
    }
    for (size_t s = 0; s + 1 < path.size(); ++s) {
      int a = path[s], b = path[s + 1];
      if (a >= B) {  // residual alloc arc item->buyer
        int t = a - B, i = b;
        const auto& row = inst.items_of(i);
        size_t k = std::lower_bound(row.begin(), row.end(), t) - row.begin();
        push = std::min(push, flow[i][k]);
      }
    }
    if (push <= kTol) throw std::runtime_error("pl_flow_cost: empty augmentation");
    for (size_t s = 0; s + 1 < path.size(); ++s) {
      int a = path[s], b = path[s + 1];
      if (a < B) {  // buyer -> item
        const auto& row = inst.items_of(a);
        size_t k = std::lower_bound(row.begin(), row.end(), b - B) - row.begin();
        flow[a][k] += push;
      } else {  // item -> buyer residual
        const auto& row = inst.items_of(b);
        size_t k = std::lower_bound(row.begin(), row.end(), a - B) - row.begin();
        flow[b][k] -= push;
      }
    }
    left[src] -= push;
    y[term] += push;
  }

  // optimality audit on the linearized costs: no buyer can move an
  // infinitesimal amount to a cheaper slope
  for (int i = 0; i < B; ++i) {
    const auto& row = inst.items_of(i);
    for (size_t k = 0; k < row.size(); ++k) {
      if (flow[i][k] <= 1e-9) continue;
      for (int t2 : row) {
        if (y[t2] >= inst.item(t2).cost.capacity() - kTol) continue;
        if (bslope(row[k], y[row[k]]) > fslope(t2, y[t2]) + 1e-7)
          throw std::runtime_error("pl_flow_cost: optimality audit failed");
      }
    }
  }

  double total = 0.0;
  for (int t = 0; t < S; ++t) total += pl_total(t, y[t]);
  return total;
}

std::vector<double> sweep_ascent_prices(const MarketInstance& inst,
                                        const AscendConfig& cfg,
                                        const WelfareOptimum& wopt,
                                        double price_step) {
  const int B = inst.num_buyers(), S = inst.num_items();
  AscendConfig c = cfg;
  if (c.stop_target <= 0)
    throw std::invalid_argument("sweep_ascent_prices: stop_target must be set");
  const double target = c.stop_target;
  if (c.price_eps <= 0) c.price_eps = 1e-6 * target;

  enum class St { Inactive, Active, Done };
  std::vector<St> item_state(S, St::Inactive), buyer_state(B, St::Inactive);
  std::vector<double> stop(S, 0.0);
  std::vector<double> activation(B, kInf);
  for (int i = 0; i < B; ++i) {
    double m = kInf;
    for (int t : inst.items_of(i)) m = std::min(m, wopt.prices[t]);
    activation[i] = m;
  }

  double group = std::max(1e-12, 1e-8 * target);
  double start = kInf;
  for (int t = 0; t < S; ++t) {
    if (wopt.prices[t] >= target - group) {
      item_state[t] = St::Done;  // frozen at its start price
      stop[t] = wopt.prices[t];
    } else {
      start = std::min(start, wopt.prices[t]);
    }
  }
  for (int i = 0; i < B; ++i)
    if (wopt.demand[i] <= c.tol || activation[i] >= target - group)
      buyer_state[i] = St::Done;
  if (start == kInf) return stop;

  long steps = static_cast<long>(std::ceil((target - start) / price_step));
  for (long s = 0; s <= steps; ++s) {
    double p = std::min(start + static_cast<double>(s) * price_step, target);
    for (int t = 0; t < S; ++t)
      if (item_state[t] == St::Inactive && wopt.prices[t] <= p + group)
        item_state[t] = St::Active;
    for (int i = 0; i < B; ++i)
      if (buyer_state[i] == St::Inactive && activation[i] <= p + group)
        buyer_state[i] = St::Active;

    while (true) {
      std::vector<char> bm(B, 0), tm(S, 0);
      bool any = false;
      for (int i = 0; i < B; ++i) bm[i] = buyer_state[i] == St::Active;
      for (int t = 0; t < S; ++t) {
        tm[t] = item_state[t] == St::Active;
        any = any || tm[t];
      }
      if (!any) break;
      DemandVector x(B, 0.0);
      for (int i = 0; i < B; ++i)
        if (bm[i]) x[i] = inst.buyer(i).demand.inverse(p);
      FlowResult fr = min_cost_flow(inst, x, c.solver_tol, &bm, &tm);
      std::vector<char> fin(S, 0);
      bool any_fin = false;
      for (int t = 0; t < S; ++t)
        if (tm[t] && stopping_criterion(p, fr.item_marginal[t], c)) {
          fin[t] = 1;
          any_fin = true;
        }
      if (!any_fin) break;
      // marginal-tied closure, as in the engine
      bool changed = true;
      while (changed) {
        changed = false;
        for (int i = 0; i < B; ++i) {
          if (!bm[i]) continue;
          const auto& row = inst.items_of(i);
          bool touch = false, all_in = true;
          for (size_t k = 0; k < row.size(); ++k) {
            if (fr.alloc.edge_flow[i][k] <= 1e-12) continue;
            if (fin[row[k]])
              touch = true;
            else
              all_in = false;
          }
          if (touch && !all_in)
            for (size_t k = 0; k < row.size(); ++k)
              if (fr.alloc.edge_flow[i][k] > 1e-12 && !fin[row[k]]) {
                fin[row[k]] = 1;
                changed = true;
              }
        }
      }
      for (int t = 0; t < S; ++t)
        if (fin[t] && item_state[t] == St::Active) {
          item_state[t] = St::Done;
          stop[t] = p;
        }
      for (int i = 0; i < B; ++i) {
        if (buyer_state[i] != St::Active) continue;
        const auto& row = inst.items_of(i);
        bool used = false, all_in = true, active_left = false;
        for (size_t k = 0; k < row.size(); ++k) {
          if (item_state[row[k]] == St::Active) active_left = true;
          if (fr.alloc.edge_flow[i][k] > 1e-12) {
            used = true;
            if (!fin[row[k]]) all_in = false;
          }
        }
        if ((used && all_in) || (!used && !active_left)) buyer_state[i] = St::Done;
      }
    }
  }
  for (int t = 0; t < S; ++t)
    if (item_state[t] != St::Done)
      throw std::runtime_error("sweep_ascent_prices: item never finished");
  return stop;
}

double grid_welfare_opt(const MarketInstance& inst, double step) {
  const int B = inst.num_buyers();
  std::vector<std::vector<double>> axes(B);
  for (int i = 0; i < B; ++i) {
    double T = inst.buyer(i).demand.mass();
    long n = static_cast<long>(std::floor(T / step + 1e-9));
    for (long g = 0; g <= n; ++g) axes[i].push_back(std::min(T, g * step));
    if (axes[i].back() < T - 1e-12) axes[i].push_back(T);
  }
  DemandVector x(B, 0.0);
  double best = -kInf;
  std::vector<size_t> idx(B, 0);
  while (true) {
    for (int i = 0; i < B; ++i) x[i] = axes[i][idx[i]];
    try {
      FlowResult fr = min_cost_flow(inst, x, 1e-10);
      double val = 0.0;
      for (int i = 0; i < B; ++i) val += inst.buyer(i).demand.integral(0.0, x[i]);
      auto y = fr.alloc.item_totals(inst);
      for (int t = 0; t < inst.num_items(); ++t)
        val -= inst.item(t).cost.total(y[t]);
      best = std::max(best, val);
    } catch (const InfeasibleDemand&) {
    }
    int d = B - 1;
    while (d >= 0 && ++idx[d] == axes[d].size()) idx[d--] = 0;
    if (d < 0) break;
  }
  return best;
}

}  // namespace efp::testing
