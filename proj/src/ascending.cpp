#include "efp/ascending.hpp"

#include <algorithm>
#include <cmath>

namespace efp {

namespace {

constexpr double kFlowTol = 1e-12;

double derive_target(const MarketInstance& inst, const AscendConfig& cfg) {
  if (cfg.stop_target > 0) return cfg.stop_target;
  double lo = kInf, hi = -kInf;
  for (int i = 0; i < inst.num_buyers(); ++i) {
    double p = inst.buyer(i).demand.peak();
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  if (cfg.rule == StopRule::SharedPeak) {
    if (hi - lo > cfg.tol * std::max(1.0, hi))
      throw std::invalid_argument(
          "ascending: shared-peak rule requires uniform peak valuations (got " +
          std::to_string(lo) + " .. " + std::to_string(hi) + ")");
    return hi;
  }
  return lo;
}

struct Engine {
  const MarketInstance& inst;
  AscendConfig cfg;
  double target;
  double eps;
  double group_tol;

  enum class ItemState { Inactive, Active, Finished, Frozen };
  enum class BuyerState { Inactive, Active, Finished, Frozen, Never };

  std::vector<ItemState> istate;
  std::vector<BuyerState> bstate;
  std::vector<double> activation_price;  // per buyer
  std::vector<double> stop_price;        // per item
  std::vector<double> pbar;              // per buyer, price faced at finish
  DemandVector final_x;
  Allocation final_flow;
  AscendTrace trace;
  const WelfareOptimum& wopt;

  Engine(const MarketInstance& m, const AscendConfig& c, double tgt,
         const WelfareOptimum& w)
      : inst(m), cfg(c), target(tgt), wopt(w) {
    eps = cfg.price_eps > 0 ? cfg.price_eps : 1e-6 * target;
    cfg.price_eps = eps;  // keep the stop test on the same slack
    group_tol = std::max(1e-12, 1e-8 * target);
    istate.assign(inst.num_items(), ItemState::Inactive);
    bstate.assign(inst.num_buyers(), BuyerState::Inactive);
    stop_price.assign(inst.num_items(), 0.0);
    pbar.assign(inst.num_buyers(), 0.0);
    final_x.assign(inst.num_buyers(), 0.0);
    final_flow = Allocation::zeros(inst);
    trace.stop_price.assign(inst.num_items(), 0.0);
  }

  ActiveState masks() const {
    ActiveState st;
    st.buyers.resize(inst.num_buyers());
    st.items.resize(inst.num_items());
    for (int i = 0; i < inst.num_buyers(); ++i)
      st.buyers[i] = bstate[i] == BuyerState::Active;
    for (int t = 0; t < inst.num_items(); ++t)
      st.items[t] = istate[t] == ItemState::Active;
    return st;
  }

  struct Probe {
    FlowResult flow;
    DemandVector demand;
    std::vector<int> finishers;  // within the eps slack of the stop test
    double residual = -kInf;     // max over active items of the exact margin
  };

  Probe probe(double price) {
    ActiveState st = masks();
    DemandVector x(inst.num_buyers(), 0.0);
    for (int i = 0; i < inst.num_buyers(); ++i)
      if (st.buyers[i]) x[i] = inst.buyer(i).demand.inverse(price);
    Probe pr;
    pr.flow = min_cost_flow(inst, x, cfg.solver_tol, &st.buyers, &st.items);
    ++trace.mincost_solves;
    pr.demand = std::move(x);
    for (int t = 0; t < inst.num_items(); ++t) {
      if (!st.items[t]) continue;
      double c = pr.flow.item_marginal[t];
      double resid = (price - c) - (target - c) / cfg.k;
      pr.residual = std::max(pr.residual, resid);
      if (resid >= -eps) pr.finishers.push_back(t);
    }
    return pr;
  }

  void activate(double price) {
    for (int t = 0; t < inst.num_items(); ++t)
      if (istate[t] == ItemState::Inactive &&
          std::abs(wopt.prices[t] - price) <= group_tol) {
        istate[t] = ItemState::Active;
        trace.events.push_back({price, Transition::ItemActivated, t});
      }
    for (int i = 0; i < inst.num_buyers(); ++i)
      if (bstate[i] == BuyerState::Inactive &&
          std::abs(activation_price[i] - price) <= group_tol) {
        bstate[i] = BuyerState::Active;
        trace.events.push_back({price, Transition::BuyerActivated, i});
      }
  }

  // Freeze the finishing set at `price`: the probed items plus anything
  // marginal-tied to them through a buyer, then every buyer whose used items
  // all stopped.
  void finish(double price, const Probe& pr, std::vector<int> items) {
    std::vector<char> in_f(inst.num_items(), 0);
    for (int t : items) in_f[t] = 1;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < inst.num_buyers(); ++i) {
        if (bstate[i] != BuyerState::Active) continue;
        const auto& row = inst.items_of(i);
        bool touches = false, all_in = true;
        for (size_t k = 0; k < row.size(); ++k) {
          if (pr.flow.alloc.edge_flow[i][k] <= kFlowTol) continue;
          if (in_f[row[k]])
            touches = true;
          else
            all_in = false;
        }
        if (touches && !all_in) {
          for (size_t k = 0; k < row.size(); ++k)
            if (pr.flow.alloc.edge_flow[i][k] > kFlowTol && !in_f[row[k]]) {
              in_f[row[k]] = 1;
              changed = true;
            }
        }
      }
    }

    for (int t = 0; t < inst.num_items(); ++t)
      if (in_f[t] && istate[t] == ItemState::Active) {
        istate[t] = ItemState::Finished;
        stop_price[t] = price;
        trace.events.push_back({price, Transition::ItemFinished, t});
      }

    for (int i = 0; i < inst.num_buyers(); ++i) {
      if (bstate[i] != BuyerState::Active) continue;
      const auto& row = inst.items_of(i);
      bool any_used = false, all_in = true, any_active_left = false;
      for (size_t k = 0; k < row.size(); ++k) {
        if (istate[row[k]] == ItemState::Active) any_active_left = true;
        if (pr.flow.alloc.edge_flow[i][k] > kFlowTol) {
          any_used = true;
          if (!in_f[row[k]]) all_in = false;
        }
      }
      bool done = (any_used && all_in) || (!any_used && !any_active_left);
      if (!done) continue;
      bstate[i] = BuyerState::Finished;
      pbar[i] = price;
      final_x[i] = pr.demand[i];
      for (size_t k = 0; k < row.size(); ++k)
        final_flow.edge_flow[i][k] = pr.flow.alloc.edge_flow[i][k];
      trace.events.push_back({price, Transition::BuyerFinished, i});
    }
  }

  bool any_active_item() const {
    for (auto s : istate)
      if (s == ItemState::Active) return true;
    return false;
  }

  void run() {
    // per-buyer activation thresholds: the cheapest starting price reachable
    activation_price.assign(inst.num_buyers(), kInf);
    for (int i = 0; i < inst.num_buyers(); ++i) {
      double m = kInf;
      for (int t : inst.items_of(i)) m = std::min(m, wopt.prices[t]);
      activation_price[i] = m;
    }

    for (int t = 0; t < inst.num_items(); ++t)
      if (wopt.prices[t] >= target - group_tol) {
        istate[t] = ItemState::Frozen;
        stop_price[t] = wopt.prices[t];
        ++trace.frozen_items;
      }
    for (int i = 0; i < inst.num_buyers(); ++i) {
      if (wopt.demand[i] <= cfg.tol) {
        bstate[i] = BuyerState::Never;
      } else if (activation_price[i] >= target - group_tol) {
        bstate[i] = BuyerState::Frozen;
        pbar[i] = activation_price[i];
        final_x[i] = wopt.demand[i];
        final_flow.edge_flow[i] = wopt.alloc.edge_flow[i];
      }
    }

    std::vector<double> ladder;
    for (int t = 0; t < inst.num_items(); ++t)
      if (istate[t] == ItemState::Inactive) ladder.push_back(wopt.prices[t]);
    std::sort(ladder.begin(), ladder.end());
    std::vector<double> P;
    for (double p : ladder)
      if (P.empty() || p - P.back() > group_tol) P.push_back(p);
    P.push_back(target);
    trace.boundary = P;
    if (P.size() < 2) return;  // everything frozen

    // The stop-test margin of an item grows at least one-for-one with the
    // active price (its marginal can only fall), so a probe at price p with
    // margin resid_t < 0 bounds that item's stop price by p - resid_t. After
    // each finish this yields the next round's bracket for free; the bound
    // survives removals (marginals only drop further) but not activations.
    double next_stop_bound = kInf;
    auto refresh_bound = [&](const Probe& pr, double at_price) {
      next_stop_bound = kInf;
      for (int t = 0; t < inst.num_items(); ++t) {
        if (istate[t] != ItemState::Active) continue;
        double c = pr.flow.item_marginal[t];
        double resid = (at_price - c) - (target - c) / cfg.k;
        next_stop_bound =
            std::min(next_stop_bound, at_price + std::max(0.0, -resid));
      }
    };

    activate(P[0]);
    bool deferred = false;  // previous interval ended on an activation tie
    for (size_t j = 1; j < P.size(); ++j) {
      double lo = P[j - 1], hi = P[j];
      bool last = (j + 1 == P.size());
      // an item that tied with the activation at lo usually still stops
      // there once the newcomers are in; one probe retires it cheaply
      while (deferred && any_active_item()) {
        Probe at_lo = probe(lo);
        if (at_lo.finishers.empty()) {
          refresh_bound(at_lo, lo);
          break;
        }
        finish(lo, at_lo, at_lo.finishers);
        refresh_bound(at_lo, lo);
      }
      deferred = false;
      while (any_active_item()) {
        double blo = lo, bhi = hi;
        double rlo = -kInf, rhi = kInf;
        bool have_true = false;
        Probe best;
        if (next_stop_bound <= hi - eps) {
          // a stop is guaranteed inside; bisect its known bracket blind
          bhi = std::min(hi, next_stop_bound + eps);
        } else {
          // no usable bound: one probe at hi decides the whole interval
          Probe at_hi = probe(hi);
          if (at_hi.residual < 0.0) {
            if (!last) break;  // nothing stops in this interval
            // at the final ladder entry everything must at least be within
            // the grouping slack
            if (at_hi.finishers.empty())
              throw std::logic_error(
                  "ascending: stop test unmet at the target price");
            finish(hi, at_hi, at_hi.finishers);
            refresh_bound(at_hi, hi);
            lo = hi;
            continue;
          }
          rhi = at_hi.residual;
          best = std::move(at_hi);
          have_true = true;
        }
        while (bhi - blo > eps) {
          double mid = 0.5 * (blo + bhi);
          Probe at_mid = probe(mid);
          if (at_mid.residual >= 0.0) {
            bhi = mid;
            rhi = at_mid.residual;
            best = std::move(at_mid);
            have_true = true;
          } else {
            blo = mid;
            rlo = at_mid.residual;
          }
        }
        if (!have_true) {
          // the bound promised a stop at bhi; confirm with one probe
          Probe at_end = probe(bhi);
          if (at_end.finishers.empty()) {
            next_stop_bound = kInf;  // stale bound; retry against hi
            continue;
          }
          rhi = at_end.residual;
          best = std::move(at_end);
        }
        if (!last && bhi > hi - eps) {
          deferred = true;  // stop collides with an activation price:
          break;            // newcomers enter first
        }
        // one secant step sharpens the stop price when the bracket endpoint
        // sits too far above the test for the equality budget
        if (rhi > 1.25 * eps && std::isfinite(rlo) && rhi - rlo > 0.0) {
          double sec = bhi - rhi * (bhi - blo) / (rhi - rlo);
          if (sec > blo && sec < bhi) {
            Probe at_sec = probe(sec);
            if (!at_sec.finishers.empty()) {
              bhi = sec;
              best = std::move(at_sec);
            }
          }
        }
        finish(bhi, best, best.finishers);
        refresh_bound(best, bhi);
        lo = bhi;
      }
      if (!last) {
        activate(hi);
        next_stop_bound = kInf;  // newcomers raise marginals; bounds stale
      }
    }

    for (int t = 0; t < inst.num_items(); ++t)
      if (istate[t] == ItemState::Active || istate[t] == ItemState::Inactive)
        throw std::logic_error("ascending: item '" + inst.item(t).id +
                               "' never met the stop test");
  }

  AscendResult assemble() {
    AscendResult out;
    Solution& sol = out.solution;
    sol.prices.resize(inst.num_items());
    for (int t = 0; t < inst.num_items(); ++t) {
      sol.prices[t] = stop_price[t];
      if (istate[t] == ItemState::Frozen) sol.frozen_items.push_back(t);
    }
    sol.demand = final_x;
    sol.alloc = final_flow;
    for (int i = 0; i < inst.num_buyers(); ++i) {
      if (bstate[i] != BuyerState::Never) continue;
      double p = cheapest_price(sol.prices, i, inst);
      double x = inst.buyer(i).demand.inverse(p);
      if (x > cfg.tol) {
        sol.warnings.push_back("buyer '" + inst.buyer(i).id +
                               "' was priced out at the start but holds " +
                               "positive demand at the final prices");
        x = 0.0;
      }
      final_x[i] = x;
      sol.demand[i] = x;
      pbar[i] = p;
    }
    if (cfg.rule == StopRule::SharedPeak && trace.frozen_items > 0)
      sol.warnings.push_back(
          "items started at or above the shared peak and stayed frozen");
    sol.diag = compute_diagnostics(sol.prices, sol.demand, sol.alloc, inst, cfg.tol);
    trace.stop_price = stop_price;
    out.trace = std::move(trace);
    return out;
  }
};

}  // namespace

bool stopping_criterion(double price, double marginal, const AscendConfig& cfg) {
  if (price < 0 || marginal < 0)
    throw std::invalid_argument("stopping_criterion: negative inputs");
  double target = cfg.stop_target;
  double eps = cfg.price_eps > 0 ? cfg.price_eps : 1e-6 * target;
  return price - marginal >= (target - marginal) / cfg.k - eps;
}

std::vector<double> boundary_prices(const PriceVector& base, double stop_target) {
  std::vector<double> all(base);
  all.push_back(stop_target);
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  double group = std::max(1e-12, 1e-9 * std::max(1.0, stop_target));
  for (double p : all)
    if (out.empty() || p - out.back() > group) out.push_back(p);
  return out;
}

StopProbe find_stop_price(const MarketInstance& inst, const ActiveState& state,
                          double lo, double hi, const AscendConfig& cfg,
                          long* solve_counter) {
  if (lo > hi) throw std::invalid_argument("find_stop_price: inverted interval");
  AscendConfig c = cfg;
  if (c.stop_target <= 0)
    throw std::invalid_argument("find_stop_price: stop_target must be set");
  double eps = c.price_eps > 0 ? c.price_eps : 1e-6 * c.stop_target;

  auto probe = [&](double price) {
    DemandVector x(inst.num_buyers(), 0.0);
    for (int i = 0; i < inst.num_buyers(); ++i)
      if (state.buyers[i]) x[i] = inst.buyer(i).demand.inverse(price);
    FlowResult fr = min_cost_flow(inst, x, c.solver_tol, &state.buyers, &state.items);
    if (solve_counter) ++*solve_counter;
    std::vector<int> f;
    for (int t = 0; t < inst.num_items(); ++t)
      if (state.items[t] && stopping_criterion(price, fr.item_marginal[t], c))
        f.push_back(t);
    return f;
  };

  std::vector<int> at_hi = probe(hi);
  if (at_hi.empty())
    throw std::invalid_argument("find_stop_price: no item meets the stop test at hi");
  double blo = lo, bhi = hi;
  std::vector<int> best = std::move(at_hi);
  while (bhi - blo > eps) {
    double mid = 0.5 * (blo + bhi);
    std::vector<int> f = probe(mid);
    if (!f.empty()) {
      bhi = mid;
      best = std::move(f);
    } else {
      blo = mid;
    }
  }
  return StopProbe{bhi, std::move(best)};
}

AscendResult run_ascending(const MarketInstance& inst, const AscendConfig& cfg,
                           const WelfareOptimum* warm) {
  if (cfg.k < 1.0) throw std::invalid_argument("ascending: k must be >= 1");
  AscendConfig c = cfg;
  c.stop_target = derive_target(inst, cfg);
  WelfareOptimum local;
  if (!warm) {
    local = welfare_opt(inst);
    warm = &local;
  }
  Engine eng(inst, c, c.stop_target, *warm);
  eng.run();
  return eng.assemble();
}

}  // namespace efp
