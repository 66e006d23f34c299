#include "efp/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "efp/flow.hpp"

namespace efp {

namespace {

constexpr double kTieTol = 1e-11;

// splitmix64: platform-independent seeded stream
struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed + 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next() {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int pick(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

// Scratch for scoring one price tuple without heap traffic.
struct EvalScratch {
  std::vector<double> prices;
  std::vector<double> y;
  std::vector<double> extra_flow;  // per allowed edge when ties force a solve
};

struct TupleEvaluator {
  const MarketInstance& inst;
  int B, S;

  explicit TupleEvaluator(const MarketInstance& m)
      : inst(m), B(m.num_buyers()), S(m.num_items()) {}

  // Revenue of the cheapest envy-free routing of the best response at
  // `prices`. The common case routes each buyer to its unique cheapest item;
  // price ties fall back to a pairwise marginal equalization among the tied
  // items.
  double operator()(const double* prices, EvalScratch& sc) const {
    sc.y.assign(S, 0.0);
    bool any_tie = false;
    for (int i = 0; i < B; ++i) {
      const auto& row = inst.items_of(i);
      double pbar = kInf;
      int arg = -1;
      bool tie = false;
      for (int t : row) {
        double p = prices[t];
        if (p < pbar - kTieTol) {
          pbar = p;
          arg = t;
          tie = false;
        } else if (p <= pbar + kTieTol) {
          tie = true;
        }
      }
      double x = inst.buyer(i).demand.inverse(pbar);
      if (x <= 0.0) continue;
      if (tie) {
        any_tie = true;
        break;
      }
      sc.y[arg] += x;
    }
    if (any_tie) return tied_eval(prices, sc);
    double rev = 0.0;
    for (int t = 0; t < S; ++t) {
      if (sc.y[t] > 0.0)
        rev += prices[t] * sc.y[t] - inst.item(t).cost.total(sc.y[t]);
    }
    return rev;
  }

  double tied_eval(const double* prices, EvalScratch& sc) const {
    // equalize marginals among each buyer's cheapest-priced items
    sc.y.assign(S, 0.0);
    std::vector<std::vector<int>> allowed(B);
    std::vector<std::vector<double>> flow(B);
    std::vector<double> x(B, 0.0);
    for (int i = 0; i < B; ++i) {
      double pbar = kInf;
      for (int t : inst.items_of(i)) pbar = std::min(pbar, prices[t]);
      x[i] = inst.buyer(i).demand.inverse(pbar);
      if (x[i] <= 0.0) continue;
      for (int t : inst.items_of(i))
        if (prices[t] <= pbar + kTieTol) allowed[i].push_back(t);
      flow[i].assign(allowed[i].size(), 0.0);
      flow[i][0] = x[i];
      sc.y[allowed[i][0]] += x[i];
    }
    for (long iter = 0; iter < 20000; ++iter) {
      int mi = -1, ms = -1, md = -1;
      double gap = 1e-10;
      for (int i = 0; i < B; ++i) {
        if (x[i] <= 0.0 || allowed[i].size() < 2) continue;
        int src = -1, dst = -1;
        double sm = -kInf, dm = kInf;
        for (size_t k = 0; k < allowed[i].size(); ++k) {
          double m = inst.item(allowed[i][k]).cost.marginal(sc.y[allowed[i][k]]);
          if (flow[i][k] > 1e-12 && m > sm) {
            sm = m;
            src = static_cast<int>(k);
          }
          if (m < dm) {
            dm = m;
            dst = static_cast<int>(k);
          }
        }
        if (src >= 0 && dst >= 0 && src != dst && sm - dm > gap) {
          gap = sm - dm;
          mi = i;
          ms = src;
          md = dst;
        }
      }
      if (mi < 0) break;
      int ts = allowed[mi][ms], td = allowed[mi][md];
      double dmax = flow[mi][ms];
      double lo = 0.0, hi = dmax;
      auto g = [&](double d) {
        return inst.item(td).cost.marginal(sc.y[td] + d) -
               inst.item(ts).cost.marginal(sc.y[ts] - d);
      };
      double step = dmax;
      if (g(dmax) > 0.0) {
        for (int b = 0; b < 60; ++b) {
          double mid = 0.5 * (lo + hi);
          (g(mid) > 0.0 ? hi : lo) = mid;
        }
        step = 0.5 * (lo + hi);
      }
      if (step <= 1e-14) break;
      flow[mi][ms] -= step;
      flow[mi][md] += step;
      sc.y[ts] -= step;
      sc.y[td] += step;
    }
    double rev = 0.0;
    for (int t = 0; t < S; ++t)
      if (sc.y[t] > 0.0) rev += prices[t] * sc.y[t] - inst.item(t).cost.total(sc.y[t]);
    return rev;
  }
};

struct GridAxes {
  std::vector<std::vector<double>> points;  // per item
  long long total = 1;
};

GridAxes build_axes(const MarketInstance& inst, const GridSpec& grid) {
  if (static_cast<int>(grid.lo.size()) != inst.num_items() ||
      static_cast<int>(grid.hi.size()) != inst.num_items())
    throw std::invalid_argument("grid: lo/hi must have one entry per item");
  if (!(grid.step > 0)) throw std::invalid_argument("grid: step must be positive");
  GridAxes ax;
  ax.points.resize(inst.num_items());
  for (int t = 0; t < inst.num_items(); ++t) {
    double lo = grid.lo[t], hi = std::max(grid.hi[t], grid.lo[t]);
    auto& pts = ax.points[t];
    long long n = static_cast<long long>(std::floor((hi - lo) / grid.step + 1e-9)) + 1;
    for (long long j = 0; j < n; ++j) pts.push_back(lo + static_cast<double>(j) * grid.step);
    if (pts.back() < hi - 1e-12) pts.push_back(hi);
    pts.back() = hi;  // pin the top peak exactly; plateau buyers buy there
    ax.total *= static_cast<long long>(pts.size());
    if (ax.total > grid.budget)
      throw BudgetExceeded("grid oracle budget exceeded: needs " +
                           std::to_string(ax.total) + " evaluations, budget " +
                           std::to_string(grid.budget));
  }
  return ax;
}

OracleReport grid_search(const MarketInstance& inst, const GridSpec& grid,
                         bool parallel) {
  auto t0 = std::chrono::steady_clock::now();
  GridAxes ax = build_axes(inst, grid);
  const int S = inst.num_items();
  TupleEvaluator eval(inst);

  std::vector<long long> stride(S, 1);
  for (int t = S - 2; t >= 0; --t)
    stride[t] = stride[t + 1] * static_cast<long long>(ax.points[t + 1].size());
  const long long total = ax.total;

  double best_rev = -kInf;
  long long best_idx = 0;

#ifdef _OPENMP
  int nthreads = parallel ? omp_get_max_threads() : 1;
#else
  int nthreads = 1;
  (void)parallel;
#endif

#pragma omp parallel num_threads(nthreads)
  {
    EvalScratch sc;
    std::vector<double> prices(S);
    double loc_rev = -kInf;
    long long loc_idx = 0;
#pragma omp for schedule(static)
    for (long long idx = 0; idx < total; ++idx) {
      long long rem = idx;
      for (int t = 0; t < S; ++t) {
        prices[t] = ax.points[t][rem / stride[t]];
        rem %= stride[t];
      }
      double rev = eval(prices.data(), sc);
      if (rev > loc_rev || (rev == loc_rev && idx < loc_idx)) {
        loc_rev = rev;
        loc_idx = idx;
      }
    }
#pragma omp critical
    {
      if (loc_rev > best_rev || (loc_rev == best_rev && loc_idx < best_idx)) {
        best_rev = loc_rev;
        best_idx = loc_idx;
      }
    }
  }

  OracleReport rep;
  rep.grid = grid;
  rep.evaluations = total;
  rep.best_prices.resize(S);
  long long rem = best_idx;
  for (int t = 0; t < S; ++t) {
    rep.best_prices[t] = ax.points[t][rem / stride[t]];
    rem %= stride[t];
  }
  rep.best_revenue = best_rev;
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

}  // namespace

GridSpec make_default_grid(const MarketInstance& inst, const PriceVector& k_e_prices,
                           double step, long long budget) {
  double top_peak = 0.0;
  for (int i = 0; i < inst.num_buyers(); ++i)
    top_peak = std::max(top_peak, inst.buyer(i).demand.peak());
  GridSpec g;
  g.step = step;
  g.budget = budget;
  g.lo = k_e_prices;
  g.hi.assign(inst.num_items(), top_peak);
  return g;
}

OracleReport grid_opt_revenue(const MarketInstance& inst, const GridSpec& grid) {
  return grid_search(inst, grid, grid.threads != 1);
}

OracleReport grid_opt_revenue_serial(const MarketInstance& inst,
                                     const GridSpec& grid) {
  return grid_search(inst, grid, false);
}

double envy_free_revenue(const MarketInstance& inst, const PriceVector& prices) {
  Solution sol = solve_at_prices(inst, prices);
  return sol.diag.revenue;
}

MarketInstance gen_random_mhr_instance(const RandomMarketSpec& spec) {
  if (spec.buyers < 1 || spec.items < 1)
    throw std::invalid_argument("random market: need at least one buyer and item");
  Rng rng(spec.seed);
  MarketInstance inst;

  for (int i = 0; i < spec.buyers; ++i) {
    double peak;
    if (spec.peak_spread <= 1.0)
      peak = 1.0;
    else if (i == 0)
      peak = 1.0;
    else if (i == 1)
      peak = spec.peak_spread;
    else
      peak = std::exp(rng.uniform(0.0, std::log(spec.peak_spread)));
    int fam = rng.pick(spec.allow_uniform_demand ? 3 : 2);
    DemandFn d = DemandFn::linear(1, 1, 1);
    switch (fam) {
      case 0: {
        double slope = rng.uniform(0.5, 2.0) * peak;
        double full = peak / slope;
        d = DemandFn::linear(peak, slope, full * rng.uniform(0.6, 1.0));
        break;
      }
      case 1: {
        double rate = rng.uniform(0.5, 2.0);
        double tmax = std::log(peak / 1e-6) / rate;
        d = DemandFn::exponential(peak, rate, std::min(rng.uniform(0.5, 2.0), tmax));
        break;
      }
      default:
        d = DemandFn::uniform(peak, rng.uniform(0.3, 1.2));
    }
    inst.add_buyer("b" + std::to_string(i), d);
  }

  for (int t = 0; t < spec.items; ++t) {
    int fam = rng.pick(3);
    CostFn c = CostFn::zero();
    if (spec.doubly_convex_only) {
      if (fam == 1)
        c = CostFn::quadratic(rng.uniform(0.2, 1.5));
      else if (fam == 2)
        c = CostFn::power(rng.uniform(0.2, 1.0), rng.uniform(2.0, 3.0));
    } else {
      if (fam == 1)
        c = CostFn::linear(rng.uniform(0.02, 0.4));
      else if (fam == 2)
        c = CostFn::quadratic(rng.uniform(0.2, 1.5), rng.uniform(0.0, 0.2));
    }
    inst.add_item("i" + std::to_string(t), c);
  }

  for (int i = 0; i < spec.buyers; ++i) {
    inst.add_edge(i, rng.pick(spec.items));
    for (int t = 0; t < spec.items; ++t)
      if (rng.uniform() < spec.edge_density) inst.add_edge(i, t);
  }
  return inst;
}

MarketInstance gen_vertex_cover_gadget(
    int vertices, const std::vector<std::pair<int, int>>& edges, int r) {
  if (vertices < 1) throw std::invalid_argument("gadget: need at least one vertex");
  if (r < 1) throw std::invalid_argument("gadget: r must be >= 1");
  MarketInstance inst;
  for (int v = 0; v < vertices; ++v)
    inst.add_item("v" + std::to_string(v), CostFn::zero());
  for (int v = 0; v < vertices; ++v) {
    int b = inst.add_buyer("vb" + std::to_string(v), DemandFn::uniform(2.0, 1.0));
    inst.add_edge(b, v);
  }
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= vertices || b >= vertices || a == b)
      throw std::invalid_argument("gadget: edge endpoints out of range");
    int buyer = inst.add_buyer(
        "eb" + std::to_string(a) + "_" + std::to_string(b),
        DemandFn::linear(2.0, 1.0 / r, 2.0 * r));
    inst.add_edge(buyer, a);
    inst.add_edge(buyer, b);
  }
  return inst;
}

namespace {

void fold(LemmaSuiteReport& rep, const std::string& name, double slack) {
  for (auto& c : rep.checks)
    if (c.name == name) {
      c.worst_slack = std::max(c.worst_slack, slack);
      return;
    }
  rep.checks.push_back({name, std::max(0.0, slack), true});
}

}  // namespace

LemmaSuiteReport lemma_suite(const std::vector<MarketInstance>& corpus, double tol) {
  if (corpus.empty()) throw std::invalid_argument("lemma_suite: empty corpus");
  LemmaSuiteReport rep;

  for (size_t ci = 0; ci < corpus.size(); ++ci) {
    const MarketInstance& inst = corpus[ci];
    const int B = inst.num_buyers(), S = inst.num_items();
    Rng rng(1234 + ci);
    WelfareOptimum w = welfare_opt(inst);
    double peak_lo = kInf;
    for (int i = 0; i < B; ++i)
      peak_lo = std::min(peak_lo, inst.buyer(i).demand.peak());

    // demand and marginal monotonicity under dominated prices
    {
      PriceVector p2(S), p1(S);
      for (int t = 0; t < S; ++t) {
        p2[t] = w.prices[t] + 0.05 * peak_lo;
        p1[t] = p2[t] + rng.uniform(0.0, 0.3) * peak_lo;
      }
      DemandVector x1 = best_response(p1, inst), x2 = best_response(p2, inst);
      FlowResult z1 = min_cost_flow(inst, x1), z2 = min_cost_flow(inst, x2);
      for (int i = 0; i < B; ++i) fold(rep, "demand-monotonicity", x1[i] - x2[i]);
      for (int t = 0; t < S; ++t)
        fold(rep, "marginal-monotonicity", z1.item_marginal[t] - z2.item_marginal[t]);
      for (int i = 0; i < B; ++i)
        fold(rep, "buyer-marginal-monotonicity",
             z1.buyer_marginal[i] - z2.buyer_marginal[i]);

      // profit comparison: at the lower prices, serving their own (larger)
      // best-response demand beats serving the dominated demand of the
      // higher prices, cost difference included
      double lhs = 0.0, rhs = 0.0;
      for (int i = 0; i < B; ++i) {
        double pb2 = cheapest_price(p2, i, inst);
        lhs += pb2 * x2[i];
        rhs += pb2 * x1[i];
      }
      auto y1 = z1.alloc.item_totals(inst), y2 = z2.alloc.item_totals(inst);
      for (int t = 0; t < S; ++t) {
        lhs -= inst.item(t).cost.total(y2[t]);
        rhs -= inst.item(t).cost.total(y1[t]);
      }
      double scale = std::max(1.0, std::abs(lhs));
      fold(rep, "cost-comparison", (rhs - lhs) / scale);
    }

    // flow partition across a random buyer subset
    {
      PriceVector p(S);
      for (int t = 0; t < S; ++t) p[t] = w.prices[t] + rng.uniform(0.0, 0.2) * peak_lo;
      DemandVector x = best_response(p, inst);
      FlowResult fr = min_cost_flow(inst, x);
      std::vector<char> in_h(B, 0);
      for (int i = 0; i < B; ++i) in_h[i] = rng.uniform() < 0.5;
      DemandVector xh(B, 0.0);
      for (int i = 0; i < B; ++i)
        if (in_h[i]) xh[i] = x[i];
      FlowResult fh = min_cost_flow(inst, xh);
      auto y = fr.alloc.item_totals(inst), yh = fh.alloc.item_totals(inst);
      double cost_gap = 0.0;
      for (int t = 0; t < S; ++t)
        cost_gap += inst.item(t).cost.total(y[t]) - inst.item(t).cost.total(yh[t]);
      double outside = 0.0;
      for (int i = 0; i < B; ++i)
        if (!in_h[i]) outside += fr.buyer_marginal[i] * x[i];
      double scale = std::max(1.0, std::abs(cost_gap));
      fold(rep, "flow-partition", (cost_gap - outside) / scale);
    }

    // left-continuity of item marginals in a uniform price
    {
      double pbar = 0.6 * peak_lo;
      auto marginals_at = [&](double p) {
        DemandVector x = best_response(PriceVector(S, p), inst);
        return min_cost_flow(inst, x).item_marginal;
      };
      auto base = marginals_at(pbar);
      double prev_gap = kInf;
      for (double e : {1e-2, 1e-3, 1e-4, 1e-5}) {
        auto m = marginals_at(pbar - e * peak_lo);
        double gap = 0.0;
        for (int t = 0; t < S; ++t) gap = std::max(gap, std::abs(m[t] - base[t]));
        fold(rep, "left-continuity-monotone", gap - prev_gap - tol);
        prev_gap = gap;
        if (e == 1e-5) fold(rep, "left-continuity", gap - 1e-3 * peak_lo);
      }
    }

    // mixed-price marginal witness
    {
      std::vector<int> candidates;
      for (int t = 0; t < S; ++t)
        if (w.prices[t] > 0.05 * peak_lo) candidates.push_back(t);
      if (!candidates.empty()) {
        PriceVector p2 = w.prices;
        int cut = candidates[rng.pick(static_cast<int>(candidates.size()))];
        p2[cut] *= 0.7;
        Solution s2 = solve_at_prices(inst, p2);
        auto y1 = w.alloc.item_totals(inst);
        auto y2 = s2.alloc.item_totals(inst);
        bool witness = false;
        for (int t = 0; t < S; ++t) {
          if (w.prices[t] <= p2[t]) continue;
          double c1 = inst.item(t).cost.marginal(y1[t]);
          double c2 = inst.item(t).cost.marginal(y2[t]);
          if (c1 <= c2 + tol) witness = true;
        }
        fold(rep, "mixed-price-witness", witness ? 0.0 : 1.0);
      }
    }

    // hazard-rate numerics per demand family
    for (int i = 0; i < B; ++i) {
      const DemandFn& d = inst.buyer(i).demand;
      double T = d.mass(), peak = d.peak();
      for (int g = 1; g <= 24; ++g) {
        double x = T * g / 25.0;
        if (d.value(x) <= 1e-9) continue;
        double h = d.hazard(x);
        if (h * x < 1.0 - 1e-9) {
          // flat-enough point: the peak stays within a factor e of the value
          fold(rep, "mhr-peak-bound",
               (peak - std::exp(1.0) * d.value(x)) / std::max(1.0, peak));
        }
        if (h * x >= 1.0 + 1e-9) {
          for (int g2 = g + 1; g2 <= 25; ++g2) {
            double x2 = T * g2 / 25.0;
            fold(rep, "mhr-revenue-decreasing",
                 (x2 * d.value(x2) - x * d.value(x)) / std::max(1.0, peak * T));
          }
        }
      }
      double x1 = d.inverse(peak / std::sqrt(std::exp(1.0)));
      double x2 = d.inverse(peak / std::exp(1.0));
      if (x1 > 0 && x2 >= x1)
        fold(rep, "mhr-half-demand", (x2 - 2.0 * x1) / std::max(1.0, T));
      // a downward shift keeps the hazard monotone wherever positive
      double shift = 0.3 * d.value(0.6 * T);
      if (shift > 0) {
        double prev = -kInf;
        for (int g = 1; g < 25; ++g) {
          double x = T * g / 25.0;
          double v = d.value(x) - shift;
          if (v <= 1e-9) break;
          double hs = std::abs(d.derivative(x)) / v;
          fold(rep, "mhr-shifted-monotone", (prev - hs) / std::max(1.0, hs));
          prev = hs;
        }
      }
    }
  }

  for (auto& c : rep.checks) {
    c.pass = c.worst_slack <= tol;
    rep.all_pass = rep.all_pass && c.pass;
  }
  return rep;
}

}  // namespace efp
