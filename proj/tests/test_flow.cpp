#include <doctest.h>

#include <cmath>

#include "efp/ascending.hpp"
#include "efp/flow.hpp"
#include "efp/oracle.hpp"
#include "oracle_support.hpp"

using namespace efp;

TEST_CASE("marginal equalization across two quadratic items") {
  MarketInstance m;
  m.add_buyer("b", DemandFn::uniform(10.0, 3.0));
  m.add_item("A", CostFn::quadratic(1.0));   // marginal 2y
  m.add_item("B", CostFn::quadratic(2.0));   // marginal 4y
  m.add_edge(0, 0);
  m.add_edge(0, 1);
  FlowResult fr = min_cost_flow(m, {3.0});
  auto y = fr.alloc.item_totals(m);
  CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(y[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(fr.item_marginal[0] == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(fr.item_marginal[1] == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(fr.kkt_residual <= 1e-9);
  CHECK(kkt_violation(m, {3.0}, fr.alloc) <= 1e-9);
}

TEST_CASE("zero costs make any feasible flow optimal") {
  MarketInstance m;
  m.add_buyer("b0", DemandFn::uniform(1.0, 2.0));
  m.add_buyer("b1", DemandFn::uniform(1.0, 2.0));
  m.add_item("A", CostFn::zero());
  m.add_item("B", CostFn::zero());
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 2; ++t) m.add_edge(i, t);
  FlowResult fr = min_cost_flow(m, {1.5, 0.5});
  CHECK(fr.kkt_residual == 0.0);
  CHECK(fr.alloc.buyer_total(0) == doctest::Approx(1.5));
  CHECK(fr.alloc.buyer_total(1) == doctest::Approx(0.5));
}

TEST_CASE("kkt violation flags a deliberate swap") {
  MarketInstance m;
  m.add_buyer("b", DemandFn::uniform(10.0, 3.0));
  m.add_item("A", CostFn::quadratic(1.0));
  m.add_item("B", CostFn::quadratic(2.0));
  m.add_edge(0, 0);
  m.add_edge(0, 1);
  Allocation bad = Allocation::zeros(m);
  bad.edge_flow[0][0] = 1.0;  // A at marginal 2
  bad.edge_flow[0][1] = 2.0;  // B at marginal 8
  CHECK(kkt_violation(m, {3.0}, bad) == doctest::Approx(6.0));
}

TEST_CASE("solver matches the piecewise-linear reference on random markets") {
  for (std::uint64_t seed : {101, 102, 103, 104, 105}) {
    RandomMarketSpec spec;
    spec.seed = seed;
    spec.buyers = 3;
    spec.items = 3;
    spec.edge_density = 0.8;
    MarketInstance m = gen_random_mhr_instance(spec);
    DemandVector x(m.num_buyers());
    for (int i = 0; i < m.num_buyers(); ++i)
      x[i] = 0.8 * m.buyer(i).demand.mass() * ((seed + i) % 5 + 1) / 5.0;
    FlowResult fr = min_cost_flow(m, x, 1e-10);
    auto y = fr.alloc.item_totals(m);
    double mine = 0.0;
    for (int t = 0; t < m.num_items(); ++t) mine += m.item(t).cost.total(y[t]);
    double ref = testing::pl_flow_cost(m, x, 1e-3);
    CHECK(std::abs(mine - ref) <= 1e-4 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("feasible routing found when a greedy fill would deadlock") {
  // the flexible buyer must leave the gated item to the captive one
  MarketInstance m;
  m.add_buyer("flexible", DemandFn::uniform(2.0, 0.4));
  m.add_buyer("captive", DemandFn::uniform(2.0, 0.3));
  m.add_item("gated", CostFn::capacitated(0.0, 0.4, 1e-3, 100.0));
  m.add_item("open", CostFn::linear(0.1));
  m.add_edge(0, 0);
  m.add_edge(0, 1);
  m.add_edge(1, 0);
  FlowResult fr = min_cost_flow(m, {0.4, 0.3});
  CHECK(fr.alloc.buyer_total(0) == doctest::Approx(0.4));
  CHECK(fr.alloc.buyer_total(1) == doctest::Approx(0.3));
  auto y = fr.alloc.item_totals(m);
  CHECK(y[0] <= 0.4 + 1e-12);
  CHECK(fr.kkt_residual <= 1e-9);
}

TEST_CASE("welfare optimum stays sharp against a stiff capacity barrier") {
  // several exclusive buyers compete for a gated item; the barrier makes the
  // marginal explode over the last slice of capacity
  MarketInstance m;
  m.add_buyer("a", DemandFn::linear(1.0, 0.7, 0.9));
  m.add_buyer("b", DemandFn::uniform(1.0, 0.7));
  m.add_buyer("c", DemandFn::exponential(1.0, 1.2, 2.0));
  m.add_buyer("d", DemandFn::tabulated({0.0, 0.3, 0.6, 1.0}, {1.0, 0.85, 0.55, 0.05}));
  m.add_item("gated", CostFn::capacitated(0.1, 0.4, 1e-2, 30.0));
  m.add_item("open", CostFn::quadratic(0.9));
  m.add_edge(0, 0);
  m.add_edge(1, 0);
  m.add_edge(2, 0);
  m.add_edge(2, 1);
  m.add_edge(3, 0);
  m.add_edge(3, 1);
  WelfareOptimum w = welfare_opt(m);
  CHECK(w.foc_residual <= 1e-8);
  AscendConfig cfg;
  cfg.k = 1.3;
  AscendResult r = run_ascending(m, cfg, &w);
  CHECK(r.solution.diag.max_envy_residual <= 1e-6);
  CHECK(r.solution.diag.max_kkt_residual <= 1e-6);
}

TEST_CASE("capacity infeasibility carries the binding cut") {
  MarketInstance m;
  m.add_buyer("big", DemandFn::uniform(5.0, 5.0));
  m.add_item("gated", CostFn::capacitated(0.0, 1.0));
  m.add_edge(0, 0);
  try {
    min_cost_flow(m, {5.0});
    FAIL("expected InfeasibleDemand");
  } catch (const InfeasibleDemand& e) {
    REQUIRE(e.cut_buyers.size() == 1);
    CHECK(e.cut_buyers[0] == 0);
    CHECK(std::string(e.what()).find("big") != std::string::npos);
  }
}

TEST_CASE("welfare optimum: free item serves the whole curve") {
  MarketInstance m;
  m.add_buyer("b", DemandFn::linear(1.0, 1.0, 1.0));
  m.add_item("A", CostFn::zero());
  m.add_edge(0, 0);
  WelfareOptimum w = welfare_opt(m);
  CHECK(w.demand[0] == doctest::Approx(1.0));
  CHECK(w.prices[0] == doctest::Approx(0.0));
  CHECK(w.objective == doctest::Approx(0.5));
}

TEST_CASE("welfare optimum: first-order condition at 1-x = x") {
  MarketInstance m;
  m.add_buyer("b", DemandFn::linear(1.0, 1.0, 1.0));
  m.add_item("A", CostFn::quadratic(0.5));  // marginal y
  m.add_edge(0, 0);
  WelfareOptimum w = welfare_opt(m);
  CHECK(w.demand[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(w.prices[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(w.objective == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(w.foc_residual <= 1e-8);
}

TEST_CASE("welfare optimum matches an exhaustive demand grid") {
  MarketInstance m;
  m.add_buyer("b0", DemandFn::linear(1.0, 4.0, 0.25));
  m.add_buyer("b1", DemandFn::exponential(1.0, 2.0, 0.3));
  m.add_buyer("b2", DemandFn::linear(1.0, 5.0, 0.2));
  m.add_buyer("b3", DemandFn::uniform(1.0, 0.25));
  m.add_item("A", CostFn::quadratic(1.0));
  m.add_item("B", CostFn::linear(0.3));
  m.add_item("C", CostFn::zero());
  m.add_item("D", CostFn::quadratic(0.6, 0.1));
  m.add_edge(0, 0);
  m.add_edge(0, 1);
  m.add_edge(1, 1);
  m.add_edge(1, 2);
  m.add_edge(2, 2);
  m.add_edge(2, 3);
  m.add_edge(3, 3);
  m.add_edge(3, 0);
  WelfareOptimum w = welfare_opt(m);
  double brute = testing::grid_welfare_opt(m, 1e-2);
  CHECK(w.objective >= brute - 1e-6);
  CHECK(std::abs(w.objective - brute) <= 1e-3);
}

TEST_CASE("welfare optimum output is a certified flow") {
  RandomMarketSpec spec;
  spec.seed = 9;
  spec.buyers = 6;
  spec.items = 6;
  MarketInstance m = gen_random_mhr_instance(spec);
  WelfareOptimum w = welfare_opt(m);
  CHECK(kkt_violation(m, w.demand, w.alloc) <= 1e-8);
  CHECK(w.foc_residual <= 1e-7);
}

TEST_CASE("marginal monotonicity under demand domination") {
  RandomMarketSpec spec;
  spec.seed = 13;
  spec.buyers = 5;
  spec.items = 4;
  MarketInstance m = gen_random_mhr_instance(spec);
  DemandVector x1(m.num_buyers()), x2(m.num_buyers());
  for (int i = 0; i < m.num_buyers(); ++i) {
    double T = m.buyer(i).demand.mass();
    x1[i] = 0.35 * T;
    x2[i] = 0.7 * T;
  }
  FlowResult f1 = min_cost_flow(m, x1), f2 = min_cost_flow(m, x2);
  for (int t = 0; t < m.num_items(); ++t)
    CHECK(f1.item_marginal[t] <= f2.item_marginal[t] + 1e-8);
  for (int i = 0; i < m.num_buyers(); ++i)
    CHECK(f1.buyer_marginal[i] <= f2.buyer_marginal[i] + 1e-8);
}

TEST_CASE("solve_at_prices routes only through cheapest items") {
  MarketInstance m;
  m.add_buyer("b", DemandFn::linear(1.0, 1.0, 1.0));
  m.add_item("cheap", CostFn::quadratic(5.0));
  m.add_item("dear", CostFn::zero());
  m.add_edge(0, 0);
  m.add_edge(0, 1);
  Solution sol = solve_at_prices(m, {0.2, 0.5});
  CHECK(sol.demand[0] == doctest::Approx(0.8));
  CHECK(sol.alloc.edge_flow[0][0] == doctest::Approx(0.8));
  CHECK(sol.alloc.edge_flow[0][1] == 0.0);  // never the pricier item
  CHECK(sol.diag.max_envy_residual <= 1e-9);
}
