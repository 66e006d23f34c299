#pragma once

#include <vector>

#include "efp/flow.hpp"
#include "efp/market.hpp"

namespace efp {

/// Which value the stop test aims at.
/// SharedPeak: the common peak valuation of all buyer types (their peaks must
///   agree); PeakFloor: the smallest peak across types. Under PeakFloor an
///   item whose starting price already reaches the target never ascends: it
///   stays frozen at that price.
enum class StopRule { SharedPeak, PeakFloor };

struct AscendConfig {
  double k = 2.718281828459045;  // stop parameter, >= 1
  StopRule rule = StopRule::SharedPeak;
  double stop_target = 0.0;  // 0 => derived from the instance per the rule
  double price_eps = 0.0;    // stop-price resolution; 0 => 1e-6 * target
  double solver_tol = 1e-9;
  double tol = 1e-7;
};

enum class Transition { ItemActivated, ItemFinished, BuyerActivated, BuyerFinished };

struct AscendEvent {
  double price;
  Transition transition;
  int entity;  // buyer or item index per the transition
};

struct AscendTrace {
  std::vector<AscendEvent> events;  // price-nondecreasing
  std::vector<double> stop_price;   // per item; frozen items keep their start price
  std::vector<double> boundary;     // price ladder walked by the engine
  long mincost_solves = 0;          // routing solves spent in the ascent
  int frozen_items = 0;
};

/// True when an item priced `price` with marginal cost `marginal` may stop
/// ascending: the premium over marginal covers 1/k of the gap between the
/// stop target and the marginal, within the configured slack.
bool stopping_criterion(double price, double marginal, const AscendConfig& cfg);

/// Sorted unique starting prices with the stop target merged in as a ladder
/// entry. Entries above the target are kept; such items never ascend.
std::vector<double> boundary_prices(const PriceVector& base, double stop_target);

/// Masks describing the subgraph currently ascending.
struct ActiveState {
  std::vector<char> buyers;
  std::vector<char> items;
};

struct StopProbe {
  double price;
  std::vector<int> finishers;
};

/// Smallest price in [lo, hi] (within price_eps) at which some active item
/// meets the stop test under the cheapest routing of the active subgraph,
/// plus every item within slack of the test there. Requires that some item
/// meets the test at hi.
StopProbe find_stop_price(const MarketInstance& inst, const ActiveState& state,
                          double lo, double hi, const AscendConfig& cfg,
                          long* solve_counter = nullptr);

struct AscendResult {
  Solution solution;
  AscendTrace trace;
};

/// The ascending-price procedure with stop parameter k, realized through
/// boundary intervals and bisection over stop prices. Starts from marginal
/// cost pricing at the welfare optimum (computed here unless `warm` is
/// given), raises the shared price of the active set, activates items as the
/// price reaches their starting price, and freezes each item the moment the
/// stop test binds. Returns an envy-free solution whose allocation is also a
/// cheapest routing of its demand, plus the event trace.
AscendResult run_ascending(const MarketInstance& inst, const AscendConfig& cfg,
                           const WelfareOptimum* warm = nullptr);

}  // namespace efp
