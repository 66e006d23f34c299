#pragma once

#include <string>
#include <vector>

#include "efp/ascending.hpp"

namespace efp {

/// Guarantee bookkeeping attached to each composed algorithm's output. All
/// measured values are recomputed through the market accounting functions.
struct GuaranteeReport {
  std::string algorithm;
  double claimed_revenue_ratio = 0.0;  // worst-case optimal/achieved bound
  double measured_revenue = 0.0;
  double measured_welfare = 0.0;
  double pi_e = 0.0;        // k = e revenue when applicable
  double pi_sqrt_e = 0.0;   // k = sqrt(e) revenue when applicable
  double welfare_opt_value = 0.0;  // SW* when computed
  double alpha = 0.0;              // SW* / achieved welfare
  double revenue_fraction_bound = 0.0;  // max(1/e, (alpha-1)/alpha)
  double delta = 0.0;              // peak spread for the ladder algorithm
  int ladder_index = -1;           // chosen rung
  std::vector<double> ladder_revenue;
  std::vector<double> ladder_welfare;
  bool diagnostics_ok = true;
  std::vector<std::string> notes;
};

struct AlgorithmResult {
  Solution solution;
  GuaranteeReport report;
  AscendTrace trace;  // trace of the ascent backing the returned solution
};

/// Two ascents (k = e and k = sqrt(e)) against the shared peak; returns the
/// higher-revenue solution. Worst-case revenue ratio 4*sqrt(e) - 2 - e.
AlgorithmResult approx_revenue_uniform_peak(const MarketInstance& inst,
                                            AscendConfig cfg = {});

/// The k = e solution: revenue within a factor e of optimal and welfare at
/// least half the optimum, with the realized trade-off recorded.
AlgorithmResult bicriteria_e(const MarketInstance& inst, AscendConfig cfg = {});

/// Ratio of the largest to the smallest demand peak across buyer types.
double compute_delta(const MarketInstance& inst);

/// Rung j of the price ladder: componentwise max of the k = e prices and
/// e^(j-1) times the smallest peak.
PriceVector ladder_prices(const PriceVector& p_e, double peak_floor, int j);

/// Ladder algorithm for spread peaks and doubly convex costs: ascend once at
/// k = e against the smallest peak, then climb rungs until one captures
/// enough of the base welfare. Guarantees ~1/(9(1+ln delta)) of optimal
/// revenue and a quarter of optimal welfare.
AlgorithmResult log_delta_algorithm(const MarketInstance& inst,
                                    AscendConfig cfg = {});

}  // namespace efp
