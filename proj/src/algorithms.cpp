#include "efp/algorithms.hpp"

#include <algorithm>
#include <cmath>

namespace efp {

namespace {

constexpr double kE = 2.718281828459045;
constexpr double kSqrtE = 1.6487212707001282;

void check_uniform_peaks(const MarketInstance& inst, double tol) {
  double lo = kInf, hi = -kInf;
  for (int i = 0; i < inst.num_buyers(); ++i) {
    double p = inst.buyer(i).demand.peak();
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  if (hi - lo > tol * std::max(1.0, hi))
    throw std::invalid_argument("algorithm requires uniform peak valuations");
}

}  // namespace

AlgorithmResult approx_revenue_uniform_peak(const MarketInstance& inst,
                                            AscendConfig cfg) {
  check_uniform_peaks(inst, cfg.tol);
  cfg.rule = StopRule::SharedPeak;
  WelfareOptimum wopt = welfare_opt(inst);

  AscendConfig cfg_e = cfg;
  cfg_e.k = kE;
  AscendConfig cfg_s = cfg;
  cfg_s.k = kSqrtE;
  AscendResult run_e, run_s;
  std::exception_ptr err_e, err_s;
#pragma omp parallel sections if (inst.num_buyers() > 2)
  {
#pragma omp section
    {
      try {
        run_e = run_ascending(inst, cfg_e, &wopt);
      } catch (...) {
        err_e = std::current_exception();
      }
    }
#pragma omp section
    {
      try {
        run_s = run_ascending(inst, cfg_s, &wopt);
      } catch (...) {
        err_s = std::current_exception();
      }
    }
  }
  if (err_e) std::rethrow_exception(err_e);
  if (err_s) std::rethrow_exception(err_s);

  AlgorithmResult out;
  out.report.algorithm = "approx-revenue";
  out.report.claimed_revenue_ratio = 4.0 * kSqrtE - 2.0 - kE;
  out.report.pi_e = run_e.solution.diag.revenue;
  out.report.pi_sqrt_e = run_s.solution.diag.revenue;
  out.report.welfare_opt_value = wopt.objective;
  bool take_e = out.report.pi_e >= out.report.pi_sqrt_e;
  AscendResult& best = take_e ? run_e : run_s;
  out.report.measured_revenue = best.solution.diag.revenue;
  out.report.measured_welfare = best.solution.diag.welfare;
  out.report.notes.push_back(take_e ? "selected k=e" : "selected k=sqrt(e)");
  out.solution = std::move(best.solution);
  out.trace = std::move(best.trace);
  return out;
}

AlgorithmResult bicriteria_e(const MarketInstance& inst, AscendConfig cfg) {
  check_uniform_peaks(inst, cfg.tol);
  cfg.rule = StopRule::SharedPeak;
  cfg.k = kE;
  WelfareOptimum wopt = welfare_opt(inst);
  AscendResult run = run_ascending(inst, cfg, &wopt);

  AlgorithmResult out;
  out.report.algorithm = "bicriteria";
  out.report.claimed_revenue_ratio = kE;
  out.report.pi_e = run.solution.diag.revenue;
  out.report.measured_revenue = run.solution.diag.revenue;
  out.report.measured_welfare = run.solution.diag.welfare;
  out.report.welfare_opt_value = wopt.objective;
  double sw = out.report.measured_welfare;
  out.report.alpha = sw > 0 ? wopt.objective / sw : 1.0;
  if (out.report.alpha < 1.0) out.report.alpha = 1.0;  // numerical floor
  out.report.revenue_fraction_bound =
      std::max(1.0 / kE, (out.report.alpha - 1.0) / out.report.alpha);
  out.solution = std::move(run.solution);
  out.trace = std::move(run.trace);
  return out;
}

double compute_delta(const MarketInstance& inst) {
  double lo = kInf, hi = -kInf;
  for (int i = 0; i < inst.num_buyers(); ++i) {
    double p = inst.buyer(i).demand.peak();
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return hi / lo;
}

PriceVector ladder_prices(const PriceVector& p_e, double peak_floor, int j) {
  if (j < 1) throw std::invalid_argument("ladder_prices: rung index must be >= 1");
  double rung = std::exp(static_cast<double>(j - 1)) * peak_floor;
  PriceVector p(p_e.size());
  for (size_t t = 0; t < p_e.size(); ++t) p[t] = std::max(p_e[t], rung);
  return p;
}

AlgorithmResult log_delta_algorithm(const MarketInstance& inst, AscendConfig cfg) {
  for (int t = 0; t < inst.num_items(); ++t) {
    Certificate c = check_doubly_convex(inst.item(t).cost);
    if (!c.pass)
      throw std::invalid_argument("log-delta: item '" + inst.item(t).id +
                                  "' cost is not doubly convex (marginal must be "
                                  "convex with zero marginal at zero)");
  }
  double delta = compute_delta(inst);
  double peak_floor = kInf;
  for (int i = 0; i < inst.num_buyers(); ++i)
    peak_floor = std::min(peak_floor, inst.buyer(i).demand.peak());

  cfg.rule = StopRule::PeakFloor;
  cfg.k = kE;
  WelfareOptimum wopt = welfare_opt(inst);
  AscendResult base = run_ascending(inst, cfg, &wopt);

  double log_delta = std::log(std::max(1.0, delta));
  int rungs = static_cast<int>(std::ceil(log_delta - 1e-12));
  double threshold =
      0.5 * base.solution.diag.welfare / (4.5 * (1.0 + log_delta));

  AlgorithmResult out;
  out.report.algorithm = "log-delta";
  out.report.delta = delta;
  out.report.welfare_opt_value = wopt.objective;
  out.report.claimed_revenue_ratio = 9.0 * (1.0 + log_delta);
  out.report.pi_e = base.solution.diag.revenue;

  std::vector<Solution> rung_solutions;
  out.report.ladder_revenue.push_back(base.solution.diag.revenue);
  out.report.ladder_welfare.push_back(base.solution.diag.welfare);
  for (int j = 1; j <= rungs; ++j) {
    PriceVector pj = ladder_prices(base.solution.prices, peak_floor, j);
    Solution sj = solve_at_prices(inst, pj, cfg.solver_tol);
    out.report.ladder_revenue.push_back(sj.diag.revenue);
    out.report.ladder_welfare.push_back(sj.diag.welfare);
    rung_solutions.push_back(std::move(sj));
  }

  int chosen = -1;
  for (int j = 0; j <= rungs; ++j)
    if (out.report.ladder_revenue[j] >= threshold - cfg.tol) {
      chosen = j;
      break;
    }
  if (chosen < 0) {
    chosen = 0;
    out.report.diagnostics_ok = false;
    out.report.notes.push_back(
        "no rung met the revenue threshold; falling back to the base solution "
        "(indicates a numerical issue)");
  }
  out.report.ladder_index = chosen;
  out.trace = std::move(base.trace);
  if (chosen == 0)
    out.solution = std::move(base.solution);
  else
    out.solution = std::move(rung_solutions[chosen - 1]);
  out.report.measured_revenue = out.solution.diag.revenue;
  out.report.measured_welfare = out.solution.diag.welfare;
  return out;
}

}  // namespace efp
