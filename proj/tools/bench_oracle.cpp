// Times the grid oracle's OpenMP kernel against the serial reference on a
// synthetic market and reports the speedup.

#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "efp/ascending.hpp"
#include "efp/oracle.hpp"

int main(int argc, char** argv) {
  double step = argc > 1 ? std::atof(argv[1]) : 2e-3;

  efp::RandomMarketSpec spec;
  spec.seed = 424242;
  spec.buyers = 6;
  spec.items = 3;
  spec.edge_density = 0.7;
  efp::MarketInstance inst = efp::gen_random_mhr_instance(spec);

  efp::AscendConfig cfg;
  efp::AscendResult base = efp::run_ascending(inst, cfg);
  efp::GridSpec grid =
      efp::make_default_grid(inst, base.solution.prices, step, 2'000'000'000LL);

#ifdef _OPENMP
  int threads = omp_get_max_threads();
#else
  int threads = 1;
#endif

  std::printf("grid oracle benchmark: %d buyers x %d items, step %.3g\n",
              spec.buyers, spec.items, step);

  efp::OracleReport serial = efp::grid_opt_revenue_serial(inst, grid);
  std::printf("  serial   : %10lld evals in %8.1f ms  (best revenue %.9f)\n",
              serial.evaluations, serial.wall_ms, serial.best_revenue);

  efp::OracleReport parallel = efp::grid_opt_revenue(inst, grid);
  std::printf("  parallel : %10lld evals in %8.1f ms  (best revenue %.9f, %d threads)\n",
              parallel.evaluations, parallel.wall_ms, parallel.best_revenue, threads);

  bool same = parallel.best_revenue == serial.best_revenue &&
              parallel.best_prices == serial.best_prices;
  std::printf("  speedup  : %.2fx, results %s\n",
              serial.wall_ms / std::max(parallel.wall_ms, 1e-9),
              same ? "identical" : "DIFFER");
  return same ? 0 : 1;
}
