#include "efp/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace efp {

using Json = nlohmann::ordered_json;

namespace {

constexpr double kE = 2.718281828459045;

[[noreturn]] void bad_field(const std::string& where, const std::string& what) {
  throw ParseError("scenario field '" + where + "': " + what);
}

double need_number(const Json& j, const std::string& where) {
  if (!j.is_number()) bad_field(where, "expected a number");
  return j.get<double>();
}

double get_number(const Json& obj, const std::string& key, double fallback,
                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return need_number(obj.at(key), where + "." + key);
}

DemandFn parse_demand(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("family")) bad_field(where, "missing demand family");
  std::string fam = j.at("family").get<std::string>();
  if (fam == "uniform")
    return DemandFn::uniform(need_number(j.at("level"), where + ".level"),
                             need_number(j.at("mass"), where + ".mass"));
  if (fam == "linear")
    return DemandFn::linear(need_number(j.at("peak"), where + ".peak"),
                            need_number(j.at("slope"), where + ".slope"),
                            need_number(j.at("mass"), where + ".mass"));
  if (fam == "exponential")
    return DemandFn::exponential(need_number(j.at("peak"), where + ".peak"),
                                 need_number(j.at("rate"), where + ".rate"),
                                 need_number(j.at("mass"), where + ".mass"));
  if (fam == "power-law")
    return DemandFn::power_law(need_number(j.at("peak"), where + ".peak"),
                               need_number(j.at("gamma"), where + ".gamma"),
                               need_number(j.at("mass"), where + ".mass"));
  if (fam == "tabulated") {
    if (!j.contains("x") || !j.contains("v")) bad_field(where, "tabulated needs x and v");
    return DemandFn::tabulated(j.at("x").get<std::vector<double>>(),
                               j.at("v").get<std::vector<double>>());
  }
  bad_field(where + ".family", "unknown demand family '" + fam + "'");
}

CostFn parse_cost(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("family")) bad_field(where, "missing cost family");
  std::string fam = j.at("family").get<std::string>();
  if (fam == "zero") return CostFn::zero();
  if (fam == "linear")
    return CostFn::linear(need_number(j.at("marginal"), where + ".marginal"));
  if (fam == "quadratic")
    return CostFn::quadratic(need_number(j.at("a"), where + ".a"),
                             get_number(j, "b", 0.0, where));
  if (fam == "power")
    return CostFn::power(need_number(j.at("scale"), where + ".scale"),
                         need_number(j.at("exponent"), where + ".exponent"));
  if (fam == "capacitated")
    return CostFn::capacitated(need_number(j.at("marginal"), where + ".marginal"),
                               need_number(j.at("capacity"), where + ".capacity"),
                               get_number(j, "ramp", 1e-3, where),
                               get_number(j, "barrier", 1e3, where));
  bad_field(where + ".family", "unknown cost family '" + fam + "'");
}

MarketInstance parse_instance(const Json& j, std::uint64_t scenario_seed,
                              bool force_seed) {
  if (!j.is_object() || !j.contains("type")) bad_field("instance", "missing type");
  std::string type = j.at("type").get<std::string>();
  if (type == "inline") {
    if (!j.contains("buyers") || !j.contains("items"))
      bad_field("instance", "inline instance needs buyers and items");
    MarketInstance inst;
    for (const auto& it : j.at("items")) {
      if (!it.contains("id")) bad_field("instance.items", "missing id");
      inst.add_item(it.at("id").get<std::string>(),
                    parse_cost(it.at("cost"), "instance.items.cost"));
    }
    for (const auto& b : j.at("buyers")) {
      if (!b.contains("id")) bad_field("instance.buyers", "missing id");
      std::string id = b.at("id").get<std::string>();
      inst.add_buyer(id, parse_demand(b.at("demand"), "instance.buyers.demand"));
      if (!b.contains("items") || b.at("items").empty())
        bad_field("instance.buyers.items", "buyer '" + id + "' needs at least one item");
      for (const auto& iid : b.at("items")) inst.add_edge(id, iid.get<std::string>());
    }
    return inst;
  }
  if (type == "random-mhr") {
    RandomMarketSpec spec;
    spec.seed = (!force_seed && j.contains("seed"))
                    ? j.at("seed").get<std::uint64_t>()
                    : scenario_seed;
    spec.buyers = static_cast<int>(get_number(j, "buyers", 4, "instance"));
    spec.items = static_cast<int>(get_number(j, "items", 4, "instance"));
    spec.peak_spread = get_number(j, "peak_spread", 1.0, "instance");
    spec.edge_density = get_number(j, "edge_density", 0.5, "instance");
    spec.doubly_convex_only = j.value("doubly_convex_only", false);
    spec.allow_uniform_demand = j.value("allow_uniform_demand", true);
    return gen_random_mhr_instance(spec);
  }
  if (type == "vertex-cover-gadget") {
    int n = static_cast<int>(get_number(j, "vertices", 2, "instance"));
    std::vector<std::pair<int, int>> edges;
    if (j.contains("edges"))
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) bad_field("instance.edges", "edge must be a pair");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
      }
    int r = static_cast<int>(get_number(j, "r", n, "instance"));
    return gen_vertex_cover_gadget(n, edges, r);
  }
  bad_field("instance.type", "unknown generator '" + type + "'");
}

Json demand_to_json(const DemandFn& d) {
  Json j;
  switch (d.family()) {
    case DemandFamily::Uniform:
      j["family"] = "uniform";
      j["level"] = d.peak();
      j["mass"] = d.mass();
      break;
    case DemandFamily::Linear:
      j["family"] = "linear";
      j["peak"] = d.peak();
      j["slope"] = d.param_a();
      j["mass"] = d.mass();
      break;
    case DemandFamily::Exponential:
      j["family"] = "exponential";
      j["peak"] = d.peak();
      j["rate"] = d.param_a();
      j["mass"] = d.mass();
      break;
    case DemandFamily::PowerLaw:
      j["family"] = "power-law";
      j["peak"] = d.peak();
      j["gamma"] = d.param_a();
      j["mass"] = d.mass();
      break;
    case DemandFamily::Tabulated:
      j["family"] = "tabulated";
      j["x"] = d.knots_x();
      j["v"] = d.knots_v();
      break;
  }
  return j;
}

Json cost_to_json(const CostFn& c) {
  Json j;
  switch (c.family()) {
    case CostFamily::Zero:
      j["family"] = "zero";
      break;
    case CostFamily::Linear:
      j["family"] = "linear";
      j["marginal"] = c.param_a();
      break;
    case CostFamily::Quadratic:
      j["family"] = "quadratic";
      j["a"] = c.param_a();
      j["b"] = c.param_b();
      break;
    case CostFamily::Power:
      j["family"] = "power";
      j["scale"] = c.param_a();
      j["exponent"] = c.param_b();
      break;
    case CostFamily::Capacitated:
      j["family"] = "capacitated";
      j["marginal"] = c.param_a();
      j["capacity"] = c.capacity();
      j["ramp"] = c.ramp();
      j["barrier"] = c.barrier();
      break;
  }
  return j;
}

Json instance_to_json(const MarketInstance& inst) {
  Json j;
  j["type"] = "inline";
  j["items"] = Json::array();
  for (int t = 0; t < inst.num_items(); ++t)
    j["items"].push_back(
        Json{{"id", inst.item(t).id}, {"cost", cost_to_json(inst.item(t).cost)}});
  j["buyers"] = Json::array();
  for (int i = 0; i < inst.num_buyers(); ++i) {
    Json b{{"id", inst.buyer(i).id},
           {"demand", demand_to_json(inst.buyer(i).demand)}};
    b["items"] = Json::array();
    for (int t : inst.items_of(i)) b["items"].push_back(inst.item(t).id);
    j["buyers"].push_back(std::move(b));
  }
  return j;
}

Json solution_to_json(const Solution& sol, const MarketInstance& inst) {
  Json j;
  Json prices, demand, payments;
  for (int t = 0; t < inst.num_items(); ++t) prices[inst.item(t).id] = sol.prices[t];
  for (int i = 0; i < inst.num_buyers(); ++i) {
    demand[inst.buyer(i).id] = sol.demand[i];
    payments[inst.buyer(i).id] =
        cheapest_price(sol.prices, i, inst) * sol.demand[i];
  }
  j["prices"] = std::move(prices);
  j["demand"] = std::move(demand);
  j["payments"] = std::move(payments);
  Json alloc = Json::array();
  for (int i = 0; i < inst.num_buyers(); ++i) {
    const auto& row = inst.items_of(i);
    for (size_t k = 0; k < row.size(); ++k)
      if (sol.alloc.edge_flow[i][k] > 1e-12)
        alloc.push_back(Json{{"buyer", inst.buyer(i).id},
                             {"item", inst.item(row[k]).id},
                             {"flow", sol.alloc.edge_flow[i][k]}});
  }
  j["allocation"] = std::move(alloc);
  Json frozen = Json::array();
  for (int t : sol.frozen_items) frozen.push_back(inst.item(t).id);
  j["frozen_items"] = std::move(frozen);
  j["diagnostics"] = Json{{"revenue", sol.diag.revenue},
                          {"welfare", sol.diag.welfare},
                          {"max_envy_residual", sol.diag.max_envy_residual},
                          {"max_kkt_residual", sol.diag.max_kkt_residual}};
  j["warnings"] = sol.warnings;
  return j;
}

Json guarantee_to_json(const GuaranteeReport& g) {
  Json j;
  j["algorithm"] = g.algorithm;
  j["claimed_revenue_ratio"] = g.claimed_revenue_ratio;
  j["measured_revenue"] = g.measured_revenue;
  j["measured_welfare"] = g.measured_welfare;
  if (g.pi_e > 0 || g.pi_sqrt_e > 0) {
    j["pi_e"] = g.pi_e;
    j["pi_sqrt_e"] = g.pi_sqrt_e;
  }
  j["welfare_opt_value"] = g.welfare_opt_value;
  if (g.alpha > 0) {
    j["alpha"] = g.alpha;
    j["revenue_fraction_bound"] = g.revenue_fraction_bound;
  }
  if (g.delta > 0) {
    j["delta"] = g.delta;
    j["ladder_index"] = g.ladder_index;
    j["ladder_revenue"] = g.ladder_revenue;
    j["ladder_welfare"] = g.ladder_welfare;
  }
  j["diagnostics_ok"] = g.diagnostics_ok;
  j["notes"] = g.notes;
  return j;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

void write_error(const RunOptions& opt, int code, const std::string& kind,
                 const std::string& what) {
  Json j{{"error", Json{{"exit_code", code}, {"kind", kind}, {"message", what}}}};
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  write_text(opt.out_dir / (opt.stem + ".error.json"), j.dump(2) + "\n");
}

void write_trace_log(const std::filesystem::path& p, const AscendTrace& tr,
                     const MarketInstance& inst) {
  std::ostringstream os;
  os.precision(12);
  for (const auto& ev : tr.events) {
    const char* what = nullptr;
    bool item = false;
    switch (ev.transition) {
      case Transition::ItemActivated:
        what = "activated";
        item = true;
        break;
      case Transition::ItemFinished:
        what = "finished";
        item = true;
        break;
      case Transition::BuyerActivated:
        what = "activated";
        break;
      case Transition::BuyerFinished:
        what = "finished";
        break;
    }
    os << ev.price << ' ' << (item ? "item" : "buyer") << ' '
       << (item ? inst.item(ev.entity).id : inst.buyer(ev.entity).id) << ' ' << what
       << '\n';
  }
  write_text(p, os.str());
}

struct Executed {
  Solution solution;
  Json guarantee;  // null when not applicable
  AscendTrace trace;
  bool has_trace = false;
};

Executed execute(const Scenario& sc) {
  Executed ex;
  AscendConfig cfg;
  cfg.tol = sc.tol;
  cfg.price_eps = sc.price_eps;
  if (sc.algorithm == "welfare") {
    WelfareOptimum w = welfare_opt(sc.instance);
    ex.solution.prices = w.prices;
    ex.solution.demand = w.demand;
    ex.solution.alloc = w.alloc;
    ex.solution.diag =
        compute_diagnostics(w.prices, w.demand, w.alloc, sc.instance, sc.tol);
    ex.guarantee = Json{{"algorithm", "welfare"}, {"objective", w.objective},
                        {"foc_residual", w.foc_residual}};
    return ex;
  }
  if (sc.algorithm == "ascend") {
    cfg.k = sc.ascend_k;
    cfg.rule = sc.ascend_rule == "peak-floor" ? StopRule::PeakFloor
                                              : StopRule::SharedPeak;
    AscendResult r = run_ascending(sc.instance, cfg);
    ex.solution = std::move(r.solution);
    ex.trace = std::move(r.trace);
    ex.has_trace = true;
    ex.guarantee = Json{{"algorithm", "ascend"},
                        {"k", sc.ascend_k},
                        {"rule", sc.ascend_rule},
                        {"mincost_solves", ex.trace.mincost_solves}};
    return ex;
  }
  AlgorithmResult r;
  if (sc.algorithm == "approx-revenue")
    r = approx_revenue_uniform_peak(sc.instance, cfg);
  else if (sc.algorithm == "bicriteria")
    r = bicriteria_e(sc.instance, cfg);
  else if (sc.algorithm == "log-delta")
    r = log_delta_algorithm(sc.instance, cfg);
  else
    throw ParseError("scenario field 'algorithm': unknown algorithm '" +
                     sc.algorithm + "'");
  ex.solution = std::move(r.solution);
  ex.trace = std::move(r.trace);
  ex.has_trace = true;
  ex.guarantee = guarantee_to_json(r.report);
  return ex;
}

int classify(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kExitParse;
  if (dynamic_cast<const BudgetExceeded*>(&e)) return kExitBudget;
  if (dynamic_cast<const InfeasibleDemand*>(&e)) return kExitSolver;
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitPrecondition;
  return kExitSolver;
}

const char* kind_of(int code) {
  switch (code) {
    case kExitParse:
      return "parse";
    case kExitPrecondition:
      return "precondition";
    case kExitBudget:
      return "oracle-budget";
    default:
      return "solver";
  }
}

}  // namespace

Scenario parse_scenario(const std::string& json_text,
                        std::optional<std::uint64_t> seed_override) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("scenario root must be an object");
  Scenario sc;
  if (!j.contains("version")) bad_field("version", "required");
  sc.version = static_cast<int>(need_number(j.at("version"), "version"));
  if (sc.version != 1) bad_field("version", "unsupported version");
  if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
  if (seed_override) sc.seed = *seed_override;
  sc.tol = get_number(j, "tol", sc.tol, "tol");
  sc.price_eps = get_number(j, "epsilon", 0.0, "epsilon");

  if (j.contains("algorithm")) {
    const Json& a = j.at("algorithm");
    if (!a.is_object() || !a.contains("name")) bad_field("algorithm", "missing name");
    sc.algorithm = a.at("name").get<std::string>();
    sc.ascend_k = get_number(a, "k", kE, "algorithm");
    if (a.contains("rule")) sc.ascend_rule = a.at("rule").get<std::string>();
    if (sc.ascend_rule != "shared-peak" && sc.ascend_rule != "peak-floor")
      bad_field("algorithm.rule", "must be shared-peak or peak-floor");
    if (sc.ascend_k < 1.0) bad_field("algorithm.k", "must be >= 1");
  }
  if (j.contains("oracle")) {
    sc.oracle_step = get_number(j.at("oracle"), "step", sc.oracle_step, "oracle");
    sc.oracle_budget = static_cast<long long>(
        get_number(j.at("oracle"), "budget", static_cast<double>(sc.oracle_budget),
                   "oracle"));
  }
  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    if (!s.contains("parameter")) bad_field("sweep.parameter", "required");
    sc.sweep_parameter = s.at("parameter").get<std::string>();
    if (sc.sweep_parameter != "k" && sc.sweep_parameter != "ladder")
      bad_field("sweep.parameter", "must be k or ladder");
    if (s.contains("values"))
      sc.sweep_values = s.at("values").get<std::vector<double>>();
  }
  if (!j.contains("instance")) bad_field("instance", "required");
  sc.instance = parse_instance(j.at("instance"), sc.seed, seed_override.has_value());
  try {
    sc.instance.validate();
  } catch (const std::exception& e) {
    throw ParseError(std::string("instance rejected: ") + e.what());
  }

  Json canon;
  canon["version"] = sc.version;
  canon["seed"] = sc.seed;
  canon["tol"] = sc.tol;
  canon["epsilon"] = sc.price_eps;
  canon["algorithm"] =
      Json{{"name", sc.algorithm}, {"k", sc.ascend_k}, {"rule", sc.ascend_rule}};
  canon["oracle"] = Json{{"step", sc.oracle_step}, {"budget", sc.oracle_budget}};
  if (!sc.sweep_parameter.empty())
    canon["sweep"] =
        Json{{"parameter", sc.sweep_parameter}, {"values", sc.sweep_values}};
  canon["instance"] = instance_to_json(sc.instance);
  sc.canonical = canon.dump();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& file,
                       std::optional<std::uint64_t> seed_override) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot read scenario file '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), seed_override);
}

std::string scenario_hash(const Scenario& sc) {
  // FNV-1a over the canonical form
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : sc.canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int cmd_run(const Scenario& sc, const RunOptions& opt) {
  try {
    auto t0 = std::chrono::steady_clock::now();
    Executed ex = execute(sc);
    double check_tol = std::max(1e-6, 10 * sc.tol);
    if (ex.solution.diag.max_envy_residual > check_tol ||
        ex.solution.diag.max_kkt_residual > check_tol)
      throw std::runtime_error(
          "solution failed re-verification (envy residual " +
          std::to_string(ex.solution.diag.max_envy_residual) + ", kkt residual " +
          std::to_string(ex.solution.diag.max_kkt_residual) + ")");

    Json rep;
    rep["scenario_hash"] = scenario_hash(sc);
    rep["algorithm"] = sc.algorithm;
    rep["solution"] = solution_to_json(ex.solution, sc.instance);
    if (!ex.guarantee.is_null()) rep["guarantee"] = ex.guarantee;
    if (opt.write_trace && ex.has_trace) rep["trace_file"] = opt.stem + ".trace.log";

    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    write_text(opt.out_dir / (opt.stem + ".json"), rep.dump(2) + "\n");
    if (opt.write_trace && ex.has_trace)
      write_trace_log(opt.out_dir / (opt.stem + ".trace.log"), ex.trace, sc.instance);
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    write_text(opt.out_dir / (opt.stem + ".meta.json"),
               Json{{"wall_ms", ms}}.dump(2) + "\n");
    return kExitOk;
  } catch (const std::exception& e) {
    int code = classify(e);
    write_error(opt, code, kind_of(code), e.what());
    return code;
  }
}

int cmd_compare(const Scenario& sc, const RunOptions& opt) {
  try {
    auto t0 = std::chrono::steady_clock::now();
    AscendConfig cfg;
    cfg.tol = sc.tol;
    cfg.price_eps = sc.price_eps;
    AlgorithmResult alg;
    if (sc.algorithm == "log-delta")
      alg = log_delta_algorithm(sc.instance, cfg);
    else if (sc.algorithm == "bicriteria")
      alg = bicriteria_e(sc.instance, cfg);
    else
      alg = approx_revenue_uniform_peak(sc.instance, cfg);

    // search box pinned under the k=e prices
    AscendConfig ecfg = cfg;
    ecfg.k = kE;
    ecfg.rule = sc.algorithm == "log-delta" ? StopRule::PeakFloor
                                            : StopRule::SharedPeak;
    AscendResult base = run_ascending(sc.instance, ecfg);
    GridSpec grid = make_default_grid(sc.instance, base.solution.prices,
                                      sc.oracle_step, sc.oracle_budget);
    OracleReport oracle = grid_opt_revenue(sc.instance, grid);
    WelfareOptimum w = welfare_opt(sc.instance);

    double mass_sum = 0.0;
    for (int i = 0; i < sc.instance.num_buyers(); ++i)
      mass_sum += sc.instance.buyer(i).demand.mass();
    double slack = sc.oracle_step * mass_sum;

    double rev = alg.report.measured_revenue;
    double revenue_ratio = rev > 0 ? oracle.best_revenue / rev : kInf;
    double welfare_ratio =
        alg.report.measured_welfare > 0 ? w.objective / alg.report.measured_welfare
                                        : kInf;
    bool pass = revenue_ratio <= alg.report.claimed_revenue_ratio + slack / std::max(rev, 1e-12);
    if (sc.algorithm == "bicriteria")
      pass = pass && alg.report.measured_welfare >= 0.5 * w.objective - sc.tol;
    if (sc.algorithm == "log-delta")
      pass = pass && alg.report.measured_welfare >= 0.25 * w.objective - sc.tol;

    Json rep;
    rep["scenario_hash"] = scenario_hash(sc);
    rep["algorithm"] = sc.algorithm;
    rep["guarantee"] = guarantee_to_json(alg.report);
    Json oj;
    oj["best_revenue"] = oracle.best_revenue;
    Json oprices;
    for (int t = 0; t < sc.instance.num_items(); ++t)
      oprices[sc.instance.item(t).id] = oracle.best_prices[t];
    oj["best_prices"] = std::move(oprices);
    oj["evaluations"] = oracle.evaluations;
    oj["step"] = sc.oracle_step;
    oj["resolution_slack"] = slack;
    rep["oracle"] = std::move(oj);
    rep["welfare_opt"] = w.objective;
    rep["revenue_ratio"] = revenue_ratio;
    rep["welfare_ratio"] = welfare_ratio;
    rep["pass"] = pass;
    if (!pass) rep["solution"] = solution_to_json(alg.solution, sc.instance);

    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    write_text(opt.out_dir / (opt.stem + ".json"), rep.dump(2) + "\n");
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    write_text(opt.out_dir / (opt.stem + ".meta.json"),
               Json{{"wall_ms", ms}, {"oracle_wall_ms", oracle.wall_ms}}.dump(2) + "\n");
    return kExitOk;
  } catch (const std::exception& e) {
    int code = classify(e);
    write_error(opt, code, kind_of(code), e.what());
    return code;
  }
}

int cmd_sweep(const Scenario& sc, const RunOptions& opt) {
  try {
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    std::ostringstream csv;
    csv.precision(12);
    int rows = 0;
    WelfareOptimum w = welfare_opt(sc.instance);
    if (sc.sweep_parameter == "ladder") {
      AscendConfig cfg;
      cfg.tol = sc.tol;
      cfg.price_eps = sc.price_eps;
      AlgorithmResult r = log_delta_algorithm(sc.instance, cfg);
      csv << "j,revenue,welfare,alpha,bound\n";
      for (size_t j = 0; j < r.report.ladder_revenue.size(); ++j) {
        double sw = r.report.ladder_welfare[j];
        double alpha = sw > 0 ? std::max(1.0, w.objective / sw) : kInf;
        double bound = std::max(1.0 / kE, (alpha - 1.0) / alpha);
        csv << j << ',' << r.report.ladder_revenue[j] << ',' << sw << ',' << alpha
            << ',' << bound << '\n';
        ++rows;
      }
    } else {
      csv << "k,revenue,welfare,alpha,bound\n";
      for (double k : sc.sweep_values) {
        AscendConfig cfg;
        cfg.tol = sc.tol;
        cfg.price_eps = sc.price_eps;
        cfg.k = k;
        cfg.rule = sc.ascend_rule == "peak-floor" ? StopRule::PeakFloor
                                                  : StopRule::SharedPeak;
        AscendResult r = run_ascending(sc.instance, cfg, &w);
        double sw = r.solution.diag.welfare;
        double alpha = sw > 0 ? std::max(1.0, w.objective / sw) : kInf;
        double bound = std::max(1.0 / kE, (alpha - 1.0) / alpha);
        csv << k << ',' << r.solution.diag.revenue << ',' << sw << ',' << alpha
            << ',' << bound << '\n';
        ++rows;
      }
    }
    write_text(opt.out_dir / (opt.stem + ".csv"), csv.str());
    Json rep{{"scenario_hash", scenario_hash(sc)},
             {"table", opt.stem + ".csv"},
             {"rows", rows}};
    write_text(opt.out_dir / (opt.stem + ".json"), rep.dump(2) + "\n");
    return kExitOk;
  } catch (const std::exception& e) {
    int code = classify(e);
    write_error(opt, code, kind_of(code), e.what());
    return code;
  }
}

int cmd_validate(const Scenario& sc, const RunOptions& opt) {
  try {
    Json rep;
    rep["scenario_hash"] = scenario_hash(sc);
    Json buyers = Json::array();
    for (int i = 0; i < sc.instance.num_buyers(); ++i) {
      Certificate c = check_mhr(sc.instance.buyer(i).demand);
      buyers.push_back(Json{{"id", sc.instance.buyer(i).id},
                            {"mhr", c.pass},
                            {"worst_violation", c.worst_violation}});
    }
    Json items = Json::array();
    for (int t = 0; t < sc.instance.num_items(); ++t) {
      Certificate cv = check_convex(sc.instance.item(t).cost);
      Certificate dc = check_doubly_convex(sc.instance.item(t).cost);
      items.push_back(Json{{"id", sc.instance.item(t).id},
                           {"convex", cv.pass},
                           {"doubly_convex", dc.pass}});
    }
    rep["buyers"] = std::move(buyers);
    rep["items"] = std::move(items);
    rep["ok"] = true;
    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    write_text(opt.out_dir / (opt.stem + ".json"), rep.dump(2) + "\n");
    return kExitOk;
  } catch (const std::exception& e) {
    int code = classify(e);
    write_error(opt, code, kind_of(code), e.what());
    return code;
  }
}

}  // namespace efp
