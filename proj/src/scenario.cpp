#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "nsdual/parallel.hpp"
#include "nsdual/scenario.hpp"

namespace nsdual {

namespace {

namespace fs = std::filesystem;

const Json& req(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(std::string("missing field \"") + key + "\"");
  return *it;
}

double num(const Json& j, const char* key) {
  const Json& v = req(j, key);
  if (!v.is_number()) throw ScenarioError(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

double num_or(const Json& j, const char* key, double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number()) throw ScenarioError(std::string("field \"") + key + "\" must be a number");
  return it->get<double>();
}

std::string str(const Json& j, const char* key) {
  const Json& v = req(j, key);
  if (!v.is_string()) throw ScenarioError(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::vector<double> num_vec(const Json& j, const char* key) {
  const Json& v = req(j, key);
  if (!v.is_array()) throw ScenarioError(std::string("field \"") + key + "\" must be an array");
  std::vector<double> out;
  for (const Json& e : v) {
    if (!e.is_number())
      throw ScenarioError(std::string("field \"") + key + "\" must contain numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

MarketTree build_market(const Json& j) {
  const std::string kind = str(j, "kind");
  if (kind == "binomial") {
    return MarketTree::binomial(num_or(j, "s0", 1.0), num(j, "up"), num(j, "down"),
                                num_or(j, "p_up", 0.5),
                                static_cast<int>(num_or(j, "periods", 1)));
  }
  if (kind == "one_period") {
    return MarketTree::one_period(num_or(j, "s0", 1.0), num_vec(j, "factors"),
                                  num_vec(j, "probs"));
  }
  if (kind == "explicit") {
    const Json& arr = req(j, "nodes");
    if (!arr.is_array()) throw ScenarioError("field \"nodes\" must be an array");
    std::vector<TreeNode> nodes;
    for (const Json& n : arr) {
      TreeNode t;
      t.parent = static_cast<int>(num_or(n, "parent", -1.0));
      t.time = static_cast<int>(num_or(n, "time", 0.0));
      t.branch_prob = num_or(n, "branch_prob", 1.0);
      t.prices = num_vec(n, "prices");
      nodes.push_back(std::move(t));
    }
    return MarketTree::from_nodes(std::move(nodes));
  }
  if (kind == "random") {
    RandomTreeParams p;
    p.periods_min = static_cast<int>(num_or(j, "periods_min", p.periods_min));
    p.periods_max = static_cast<int>(num_or(j, "periods_max", p.periods_max));
    p.branch_min = static_cast<int>(num_or(j, "branch_min", p.branch_min));
    p.branch_max = static_cast<int>(num_or(j, "branch_max", p.branch_max));
    p.assets_min = static_cast<int>(num_or(j, "assets_min", p.assets_min));
    p.assets_max = static_cast<int>(num_or(j, "assets_max", p.assets_max));
    p.s0 = num_or(j, "s0", p.s0);
    return random_arbitrage_free_tree(static_cast<std::uint64_t>(num_or(j, "seed", 1.0)), p);
  }
  throw ScenarioError("unknown market kind \"" + kind + "\"");
}

LossFunction build_loss(const Json& j) {
  const std::string kind = str(j, "kind");
  if (kind == "quadratic") return quadratic_loss();
  if (kind == "power") return power_loss(num(j, "p"));
  if (kind == "capped_slope") return capped_slope_loss(num(j, "r"));
  throw ScenarioError("unknown loss kind \"" + kind + "\"");
}

Utility build_utility(const Json& j) {
  const std::string kind = str(j, "kind");
  if (kind == "exponential") return Utility::exponential(num_or(j, "eta", 1.0));
  if (kind == "quadratic_shortfall") return Utility::quadratic_shortfall();
  if (kind == "power_shortfall") return Utility::power_shortfall(num(j, "p"));
  if (kind == "piecewise_linear")
    return Utility::piecewise_linear(num_vec(j, "breakpoints"), num_vec(j, "slopes"),
                                     num_or(j, "anchor", 0.0));
  if (kind == "shortfall") return shortfall_utility(build_loss(req(j, "loss")));
  if (kind == "shifted")
    return build_utility(req(j, "base")).shifted(num_or(j, "k1", 0.0), num_or(j, "k2", 0.0));
  if (kind == "truncated") return build_utility(req(j, "base")).truncated(num(j, "level"));
  throw ScenarioError("unknown utility kind \"" + kind + "\"");
}

Claim build_claim(const Json& j, const MarketTree& tree) {
  const int m = tree.num_atoms();
  const std::string kind = str(j, "kind");
  if (kind == "zero") return Claim::Zero(m);
  if (kind == "values") {
    std::vector<double> v = num_vec(j, "values");
    if (static_cast<int>(v.size()) != m)
      throw ScenarioError("claim values: expected one entry per atom");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), m);
  }
  if (kind == "call" || kind == "put") {
    const double strike = num(j, "strike");
    const int asset = static_cast<int>(num_or(j, "asset", 0.0));
    if (asset < 0 || asset >= tree.num_assets()) throw ScenarioError("claim asset out of range");
    Claim c(m);
    for (int a = 0; a < m; ++a) {
      double s = tree.node(tree.atom_node(a)).prices[asset];
      c[a] = kind == "call" ? std::max(s - strike, 0.0) : std::max(strike - s, 0.0);
    }
    return c;
  }
  if (kind == "uniform") {
    const double lo = num(j, "lo"), hi = num(j, "hi");
    std::mt19937_64 rng(static_cast<std::uint64_t>(num_or(j, "seed", 1.0)) ^
                        0x9e3779b97f4a7c15ull);
    Claim c(m);
    for (int a = 0; a < m; ++a)
      c[a] = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    return c;
  }
  throw ScenarioError("unknown claim kind \"" + kind + "\"");
}

void apply_tolerance(Tolerances& t, const std::string& name, double v) {
  if (name == "solve") t.solve = v;
  else if (name == "prox") t.prox = v;
  else if (name == "kkt") t.kkt = v;
  else if (name == "positivity") t.positivity = v;
  else if (name == "replication") t.replication = v;
  else if (name == "mass") t.mass = v;
  else if (name == "max_iter") t.max_iter = static_cast<int>(v);
  else if (name == "vertex_cap") t.vertex_cap = static_cast<int>(v);
  else throw ScenarioError("unknown tolerance \"" + name + "\"");
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
               ? c
               : '-';
  return out.empty() ? std::string("scenario") : out;
}

// ---- plot data ------------------------------------------------------------

std::string cell(double v) { return format_g17(v); }

std::string atoms_csv(const MarketTree& tree, const Claim& b, const Eigen::VectorXd& wealth,
                      const Eigen::VectorXd& density, const Utility* u = nullptr,
                      const Conjugate* conj = nullptr) {
  const int m = tree.num_atoms();
  std::string s = "atom,prob,claim,wealth,density,u_value,conj_value\n";
  for (int a = 0; a < m; ++a) {
    s += std::to_string(a) + ',' + cell(tree.atom_prob(a)) + ',' + cell(b[a]) + ',';
    if (wealth.size() == m) s += cell(wealth[a]);
    s += ',';
    if (density.size() == m) s += cell(density[a]);
    s += ',';
    if (u && wealth.size() == m) s += cell(u->value(wealth[a] - b[a]));
    s += ',';
    if (conj && density.size() == m) s += cell(conj->value(density[a]));
    s += '\n';
  }
  return s;
}

std::string curve_csv(const std::vector<std::pair<double, double>>& pts) {
  std::string s = "y,value\n";
  for (auto& [y, v] : pts) s += cell(y) + ',' + cell(v) + '\n';
  return s;
}

std::string ladder_csv(const std::vector<std::array<double, 3>>& rows, bool with_primal) {
  std::string s = "level,primal,dual\n";
  for (auto& r : rows) {
    s += cell(r[0]) + ',';
    if (with_primal) s += cell(r[1]);
    s += ',' + cell(r[2]) + '\n';
  }
  return s;
}

std::vector<std::pair<double, double>> dual_curve_grid(const MarketTree& tree,
                                                       const MartingalePolytope& poly,
                                                       const Conjugate& conj, const Claim& b,
                                                       double y_center) {
  std::vector<std::pair<double, double>> pts;
  double base = y_center > 0.0 ? y_center : 1.0;
  for (int k = -4; k <= 4; ++k) {
    double y = base * std::pow(2.0, k);
    pts.emplace_back(y, dual_curve_value(tree, poly, conj, b, y));
  }
  return pts;
}

// ---- gates ----------------------------------------------------------------

bool duality_gate(const SolveReport& r, const Tolerances& tol) {
  const double scale = std::max({1.0, std::abs(r.primal_value), std::abs(r.dual_value)});
  bool ok = r.diag.gap_rel <= tol.solve && r.diag.weak_duality_ok &&
            r.diag.inclusion_resid <= tol.kkt && r.diag.kkt_resid <= tol.kkt &&
            r.diag.budget_resid <= tol.kkt && r.diag.positivity_ok &&
            r.diag.domain_floor_resid <= 1e-8;
  if (r.oracle_run) ok = ok && std::abs(r.dual_value - r.oracle.value) <= tol.solve * scale;
  if (r.route == "dynamic" && r.diag.equivalent_regime)
    ok = ok && r.diag.replication_resid <= 1e3 * tol.replication &&
         r.diag.terminal_match_resid <= 1e3 * tol.replication &&
         r.diag.wealth_mart_resid <= 1e-6;
  return ok;
}

bool ladder_gate(const LadderResult& l) {
  double scale = 1.0;
  for (const LadderRung& r : l.rungs)
    scale = std::max({scale, std::abs(r.primal), std::abs(r.dual)});
  for (size_t i = 0; i < l.rungs.size(); ++i) {
    if (l.rungs[i].primal > l.rungs[i].dual + 1e-9 * scale) return false;
    if (i > 0 && l.rungs[i].primal < l.rungs[i - 1].primal - 1e-12 * scale) return false;
    if (i > 0 && l.rungs[i].dual < l.rungs[i - 1].dual - 1e-12 * scale) return false;
  }
  if (!l.rungs.empty() && l.rungs.back().primal > l.primal_limit + 1e-8 * scale) return false;
  return true;
}

// ---- execution ------------------------------------------------------------

int fail(const std::string& dir, int code, const std::string& msg) {
  Json j{{"code", code}, {"error", msg}};
  write_text_atomic(dir + "/error.json", j.dump(2) + "\n");
  std::fprintf(stderr, "error (%d): %s\n", code, msg.c_str());
  return code;
}

Json market_meta(const MarketTree& tree, const MartingalePolytope& poly) {
  return Json{{"atoms", tree.num_atoms()},
              {"nodes", tree.num_nodes()},
              {"assets", tree.num_assets()},
              {"periods", tree.periods()},
              {"interior_margin", json_num(poly.interior_margin)},
              {"vertices", static_cast<int>(poly.vertices.size())},
              {"vertices_complete", poly.vertices_complete}};
}

int execute(const Scenario& sc, const std::string& dir) {
  PolytopeOptions popts;
  popts.vertex_cap = sc.tol.vertex_cap;
  MartingalePolytope poly = martingale_polytope(sc.tree, popts);
  if (!(poly.interior_margin > 0.0))
    throw ArbitrageError("no equivalent martingale measure: the market has arbitrage");

  Json rep{{"schema_version", kSchemaVersion},
           {"name", sc.name},
           {"task", sc.task},
           {"x", json_num(sc.x)},
           {"market", market_meta(sc.tree, poly)}};

  int code = 0;
  std::string ladder_data = "level,primal,dual\n";
  std::string curve_data = "y,value\n";
  std::string atoms_data = atoms_csv(sc.tree, sc.claim, Eigen::VectorXd(), Eigen::VectorXd());

  SolveOptions so;
  so.tol = sc.tol;

  auto plot_from_report = [&](const SolveReport& r, const Utility& u) {
    const Conjugate conj = u.conjugate();
    std::vector<std::array<double, 3>> rows;
    for (const SmoothingRung& t : r.dual.trace) rows.push_back({t.level, 0.0, t.value});
    ladder_data = ladder_csv(rows, false);
    curve_data = curve_csv(dual_curve_grid(sc.tree, poly, conj, sc.claim, r.dual.point.y));
    atoms_data = atoms_csv(sc.tree, sc.claim, r.primal.wealth, r.dual.point.density, &u, &conj);
  };

  if (sc.task == "duality" || sc.task == "audit") {
    if (!sc.utility) throw ScenarioError("task requires a utility");
    SolveReport r = solve_duality(sc.tree, poly, *sc.utility, sc.claim, sc.x, so);
    rep["result"] = to_json(r);
    code = duality_gate(r, sc.tol) ? 0 : 1;
    plot_from_report(r, *sc.utility);
    if (sc.task == "audit") {
      UniquenessReport uq =
          uniqueness_probe(sc.tree, poly, *sc.utility, sc.claim, sc.x, sc.seed, sc.tol);
      rep["uniqueness"] = to_json(uq);
      if (r.diag.equivalent_regime) {
        ClassAuditReport au =
            admissible_class_audit(sc.tree, poly, *sc.utility, sc.claim, sc.x, r, sc.tol);
        rep["audit"] = to_json(au);
        if (!(au.q_mart_resid <= 1e-6 && au.supermart_worst <= 1e-6 && au.growth_ok)) code = 1;
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i < au.grid_y.size(); ++i)
          pts.emplace_back(au.grid_y[i], au.grid_value[i]);
        curve_data = curve_csv(pts);
      } else {
        rep["audit"] = Json{{"skipped", "dual optimizer is not strictly positive"}};
        code = std::max(code, 1);
      }
    }
  } else if (sc.task == "shortfall") {
    if (!sc.loss) throw ScenarioError("shortfall task requires a loss");
    ShortfallResult s = shortfall_risk(sc.tree, poly, *sc.loss, sc.claim, sc.x, so);
    rep["result"] = to_json(s);
    code = duality_gate(s.report, sc.tol) ? 0 : 1;
    plot_from_report(s.report, shortfall_utility(*sc.loss));
  } else if (sc.task == "indifference") {
    if (!sc.utility) throw ScenarioError("task requires a utility");
    IndifferenceResult r = indifference_price(sc.tree, poly, *sc.utility, sc.claim, sc.x, sc.tol);
    rep["result"] = to_json(r);
    double tol_p = 1e-7 * (1.0 + std::abs(r.upper_bound));
    code = (r.price >= r.lower_bound - tol_p && r.price <= r.upper_bound + tol_p) ? 0 : 1;
  } else if (sc.task == "ladder") {
    if (!sc.utility) throw ScenarioError("task requires a utility");
    std::vector<double> levels = sc.levels;
    if (levels.empty()) levels = {1, 2, 4, 8, 16, 32};
    LadderResult l = truncation_ladder(sc.tree, poly, *sc.utility, sc.claim, sc.x, levels, sc.tol);
    rep["result"] = to_json(l);
    code = ladder_gate(l) ? 0 : 1;
    std::vector<std::array<double, 3>> rows;
    for (const LadderRung& r : l.rungs) rows.push_back({r.level, r.primal, r.dual});
    ladder_data = ladder_csv(rows, true);
  } else {
    throw ScenarioError("unknown task \"" + sc.task + "\"");
  }

  rep["exit_code"] = code;
  write_text_atomic(dir + "/report.json", rep.dump(2) + "\n");
  write_text_atomic(dir + "/ladder.csv", ladder_data);
  write_text_atomic(dir + "/dual_curve.csv", curve_data);
  write_text_atomic(dir + "/atoms_scatter.csv", atoms_data);
  return code;
}

std::string output_root(const RunOptions& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("NSDUAL_OUT"); env && *env) return env;
  return "out";
}

}  // namespace

Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
  const int version = static_cast<int>(num_or(j, "version", 1.0));
  if (version != kSchemaVersion)
    throw ScenarioError("unsupported schema version " + std::to_string(version));
  Scenario sc;
  sc.name = j.contains("name") ? str(j, "name") : "";
  sc.task = str(j, "task");
  sc.tree = build_market(req(j, "market"));
  if (j.contains("utility")) sc.utility = build_utility(req(j, "utility"));
  if (j.contains("loss")) sc.loss = build_loss(req(j, "loss"));
  sc.claim = j.contains("claim") ? build_claim(req(j, "claim"), sc.tree)
                                 : Claim::Zero(sc.tree.num_atoms());
  sc.x = num_or(j, "x", 0.0);
  if (j.contains("levels")) sc.levels = num_vec(j, "levels");
  sc.seed = static_cast<std::uint64_t>(num_or(j, "seed", 1.0));
  if (j.contains("tolerances")) {
    const Json& t = req(j, "tolerances");
    if (!t.is_object()) throw ScenarioError("tolerances must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      if (!it.value().is_number()) throw ScenarioError("tolerances must map names to numbers");
      apply_tolerance(sc.tol, it.key(), it.value().get<double>());
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ScenarioError(std::string("JSON parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

int run_scenario_file(const std::string& path, const RunOptions& opts) {
  const std::string root = output_root(opts);
  std::string dir = root + "/" + sanitize(fs::path(path).stem().string());
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::fprintf(stderr, "error (4): cannot create %s\n", dir.c_str());
    return 4;
  }
  try {
    Scenario sc = load_scenario(path);
    if (sc.name.empty()) sc.name = sanitize(fs::path(path).stem().string());
    if (!opts.task_override.empty()) sc.task = opts.task_override;
    if (opts.seed_override) sc.seed = *opts.seed_override;
    for (const auto& [k, v] : opts.tol_overrides) apply_tolerance(sc.tol, k, v);
    const std::string named = root + "/" + sanitize(sc.name);
    if (named != dir) {
      fs::create_directories(named, ec);
      if (!ec) dir = named;
    }
    return execute(sc, dir);
  } catch (const ScenarioError& e) {
    return fail(dir, 2, e.what());
  } catch (const ArbitrageError& e) {
    return fail(dir, 3, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(dir, 3, e.what());
  } catch (const std::exception& e) {
    return fail(dir, 4, e.what());
  }
}

int run_scenario_batch(const std::string& dir, const RunOptions& opts) {
  std::vector<std::string> files;
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec))
    if (it->path().extension() == ".json") files.push_back(it->path().string());
  if (ec) {
    std::fprintf(stderr, "error (2): cannot read directory %s\n", dir.c_str());
    return 2;
  }
  if (files.empty()) {
    std::fprintf(stderr, "error (2): no scenario files in %s\n", dir.c_str());
    return 2;
  }
  std::sort(files.begin(), files.end());

  const int n = static_cast<int>(files.size());
  std::vector<int> codes(n, 0);
  parallel_for(n, 1, [&](int i) { codes[i] = run_scenario_file(files[i], opts); });

  int worst = 0;
  Json list = Json::array();
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst, codes[i]);
    list.push_back(Json{{"file", fs::path(files[i]).filename().string()}, {"code", codes[i]}});
  }
  Json summary{{"scenarios", list}, {"max_code", worst}};
  fs::create_directories(output_root(opts), ec);
  write_text_atomic(output_root(opts) + "/summary.json", summary.dump(2) + "\n");
  return worst;
}

}  // namespace nsdual
