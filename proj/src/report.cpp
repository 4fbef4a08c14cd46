#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "nsdual/report.hpp"

namespace nsdual {

Json json_num(double v) {
  if (std::isnan(v)) return "nan";
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

namespace {

Json json_vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_num(x));
  return a;
}

Json json_vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_num(v[i]));
  return a;
}

const char* route_name(AdmissibilityReport::Route r) {
  switch (r) {
    case AdmissibilityReport::Route::FullDomain: return "full_domain";
    case AdmissibilityReport::Route::BoundedDomain: return "bounded_domain";
    default: return "finite_market_only";
  }
}

}  // namespace

Json to_json(const ElasticityEstimate& e) {
  return Json{{"estimate", json_num(e.estimate)}, {"diverging", e.diverging},
              {"shift_k2", json_num(e.shift_k2)}, {"growth_c", json_num(e.growth_c)},
              {"finite_r", e.finite_r},           {"r_closed", e.r_closed}};
}

Json to_json(const AdmissibilityReport& a) {
  return Json{{"slope_inf", json_num(a.slope_inf)},
              {"slope_inf_zero", a.slope_inf_zero},
              {"r", json_num(a.r)},
              {"r_attained", a.r_attained},
              {"r_closed", a.r_closed},
              {"ae_zero", to_json(a.ae_zero)},
              {"ae_sup", to_json(a.ae_sup)},
              {"route", route_name(a.route)},
              {"admissible", a.admissible},
              {"reasons", a.reasons}};
}

Json to_json(const DualityDiagnostics& d) {
  return Json{{"gap_rel", json_num(d.gap_rel)},
              {"weak_duality_ok", d.weak_duality_ok},
              {"inclusion_resid", json_num(d.inclusion_resid)},
              {"kkt_resid", json_num(d.kkt_resid)},
              {"budget_resid", json_num(d.budget_resid)},
              {"min_density", json_num(d.min_density)},
              {"equivalent_regime", d.equivalent_regime},
              {"positivity_expected", d.positivity_expected},
              {"positivity_ok", d.positivity_ok},
              {"replication_resid", json_num(d.replication_resid)},
              {"wealth_mart_resid", json_num(d.wealth_mart_resid)},
              {"terminal_match_resid", json_num(d.terminal_match_resid)},
              {"domain_floor_resid", json_num(d.domain_floor_resid)},
              {"nonneg_wealth", d.nonneg_wealth},
              {"attain_resid", json_num(d.attain_resid)}};
}

Json to_json(const DualSolveResult& d) {
  Json trace = Json::array();
  for (const SmoothingRung& r : d.trace)
    trace.push_back(Json{{"level", json_num(r.level)}, {"value", json_num(r.value)}});
  return Json{{"value", json_num(d.value)},
              {"y", json_num(d.point.y)},
              {"density", json_vec(d.point.density)},
              {"trace", trace},
              {"constraint_residual", json_num(d.constraint_residual)},
              {"iterations", d.iterations},
              {"converged", d.converged}};
}

Json to_json(const PrimalSolveResult& p) {
  return Json{{"value", json_num(p.value)},
              {"theta", json_vec(p.theta)},
              {"wealth", json_vec(p.wealth)},
              {"via_lp", p.via_lp},
              {"diverged_to_satiation", p.diverged_to_satiation},
              {"iterations", p.iterations},
              {"converged", p.converged}};
}

Json to_json(const SolveReport& r) {
  Json j{{"primal_value", json_num(r.primal_value)},
         {"dual_value", json_num(r.dual_value)},
         {"primal", to_json(r.primal)},
         {"dual", to_json(r.dual)},
         {"diagnostics", to_json(r.diag)},
         {"admissibility", to_json(r.admissibility)},
         {"normalization_k2", json_num(r.normalization_k2)},
         {"superreplication_claim", json_num(r.superrep_claim)},
         {"route", r.route}};
  if (r.oracle_run) {
    j["oracle"] = Json{{"value", json_num(r.oracle.value)},
                       {"y", json_num(r.oracle.point.y)},
                       {"evaluations", r.oracle.evaluations}};
  }
  return j;
}

Json to_json(const LadderResult& l) {
  Json rungs = Json::array();
  for (const LadderRung& r : l.rungs)
    rungs.push_back(Json{{"level", json_num(r.level)},
                         {"primal", json_num(r.primal)},
                         {"dual", json_num(r.dual)},
                         {"shifted_x", json_num(r.shifted_x)},
                         {"shifted_beta", json_num(r.shifted_beta)}});
  return Json{{"rungs", rungs},
              {"primal_limit", json_num(l.primal_limit)},
              {"dual_limit", json_num(l.dual_limit)}};
}

Json to_json(const UniquenessReport& u) {
  return Json{{"primal_unique", u.primal_unique},
              {"primal_spread", json_num(u.primal_spread)},
              {"dual_unique", u.dual_unique},
              {"dual_face_diameter", json_num(u.dual_face_diameter)},
              {"dual_face_dim", u.dual_face_dim},
              {"dual_face_center", json_vec(u.dual_face_center)},
              {"face_within_affine_pieces", u.face_within_affine_pieces}};
}

Json to_json(const ClassAuditReport& a) {
  return Json{{"q_mart_resid", json_num(a.q_mart_resid)},
              {"supermart_worst", json_num(a.supermart_worst)},
              {"vertices_checked", a.vertices_checked},
              {"nodes_checked", a.nodes_checked},
              {"grid_y", json_vec(a.grid_y)},
              {"grid_value", json_vec(a.grid_value)},
              {"growth_c", json_num(a.growth_c)},
              {"growth_ok", a.growth_ok},
              {"shift_k2", json_num(a.shift_k2)}};
}

Json to_json(const ShortfallResult& s) {
  return Json{{"risk", json_num(s.risk)},
              {"normalization_shift", json_num(s.normalization_shift)},
              {"report", to_json(s.report)}};
}

Json to_json(const IndifferenceResult& i) {
  return Json{{"price", json_num(i.price)},
              {"lower_bound", json_num(i.lower_bound)},
              {"upper_bound", json_num(i.upper_bound)},
              {"base_value", json_num(i.base_value)},
              {"iterations", i.iterations}};
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

}  // namespace nsdual
