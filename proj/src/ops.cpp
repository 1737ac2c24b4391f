#include "relim/ops.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "relim/analysis.hpp"
#include "relim/family.hpp"
#include "relim/roundelim.hpp"
#include "relim/simulator.hpp"

namespace relim {

namespace {

using Handler = std::function<json(const json&, const Context&)>;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalid, std::string("parameter '") + key + "' has the wrong type");
  }
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw Error(ErrorCode::kInvalid, std::string("missing parameter '") + key + "'");
  return *it;
}

FamilyVector vector_param(const json& j, const char* key) {
  const json& v = need(j, key);
  if (v.is_string()) return parse_vector(v.get<std::string>());
  if (v.is_array()) {
    FamilyVector z;
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw Error(ErrorCode::kInvalid, std::string("parameter '") + key + "' must hold integers");
      z.push_back(x.get<int>());
    }
    validate_vector(z);
    return z;
  }
  throw Error(ErrorCode::kInvalid, std::string("parameter '") + key + "' must be a vector");
}

int int_param(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_integer()) throw Error(ErrorCode::kInvalid, std::string("parameter '") + key + "' must be an integer");
  return v.get<int>();
}

Side side_param(const json& j, const char* key, Side fallback) {
  std::string s = get_or<std::string>(j, key, fallback == Side::kNode ? "node" : "edge");
  if (s == "node" || s == "nodes") return Side::kNode;
  if (s == "edge" || s == "edges") return Side::kEdge;
  throw Error(ErrorCode::kInvalid, "side must be 'node' or 'edge'");
}

RenamingPolicy policy_param(const json& j, const char* key, const char* fallback) {
  return RenamingPolicy::parse(get_or<std::string>(j, key, fallback));
}

json problem_summary(const Problem& p) {
  return {{"problem", format_problem(p)},
          {"labels", p.label_count()},
          {"node_configurations", p.nodes().size()},
          {"edge_configurations", p.edges().size()}};
}

json stats_json(const StepStats& s) {
  return {{"input_labels", s.input_labels},         {"intermediate_labels", s.intermediate_labels},
          {"output_labels", s.output_labels},       {"intermediate_nodes", s.intermediate_nodes},
          {"intermediate_edges", s.intermediate_edges}, {"output_nodes", s.output_nodes},
          {"output_edges", s.output_edges}};
}

RelaxAction action_from_json(const json& a) {
  RelaxAction r;
  const std::string kind = get_or<std::string>(a, "kind", "");
  if (kind == "merge") {
    r.kind = RelaxAction::Kind::kMerge;
    r.labels = get_or(a, "labels", std::vector<std::string>{});
    r.target = get_or<std::string>(a, "target", "");
  } else if (kind == "add") {
    r.kind = RelaxAction::Kind::kAddConfig;
    r.side = side_param(a, "side", Side::kEdge);
    r.config = get_or<std::string>(a, "config", "");
  } else if (kind == "remove") {
    r.kind = RelaxAction::Kind::kRemoveConfig;
    r.side = side_param(a, "side", Side::kEdge);
    r.config = get_or<std::string>(a, "config", "");
  } else if (kind == "map") {
    r.kind = RelaxAction::Kind::kMapToStronger;
    r.labels = {get_or<std::string>(a, "from", "")};
    r.target = get_or<std::string>(a, "to", "");
    r.side = side_param(a, "side", Side::kEdge);
  } else {
    throw Error(ErrorCode::kInvalid, "unknown relaxation kind '" + kind + "'");
  }
  return r;
}

json report_json(const OneStepReport& r) {
  return {{"delta", r.delta},
          {"z", format_vector(r.z)},
          {"z_next", format_vector(r.z_next)},
          {"re_labels", r.re_labels},
          {"rere_labels", r.rere_labels},
          {"rere_nodes", r.rere_nodes},
          {"re_matches_oracle", r.re_matches_oracle},
          {"relaxed_contains", r.relaxed_contains},
          {"estar_matches", r.estar_matches},
          {"projection_checked", r.projection_checked},
          {"projection_ok", r.projection_ok},
          {"label_bound_ok", r.label_bound_ok},
          {"ok", r.ok()},
          {"notes", r.notes}};
}

std::string join_ids(const std::vector<Label>& ls) {
  std::string s;
  for (const auto& l : ls) s += (s.empty() ? "" : " ") + l.id;
  return s;
}

// ---- problem operations

json op_parse(const json& p, const Context&) {
  Problem pr = problem_from_params(p);
  json r = problem_summary(pr);
  json ids = json::array();
  for (const auto& l : pr.labels()) ids.push_back(l.id);
  r["label_ids"] = ids;
  r["delta"] = pr.delta_n();
  r["rank"] = pr.delta_e();
  return r;
}

json op_diagram(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  Side side = side_param(p, "side", Side::kEdge);
  Diagram d = compute_diagram(pr, side, ctx);
  json classes = json::array();
  for (const auto& c : d.classes) {
    json ids = json::array();
    for (int i : c) ids.push_back(pr.label(i).id);
    classes.push_back(ids);
  }
  json edges = json::array();
  for (auto [w, s] : d.edges) edges.push_back({pr.label(w).id, pr.label(s).id});
  return {{"side", to_string(side)}, {"classes", classes}, {"edges", edges}, {"exact", d.exact}};
}

json op_re(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  return problem_summary(rename_labels(apply_re(pr, ctx), policy_param(p, "renaming", "none"), nullptr, ctx));
}

json op_rere(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  return problem_summary(rename_labels(apply_rere(pr, ctx), policy_param(p, "renaming", "none"), nullptr, ctx));
}

json op_rename(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  std::optional<Problem> target;
  if (p.contains("target")) target = parse_problem(need(p, "target").get<std::string>());
  return problem_summary(rename_labels(pr, policy_param(p, "policy", "union"), target ? &*target : nullptr, ctx));
}

json op_step(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  StepTrace t = step(pr, {policy_param(p, "first", "union"), policy_param(p, "second", "intersection")}, ctx);
  return {{"input", format_problem(t.input)},
          {"intermediate", format_problem(t.intermediate)},
          {"problem", format_problem(t.output)},
          {"stats", stats_json(t.stats)}};
}

json op_fixedpoint(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  const RenamingPolicy first = policy_param(p, "first", "union");
  const RenamingPolicy second = policy_param(p, "second", "intersection");
  FixedPointResult f = detect_fixed_point(pr, {first, second}, ctx);
  json r{{"fixed_point", f.is_fixed_point},
         {"literal", f.literal},
         {"semantic", f.semantic},
         {"normalized", f.normalized},
         {"intermediate", format_problem(f.trace.intermediate)},
         {"output", format_problem(f.trace.output)},
         {"stats", stats_json(f.trace.stats)}};
  r["nontrivial"] = !zero_round_check(pr, {}, ctx).solvable;
  if (p.contains("expect_intermediate")) {
    Problem expect = problem_from_params(need(p, "expect_intermediate"));
    Problem restored = restore_subconfigurations(apply_re(pr, ctx), Side::kEdge, first);
    r["intermediate_matches"] = same_semantics(restored, expect, ctx);
  }
  if (p.contains("expect_output")) {
    Problem expect = problem_from_params(need(p, "expect_output"));
    r["output_matches"] = same_semantics(f.trace.output, expect, ctx);
  }
  return r;
}

json op_relax(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  std::vector<RelaxAction> actions;
  for (const auto& a : get_or(p, "actions", json::array())) actions.push_back(action_from_json(a));
  std::vector<std::string> log;
  Problem out = apply_relaxations(pr, actions, &log, ctx);
  json r = problem_summary(out);
  r["log"] = log;
  return r;
}

json op_zero_round(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  ZeroRoundResult z = zero_round_check(pr, {}, ctx);
  json w = json::array();
  for (int i : z.witness) w.push_back(pr.label(i).id);
  json fp = nullptr;
  if (z.failing_pair) fp = {pr.label(z.failing_pair->first).id, pr.label(z.failing_pair->second).id};
  return {{"solvable", z.solvable}, {"witness", w}, {"failing_pair", fp}, {"configurations_checked", z.configurations_checked}};
}

json op_sequence(const json& p, const Context& ctx) {
  Problem pr = problem_from_params(p);
  const int steps = get_or(p, "steps", 1);
  if (steps < 1) throw Error(ErrorCode::kInvalid, "steps must be at least 1");
  SequencePolicy policy;
  const std::string mode = get_or<std::string>(p, "policy", "rename");
  if (mode == "family") {
    const json& fam = need(p, "family");
    policy = family_sequence_policy(int_param(fam, "delta"), vector_param(fam, "z"), ctx);
  } else if (mode == "rename") {
    policy.renaming = {policy_param(p, "first", "union"), policy_param(p, "second", "intersection")};
  } else {
    throw Error(ErrorCode::kInvalid, "unknown sequence policy '" + mode + "'");
  }
  SequenceResult s = run_sequence(pr, steps, policy, ctx);
  json problems = json::array();
  json log = json::array();
  for (const auto& t : s.traces) {
    problems.push_back(format_problem(t.output));
    for (const auto& l : t.relaxations) log.push_back(l);
  }
  json r{{"problems", problems}, {"log", log}, {"steps_completed", s.traces.size()}};
  r["aborted"] = s.aborted ? json(to_string(*s.aborted)) : json(nullptr);
  if (s.aborted) r["abort_message"] = s.abort_message;
  if (!s.traces.empty()) r["problem"] = format_problem(s.traces.back().output);
  return r;
}

// ---- family operations

json op_family_build(const json& p, const Context&) {
  const int delta = int_param(p, "delta");
  Problem pr = get_or(p, "variant", false) ? build_fixedpoint_variant(delta) : build_family_problem(delta, vector_param(p, "z"));
  return problem_summary(pr);
}

json op_family_prefix(const json& p, const Context&) {
  FamilyVector z = vector_param(p, "z");
  const long j = get_or<long>(p, "j", 1);
  if (j < 0) throw Error(ErrorCode::kInvalid, "j must be nonnegative");
  return {{"z", format_vector(prefix_iter(to_big(z), static_cast<std::uint64_t>(j)))}};
}

json op_family_lowerbound(const json& p, const Context&) {
  const long delta = int_param(p, "delta");
  if (delta < 1) throw Error(ErrorCode::kInvalid, "Δ must be positive");
  if (p.contains("alpha") || p.contains("c")) {
    const long alpha = get_or<long>(p, "alpha", 0), c = get_or<long>(p, "c", 1), beta = int_param(p, "beta");
    if (alpha < 0 || c < 1 || beta < 0) throw Error(ErrorCode::kInvalid, "needs α ≥ 0, c ≥ 1, β ≥ 0");
    RulingResult r = ruling_set_lower_bound(delta, alpha, c, beta);
    auto fl = ruling_floor_bound(delta, alpha, c, beta);
    return {{"t", r.str()},
            {"t_minus_beta", r.kind == LengthResult::Kind::kFinite ? json(r.t_minus_beta) : json(nullptr)},
            {"floor_bound", fl ? json(*fl) : json(nullptr)}};
  }
  FamilyVector z = vector_param(p, "z");
  LengthResult r = get_or(p, "iterative", false) ? lower_bound_length_iterative(delta, z) : lower_bound_length(delta, z);
  return {{"t", r.str()}, {"beta_warning", r.beta_warning}};
}

json op_family_oracle(const json& p, const Context&) {
  return problem_summary(expected_intermediate(int_param(p, "delta"), vector_param(p, "z"),
                                               parse_intermediate(get_or<std::string>(p, "which", "re-edge"))));
}

json op_family_project(const json& p, const Context& ctx) {
  const int delta = int_param(p, "delta");
  const FamilyVector z = vector_param(p, "z");
  BigVector next = prefix_vector(to_big(z));
  FamilyVector zn;
  for (const auto& v : next) {
    if (!v.fits_sint_p() || v > 1'000'000) throw Error(ErrorCode::kInvalid, "prefix(z) is too large");
    zn.push_back(static_cast<int>(v.get_si()));
  }
  std::optional<Problem> target;
  if (total_of(zn) <= delta) target = build_family_problem(delta, zn);
  std::optional<ConcreteSet> allowed;
  if (target) allowed = expand(*target, Side::kNode, ctx);
  auto check = [&](const std::vector<Label>& ls) -> json {
    if (!target) return nullptr;
    std::vector<int> v;
    for (const auto& l : ls) {
      auto k = target->find(l.id);
      if (!k) return false;
      v.push_back(*k);
    }
    return allowed->contains(v);
  };
  json r{{"z_next", format_vector(zn)}};
  if (p.contains("node")) {
    std::vector<StarForm> forms;
    std::istringstream in(need(p, "node").get<std::string>());
    std::string tok;
    while (in >> tok) forms.push_back(parse_form(tok));
    if (static_cast<int>(forms.size()) != delta) throw Error(ErrorCode::kInvalid, "node needs Δ forms");
    std::vector<Label> proj = project_node(forms, z);
    r["labels"] = join_ids(proj);
    r["allowed"] = check(proj);
    return r;
  }
  json rows = json::array();
  bool all = true;
  for (const auto& row : star_node_rows(delta, z)) {
    std::string forms;
    for (const auto& f : row) forms += (forms.empty() ? "" : " ") + format_form(f);
    std::vector<Label> proj = project_node(row, z);
    json ok = check(proj);
    if (ok.is_boolean() && !ok.get<bool>()) all = false;
    rows.push_back({{"forms", forms}, {"labels", join_ids(proj)}, {"allowed", ok}});
  }
  r["rows"] = rows;
  r["all_allowed"] = target ? json(all) : json(nullptr);
  return r;
}

json op_family_check(const json& p, const Context& ctx) {
  return report_json(check_one_step(int_param(p, "delta"), vector_param(p, "z"), ctx));
}

json op_calc_lifting(const json& p, const Context&) {
  LiftingKind k = parse_lifting(get_or<std::string>(p, "which", ""));
  LiftingParams lp;
  lp.delta = get_or(p, "delta", 0.0);
  lp.f = get_or(p, "f", 0.0);
  lp.p = get_or(p, "p", 0.0);
  lp.j = get_or(p, "j", 0.0);
  lp.t = get_or(p, "t", 0.0);
  lp.n = get_or(p, "n", 0.0);
  LiftingResult r = lifting_bound(lp, k);
  return {{"which", to_string(k)},
          {"params", {{"delta", lp.delta}, {"f", lp.f}, {"p", lp.p}, {"j", lp.j}, {"t", lp.t}, {"n", lp.n}}},
          {"value", r.value},
          {"log_value", r.is_log ? json(r.log_value) : json(nullptr)},
          {"exact", false}};
}

// ---- simulator operations

Instance instance_param(const json& p) {
  if (p.contains("instance")) return instance_from_json(need(p, "instance"));
  return build_instance(instance_spec_from_json(need(p, "spec")));
}

std::vector<int> defects_param(const json& p) {
  auto d = get_or(p, "defects", std::vector<int>{});
  if (d.empty()) throw Error(ErrorCode::kInvalid, "missing parameter 'defects'");
  return d;
}

json op_sim_build(const json& p, const Context&) {
  return {{"instance", instance_to_json(build_instance(instance_spec_from_json(need(p, "spec"))))}};
}

json op_sim_run(const json& p, const Context&) {
  Instance inst = instance_param(p);
  const std::string alg = get_or<std::string>(p, "algorithm", "");
  json r{{"algorithm", alg}};
  if (alg == "greedy-arbdefective") {
    auto d = defects_param(p);
    ArbdefectiveOutput out = greedy_arbdefective(inst, d);
    r["rounds"] = out.rounds;
    r["solution"] = to_json(out.coloring);
    r["verify"] = to_json(verify_arbdefective(inst, out.coloring, d));
  } else if (alg == "sweep-ruling-set") {
    const int beta = int_param(p, "beta");
    RulingSetOutput out = sweep_ruling_set(inst, beta, get_or(p, "schedule", std::vector<int>{}));
    r["rounds"] = out.rounds;
    r["solution"] = to_json(out);
    r["verify"] = to_json(verify_ruling(inst, out));
  } else if (alg == "arb-colored-ruling-set") {
    RulingSetOutput out = arb_colored_ruling_set(inst, get_or(p, "alpha", 0), get_or(p, "c", 1), int_param(p, "beta"));
    r["rounds"] = out.rounds;
    r["solution"] = to_json(out);
    r["verify"] = to_json(verify_ruling(inst, out));
  } else if (alg == "constant" || alg == "ball" || alg == "flood") {
    NodeProgram prog = alg == "constant" ? constant_program(get_or(p, "value", json(0)))
                       : alg == "ball"   ? ball_program(get_or(p, "radius", 1))
                                         : flood_program(get_or(p, "source", 0));
    RunResult rr = run_algorithm(inst, prog, get_or(p, "max_rounds", 1000));
    r["rounds"] = rr.rounds;
    r["states"] = rr.states;
    r["finished"] = rr.finished;
  } else {
    throw Error(ErrorCode::kInvalid, "unknown algorithm '" + alg + "'");
  }
  if (!p.contains("instance")) r["instance"] = instance_to_json(inst);
  return r;
}

json op_sim_verify(const json& p, const Context& ctx) {
  Instance inst = instance_param(p);
  const std::string kind = get_or<std::string>(p, "kind", "");
  const json& sol = need(p, "solution");
  if (kind == "labeling") {
    Problem pr = problem_from_params(p);
    return to_json(verify_labeling(inst, pr, labeling_from_json(sol), ctx));
  }
  if (kind == "arbdefective") return to_json(verify_arbdefective(inst, oriented_coloring_from_json(sol), defects_param(p)));
  if (kind == "ruling") return to_json(verify_ruling(inst, ruling_from_json(sol)));
  if (kind == "ruling-set") {
    RulingSetOutput r = ruling_from_json(sol);
    return to_json(verify_ruling_set(inst, r.members, r.beta));
  }
  throw Error(ErrorCode::kInvalid, "unknown verification kind '" + kind + "'");
}

json op_sim_reduce(const json& p, const Context& ctx) {
  Instance inst = instance_param(p);
  const std::string kind = get_or<std::string>(p, "kind", "");
  const json& sol = need(p, "solution");
  ReductionOutput out;
  if (kind == "arbdefective") out = reduce_arbdefective(inst, oriented_coloring_from_json(sol), defects_param(p));
  else if (kind == "ruling") out = reduce_ruling(inst, ruling_from_json(sol));
  else throw Error(ErrorCode::kInvalid, "unknown reduction kind '" + kind + "'");
  Problem target = build_family_problem(inst.delta, out.z);
  json r{{"z", format_vector(out.z)},
         {"family", {{"delta", inst.delta}, {"z", format_vector(out.z)}}},
         {"rounds", out.rounds},
         {"solution", to_json(out.labeling)},
         {"verify", to_json(verify_labeling(inst, target, out.labeling, ctx))}};
  if (!p.contains("instance")) r["instance"] = instance_to_json(inst);
  return r;
}

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h{
      {"parse", op_parse},
      {"diagram", op_diagram},
      {"re", op_re},
      {"rere", op_rere},
      {"rename", op_rename},
      {"step", op_step},
      {"fixedpoint", op_fixedpoint},
      {"relax", op_relax},
      {"zero-round", op_zero_round},
      {"sequence", op_sequence},
      {"family-build", op_family_build},
      {"family-prefix", op_family_prefix},
      {"family-lowerbound", op_family_lowerbound},
      {"family-oracle", op_family_oracle},
      {"family-project", op_family_project},
      {"family-check", op_family_check},
      {"calc-lifting", op_calc_lifting},
      {"sim-build", op_sim_build},
      {"sim-run", op_sim_run},
      {"sim-verify", op_sim_verify},
      {"sim-reduce", op_sim_reduce},
  };
  return h;
}

std::string yes_no(const json& v) { return v.is_boolean() ? (v.get<bool>() ? "yes" : "no") : "n/a"; }

}  // namespace

Problem problem_from_params(const json& params) {
  if (params.contains("problem") && params["problem"].is_string()) return parse_problem(params["problem"].get<std::string>());
  if (params.contains("family") && params["family"].is_object()) {
    const json& f = params["family"];
    if (get_or(f, "variant", false)) return build_fixedpoint_variant(int_param(f, "delta"));
    return build_family_problem(int_param(f, "delta"), vector_param(f, "z"));
  }
  if (params.contains("variant")) return build_fixedpoint_variant(int_param(params, "variant"));
  throw Error(ErrorCode::kInvalid, "missing problem: give 'problem', 'family' or 'variant'");
}

json run_op(const std::string& op, const json& params, const Context& ctx) {
  auto it = handlers().find(op);
  if (it == handlers().end()) throw Error(ErrorCode::kInvalid, "unknown operation '" + op + "'");
  if (!params.is_object()) throw Error(ErrorCode::kInvalid, "parameters must be a JSON object");
  try {
    return it->second(params, ctx);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalid, std::string("bad parameters: ") + e.what());
  }
}

const std::vector<std::string>& op_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : handlers()) v.push_back(k);
    return v;
  }();
  return names;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

std::optional<std::string> produced_problem(const std::string& op, const json& result) {
  static const std::vector<std::string> producing{"parse", "re", "rere", "rename", "step", "relax", "sequence",
                                                  "family-build", "family-oracle"};
  if (std::find(producing.begin(), producing.end(), op) == producing.end()) return std::nullopt;
  auto it = result.find("problem");
  if (it == result.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

int result_status(const std::string& op, const json& result) {
  if (op == "sim-verify" || op == "family-check") return result.value("ok", false) ? 0 : 1;
  if (op == "sim-run" || op == "sim-reduce")
    return result.contains("verify") && !result["verify"].value("ok", false) ? 1 : 0;
  if (op == "family-project") return result.value("all_allowed", json(true)) == json(false) || result.value("allowed", json(true)) == json(false) ? 1 : 0;
  if (op == "sequence") return result["aborted"].is_null() ? 0 : 3;
  return 0;
}

std::string render_text(const std::string& op, const json& r) {
  std::ostringstream out;
  if (op == "fixedpoint") {
    out << "fixed point: " << yes_no(r["fixed_point"]) << "\n";
    out << "literal: " << yes_no(r["literal"]) << "\n";
    out << "semantic: " << yes_no(r["semantic"]) << "\n";
    out << "normalized: " << yes_no(r["normalized"]) << "\n";
    out << "nontrivial: " << yes_no(r["nontrivial"]) << "\n";
    if (r.contains("intermediate_matches")) out << "intermediate matches: " << yes_no(r["intermediate_matches"]) << "\n";
    if (r.contains("output_matches")) out << "output matches: " << yes_no(r["output_matches"]) << "\n";
    return out.str();
  }
  if (op == "diagram") {
    out << "side: " << r["side"].get<std::string>() << "\n";
    for (const auto& c : r["classes"])
      if (c.size() > 1) {
        std::string s;
        for (const auto& id : c) s += (s.empty() ? "" : " = ") + id.get<std::string>();
        out << s << "\n";
      }
    for (const auto& e : r["edges"]) out << e[0].get<std::string>() << " < " << e[1].get<std::string>() << "\n";
    return out.str();
  }
  if (op == "zero-round") {
    out << "solvable: " << yes_no(r["solvable"]) << "\n";
    if (!r["witness"].empty()) {
      std::string s;
      for (const auto& id : r["witness"]) s += (s.empty() ? "" : " ") + id.get<std::string>();
      out << "witness: " << s << "\n";
    }
    if (!r["failing_pair"].is_null())
      out << "failing pair: " << r["failing_pair"][0].get<std::string>() << " " << r["failing_pair"][1].get<std::string>() << "\n";
    return out.str();
  }
  if (op == "family-prefix") return r["z"].get<std::string>() + "\n";
  if (op == "family-lowerbound") {
    out << r["t"].get<std::string>() << "\n";
    if (r.contains("floor_bound") && !r["floor_bound"].is_null()) out << "floor bound: " << r["floor_bound"].dump() << "\n";
    if (r.value("beta_warning", false)) out << "warning: β exceeds 2^Δ\n";
    return out.str();
  }
  if (op == "calc-lifting") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", r["value"].get<double>());
    out << buf << "\n";
    if (!r["log_value"].is_null()) {
      std::snprintf(buf, sizeof buf, "%.17g", r["log_value"].get<double>());
      out << "ln: " << buf << "\n";
    }
    return out.str();
  }
  if (op == "family-check") {
    for (const char* k : {"re_matches_oracle", "relaxed_contains", "estar_matches", "projection_checked", "projection_ok",
                          "label_bound_ok", "ok"})
      out << k << ": " << yes_no(r[k]) << "\n";
    out << "z_next: " << r["z_next"].get<std::string>() << "\n";
    for (const auto& n : r["notes"]) out << "note: " << n.get<std::string>() << "\n";
    return out.str();
  }
  if (op == "family-project") {
    out << "prefix: " << r["z_next"].get<std::string>() << "\n";
    if (r.contains("labels")) out << r["labels"].get<std::string>() << "  allowed: " << yes_no(r["allowed"]) << "\n";
    if (r.contains("rows"))
      for (const auto& row : r["rows"])
        out << row["forms"].get<std::string>() << " -> " << row["labels"].get<std::string>() << "  allowed: "
            << yes_no(row["allowed"]) << "\n";
    return out.str();
  }
  if (op == "sim-verify") {
    out << (r["ok"].get<bool>() ? "ok" : "violations") << "\n";
    for (const auto& v : r["violations"]) out << v.get<std::string>() << "\n";
    return out.str();
  }
  if (op == "sequence") {
    for (const auto& l : r["log"]) out << "# " << l.get<std::string>() << "\n";
    int k = 1;
    for (const auto& pr : r["problems"]) out << "# step " << k++ << "\n" << pr.get<std::string>();
    if (!r["aborted"].is_null()) out << "# aborted: " << r["abort_message"].get<std::string>() << "\n";
    return out.str();
  }
  if (r.contains("problem") && r["problem"].is_string() && !op.starts_with("sim-")) return r["problem"].get<std::string>();
  return dump_json(r);
}

}  // namespace relim
