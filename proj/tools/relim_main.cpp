#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "relim/family.hpp"
#include "relim/ops.hpp"
#include "relim/service.hpp"
#include "relim/simulator.hpp"

using namespace relim;

namespace {

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kInvalid, path + " is not valid JSON");
  return j;
}

// An instance file may be a bare instance or `sim build` output.
json read_instance(const std::string& path) {
  json j = read_json(path);
  return j.contains("instance") ? j["instance"] : j;
}

// "3 [1,0]" style pair from --family.
json family_json(const std::vector<std::string>& f) {
  if (f.size() != 2) throw Error(ErrorCode::kInvalid, "--family takes DELTA and Z");
  return {{"delta", std::stoi(f[0])}, {"z", f[1]}};
}

// Splits "side:rest".
std::pair<std::string, std::string> sided(const std::string& s, const char* flag) {
  auto c = s.find(':');
  if (c == std::string::npos) throw Error(ErrorCode::kInvalid, std::string(flag) + " expects side:value");
  return {s.substr(0, c), s.substr(c + 1)};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string t;
  while (std::getline(ss, t, sep))
    if (!t.empty()) out.push_back(t);
  return out;
}

struct Global {
  bool as_json = false;
  std::string output;
  std::string caps;
};

int emit(const Global& g, const std::string& op, const json& result) {
  const std::string text = g.as_json ? dump_json(result) : render_text(op, result);
  if (g.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(g.output);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + g.output);
    out << text;
  }
  return result_status(op, result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Round-elimination toolkit"};
  app.require_subcommand(1);
  Global g;
  app.add_flag("--json", g.as_json, "Print API JSON instead of text");
  app.add_option("-o,--output", g.output, "Write the output to a file");
  app.add_option("--caps", g.caps, "Engine caps, e.g. expand=200000,re_delta=5");

  // Deferred work: the selected subcommand fills these.
  std::string op;
  json params = json::object();
  std::function<void()> prepare;

  // ---- problem commands
  std::string file, renaming, first = "union", second = "intersection", side = "edge";
  std::vector<std::string> family;
  int variant = 0;
  auto problem_source = [&](CLI::App* c, bool positional_required) {
    auto* o = c->add_option("file", file, "Problem file ('-' for stdin)");
    if (positional_required) o->required();
  };
  auto load_problem = [&]() {
    if (!family.empty()) params["family"] = family_json(family);
    else if (variant > 0) params["variant"] = variant;
    else if (!file.empty()) params["problem"] = read_file(file);
    else throw Error(ErrorCode::kInvalid, "give a problem file, --family or --variant");
  };

  auto* parse = app.add_subcommand("parse", "Parse and print canonically");
  problem_source(parse, true);
  parse->callback([&] {
    op = "parse";
    prepare = load_problem;
  });

  auto* diagram = app.add_subcommand("diagram", "Label strength diagram");
  problem_source(diagram, true);
  diagram->add_option("--side", side, "node or edge")->check(CLI::IsMember({"node", "edge"}));
  diagram->callback([&] {
    op = "diagram";
    prepare = [&] {
      load_problem();
      params["side"] = side;
    };
  });

  for (const char* name : {"re", "rere"}) {
    auto* c = app.add_subcommand(name, std::string("Apply ") + name);
    problem_source(c, true);
    c->add_option("--renaming", renaming, "none | union | intersection | map:a=b;...");
    c->callback([&, name] {
      op = name;
      prepare = [&] {
        load_problem();
        if (!renaming.empty()) params["renaming"] = renaming;
      };
    });
  }

  auto* stepc = app.add_subcommand("step", "One full step re, rename, rere, rename");
  problem_source(stepc, false);
  stepc->add_option("--family", family, "DELTA Z")->expected(2);
  stepc->add_option("--variant", variant, "Fixed-point variant at DELTA");
  stepc->add_option("--first", first);
  stepc->add_option("--second", second);
  stepc->callback([&] {
    op = "step";
    prepare = [&] {
      load_problem();
      params["first"] = first;
      params["second"] = second;
    };
  });

  std::string expect_intermediate, expect_output;
  int expect_intermediate_variant = 0;
  auto* fp = app.add_subcommand("fixedpoint", "Check whether one step reproduces the problem");
  problem_source(fp, false);
  fp->add_option("--family", family, "DELTA Z")->expected(2);
  fp->add_option("--variant", variant, "Fixed-point variant at DELTA");
  fp->add_option("--first", first);
  fp->add_option("--second", second);
  fp->add_option("--expect-intermediate", expect_intermediate, "Problem file the intermediate should match");
  fp->add_option("--expect-intermediate-variant", expect_intermediate_variant,
                 "Expect the intermediate to equal the variant at DELTA");
  fp->add_option("--expect-output", expect_output, "Problem file the output should match");
  fp->callback([&] {
    op = "fixedpoint";
    prepare = [&] {
      load_problem();
      params["first"] = first;
      params["second"] = second;
      if (!expect_intermediate.empty()) params["expect_intermediate"] = {{"problem", read_file(expect_intermediate)}};
      if (expect_intermediate_variant > 0) params["expect_intermediate"] = {{"variant", expect_intermediate_variant}};
      if (!expect_output.empty()) params["expect_output"] = {{"problem", read_file(expect_output)}};
    };
  });

  std::string actions_file;
  auto* relax = app.add_subcommand("relax", "Apply relaxations, checked against the input");
  problem_source(relax, true);
  relax->add_option("--actions", actions_file, "JSON file with a list of actions");
  auto* o_merge = relax->add_option("--merge", "Merge labels: A,B=C")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  auto* o_add = relax->add_option("--add", "Add a configuration: side:config")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  auto* o_map = relax->add_option("--map", "Map to a stronger label: side:A=B")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  auto* o_remove = relax->add_option("--remove", "Remove a configuration: side:config")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  relax->callback([&] {
    op = "relax";
    prepare = [&] {
      load_problem();
      json actions = actions_file.empty() ? json::array() : read_json(actions_file);
      // Flag actions apply in command-line order.
      std::map<CLI::Option*, std::size_t> next;
      for (CLI::Option* o : relax->parse_order()) {
        if (o != o_merge && o != o_add && o != o_map && o != o_remove) continue;
        const std::string v = o->results().at(next[o]++);
        if (o == o_merge) {
          auto eq = v.find('=');
          if (eq == std::string::npos) throw Error(ErrorCode::kInvalid, "--merge expects A,B=C");
          actions.push_back({{"kind", "merge"}, {"labels", split(v.substr(0, eq), ',')}, {"target", v.substr(eq + 1)}});
        } else if (o == o_map) {
          auto [s, rest] = sided(v, "--map");
          auto eq = rest.find('=');
          if (eq == std::string::npos) throw Error(ErrorCode::kInvalid, "--map expects side:A=B");
          actions.push_back({{"kind", "map"}, {"side", s}, {"from", rest.substr(0, eq)}, {"to", rest.substr(eq + 1)}});
        } else {
          auto [s, rest] = sided(v, o == o_add ? "--add" : "--remove");
          actions.push_back({{"kind", o == o_add ? "add" : "remove"}, {"side", s}, {"config", rest}});
        }
      }
      params["actions"] = actions;
    };
  });

  auto* zr = app.add_subcommand("zero-round", "Zero-round solvability");
  problem_source(zr, false);
  zr->add_option("--family", family, "DELTA Z")->expected(2);
  zr->callback([&] {
    op = "zero-round";
    prepare = load_problem;
  });

  int steps = 1;
  std::vector<std::string> family_policy;
  auto* seq = app.add_subcommand("sequence", "Run several steps");
  problem_source(seq, false);
  seq->add_option("--family", family, "Start at Π_Δ(z): DELTA Z")->expected(2);
  seq->add_option("--steps", steps)->required();
  seq->add_flag("--family-policy", "Relax each step onto the next family member");
  seq->add_option("--first", first);
  seq->add_option("--second", second);
  seq->callback([&] {
    op = "sequence";
    prepare = [&] {
      load_problem();
      params["steps"] = steps;
      params["first"] = first;
      params["second"] = second;
      if (seq->count("--family-policy")) {
        if (family.empty()) throw Error(ErrorCode::kInvalid, "--family-policy needs --family");
        params["policy"] = "family";
      }
    };
  });

  // ---- family
  auto* fam = app.add_subcommand("family", "The Π_Δ(z) family");
  fam->require_subcommand(1);
  int delta = 0;
  std::string z, which = "re-edge", node;
  long j = 1;
  long alpha = -1, c = -1, beta = -1;
  bool iterative = false, variant_flag = false;

  auto* fbuild = fam->add_subcommand("build", "Build Π_Δ(z) or the fixed-point variant");
  fbuild->add_option("--delta", delta)->required();
  fbuild->add_option("--z", z);
  fbuild->add_flag("--variant", variant_flag);
  fbuild->callback([&] {
    op = "family-build";
    prepare = [&] {
      params["delta"] = delta;
      if (variant_flag) params["variant"] = true;
      else params["z"] = z;
    };
  });

  auto* fprefix = fam->add_subcommand("prefix", "Iterated inclusive prefix sums");
  fprefix->add_option("--z", z)->required();
  fprefix->add_option("--j", j);
  fprefix->callback([&] {
    op = "family-prefix";
    prepare = [&] { params = {{"z", z}, {"j", j}}; };
  });

  auto* flb = fam->add_subcommand("lowerbound", "Lower-bound length for Π_Δ(z) or a ruling set");
  flb->add_option("--delta", delta)->required();
  flb->add_option("--z", z);
  flb->add_option("--alpha", alpha);
  flb->add_option("--c", c);
  flb->add_option("--beta", beta);
  flb->add_flag("--iterative", iterative, "Iterate prefix sums instead of the closed form");
  flb->callback([&] {
    op = "family-lowerbound";
    prepare = [&] {
      params["delta"] = delta;
      if (alpha >= 0 || c >= 0) {
        params["alpha"] = std::max(alpha, 0L);
        params["c"] = std::max(c, 1L);
        params["beta"] = beta;
      } else {
        params["z"] = z;
        params["iterative"] = iterative;
      }
    };
  });

  auto* forc = fam->add_subcommand("oracle", "Characterized intermediate constraints");
  forc->add_option("--delta", delta)->required();
  forc->add_option("--z", z)->required();
  forc->add_option("--which", which)->check(CLI::IsMember({"re-edge", "relaxed-node", "estar-edge"}));
  forc->callback([&] {
    op = "family-oracle";
    prepare = [&] { params = {{"delta", delta}, {"z", z}, {"which", which}}; };
  });

  auto* fproj = fam->add_subcommand("project", "Project relaxed node forms onto Π_Δ(prefix(z))");
  fproj->add_option("--delta", delta)->required();
  fproj->add_option("--z", z)->required();
  fproj->add_option("--node", node, "Δ forms, e.g. \"C<1,0>{0.1} X X\"");
  fproj->callback([&] {
    op = "family-project";
    prepare = [&] {
      params = {{"delta", delta}, {"z", z}};
      if (!node.empty()) params["node"] = node;
    };
  });

  auto* fcheck = fam->add_subcommand("check", "Certify one family step with the engine");
  fcheck->add_option("--delta", delta)->required();
  fcheck->add_option("--z", z)->required();
  fcheck->callback([&] {
    op = "family-check";
    prepare = [&] { params = {{"delta", delta}, {"z", z}}; };
  });

  // ---- calculators
  auto* calc = app.add_subcommand("calc", "Calculators");
  calc->require_subcommand(1);
  std::string lifting_kind;
  double ld = 0, lf = 0, lp = 0, lj = 0, lt = 0, ln = 0;
  auto* lift = calc->add_subcommand("lifting", "Failure-probability and round bounds");
  lift->add_option("--which", lifting_kind)->required()->check(
      CLI::IsMember({"single-step", "multi-step", "zero-round", "pn-lower", "threshold", "deterministic"}));
  lift->add_option("--delta", ld);
  lift->add_option("--f", lf, "Label-count bound f(Δ)");
  lift->add_option("--p", lp, "Local failure probability");
  lift->add_option("--j", lj, "Steps");
  lift->add_option("--t", lt, "Rounds");
  lift->add_option("--n", ln, "Nodes");
  lift->callback([&] {
    op = "calc-lifting";
    prepare = [&] { params = {{"which", lifting_kind}, {"delta", ld}, {"f", lf}, {"p", lp}, {"j", lj}, {"t", lt}, {"n", ln}}; };
  });

  // ---- simulator
  auto* sim = app.add_subcommand("sim", "Simulator");
  sim->require_subcommand(1);
  std::string kind = "regular-tree", ports = "random", coloring = "none", instance_file, algorithm, solution_file,
              problem_file, defects, schedule, vkind;
  int sdelta = 3, depth = 2, n = 10, colors = 0, salpha = 0, radius = 1, source = 0;
  std::uint64_t seed = 1;
  int sbeta = -1, sc = -1, sa = -1;

  auto* sbuild = sim->add_subcommand("build", "Generate an instance");
  sbuild->add_option("--kind", kind)->check(CLI::IsMember({"regular-tree", "random-tree", "arbitrary"}));
  sbuild->add_option("--delta", sdelta);
  sbuild->add_option("--depth", depth);
  sbuild->add_option("--n", n);
  sbuild->add_option("--ports", ports)->check(CLI::IsMember({"random", "edge-coloring", "explicit"}));
  sbuild->add_option("--coloring", coloring)->check(CLI::IsMember({"none", "proper", "arbdefective"}));
  sbuild->add_option("--colors", colors, "m for proper, C for arbdefective");
  sbuild->add_option("--alpha", salpha);
  sbuild->add_option("--seed", seed);
  auto spec_json = [&] {
    return json{{"kind", kind},         {"delta", sdelta},  {"depth", depth},   {"n", n},
                {"ports", ports},       {"coloring", coloring}, {"colors", colors}, {"alpha", salpha},
                {"seed", seed}};
  };
  sbuild->callback([&] {
    op = "sim-build";
    prepare = [&] { params = {{"spec", spec_json()}}; };
  });

  auto ints = [](const std::string& s) {
    std::vector<int> v;
    for (const auto& t : split(s, ',')) v.push_back(std::stoi(t));
    return v;
  };

  auto* srun = sim->add_subcommand("run", "Run an algorithm on an instance");
  srun->add_option("--instance", instance_file, "Instance JSON")->required();
  srun->add_option("--algorithm", algorithm)->required()->check(CLI::IsMember(
      {"greedy-arbdefective", "sweep-ruling-set", "arb-colored-ruling-set", "constant", "ball", "flood"}));
  srun->add_option("--defects", defects, "d_1,...,d_C");
  srun->add_option("--beta", sbeta);
  srun->add_option("--c", sc);
  srun->add_option("--alpha", sa);
  srun->add_option("--schedule", schedule, "q_1,...,q_β");
  srun->add_option("--radius", radius);
  srun->add_option("--source", source);
  srun->callback([&] {
    op = "sim-run";
    prepare = [&] {
      params = {{"instance", read_instance(instance_file)}, {"algorithm", algorithm}, {"radius", radius}, {"source", source}};
      if (!defects.empty()) params["defects"] = ints(defects);
      if (sbeta >= 0) params["beta"] = sbeta;
      if (sc >= 0) params["c"] = sc;
      if (sa >= 0) params["alpha"] = sa;
      if (!schedule.empty()) params["schedule"] = ints(schedule);
    };
  });

  // A solution file may be a bare solution or a command output holding "solution".
  auto solution_json = [&](const std::string& path) {
    json s = read_json(path);
    return s.contains("solution") ? s : json{{"solution", s}};
  };

  auto* sverify = sim->add_subcommand("verify", "Verify a solution");
  sverify->add_option("--instance", instance_file)->required();
  sverify->add_option("--kind", vkind)->required()->check(CLI::IsMember({"labeling", "arbdefective", "ruling", "ruling-set"}));
  sverify->add_option("--solution", solution_file)->required();
  sverify->add_option("--problem", problem_file);
  sverify->add_option("--family", family, "DELTA Z")->expected(2);
  sverify->add_option("--defects", defects);
  sverify->callback([&] {
    op = "sim-verify";
    prepare = [&] {
      json s = solution_json(solution_file);
      params = {{"instance", read_instance(instance_file)}, {"kind", vkind}, {"solution", s["solution"]}};
      if (!problem_file.empty()) params["problem"] = read_file(problem_file);
      else if (!family.empty()) params["family"] = family_json(family);
      else if (s.contains("family")) params["family"] = s["family"];
      if (!defects.empty()) params["defects"] = ints(defects);
    };
  });

  auto* sreduce = sim->add_subcommand("reduce", "Map a solution to a Π_Δ(z) labeling");
  sreduce->add_option("--instance", instance_file)->required();
  sreduce->add_option("--kind", vkind)->required()->check(CLI::IsMember({"arbdefective", "ruling"}));
  sreduce->add_option("--solution", solution_file, "Solution JSON; computed from the instance if absent");
  sreduce->add_option("--defects", defects);
  sreduce->add_option("--alpha", sa);
  sreduce->add_option("--c", sc);
  sreduce->add_option("--beta", sbeta);
  sreduce->callback([&] {
    op = "sim-reduce";
    prepare = [&] {
      json inst = read_instance(instance_file);
      params = {{"instance", inst}, {"kind", vkind}};
      if (!defects.empty()) params["defects"] = ints(defects);
      if (!solution_file.empty()) {
        json sol = solution_json(solution_file)["solution"];
        if (vkind == "ruling") {
          if (sa >= 0) sol["alpha"] = sa;
          if (sc >= 0) sol["c"] = sc;
          if (sbeta >= 0) sol["beta"] = sbeta;
        }
        params["solution"] = sol;
        return;
      }
      // No solution given: compute one with the matching algorithm.
      Instance in = instance_from_json(inst);
      if (vkind == "ruling") {
        const int a = std::max(sa, 0), cc = std::max(sc, 1), b = sbeta < 0 ? 1 : sbeta;
        RulingSetOutput r = (a == 0 && cc == 1 && in.coloring) ? sweep_ruling_set(in, b) : arb_colored_ruling_set(in, a, cc, b);
        params["solution"] = to_json(r);
      } else if (in.arbdefective) {
        params["solution"] = to_json(*in.arbdefective);
        if (defects.empty()) params["defects"] = std::vector<int>(in.arb_colors, in.arb_alpha);
      } else if (in.coloring) {
        params["solution"] = to_json(OrientedColoring{*in.coloring, {}});
        if (defects.empty()) params["defects"] = std::vector<int>(in.coloring_colors, 0);
      } else {
        throw Error(ErrorCode::kInvalid, "instance carries no coloring to reduce");
      }
    };
  });

  // ---- service
  std::string host = "127.0.0.1", store_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--store", store_dir, "Session directory (default $RELIM_STORE or ./relim-store)");
  serve->callback([&] { op = "serve"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Context ctx;
    ctx.caps = caps_from_env();
    if (!g.caps.empty()) ctx.caps = parse_caps(g.caps, ctx.caps);
    if (op == "serve") {
      if (store_dir.empty()) {
        const char* env = std::getenv("RELIM_STORE");
        store_dir = env ? env : "relim-store";
      }
      SessionStore store(store_dir, ctx);
      for (const auto& w : store.warnings()) std::cerr << "warning: " << w << "\n";
      Service service(store, ctx);
      int bound = service.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
      std::cerr << "listening on " << host << ":" << bound << "\n";
      return service.listen_after_bind() ? 0 : 1;
    }
    if (prepare) prepare();
    json result = run_op(op, params, ctx);
    return emit(g, op, result);
  } catch (const Error& e) {
    json body{{"code", to_string(e.code())}, {"message", e.what()}};
    if (!e.details().empty()) body["details"] = json::parse(e.details(), nullptr, false);
    if (g.as_json) std::cout << dump_json(body);
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kCap:
      case ErrorCode::kDeadline: return 3;
      case ErrorCode::kInvalid:
      case ErrorCode::kUnsupported: return 2;
      default: return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
