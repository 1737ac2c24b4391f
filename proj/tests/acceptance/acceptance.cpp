// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
// An optional argument selects criteria whose name contains it.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "../support/oracles.hpp"
#include "../support/random_actions.hpp"
#include "httplib.h"
#include "relim/family.hpp"
#include "relim/ops.hpp"
#include "relim/roundelim.hpp"
#include "relim/service.hpp"
#include "relim/simulator.hpp"

using namespace relim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) { return slurp(std::string(RELIM_GOLDEN_DIR) + "/" + name); }

// Collects the first failure; a criterion passes when none was recorded.
struct Check {
  std::string failure;
  void expect(bool ok, const std::string& what) {
    if (!ok && failure.empty()) failure = what;
  }
};

const std::pair<RenamingPolicy, RenamingPolicy> kColorPolicies{RenamingPolicy::union_of_colors(),
                                                               RenamingPolicy::intersection_of_colors()};

// ---- criteria

void sinkless(Check& c) {
  for (int d : {3, 4, 5}) {
    const std::string in = golden("sinkless_" + std::to_string(d) + ".txt");
    auto t0 = Clock::now();
    Problem out = rename_labels(apply_re(parse_problem(in)), RenamingPolicy::parse("map:(W)=W;(B W)=B"));
    const std::string text = format_problem(out);
    const double s = seconds_since(t0);
    c.expect(text == golden("sinkless_re_" + std::to_string(d) + ".txt"), "Δ=" + std::to_string(d) + " differs from golden");
    c.expect(s < 1.0, "Δ=" + std::to_string(d) + " took " + std::to_string(s) + " s");
  }
}

// Intermediate: re with union renaming and the non-maximal edge configurations
// restored; it must equal the variant, which must match its definition.
void check_fixed_point(Check& c, const Problem& p, int delta, const Problem& expected_output, bool require_semantic) {
  FixedPointResult fp = detect_fixed_point(p, kColorPolicies);
  c.expect(fp.is_fixed_point, "not a fixed point");
  if (require_semantic) c.expect(fp.semantic, "output differs semantically from the input");
  Problem inter = restore_subconfigurations(apply_re(p), Side::kEdge, RenamingPolicy::union_of_colors());
  c.expect(oracle::concrete(inter, Side::kNode) == oracle::variant_nodes(delta), "intermediate node table differs");
  c.expect(oracle::concrete(inter, Side::kEdge) == oracle::disjoint_edges(delta), "intermediate edge table differs");
  if (require_semantic) {
    c.expect(oracle::concrete(fp.trace.output, Side::kNode) == oracle::concrete(expected_output, Side::kNode),
             "output node table differs");
    c.expect(oracle::concrete(fp.trace.output, Side::kEdge) == oracle::concrete(expected_output, Side::kEdge),
             "output edge table differs");
  } else {
    c.expect(reduce_problem(fp.trace.output) == reduce_problem(expected_output), "output normal form differs");
  }
}

void three_coloring_fixed_point(Check& c) {
  auto t0 = Clock::now();
  Problem listing = parse_problem(golden("three_coloring.txt"));
  Problem built = build_family_problem(3, {3});
  c.expect(same_semantics(listing, built), "built problem differs from the listing");
  check_fixed_point(c, built, 3, listing, true);
  const double s = seconds_since(t0);
  c.expect(s < 10.0, "took " + std::to_string(s) + " s");
}

void variant_fixed_point(Check& c) {
  auto t0 = Clock::now();
  Problem v = build_fixedpoint_variant(4);
  c.expect(oracle::concrete(v, Side::kNode) == oracle::variant_nodes(4), "variant differs from its definition");
  check_fixed_point(c, v, 4, v, false);
  const double s = seconds_since(t0);
  c.expect(s <= 120.0, "took " + std::to_string(s) + " s");
}

std::vector<FamilyVector> law_vectors(int delta) {
  std::vector<FamilyVector> zs;
  for (int len = 1; len <= 3; ++len) {
    FamilyVector z(len, 0);
    std::function<void(int)> rec = [&](int k) {
      if (k == len) {
        const long t = total_of(z);
        if (t >= 1 && t <= delta - 1) zs.push_back(z);
        return;
      }
      for (int v = 0; v <= delta - 1; ++v) {
        z[k] = v;
        rec(k + 1);
      }
    };
    rec(0);
  }
  zs.push_back({delta});
  return zs;
}

void family_law(Check& c) {
  auto t0 = Clock::now();
  int checked = 0;
  for (int d : {3, 4})
    for (const auto& z : law_vectors(d)) {
      const std::string tag = "Δ=" + std::to_string(d) + " z=" + format_vector(z);
      OneStepReport r = check_one_step(d, z);
      c.expect(r.re_matches_oracle, tag + ": re differs from the characterized edge constraint");
      c.expect(r.relaxed_contains, tag + ": rere node configuration outside the characterized relaxation");
      c.expect(r.estar_matches, tag + ": relaxed edge constraint differs");
      c.expect(!r.projection_checked || r.projection_ok, tag + ": projection differs from Π_Δ(prefix(z))");
      c.expect(r.label_bound_ok, tag + ": label count exceeds 2^Δ(1+len(z))");
      ++checked;
    }
  c.expect(checked > 0, "no vectors checked");
  const double s = seconds_since(t0);
  c.expect(s <= 600.0, "took " + std::to_string(s) + " s");
}

std::string random_concrete_problem(std::mt19937_64& rng, int labels) {
  std::vector<std::string> sigma;
  for (int i = 0; i < labels; ++i) sigma.push_back(std::string(1, static_cast<char>('a' + i)));
  auto rows = [&](int arity) {
    std::string out;
    for (const auto& m : oracle::multisets(sigma, arity))
      if (rng() % 3 == 0) {
        for (std::size_t i = 0; i < m.size(); ++i) out += (i ? " " : "") + m[i];
        out += "\n";
      }
    if (out.empty()) {
      for (int i = 0; i < arity; ++i) out += (i ? " " : "") + sigma[rng() % labels];
      out += "\n";
    }
    return out;
  };
  return "delta 3 2\nnodes:\n" + rows(3) + "edges:\n" + rows(2);
}

void zero_round(Check& c) {
  for (int d = 2; d <= 5; ++d)
    for (int len = 1; len <= 3; ++len) {
      FamilyVector z(len, 0);
      std::function<void(int)> rec = [&](int k) {
        if (k == len) {
          const long t = total_of(z);
          if (t >= 1 && t <= d)
            c.expect(!zero_round_check(build_family_problem(d, z)).solvable,
                     "Π_" + std::to_string(d) + "(" + format_vector(z) + ") reported solvable");
          return;
        }
        for (int v = 0; v <= d; ++v) {
          z[k] = v;
          rec(k + 1);
        }
      };
      rec(0);
    }
  c.expect(!zero_round_check(parse_problem(workload::kMis)).solvable, "MIS reported solvable");
  c.expect(zero_round_check(parse_problem("delta 3 2\nnodes:\nA^3\nedges:\nA^2\n")).solvable,
           "one-label problem reported unsolvable");
  std::mt19937_64 rng(2024);
  for (int it = 0; it < 100; ++it) {
    Problem p = parse_problem(random_concrete_problem(rng, 1 + static_cast<int>(rng() % 4)));
    c.expect(zero_round_check(p).solvable == oracle::zero_round_star(p),
             "disagrees with the star oracle on\n" + format_problem(p));
  }
}

void calculators(Check& c) {
  // Sizes Σ z_i C(t+β-i, β-i) from Pascal's triangle, scanned linearly in t.
  std::mt19937_64 rng(77);
  for (std::uint64_t delta = 1; delta <= 64; ++delta)
    for (int beta = 0; beta <= 8; ++beta)
      for (int rep = 0; rep < 3; ++rep) {
        FamilyVector z(beta + 1, 0);
        if (rep == 0) z[0] = 1;
        else
          for (auto& x : z) x = static_cast<int>(rng() % 3);
        if (total_of(z) == 0) z[0] = 1;
        auto size = [&](unsigned t) {
          mpz_class s = 0;
          for (int i = 0; i <= beta; ++i) s += z[i] * oracle::pascal(t + beta - i, beta - i);
          return s;
        };
        auto ok = [&](const mpz_class& s) { return beta == 0 ? s <= delta : s < delta; };
        LengthResult r = lower_bound_length(delta, z);
        const std::string tag = "Δ=" + std::to_string(delta) + " z=" + format_vector(z);
        if (!ok(size(0))) {
          c.expect(r.kind == LengthResult::Kind::kNone, tag + ": expected no bound");
          continue;
        }
        bool constant = true;
        for (int i = 0; i < beta; ++i) constant = constant && z[i] == 0;
        if (constant) {
          c.expect(r.kind == LengthResult::Kind::kInfinite, tag + ": expected an unbounded length");
          continue;
        }
        unsigned t = 0;
        while (ok(size(t + 1))) ++t;
        c.expect(r.kind == LengthResult::Kind::kFinite && r.t == t, tag + ": length " + r.str() + " != " + std::to_string(t));
        LengthResult it = lower_bound_length_iterative(delta, z);
        c.expect(it.kind == r.kind && it.t == r.t, tag + ": iterative route disagrees");
      }

  c.expect(ruling_set_lower_bound(16, 0, 1, 2).str() == "4", "ruling-set bound (16,0,1,2) != 4");
  for (std::uint64_t beta = 1; beta <= 6; ++beta)
    for (std::uint64_t delta = 2; delta <= (1U << 20); delta = delta + 1 + delta / 16) {
      auto fl = ruling_floor_bound(delta, 0, 1, beta);
      if (!fl) continue;
      c.expect(ruling_set_lower_bound(delta, 0, 1, beta).t >= *fl,
               "floor bound exceeds the bound at Δ=" + std::to_string(delta) + " β=" + std::to_string(beta));
    }

  // Per-step recursion p_k = (2Δf) p_{k-1}^{1/(Δ+1)} in log space against the
  // closed form (2Δf)^2 p^{1/(Δ+1)^k}, checked step by step.
  for (double d : {2.0, 3.0, 8.0, 64.0})
    for (double f : {1.0, 16.0, 1e6})
      for (double p : {1e-3, 1e-30, 1e-300}) {
        const double a = std::log(2 * d * f), lp = std::log(p);
        double chain = lp;
        for (int k = 1; k <= 20; ++k) {
          const double prev_bound = 2 * a + lp / std::pow(d + 1, k - 1);
          const double bound = 2 * a + lp / std::pow(d + 1, k);
          chain = a + chain / (d + 1);
          c.expect(chain <= bound + 1e-9 * std::abs(bound), "recursion exceeds the closed form");
          // Inductive step: one application to the bound stays below the next bound.
          c.expect(a + prev_bound / (d + 1) <= bound + 1e-9 * std::abs(bound), "inductive step fails");
          if (k % 2 == 0) {
            LiftingParams q{d, f, p, static_cast<double>(k / 2), 0, 0};
            const double got = lifting_bound(q, LiftingKind::kMultiStep).log_value;
            c.expect(std::abs(got - bound) <= 1e-9 * std::abs(bound), "multi-step bound differs from the closed form");
          }
        }
        LiftingParams q{d, f, p, 1, 0, 0};
        const double two = a + (a + lp / (d + 1)) / (d + 1);
        c.expect(lifting_bound(q, LiftingKind::kSingleStep).log_value <= two + 1e-9 * std::abs(two),
                 "single step exceeds two applications of the recursion");
      }
}

Instance random_tree(std::mt19937_64& rng, int max_delta, int max_n, InstanceSpec::Coloring coloring, int colors,
                     int alpha = 0) {
  InstanceSpec s;
  s.kind = InstanceSpec::Kind::kRandomTree;
  s.delta = 2 + static_cast<int>(rng() % (max_delta - 1));
  s.n = 1 + static_cast<int>(rng() % max_n);
  s.coloring = coloring;
  s.colors = colors;
  s.alpha = alpha;
  s.seed = rng();
  return build_instance(s);
}

int ceil_root(int c, int beta) {
  int q = static_cast<int>(std::floor(std::pow(c, 1.0 / beta)));
  while (std::pow(q, beta) < c) ++q;
  while (q > 1 && std::pow(q - 1, beta) >= c) --q;
  return std::max(q, 1);
}

void simulator(Check& c) {
  std::mt19937_64 rng(31337);
  for (int it = 0; it < 200; ++it) {
    const int m = 2 + static_cast<int>(rng() % 12);
    Instance inst = random_tree(rng, 6, 200, InstanceSpec::Coloring::kProper, m);
    const int C = 1 + static_cast<int>(rng() % (inst.delta + 1));
    std::vector<int> d(C, 0);
    const int target = inst.delta + 1 + static_cast<int>(rng() % 3);
    while (capacity(d) < target) d[rng() % C]++;
    ArbdefectiveOutput out = greedy_arbdefective(inst, d);
    VerifyReport v = verify_arbdefective(inst, out.coloring, d);
    c.expect(v.ok, "greedy output rejected: " + (v.violations.empty() ? std::string() : v.violations[0]));
    c.expect(out.rounds <= m, "greedy used more than m rounds");
    std::vector<int> tight(std::min(C, inst.delta), 0);
    while (capacity(tight) < inst.delta) tight[rng() % C]++;
    bool rejected = false;
    try {
      greedy_arbdefective(inst, tight);
    } catch (const Error& e) {
      rejected = e.code() == ErrorCode::kInvalid;
    }
    c.expect(rejected, "greedy accepted defects with capacity ≤ Δ");
  }
  for (int it = 0; it < 200; ++it) {
    const int cc = 2 + static_cast<int>(rng() % 15);
    const int beta = 1 + static_cast<int>(rng() % 3);
    Instance inst = random_tree(rng, 6, 200, InstanceSpec::Coloring::kProper, cc);
    RulingSetOutput out = sweep_ruling_set(inst, beta);
    VerifyReport v = verify_ruling_set(inst, out.members, beta);
    c.expect(v.ok, "sweep output rejected: " + (v.violations.empty() ? std::string() : v.violations[0]));
    c.expect(out.rounds <= beta * ceil_root(cc, beta), "sweep exceeded β⌈c^{1/β}⌉ rounds");
  }
  int arb_runs = 0;
  for (int it = 0; arb_runs < 100 && it < 1000; ++it) {
    const int alpha = static_cast<int>(rng() % 3), cc = 1 + static_cast<int>(rng() % 3),
              beta = static_cast<int>(rng() % 3);
    int C = beta == 0 ? cc : cc + static_cast<int>(rng() % 6);
    if (alpha == 0 && C < 2) {
      if (beta == 0) continue;
      C = 2;
    }
    Instance inst = random_tree(rng, 6, 150, InstanceSpec::Coloring::kArbdefective, C, alpha);
    RulingSetOutput out = arb_colored_ruling_set(inst, alpha, cc, beta);
    VerifyReport v = verify_ruling(inst, out);
    c.expect(v.ok, "arbdefective colored ruling set rejected: " + (v.violations.empty() ? std::string() : v.violations[0]));
    ++arb_runs;
  }
  c.expect(arb_runs == 100, "too few arbdefective colored ruling set runs");
}

// Half regular trees, so that many nodes have degree exactly Δ.
InstanceSpec reduction_spec(std::mt19937_64& rng, int it) {
  InstanceSpec s;
  s.delta = 3 + static_cast<int>(rng() % 4);
  if (it % 2 == 0) {
    s.kind = InstanceSpec::Kind::kRegularTree;
    s.depth = 2 + static_cast<int>(rng() % (s.delta <= 4 ? 3 : 2));
  } else {
    s.kind = InstanceSpec::Kind::kRandomTree;
    s.n = 2 + static_cast<int>(rng() % 150);
  }
  s.ports = rng() % 2 ? InstanceSpec::Ports::kRandom : InstanceSpec::Ports::kEdgeColoring;
  s.seed = rng();
  return s;
}

void reductions(Check& c) {
  std::mt19937_64 rng(4242);
  auto certify = [&](const Instance& inst, const ReductionOutput& r, const FamilyVector& expect, const std::string& what) {
    c.expect(r.z == expect, what + ": z=" + format_vector(r.z) + " expected " + format_vector(expect));
    VerifyReport v = verify_labeling(inst, build_family_problem(inst.delta, r.z), r.labeling);
    c.expect(v.ok, what + ": " + (v.violations.empty() ? std::string() : v.violations[0]));
  };
  for (int it = 0; it < 100; ++it) {
    InstanceSpec s = reduction_spec(rng, it);
    s.coloring = InstanceSpec::Coloring::kProper;
    s.colors = s.delta;
    Instance inst = build_instance(s);
    certify(inst, reduce_arbdefective(inst, {*inst.coloring, {}}, std::vector<int>(s.delta, 0)), {s.delta},
            "proper coloring");
  }
  for (int it = 0; it < 100; ++it) {
    InstanceSpec s = reduction_spec(rng, it);
    const int alpha = static_cast<int>(rng() % 3);
    const int max_c = s.delta / (alpha + 1);
    if (max_c < 2 && alpha == 0) s.delta = 3;
    s.coloring = InstanceSpec::Coloring::kArbdefective;
    s.alpha = alpha;
    s.colors = std::max(alpha == 0 ? 2 : 1, 1 + static_cast<int>(rng() % std::max(1, s.delta / (alpha + 1))));
    if (s.colors * (alpha + 1) > s.delta) s.colors = std::max(1, s.delta / (alpha + 1));
    Instance inst = build_instance(s);
    // Defects at least α each, capacity at most Δ.
    std::vector<int> d(inst.arb_colors, alpha);
    for (int extra = static_cast<int>(rng() % 3); extra > 0 && capacity(d) < inst.delta; --extra) d[rng() % d.size()]++;
    certify(inst, reduce_arbdefective(inst, *inst.arbdefective, d), {inst.delta}, "arbdefective coloring");
  }
  for (int it = 0; it < 100; ++it) {
    InstanceSpec s = reduction_spec(rng, it);
    s.coloring = InstanceSpec::Coloring::kProper;
    s.colors = 2 + static_cast<int>(rng() % 8);
    Instance inst = build_instance(s);
    RulingSetOutput mis = sweep_ruling_set(inst, 1);
    c.expect(verify_ruling_set(inst, mis.members, 1).ok, "MIS rejected");
    certify(inst, reduce_ruling(inst, mis), {1, 0}, "MIS");
  }
  for (int it = 0; it < 100; ++it) {
    InstanceSpec s = reduction_spec(rng, it);
    const int alpha = static_cast<int>(rng() % 2), cc = 1 + static_cast<int>(rng() % 2),
              beta = 1 + static_cast<int>(rng() % 2);
    if (cc * (1 + alpha) > s.delta) s.delta = cc * (1 + alpha);
    s.coloring = InstanceSpec::Coloring::kArbdefective;
    s.alpha = alpha;
    s.colors = std::max(cc, 2) + static_cast<int>(rng() % 4);
    Instance inst = build_instance(s);
    RulingSetOutput out = arb_colored_ruling_set(inst, alpha, cc, beta);
    c.expect(verify_ruling(inst, out).ok, "ruling set rejected");
    FamilyVector expect(beta + 1, 0);
    expect[0] = cc * (1 + alpha);
    certify(inst, reduce_ruling(inst, out), expect, "ruling set");
  }
}

struct TempDir {
  std::string path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "relim-accept-XXXXXX").string();
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void service_replay(Check& c) {
  TempDir dir;
  std::mt19937_64 rng(99);
  std::map<std::string, std::string> snapshots;
  {
    SessionStore store(dir.path);
    Service service(store);
    const int port = service.bind("127.0.0.1", 0);
    c.expect(port > 0, "cannot bind");
    if (port <= 0) return;
    std::thread th([&] { service.listen_after_bind(); });
    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(120, 0);
    for (int k = 0; k < 50; ++k) {
      auto created = cli.Post("/sessions", workload::random_create(rng).dump(), "application/json");
      c.expect(created && created->status == 201, "create failed");
      if (!created) break;
      const std::string id = json::parse(created->body)["id"];
      const int steps = 3 + static_cast<int>(rng() % 8);
      for (int a = 0; a < steps; ++a) {
        auto cur = cli.Get("/sessions/" + id);
        json view = json::parse(cur->body);
        if (rng() % 5 == 0) {
          json seek{{"cursor", static_cast<int>(rng() % view["length"].get<int>())}};
          cli.Post("/sessions/" + id + "/seek", seek.dump(), "application/json");
          view = json::parse(cli.Get("/sessions/" + id)->body);
        }
        json action = workload::random_action(rng, view["current"]);
        action["expect_cursor"] = view["cursor"];
        auto r = cli.Post("/sessions/" + id + "/actions", action.dump(), "application/json");
        c.expect(r && (r->status == 200 || r->status == 400 || r->status == 409), "unexpected action status");
      }
      snapshots[id] = cli.Get("/sessions/" + id)->body;
    }
    service.stop();
    th.join();
  }
  SessionStore reloaded(dir.path);
  c.expect(reloaded.warnings().empty(), "warnings on reload");
  c.expect(reloaded.list().size() == 50, "expected 50 sessions after reload");
  for (const auto& [id, body] : snapshots) {
    c.expect(dump_json(reloaded.get(id)) == body, "snapshot of " + id + " changed across reload");
    json rep = reloaded.replay(id);
    c.expect(rep["ok"] == true, "replay of " + id + " differs: " + rep["diff"].dump());
  }

  // Crash between writing the temporary file and the rename.
  const std::string id = snapshots.begin()->first;
  const int before = reloaded.get(id)["length"];
  pid_t pid = ::fork();
  if (pid == 0) {
    try {
      SessionStore store(dir.path);
      store.apply(id, {{"op", "parse"}, {"params", json::object()}});
      store.set_commit_hook([](const std::string&) { ::_exit(9); });
      store.apply(id, {{"op", "diagram"}, {"params", json::object()}});
    } catch (...) {
    }
    ::_exit(0);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  c.expect(WIFEXITED(status) && WEXITSTATUS(status) == 9, "crash hook did not fire");
  SessionStore after(dir.path);
  json s = after.get(id);
  c.expect(s["length"] == before + 1, "last completed action not durable");
  c.expect(s["history"][before]["action"]["op"] == "parse", "unexpected last action");
  c.expect(after.replay(id)["ok"] == true, "replay after crash differs");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"sinkless-orientation-step", sinkless},
      {"three-coloring-fixed-point", three_coloring_fixed_point},
      {"variant-fixed-point-delta4", variant_fixed_point},
      {"family-one-step-law", family_law},
      {"zero-round-solvability", zero_round},
      {"calculators", calculators},
      {"simulator-upper-bounds", simulator},
      {"reduction-certification", reductions},
      {"service-replayability", service_replay},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!filter.empty() && name.find(filter) == std::string::npos) continue;
    Check c;
    auto t0 = Clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(2);
    line << (c.failure.empty() ? "PASS " : "FAIL ") << name << " (" << seconds_since(t0) << " s)";
    if (!c.failure.empty()) line << ": " << c.failure;
    std::cout << line.str() << std::endl;
    failed += !c.failure.empty();
  }
  return failed == 0 ? 0 : 1;
}
