#include <random>

#include "doctest.h"
#include "relim/simulator.hpp"

using namespace relim;

namespace {

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

// Independent ruling-set check: BFS from every node.
bool ruling_ok(const Instance& inst, const std::vector<int>& members, int beta) {
  std::vector<char> in(inst.n, 0);
  for (int m : members) in[m] = 1;
  for (const auto& e : inst.edges)
    if (in[e.u] && in[e.v]) return false;
  for (int v = 0; v < inst.n; ++v) {
    std::vector<int> dist = bfs_distances(inst, {v}, beta);
    bool near = false;
    for (int u = 0; u < inst.n; ++u) near = near || (in[u] && dist[u] >= 0 && dist[u] <= beta);
    if (!near) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("regular trees have the requested shape") {
  InstanceSpec s;
  s.delta = 3;
  s.depth = 3;
  Instance t = build_instance(s);
  CHECK(t.n == 1 + 3 + 6 + 12);
  CHECK(t.edges.size() == static_cast<std::size_t>(t.n - 1));
  CHECK(t.degree(0) == 3);
  for (int v = 0; v < t.n; ++v) CHECK((t.degree(v) == 3 || t.degree(v) == 1));
}

TEST_CASE("edge-coloring ports are proper edge colors") {
  InstanceSpec s;
  s.delta = 4;
  s.depth = 3;
  s.ports = InstanceSpec::Ports::kEdgeColoring;
  Instance t = build_instance(s);
  for (const auto& e : t.edges) {
    CHECK(e.port_u == e.port_v);
    CHECK(e.port_u >= 1);
    CHECK(e.port_u <= 4);
  }
}

TEST_CASE("instances round-trip through JSON") {
  std::mt19937_64 rng(1);
  Instance a = random_tree(rng, 5, 40, InstanceSpec::Coloring::kProper, 6);
  Instance b = instance_from_json(instance_to_json(a));
  CHECK(instance_to_json(b) == instance_to_json(a));
  json bad = instance_to_json(a);
  if (!bad["edges"].empty()) {
    bad["edges"][0]["portU"] = 99;
    CHECK_THROWS_AS(instance_from_json(bad), Error);
  }
}

TEST_CASE("rounds are synchronous") {
  InstanceSpec s;
  s.delta = 3;
  s.depth = 4;
  Instance t = build_instance(s);
  RunResult r = run_algorithm(t, flood_program(0), 100);
  std::vector<int> dist = bfs_distances(t, {0});
  for (int v = 0; v < t.n; ++v) CHECK(r.states[v]["reached"].get<int>() == dist[v]);
  CHECK(r.rounds == 4);
  CHECK_THROWS_AS(run_algorithm(t, flood_program(0), 2), Error);
}

TEST_CASE("ball views have the requested radius") {
  InstanceSpec s;
  s.delta = 3;
  s.depth = 2;
  Instance t = build_instance(s);
  RunResult r = run_algorithm(t, ball_program(1), 10);
  CHECK(r.rounds == 1);
  RunResult c = run_algorithm(t, constant_program(7), 10);
  CHECK(c.rounds == 0);
  CHECK(c.states[3]["out"] == json(7));
}

TEST_CASE("greedy arbdefective coloring") {
  std::mt19937_64 rng(2);
  for (int it = 0; it < 50; ++it) {
    const int m = 2 + static_cast<int>(rng() % 10);
    Instance inst = random_tree(rng, 6, 120, InstanceSpec::Coloring::kProper, m);
    const int C = 1 + static_cast<int>(rng() % (inst.delta + 1));
    std::vector<int> d(C, 0);
    while (capacity(d) <= inst.delta) d[rng() % C]++;
    ArbdefectiveOutput out = greedy_arbdefective(inst, d);
    CHECK(verify_arbdefective(inst, out.coloring, d).ok);
    CHECK(out.rounds <= m);
    std::vector<int> tight = d;
    for (auto& x : tight) x = 0;
    if (capacity(tight) <= inst.delta) CHECK_THROWS_AS(greedy_arbdefective(inst, tight), Error);
  }
}

TEST_CASE("arbdefective verification rejects violations") {
  std::mt19937_64 rng(4);
  Instance inst = random_tree(rng, 4, 30, InstanceSpec::Coloring::kProper, 3);
  while (inst.edges.empty()) inst = random_tree(rng, 4, 30, InstanceSpec::Coloring::kProper, 3);
  OrientedColoring all_one{std::vector<int>(inst.n, 1), {}};
  for (const auto& e : inst.edges) all_one.oriented.push_back({e.u, e.v});
  CHECK_FALSE(verify_arbdefective(inst, all_one, {0}).ok);
  CHECK(verify_arbdefective(inst, all_one, {inst.delta}).ok);
}

TEST_CASE("sweep ruling set") {
  std::mt19937_64 rng(6);
  for (int it = 0; it < 50; ++it) {
    const int c = 1 + static_cast<int>(rng() % 16);
    const int beta = 1 + static_cast<int>(rng() % 3);
    Instance inst = random_tree(rng, 6, 150, InstanceSpec::Coloring::kProper, std::max(c, 2));
    if (c == 1 && !inst.edges.empty()) continue;
    RulingSetOutput out = sweep_ruling_set(inst, beta);
    CHECK(ruling_ok(inst, out.members, beta));
    CHECK(verify_ruling_set(inst, out.members, beta).ok);
    CHECK(out.rounds <= beta * default_block_size(inst.coloring_colors, beta));
  }
}

TEST_CASE("ruling-set verification rejects bad sets") {
  InstanceSpec s;
  s.delta = 3;
  s.depth = 3;
  Instance t = build_instance(s);
  CHECK_FALSE(verify_ruling_set(t, {}, 1).ok);
  CHECK_FALSE(verify_ruling_set(t, {0, 1}, 1).ok);
  CHECK_FALSE(ruling_ok(t, {0}, 1));
  CHECK(ruling_ok(t, {0}, 3));
  CHECK(verify_ruling_set(t, {0}, 3).ok);
}

TEST_CASE("block size") {
  CHECK(default_block_size(16, 2) == 4);
  CHECK(default_block_size(17, 2) == 5);
  CHECK(default_block_size(1, 3) == 1);
  CHECK(default_block_size(8, 3) == 2);
}

TEST_CASE("arbdefective colored ruling set") {
  std::mt19937_64 rng(10);
  for (int it = 0; it < 40; ++it) {
    const int alpha = static_cast<int>(rng() % 3), c = 1 + static_cast<int>(rng() % 3),
              beta = static_cast<int>(rng() % 3);
    int C = beta == 0 ? c : c + static_cast<int>(rng() % 6);
    if (alpha == 0 && C < 2) C = 2;
    if (beta == 0 && C > c) continue;
    Instance inst = random_tree(rng, 6, 100, InstanceSpec::Coloring::kArbdefective, C, alpha);
    RulingSetOutput out = arb_colored_ruling_set(inst, alpha, c, beta);
    CHECK(verify_ruling(inst, out).ok);
  }
}

TEST_CASE("reductions certify against the family") {
  std::mt19937_64 rng(12);
  for (int it = 0; it < 30; ++it) {
    InstanceSpec s;
    s.kind = InstanceSpec::Kind::kRandomTree;
    s.delta = 2 + static_cast<int>(rng() % 5);
    s.n = 1 + static_cast<int>(rng() % 80);
    s.coloring = InstanceSpec::Coloring::kProper;
    s.colors = s.delta;
    s.seed = rng();
    Instance inst = build_instance(s);
    OrientedColoring proper{*inst.coloring, {}};
    ReductionOutput r = reduce_arbdefective(inst, proper, std::vector<int>(inst.coloring_colors, 0));
    CHECK(r.z == FamilyVector{inst.delta});
    CHECK(verify_labeling(inst, build_family_problem(inst.delta, r.z), r.labeling).ok);

    RulingSetOutput mis = sweep_ruling_set(inst, 1);
    ReductionOutput m = reduce_ruling(inst, mis);
    CHECK(m.z == FamilyVector{1, 0});
    CHECK(verify_labeling(inst, build_family_problem(inst.delta, m.z), m.labeling).ok);
  }
}

TEST_CASE("labeling verification rejects a wrong labeling") {
  InstanceSpec s;
  s.delta = 3;
  s.depth = 2;
  s.coloring = InstanceSpec::Coloring::kProper;
  s.colors = 3;
  Instance t = build_instance(s);
  HalfEdgeLabeling l;
  l.labels.assign(t.n, {});
  for (int v = 0; v < t.n; ++v)
    for (const auto& p : t.adj[v]) l.labels[v][p.port] = "L{0.1}";
  CHECK_FALSE(verify_labeling(t, build_family_problem(3, {3}), l).ok);
  HalfEdgeLabeling back = labeling_from_json(to_json(l));
  CHECK(to_json(back) == to_json(l));
}

TEST_CASE("solutions round-trip through JSON") {
  std::mt19937_64 rng(14);
  Instance inst = random_tree(rng, 5, 60, InstanceSpec::Coloring::kProper, 5);
  RulingSetOutput r = sweep_ruling_set(inst, 2);
  RulingSetOutput back = ruling_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
  OrientedColoring oc{*inst.coloring, {}};
  CHECK(to_json(oriented_coloring_from_json(to_json(oc))) == to_json(oc));
}
