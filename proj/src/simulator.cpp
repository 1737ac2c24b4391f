#include "relim/simulator.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace relim {

namespace {

std::int64_t edge_key(int a, int b, int n) {
  if (a > b) std::swap(a, b);
  return static_cast<std::int64_t>(a) * n + b;
}

std::unordered_map<std::int64_t, int> edge_index(const Instance& inst) {
  std::unordered_map<std::int64_t, int> m;
  for (std::size_t e = 0; e < inst.edges.size(); ++e)
    m[edge_key(inst.edges[e].u, inst.edges[e].v, inst.n)] = static_cast<int>(e);
  return m;
}

int pick(std::mt19937_64& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

// Checks an orientation against the instance; returns per-edge tails (-1 if unoriented).
std::vector<int> edge_tails(const Instance& inst, const std::vector<std::pair<int, int>>& oriented,
                            VerifyReport& rep) {
  auto idx = edge_index(inst);
  std::vector<int> tail(inst.edges.size(), -1);
  for (auto [a, b] : oriented) {
    if (a < 0 || b < 0 || a >= inst.n || b >= inst.n) {
      rep.fail("oriented pair (" + std::to_string(a) + "," + std::to_string(b) + ") names an unknown node");
      continue;
    }
    auto it = idx.find(edge_key(a, b, inst.n));
    if (it == idx.end()) {
      rep.fail("oriented pair (" + std::to_string(a) + "," + std::to_string(b) + ") is not an edge");
      continue;
    }
    if (tail[it->second] != -1 && tail[it->second] != a)
      rep.fail("edge {" + std::to_string(a) + "," + std::to_string(b) + "} oriented both ways");
    tail[it->second] = a;
  }
  return tail;
}

// Colors in [1, colors], each monochromatic edge oriented, at most limit(x) out-neighbors of color x.
void check_arbdefect(const Instance& inst, const std::vector<int>& color, const std::vector<char>& active,
                     const std::vector<std::pair<int, int>>& oriented, int colors,
                     const std::function<int(int)>& limit, VerifyReport& rep) {
  std::vector<int> tail = edge_tails(inst, oriented, rep);
  std::vector<int> out(inst.n, 0);
  for (std::size_t e = 0; e < inst.edges.size(); ++e) {
    const auto& ed = inst.edges[e];
    if (!active[ed.u] || !active[ed.v] || color[ed.u] != color[ed.v]) continue;
    if (tail[e] == -1) {
      rep.fail("monochromatic edge {" + std::to_string(ed.u) + "," + std::to_string(ed.v) + "} is not oriented");
      continue;
    }
    ++out[tail[e]];
  }
  for (int v = 0; v < inst.n; ++v) {
    if (!active[v]) continue;
    if (color[v] < 1 || color[v] > colors) {
      rep.fail("node " + std::to_string(v) + " has color " + std::to_string(color[v]) + " outside [1," +
               std::to_string(colors) + "]");
      continue;
    }
    if (out[v] > limit(color[v]))
      rep.fail("node " + std::to_string(v) + " of color " + std::to_string(color[v]) + " has " +
               std::to_string(out[v]) + " monochromatic out-neighbors, allowed " + std::to_string(limit(color[v])));
  }
}

std::vector<int> bfs_order(const Instance& inst) {
  std::vector<int> order;
  std::vector<char> seen(inst.n, 0);
  for (int s = 0; s < inst.n; ++s) {
    if (seen[s]) continue;
    seen[s] = 1;
    std::size_t head = order.size();
    order.push_back(s);
    while (head < order.size()) {
      int v = order[head++];
      for (const auto& p : inst.adj[v])
        if (!seen[p.neighbor]) {
          seen[p.neighbor] = 1;
          order.push_back(p.neighbor);
        }
    }
  }
  return order;
}

}  // namespace

// ---------------------------------------------------------------- instances

void Instance::finalize() {
  if (n < 1) throw Error(ErrorCode::kInvalid, "instance needs at least one node");
  if (delta < 1) throw Error(ErrorCode::kInvalid, "instance degree parameter must be positive");
  adj.assign(n, {});
  std::set<std::int64_t> seen;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& ed = edges[e];
    if (ed.u < 0 || ed.v < 0 || ed.u >= n || ed.v >= n || ed.u == ed.v)
      throw Error(ErrorCode::kInvalid, "edge " + std::to_string(e) + " has bad endpoints");
    if (!seen.insert(edge_key(ed.u, ed.v, n)).second)
      throw Error(ErrorCode::kInvalid, "duplicate edge {" + std::to_string(ed.u) + "," + std::to_string(ed.v) + "}");
    if (edge_coloring_ports && ed.port_u != ed.port_v)
      throw Error(ErrorCode::kInvalid, "edge-coloring ports differ on edge " + std::to_string(e));
    adj[ed.u].push_back({ed.port_u, ed.v, static_cast<int>(e)});
    adj[ed.v].push_back({ed.port_v, ed.u, static_cast<int>(e)});
  }
  for (int v = 0; v < n; ++v) {
    auto& a = adj[v];
    if (static_cast<int>(a.size()) > delta)
      throw Error(ErrorCode::kInvalid, "node " + std::to_string(v) + " exceeds degree " + std::to_string(delta));
    std::sort(a.begin(), a.end(), [](const Port& x, const Port& y) { return x.port < y.port; });
    const int top = edge_coloring_ports ? delta : static_cast<int>(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      bool ok = a[k].port >= 1 && a[k].port <= top && (k == 0 || a[k].port != a[k - 1].port);
      if (!edge_coloring_ports) ok = a[k].port == static_cast<int>(k) + 1;
      if (!ok) throw Error(ErrorCode::kInvalid, "ports at node " + std::to_string(v) + " are not valid");
    }
  }
  if (coloring) {
    if (static_cast<int>(coloring->size()) != n) throw Error(ErrorCode::kInvalid, "coloring size differs from n");
    for (int v = 0; v < n; ++v)
      if ((*coloring)[v] < 1 || (*coloring)[v] > coloring_colors)
        throw Error(ErrorCode::kInvalid, "coloring value out of range at node " + std::to_string(v));
    for (const auto& ed : edges)
      if ((*coloring)[ed.u] == (*coloring)[ed.v])
        throw Error(ErrorCode::kInvalid, "coloring is not proper on edge {" + std::to_string(ed.u) + "," +
                                             std::to_string(ed.v) + "}");
  }
  if (arbdefective) {
    if (static_cast<int>(arbdefective->colors.size()) != n)
      throw Error(ErrorCode::kInvalid, "arbdefective coloring size differs from n");
    VerifyReport rep;
    check_arbdefect(*this, arbdefective->colors, std::vector<char>(n, 1), arbdefective->oriented, arb_colors,
                    [&](int) { return arb_alpha; }, rep);
    if (!rep.ok) throw Error(ErrorCode::kInvalid, "invalid input arbdefective coloring: " + rep.violations[0]);
  }
}

Instance build_instance(const InstanceSpec& spec) {
  if (spec.delta < 2) throw Error(ErrorCode::kInvalid, "Δ must be at least 2");
  std::mt19937_64 rng(spec.seed);
  Instance inst;
  inst.delta = spec.delta;
  inst.seed = spec.seed;
  std::vector<int> deg;

  auto add_edge = [&](int a, int b) {
    inst.edges.push_back({a, b, 0, 0});
    ++deg[a];
    ++deg[b];
  };

  switch (spec.kind) {
    case InstanceSpec::Kind::kRegularTree: {
      if (spec.depth < 0) throw Error(ErrorCode::kInvalid, "depth must be nonnegative");
      std::vector<int> frontier{0};
      inst.n = 1;
      deg.assign(1, 0);
      for (int d = 0; d < spec.depth; ++d) {
        std::vector<int> next;
        for (int v : frontier) {
          const int kids = d == 0 ? spec.delta : spec.delta - 1;
          for (int k = 0; k < kids; ++k) {
            if (inst.n >= 2'000'000) throw Error(ErrorCode::kCap, "regular tree exceeds 2000000 nodes");
            deg.push_back(0);
            add_edge(v, inst.n);
            next.push_back(inst.n++);
          }
        }
        frontier = std::move(next);
      }
      break;
    }
    case InstanceSpec::Kind::kRandomTree: {
      if (spec.n < 1) throw Error(ErrorCode::kInvalid, "n must be positive");
      inst.n = spec.n;
      deg.assign(spec.n, 0);
      std::vector<int> open{0};
      for (int v = 1; v < spec.n; ++v) {
        int k = pick(rng, static_cast<int>(open.size()));
        int parent = open[k];
        add_edge(parent, v);
        if (deg[parent] == spec.delta) {
          open[k] = open.back();
          open.pop_back();
        }
        open.push_back(v);
      }
      break;
    }
    case InstanceSpec::Kind::kArbitrary: {
      if (spec.n < 1) throw Error(ErrorCode::kInvalid, "n must be positive");
      inst.n = spec.n;
      deg.assign(spec.n, 0);
      std::set<std::int64_t> have;
      const long attempts = static_cast<long>(spec.n) * spec.delta;
      for (long t = 0; t < attempts && spec.n > 1; ++t) {
        int a = pick(rng, spec.n), b = pick(rng, spec.n);
        if (a == b || deg[a] >= spec.delta || deg[b] >= spec.delta) continue;
        if (!have.insert(edge_key(a, b, spec.n)).second) continue;
        add_edge(a, b);
      }
      break;
    }
  }

  // Ports.
  switch (spec.ports) {
    case InstanceSpec::Ports::kExplicit:
    case InstanceSpec::Ports::kRandom: {
      std::vector<std::vector<std::pair<int, int*>>> slots(inst.n);
      for (auto& e : inst.edges) {
        slots[e.u].push_back({0, &e.port_u});
        slots[e.v].push_back({0, &e.port_v});
      }
      for (auto& s : slots) {
        std::vector<int> perm(s.size());
        std::iota(perm.begin(), perm.end(), 1);
        if (spec.ports == InstanceSpec::Ports::kRandom) std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t k = 0; k < s.size(); ++k) *s[k].second = perm[k];
      }
      break;
    }
    case InstanceSpec::Ports::kEdgeColoring: {
      inst.edge_coloring_ports = true;
      std::vector<std::vector<char>> used(inst.n, std::vector<char>(spec.delta + 1, 0));
      for (auto& e : inst.edges) {
        int c = 1;
        while (c <= spec.delta && (used[e.u][c] || used[e.v][c])) ++c;
        if (c > spec.delta) throw Error(ErrorCode::kInvalid, "greedy edge coloring with Δ colors failed");
        used[e.u][c] = used[e.v][c] = 1;
        e.port_u = e.port_v = c;
      }
      break;
    }
  }
  inst.finalize();

  // Input colorings, generated offline.
  const std::vector<int> order = bfs_order(inst);
  if (spec.coloring == InstanceSpec::Coloring::kProper) {
    const int m = spec.colors;
    if (m < 1 || (m < 2 && !inst.edges.empty()))
      throw Error(ErrorCode::kInvalid, "proper coloring needs at least 2 colors on a graph with edges");
    std::vector<int> col(inst.n, 0);
    for (int v : order) {
      std::vector<int> free;
      for (int c = 1; c <= m; ++c) {
        bool ok = true;
        for (const auto& p : inst.adj[v]) ok = ok && col[p.neighbor] != c;
        if (ok) free.push_back(c);
      }
      if (free.empty()) throw Error(ErrorCode::kInvalid, "no proper " + std::to_string(m) + "-coloring found");
      col[v] = free[pick(rng, static_cast<int>(free.size()))];
    }
    inst.coloring = std::move(col);
    inst.coloring_colors = m;
  } else if (spec.coloring == InstanceSpec::Coloring::kArbdefective) {
    const int C = spec.colors;
    if (C < 1 || spec.alpha < 0) throw Error(ErrorCode::kInvalid, "arbdefective coloring needs C ≥ 1, α ≥ 0");
    OrientedColoring oc;
    oc.colors.assign(inst.n, 0);
    std::vector<int> rank(inst.n);
    for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k);
    for (int v : order) {
      std::vector<int> cnt(C + 1, 0);
      for (const auto& p : inst.adj[v])
        if (rank[p.neighbor] < rank[v]) ++cnt[oc.colors[p.neighbor]];
      std::vector<int> free;
      for (int c = 1; c <= C; ++c)
        if (cnt[c] <= spec.alpha) free.push_back(c);
      if (free.empty()) throw Error(ErrorCode::kInvalid, "no α-arbdefective coloring found");
      oc.colors[v] = free[pick(rng, static_cast<int>(free.size()))];
    }
    for (const auto& e : inst.edges) {
      if (rank[e.u] > rank[e.v]) oc.oriented.push_back({e.u, e.v});
      else oc.oriented.push_back({e.v, e.u});
    }
    inst.arbdefective = std::move(oc);
    inst.arb_alpha = spec.alpha;
    inst.arb_colors = C;
    inst.finalize();
  }
  return inst;
}

std::vector<int> bfs_distances(const Instance& inst, const std::vector<int>& sources, int radius,
                               const std::function<bool(int)>& keep) {
  std::vector<int> dist(inst.n, -1);
  std::deque<int> q;
  for (int s : sources)
    if (dist[s] == -1) {
      dist[s] = 0;
      q.push_back(s);
    }
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    if (radius >= 0 && dist[v] >= radius) continue;
    for (const auto& p : inst.adj[v]) {
      if (keep && !keep(p.edge)) continue;
      if (dist[p.neighbor] == -1) {
        dist[p.neighbor] = dist[v] + 1;
        q.push_back(p.neighbor);
      }
    }
  }
  return dist;
}

// ---------------------------------------------------------------- execution

RunResult run_algorithm(const Instance& inst, const NodeProgram& program, int max_rounds) {
  const int n = inst.n;
  std::vector<LocalInput> in(n);
  std::vector<int> tail;
  if (inst.arbdefective) {
    VerifyReport ignore;
    tail = edge_tails(inst, inst.arbdefective->oriented, ignore);
  }
  for (int v = 0; v < n; ++v) {
    auto& li = in[v];
    li.node = v;
    li.n = n;
    li.delta = inst.delta;
    for (const auto& p : inst.adj[v]) {
      li.ports.push_back(p.port);
      if (!tail.empty() && tail[p.edge] == v) li.out_ports.push_back(p.port);
    }
    if (inst.coloring) li.color = (*inst.coloring)[v];
    if (inst.arbdefective) li.arb_color = inst.arbdefective->colors[v];
  }
  // back[v][k]: position of the same edge in the neighbor's port list.
  std::vector<std::vector<int>> back(n);
  for (int v = 0; v < n; ++v)
    for (const auto& p : inst.adj[v]) {
      const auto& na = inst.adj[p.neighbor];
      int k = 0;
      while (na[k].edge != p.edge) ++k;
      back[v].push_back(k);
    }

  RunResult r;
  r.states.resize(n);
  r.finished.assign(n, -1);
  int active = 0;
  for (int v = 0; v < n; ++v) {
    r.states[v] = program.init(in[v]);
    if (program.done(r.states[v])) r.finished[v] = 0;
    else ++active;
  }
  for (int round = 1; active > 0; ++round) {
    if (round > max_rounds)
      throw Error(ErrorCode::kCap, "program did not terminate within " + std::to_string(max_rounds) + " rounds");
    std::vector<std::vector<json>> out(n);
    for (int v = 0; v < n; ++v)
      for (int port : in[v].ports) out[v].push_back(program.send(in[v], r.states[v], port, round));
    std::vector<json> next(n);
    for (int v = 0; v < n; ++v) {
      if (r.finished[v] >= 0) continue;
      std::vector<json> inbox;
      for (std::size_t k = 0; k < inst.adj[v].size(); ++k)
        inbox.push_back(out[inst.adj[v][k].neighbor][back[v][k]]);
      next[v] = program.receive(in[v], r.states[v], inbox, round);
    }
    for (int v = 0; v < n; ++v) {
      if (r.finished[v] >= 0) continue;
      r.states[v] = std::move(next[v]);
      if (program.done(r.states[v])) {
        r.finished[v] = round;
        --active;
      }
    }
  }
  for (int f : r.finished) r.rounds = std::max(r.rounds, f);
  return r;
}

NodeProgram constant_program(const json& value) {
  NodeProgram p;
  p.init = [value](const LocalInput&) { return json{{"out", value}}; };
  p.send = [](const LocalInput&, const json&, int, int) { return json(); };
  p.receive = [](const LocalInput&, const json& s, const std::vector<json>&, int) { return s; };
  p.done = [](const json&) { return true; };
  return p;
}

NodeProgram ball_program(int radius) {
  NodeProgram p;
  p.init = [](const LocalInput& in) {
    return json{{"round", 0}, {"view", {{"node", in.node}, {"degree", in.ports.size()}}}};
  };
  p.send = [](const LocalInput&, const json& s, int, int) { return s["view"]; };
  p.receive = [](const LocalInput& in, const json& s, const std::vector<json>& inbox, int round) {
    json view{{"node", in.node}, {"degree", in.ports.size()}, {"neighbors", json::array()}};
    for (std::size_t k = 0; k < inbox.size(); ++k)
      view["neighbors"].push_back({{"port", in.ports[k]}, {"view", inbox[k]}});
    json next = s;
    next["round"] = round;
    next["view"] = std::move(view);
    return next;
  };
  p.done = [radius](const json& s) { return s["round"].get<int>() >= radius; };
  return p;
}

NodeProgram flood_program(int source) {
  NodeProgram p;
  p.init = [source](const LocalInput& in) { return json{{"reached", in.node == source ? 0 : -1}}; };
  p.send = [](const LocalInput&, const json& s, int, int) { return json(s["reached"].get<int>() >= 0); };
  p.receive = [](const LocalInput&, const json& s, const std::vector<json>& inbox, int round) {
    json next = s;
    for (const auto& m : inbox)
      if (m.get<bool>()) next["reached"] = round;
    return next;
  };
  p.done = [](const json& s) { return s["reached"].get<int>() >= 0; };
  return p;
}

// ---------------------------------------------------------------- algorithms

int capacity(const std::vector<int>& defects) {
  int c = 0;
  for (int d : defects) c += d + 1;
  return c;
}

ArbdefectiveOutput greedy_arbdefective(const Instance& inst, const std::vector<int>& defects) {
  if (!inst.coloring) throw Error(ErrorCode::kInvalid, "greedy arbdefective coloring needs a proper input coloring");
  if (defects.empty()) throw Error(ErrorCode::kInvalid, "defect vector must be nonempty");
  for (int d : defects)
    if (d < 0) throw Error(ErrorCode::kInvalid, "defects must be nonnegative");
  if (capacity(defects) <= inst.delta)
    throw Error(ErrorCode::kInvalid, "capacity " + std::to_string(capacity(defects)) + " does not exceed Δ=" +
                                         std::to_string(inst.delta));
  const int C = static_cast<int>(defects.size());

  // Phase p: nodes of input color p choose; their out-neighbors are exactly
  // the neighbors that have already chosen.
  NodeProgram prog;
  prog.init = [](const LocalInput&) { return json{{"chosen", 0}}; };
  prog.send = [](const LocalInput&, const json& s, int, int) { return s["chosen"]; };
  prog.receive = [&](const LocalInput& in, const json& s, const std::vector<json>& inbox, int round) {
    if (*in.color != round) return s;
    std::vector<int> cnt(C + 1, 0);
    for (const auto& m : inbox)
      if (int x = m.get<int>(); x > 0) ++cnt[x];
    for (int x = 1; x <= C; ++x)
      if (cnt[x] <= defects[x - 1]) return json{{"chosen", x}};
    throw Error(ErrorCode::kInternal, "no admissible color at node " + std::to_string(in.node));
  };
  prog.done = [](const json& s) { return s["chosen"].get<int>() > 0; };
  RunResult rr = run_algorithm(inst, prog, inst.coloring_colors);

  ArbdefectiveOutput out;
  out.rounds = rr.rounds;
  for (const auto& s : rr.states) out.coloring.colors.push_back(s["chosen"].get<int>());
  const auto& col = *inst.coloring;
  for (const auto& e : inst.edges) {
    if (col[e.u] > col[e.v]) out.coloring.oriented.push_back({e.u, e.v});
    else out.coloring.oriented.push_back({e.v, e.u});
  }
  return out;
}

int default_block_size(int c, int beta) {
  if (beta < 1) throw Error(ErrorCode::kInvalid, "β must be at least 1");
  for (int q = 1;; ++q) {
    long double p = 1;
    for (int i = 0; i < beta && p < c; ++i) p *= q;
    if (p >= c) return q;
  }
}

RulingSetOutput sweep_ruling_set(const Instance& inst, const std::vector<int>& colors, int c, int beta,
                                 std::vector<int> schedule, const std::function<bool(int)>& keep) {
  if (c < 1) throw Error(ErrorCode::kInvalid, "color count must be positive");
  if (beta < 1) throw Error(ErrorCode::kInvalid, "β must be at least 1");
  if (schedule.empty()) schedule.assign(beta, default_block_size(c, beta));
  if (static_cast<int>(schedule.size()) != beta)
    throw Error(ErrorCode::kInvalid, "schedule must have β entries");
  long double product = 1;
  for (int q : schedule) {
    if (q < 1) throw Error(ErrorCode::kInvalid, "schedule entries must be positive");
    product *= q;
  }
  if (product < c) throw Error(ErrorCode::kInvalid, "schedule product is smaller than c");
  for (int v = 0; v < inst.n; ++v)
    if (colors[v] < 1 || colors[v] > c) throw Error(ErrorCode::kInvalid, "input color out of range");

  // Global round r maps to (level, position) in the sweep.
  std::vector<std::pair<int, int>> slot;
  for (int i = 0; i < beta; ++i)
    for (int k = 0; k < schedule[i]; ++k) slot.push_back({i, k});
  const int total = static_cast<int>(slot.size());

  NodeProgram prog;
  prog.init = [&](const LocalInput& in) {
    return json{{"cand", true}, {"color", colors[in.node]}, {"joined", false}, {"round", 0}};
  };
  prog.send = [](const LocalInput&, const json& s, int, int) {
    return json{{"cand", s["cand"]}, {"color", s["color"]}, {"joined", s["joined"]}};
  };
  prog.receive = [&](const LocalInput& in, const json& s, const std::vector<json>& inbox, int round) {
    json next = s;
    next["round"] = round;
    auto [level, pos] = slot[round - 1];
    const int q = schedule[level];
    const int color = s["color"].get<int>();
    if (s["cand"].get<bool>() && (color - 1) % q == pos) {
      bool blocked = false;
      for (std::size_t k = 0; k < inbox.size(); ++k) {
        if (keep && !keep(inst.adj[in.node][k].edge)) continue;
        const json& m = inbox[k];
        if (m["cand"].get<bool>() && m["joined"].get<bool>() && (m["color"].get<int>() - 1) / q == (color - 1) / q)
          blocked = true;
      }
      next["joined"] = !blocked;
    }
    if (pos == q - 1) {
      next["cand"] = next["cand"].get<bool>() && next["joined"].get<bool>();
      next["color"] = (color - 1) / q + 1;
      next["joined"] = false;
    }
    return next;
  };
  prog.done = [total](const json& s) { return s["round"].get<int>() >= total; };
  RunResult rr = run_algorithm(inst, prog, total);

  RulingSetOutput out;
  out.c = 1;
  out.beta = beta;
  out.schedule = schedule;
  out.rounds = rr.rounds;
  out.colors.assign(inst.n, 0);
  for (int v = 0; v < inst.n; ++v)
    if (rr.states[v]["cand"].get<bool>()) {
      out.members.push_back(v);
      out.colors[v] = 1;
    }
  return out;
}

RulingSetOutput sweep_ruling_set(const Instance& inst, int beta, std::vector<int> schedule) {
  if (!inst.coloring) throw Error(ErrorCode::kInvalid, "ruling set sweep needs a proper input coloring");
  return sweep_ruling_set(inst, *inst.coloring, inst.coloring_colors, beta, std::move(schedule), {});
}

RulingSetOutput arb_colored_ruling_set(const Instance& inst, int alpha, int c, int beta) {
  if (!inst.arbdefective) throw Error(ErrorCode::kInvalid, "needs an arbdefective input coloring");
  if (alpha < 0 || c < 1 || beta < 0) throw Error(ErrorCode::kInvalid, "needs α ≥ 0, c ≥ 1, β ≥ 0");
  const auto& in = *inst.arbdefective;
  {
    VerifyReport rep;
    check_arbdefect(inst, in.colors, std::vector<char>(inst.n, 1), in.oriented, inst.arb_colors,
                    [alpha](int) { return alpha; }, rep);
    if (!rep.ok) throw Error(ErrorCode::kInvalid, "invalid input arbdefective coloring: " + rep.violations[0]);
  }
  const int C = inst.arb_colors;
  RulingSetOutput out;
  out.alpha = alpha;
  out.c = c;
  out.beta = beta;
  if (beta == 0) {
    if (C > c) throw Error(ErrorCode::kInvalid, "β=0 requires C ≤ c");
    out.members.resize(inst.n);
    std::iota(out.members.begin(), out.members.end(), 0);
    out.colors = in.colors;
    out.oriented = in.oriented;
    return out;
  }
  const int K = (C + c - 1) / c;
  std::vector<int> group(inst.n);
  for (int v = 0; v < inst.n; ++v) group[v] = (in.colors[v] - 1) / c + 1;
  auto keep = [&](int e) { return group[inst.edges[e].u] != group[inst.edges[e].v]; };
  RulingSetOutput s = sweep_ruling_set(inst, group, K, beta, {}, keep);
  out.members = s.members;
  out.rounds = s.rounds;
  out.schedule = s.schedule;
  out.colors.assign(inst.n, 0);
  for (int v : out.members) out.colors[v] = (in.colors[v] - 1) % c + 1;
  for (auto [a, b] : in.oriented)
    if (out.colors[a] && out.colors[b]) out.oriented.push_back({a, b});
  return out;
}

// ---------------------------------------------------------------- reductions

namespace {

// Marks X on out-edges to same-colored active neighbors, then promotes the
// lowest-numbered remaining ports until exactly min(x, degree) ports carry X.
std::map<int, std::string> colored_ports(const Instance& inst, int v, const std::string& label, int x,
                                         const std::vector<int>& color, const std::vector<int>& tail) {
  std::map<int, std::string> ports;
  int count = 0;
  for (const auto& p : inst.adj[v]) {
    bool mono_out = color[p.neighbor] == color[v] && tail[p.edge] == v;
    ports[p.port] = mono_out ? "X" : label;
    count += mono_out;
  }
  const int want = std::min(x, inst.degree(v));
  if (count > want) throw Error(ErrorCode::kInternal, "too many monochromatic out-edges at node " + std::to_string(v));
  for (auto& [port, l] : ports) {
    if (count == want) break;
    if (l != "X") {
      l = "X";
      ++count;
    }
  }
  return ports;
}

std::string group_label(int first, int size) {
  std::vector<ColorId> cs;
  for (int k = 0; k < size; ++k) cs.push_back({0, first + k});
  return Label::color(std::move(cs)).id;
}

}  // namespace

ReductionOutput reduce_arbdefective(const Instance& inst, const OrientedColoring& sol,
                                    const std::vector<int>& defects) {
  VerifyReport rep = verify_arbdefective(inst, sol, defects);
  if (!rep.ok) throw Error(ErrorCode::kInvalid, "input solution is invalid: " + rep.violations[0]);
  if (capacity(defects) > inst.delta)
    throw Error(ErrorCode::kInvalid, "capacity " + std::to_string(capacity(defects)) + " exceeds Δ; no family target");
  std::vector<int> start(defects.size() + 1, 1);
  for (std::size_t x = 0; x < defects.size(); ++x) start[x + 1] = start[x] + defects[x] + 1;
  VerifyReport ignore;
  std::vector<int> tail = edge_tails(inst, sol.oriented, ignore);

  ReductionOutput out;
  out.z = {inst.delta};
  out.labeling.labels.resize(inst.n);
  for (int v = 0; v < inst.n; ++v) {
    const int x = sol.colors[v];
    out.labeling.labels[v] =
        colored_ports(inst, v, group_label(start[x - 1], defects[x - 1] + 1), defects[x - 1], sol.colors, tail);
  }
  return out;
}

ReductionOutput reduce_ruling(const Instance& inst, const RulingSetOutput& sol) {
  VerifyReport rep = verify_ruling(inst, sol);
  if (!rep.ok) throw Error(ErrorCode::kInvalid, "input solution is invalid: " + rep.violations[0]);
  const int k = sol.c * (1 + sol.alpha);
  if (k > inst.delta) throw Error(ErrorCode::kInvalid, "c(1+α) exceeds Δ; no family target");
  VerifyReport ignore;
  std::vector<int> tail = edge_tails(inst, sol.oriented, ignore);
  std::vector<int> dist = bfs_distances(inst, sol.members, sol.beta);
  // Same-color marks restricted to the set.
  std::vector<int> color(inst.n);
  for (int v = 0; v < inst.n; ++v) color[v] = dist[v] == 0 ? sol.colors[v] : -1 - v;

  ReductionOutput out;
  out.z.assign(sol.beta + 1, 0);
  out.z[0] = k;
  out.rounds = sol.beta;
  out.labeling.labels.resize(inst.n);
  for (int v = 0; v < inst.n; ++v) {
    auto& ports = out.labeling.labels[v];
    if (dist[v] == 0) {
      const int x = sol.colors[v];
      ports = colored_ports(inst, v, group_label((x - 1) * (1 + sol.alpha) + 1, 1 + sol.alpha), sol.alpha, color, tail);
      continue;
    }
    const int i = dist[v];
    bool pointed = false;
    for (const auto& p : inst.adj[v]) {
      if (!pointed && dist[p.neighbor] == i - 1) {
        ports[p.port] = Label::pointer(i).id;
        pointed = true;
      } else {
        ports[p.port] = Label::upper(i).id;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- verification

VerifyReport verify_labeling(const Instance& inst, const Problem& p, const HalfEdgeLabeling& l, const Context& ctx) {
  VerifyReport rep;
  if (p.delta_e() != 2) {
    rep.fail("only graph problems (edge rank 2) can be checked on a graph");
    return rep;
  }
  if (static_cast<int>(l.labels.size()) != inst.n) {
    rep.fail("labeling covers " + std::to_string(l.labels.size()) + " nodes, instance has " + std::to_string(inst.n));
    return rep;
  }
  ConcreteSet nodes = expand(p, Side::kNode, ctx);
  ConcreteSet edges = expand(p, Side::kEdge, ctx);
  auto lookup = [&](int v, int port) -> std::optional<int> {
    auto it = l.labels[v].find(port);
    if (it == l.labels[v].end()) {
      rep.fail("half-edge (" + std::to_string(v) + "," + std::to_string(port) + ") is unlabeled");
      return std::nullopt;
    }
    auto idx = p.find(it->second);
    if (!idx) rep.fail("half-edge (" + std::to_string(v) + "," + std::to_string(port) + ") has unknown label " + it->second);
    return idx;
  };
  for (int v = 0; v < inst.n; ++v) {
    if (inst.degree(v) != p.delta_n()) continue;
    std::vector<int> ms;
    bool ok = true;
    for (const auto& pt : inst.adj[v]) {
      auto x = lookup(v, pt.port);
      if (!x) ok = false;
      else ms.push_back(*x);
    }
    if (ok && !nodes.contains(ms)) {
      std::string cfg;
      for (const auto& pt : inst.adj[v]) cfg += (cfg.empty() ? "" : " ") + l.labels[v].at(pt.port);
      rep.fail("node " + std::to_string(v) + " configuration " + cfg + " is not allowed");
    }
  }
  for (const auto& e : inst.edges) {
    auto a = lookup(e.u, e.port_u);
    auto b = lookup(e.v, e.port_v);
    if (a && b && !edges.contains(std::vector<int>{*a, *b}))
      rep.fail("edge {" + std::to_string(e.u) + "," + std::to_string(e.v) + "} configuration " +
               l.labels[e.u].at(e.port_u) + " " + l.labels[e.v].at(e.port_v) + " is not allowed");
  }
  return rep;
}

VerifyReport verify_arbdefective(const Instance& inst, const OrientedColoring& sol, const std::vector<int>& defects) {
  VerifyReport rep;
  if (static_cast<int>(sol.colors.size()) != inst.n) {
    rep.fail("coloring covers " + std::to_string(sol.colors.size()) + " nodes, instance has " + std::to_string(inst.n));
    return rep;
  }
  check_arbdefect(inst, sol.colors, std::vector<char>(inst.n, 1), sol.oriented, static_cast<int>(defects.size()),
                  [&](int x) { return defects[x - 1]; }, rep);
  return rep;
}

VerifyReport verify_ruling_set(const Instance& inst, const std::vector<int>& members, int beta) {
  VerifyReport rep;
  std::vector<char> in(inst.n, 0);
  for (int v : members) {
    if (v < 0 || v >= inst.n) {
      rep.fail("member " + std::to_string(v) + " is not a node");
      return rep;
    }
    in[v] = 1;
  }
  for (const auto& e : inst.edges)
    if (in[e.u] && in[e.v])
      rep.fail("adjacent members " + std::to_string(e.u) + " and " + std::to_string(e.v));
  std::vector<int> dist = bfs_distances(inst, members, beta);
  for (int v = 0; v < inst.n; ++v)
    if (dist[v] < 0) rep.fail("node " + std::to_string(v) + " is farther than " + std::to_string(beta) + " from the set");
  return rep;
}

VerifyReport verify_ruling(const Instance& inst, const RulingSetOutput& sol) {
  VerifyReport rep;
  if (static_cast<int>(sol.colors.size()) != inst.n) {
    rep.fail("coloring covers " + std::to_string(sol.colors.size()) + " nodes, instance has " + std::to_string(inst.n));
    return rep;
  }
  std::vector<char> in(inst.n, 0);
  for (int v : sol.members) {
    if (v < 0 || v >= inst.n) {
      rep.fail("member " + std::to_string(v) + " is not a node");
      return rep;
    }
    in[v] = 1;
  }
  for (int v = 0; v < inst.n; ++v)
    if (!in[v] && sol.colors[v] != 0) rep.fail("node " + std::to_string(v) + " is colored but not in the set");
  const int alpha = sol.alpha;
  check_arbdefect(inst, sol.colors, in, sol.oriented, sol.c, [alpha](int) { return alpha; }, rep);
  std::vector<int> dist = bfs_distances(inst, sol.members, sol.beta);
  for (int v = 0; v < inst.n; ++v)
    if (dist[v] < 0)
      rep.fail("node " + std::to_string(v) + " is farther than " + std::to_string(sol.beta) + " from the set");
  return rep;
}

// ---------------------------------------------------------------- serialization

namespace {

json pairs_to_json(const std::vector<std::pair<int, int>>& v) {
  json a = json::array();
  for (auto [x, y] : v) a.push_back({x, y});
  return a;
}

std::vector<std::pair<int, int>> pairs_from_json(const json& j) {
  std::vector<std::pair<int, int>> v;
  for (const auto& p : j) v.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  return v;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

}  // namespace

json instance_to_json(const Instance& inst) {
  json j;
  j["nodes"] = inst.n;
  j["delta"] = inst.delta;
  j["edges"] = json::array();
  for (const auto& e : inst.edges) j["edges"].push_back({{"u", e.u}, {"v", e.v}, {"portU", e.port_u}, {"portV", e.port_v}});
  j["edgeColoringPorts"] = inst.edge_coloring_ports;
  if (inst.coloring) {
    j["coloring"] = *inst.coloring;
    j["coloringColors"] = inst.coloring_colors;
  }
  if (inst.arbdefective) {
    j["arbdefective"] = {{"colors", inst.arbdefective->colors},
                         {"orientedEdges", pairs_to_json(inst.arbdefective->oriented)},
                         {"alpha", inst.arb_alpha},
                         {"numColors", inst.arb_colors}};
  }
  j["seed"] = inst.seed;
  return j;
}

Instance instance_from_json(const json& j) {
  try {
    Instance inst;
    inst.n = j.at("nodes").get<int>();
    inst.delta = j.at("delta").get<int>();
    for (const auto& e : j.at("edges"))
      inst.edges.push_back({e.at("u").get<int>(), e.at("v").get<int>(), e.at("portU").get<int>(), e.at("portV").get<int>()});
    inst.edge_coloring_ports = get_or(j, "edgeColoringPorts", false);
    if (j.contains("coloring") && !j["coloring"].is_null()) {
      inst.coloring = j["coloring"].get<std::vector<int>>();
      int top = 0;
      for (int c : *inst.coloring) top = std::max(top, c);
      inst.coloring_colors = get_or(j, "coloringColors", top);
    }
    if (j.contains("arbdefective") && !j["arbdefective"].is_null()) {
      const json& a = j["arbdefective"];
      OrientedColoring oc;
      oc.colors = a.at("colors").get<std::vector<int>>();
      oc.oriented = pairs_from_json(a.at("orientedEdges"));
      int top = 0;
      for (int c : oc.colors) top = std::max(top, c);
      inst.arb_alpha = get_or(a, "alpha", 0);
      inst.arb_colors = get_or(a, "numColors", top);
      inst.arbdefective = std::move(oc);
    }
    inst.seed = get_or<std::uint64_t>(j, "seed", 0);
    inst.finalize();
    return inst;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalid, std::string("malformed instance JSON: ") + e.what());
  }
}

InstanceSpec instance_spec_from_json(const json& j) {
  try {
    InstanceSpec s;
    const std::string kind = get_or<std::string>(j, "kind", "regular-tree");
    if (kind == "regular-tree") s.kind = InstanceSpec::Kind::kRegularTree;
    else if (kind == "random-tree") s.kind = InstanceSpec::Kind::kRandomTree;
    else if (kind == "arbitrary") s.kind = InstanceSpec::Kind::kArbitrary;
    else throw Error(ErrorCode::kInvalid, "unknown instance kind '" + kind + "'");
    s.delta = get_or(j, "delta", 3);
    s.depth = get_or(j, "depth", 2);
    s.n = get_or(j, "n", 10);
    const std::string ports = get_or<std::string>(j, "ports", "random");
    if (ports == "random") s.ports = InstanceSpec::Ports::kRandom;
    else if (ports == "edge-coloring") s.ports = InstanceSpec::Ports::kEdgeColoring;
    else if (ports == "explicit") s.ports = InstanceSpec::Ports::kExplicit;
    else throw Error(ErrorCode::kInvalid, "unknown port mode '" + ports + "'");
    const std::string coloring = get_or<std::string>(j, "coloring", "none");
    if (coloring == "none") s.coloring = InstanceSpec::Coloring::kNone;
    else if (coloring == "proper") s.coloring = InstanceSpec::Coloring::kProper;
    else if (coloring == "arbdefective") s.coloring = InstanceSpec::Coloring::kArbdefective;
    else throw Error(ErrorCode::kInvalid, "unknown coloring '" + coloring + "'");
    s.colors = get_or(j, "colors", 0);
    s.alpha = get_or(j, "alpha", 0);
    s.seed = get_or<std::uint64_t>(j, "seed", 1);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalid, std::string("malformed instance spec: ") + e.what());
  }
}

json to_json(const OrientedColoring& c) { return {{"colors", c.colors}, {"orientedEdges", pairs_to_json(c.oriented)}}; }

OrientedColoring oriented_coloring_from_json(const json& j) {
  try {
    return {j.at("colors").get<std::vector<int>>(), pairs_from_json(j.at("orientedEdges"))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalid, std::string("malformed coloring JSON: ") + e.what());
  }
}

json to_json(const RulingSetOutput& r) {
  return {{"members", r.members}, {"colors", r.colors}, {"orientedEdges", pairs_to_json(r.oriented)},
          {"alpha", r.alpha},     {"c", r.c},           {"beta", r.beta},
          {"rounds", r.rounds},   {"schedule", r.schedule}};
}

RulingSetOutput ruling_from_json(const json& j) {
  try {
    RulingSetOutput r;
    r.members = j.at("members").get<std::vector<int>>();
    r.colors = j.at("colors").get<std::vector<int>>();
    r.oriented = pairs_from_json(get_or(j, "orientedEdges", json::array()));
    r.alpha = get_or(j, "alpha", 0);
    r.c = get_or(j, "c", 1);
    r.beta = j.at("beta").get<int>();
    r.rounds = get_or(j, "rounds", 0);
    r.schedule = get_or(j, "schedule", std::vector<int>{});
    std::sort(r.members.begin(), r.members.end());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalid, std::string("malformed ruling set JSON: ") + e.what());
  }
}

json to_json(const HalfEdgeLabeling& l) {
  json a = json::array();
  for (const auto& m : l.labels) {
    json o = json::object();
    for (const auto& [port, label] : m) o[std::to_string(port)] = label;
    a.push_back(std::move(o));
  }
  return {{"labels", a}};
}

HalfEdgeLabeling labeling_from_json(const json& j) {
  try {
    HalfEdgeLabeling l;
    for (const auto& o : j.at("labels")) {
      std::map<int, std::string> m;
      for (const auto& [k, v] : o.items()) m[std::stoi(k)] = v.get<std::string>();
      l.labels.push_back(std::move(m));
    }
    return l;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInvalid, std::string("malformed labeling JSON: ") + e.what());
  }
}

json to_json(const VerifyReport& r) { return {{"ok", r.ok}, {"violations", r.violations}}; }

}  // namespace relim
