#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "relim/family.hpp"
#include "relim/problem.hpp"

namespace relim {

using json = nlohmann::json;

// ---- instances

struct GraphEdge {
  int u = 0;
  int v = 0;
  int port_u = 1;
  int port_v = 1;
};

// Coloring plus an orientation; (from, to) pairs. Colors are 1-based.
struct OrientedColoring {
  std::vector<int> colors;
  std::vector<std::pair<int, int>> oriented;
};

struct Instance {
  int n = 0;
  int delta = 0;  // degree parameter Δ; no node exceeds it
  std::vector<GraphEdge> edges;
  bool edge_coloring_ports = false;  // ports are edge colors in 1..Δ
  std::optional<std::vector<int>> coloring;  // proper, colors 1..coloring_colors
  int coloring_colors = 0;
  std::optional<OrientedColoring> arbdefective;  // α-arbdefective, colors 1..arb_colors
  int arb_alpha = 0;
  int arb_colors = 0;
  std::uint64_t seed = 0;

  struct Port {
    int port;
    int neighbor;
    int edge;
  };
  // Built by finalize(): incident ports sorted by port number.
  std::vector<std::vector<Port>> adj;

  // Builds adj and checks ports and input colorings; throws Error(kInvalid).
  void finalize();
  int degree(int v) const { return static_cast<int>(adj[v].size()); }
};

struct InstanceSpec {
  enum class Kind { kRegularTree, kRandomTree, kArbitrary };
  enum class Ports { kRandom, kEdgeColoring, kExplicit };
  enum class Coloring { kNone, kProper, kArbdefective };
  Kind kind = Kind::kRegularTree;
  int delta = 3;
  int depth = 2;  // regular tree
  int n = 10;     // random tree / arbitrary
  Ports ports = Ports::kRandom;
  Coloring coloring = Coloring::kNone;
  int colors = 0;  // m for proper, C for arbdefective
  int alpha = 0;
  std::uint64_t seed = 1;
};

Instance build_instance(const InstanceSpec& spec);

json instance_to_json(const Instance& inst);
Instance instance_from_json(const json& j);
InstanceSpec instance_spec_from_json(const json& j);

// Nodes within distance `radius` of `sources`, with distances (-1 if farther).
// Edges for which `keep` returns false are ignored.
std::vector<int> bfs_distances(const Instance& inst, const std::vector<int>& sources, int radius = -1,
                               const std::function<bool(int)>& keep = {});

// ---- synchronous execution

struct LocalInput {
  int node = 0;  // unique identifier, LOCAL model
  int n = 0;
  int delta = 0;
  std::vector<int> ports;       // own port numbers, ascending
  std::optional<int> color;     // proper input color
  std::optional<int> arb_color;  // arbdefective input color
  std::vector<int> out_ports;   // ports of edges oriented away from this node
};

// Messages and states are JSON values, so message size is unbounded.
struct NodeProgram {
  std::function<json(const LocalInput&)> init;
  // Message sent on `port` in round `round` (1-based).
  std::function<json(const LocalInput&, const json& state, int port, int round)> send;
  // inbox[k] arrives on in.ports[k].
  std::function<json(const LocalInput&, const json& state, const std::vector<json>& inbox, int round)> receive;
  std::function<bool(const json& state)> done;
};

struct RunResult {
  std::vector<json> states;
  std::vector<int> finished;  // termination round per node
  int rounds = 0;             // maximum termination round
};

// Round r messages depend only on round r-1 states. Terminated nodes keep
// answering from their final state. Throws Error(kCap) past max_rounds.
RunResult run_algorithm(const Instance& inst, const NodeProgram& program, int max_rounds);

// Programs used by the CLI and tests.
NodeProgram constant_program(const json& value);
NodeProgram ball_program(int radius);   // collects the radius-r view as nested JSON
NodeProgram flood_program(int source);  // state {"reached": round or -1}

// ---- upper-bound algorithms

struct ArbdefectiveOutput {
  OrientedColoring coloring;
  int rounds = 0;
};

int capacity(const std::vector<int>& defects);

// Requires a proper input coloring and capacity(defects) > Δ.
ArbdefectiveOutput greedy_arbdefective(const Instance& inst, const std::vector<int>& defects);

struct RulingSetOutput {
  std::vector<int> members;  // sorted node ids
  std::vector<int> colors;   // per node; 0 outside the set
  std::vector<std::pair<int, int>> oriented;
  int alpha = 0;
  int c = 1;
  int beta = 1;
  int rounds = 0;
  std::vector<int> schedule;
};

// Smallest q with q^β ≥ c.
int default_block_size(int c, int beta);

// Uses the instance's proper coloring with c = coloring_colors.
RulingSetOutput sweep_ruling_set(const Instance& inst, int beta, std::vector<int> schedule = {});
// General form: `colors` proper on the edges kept by `keep`.
RulingSetOutput sweep_ruling_set(const Instance& inst, const std::vector<int>& colors, int c, int beta,
                                 std::vector<int> schedule, const std::function<bool(int)>& keep);

// Uses the instance's α-arbdefective C-coloring.
RulingSetOutput arb_colored_ruling_set(const Instance& inst, int alpha, int c, int beta);

// ---- reductions to Π_Δ(z)

// labels[v] maps port number to label id.
struct HalfEdgeLabeling {
  std::vector<std::map<int, std::string>> labels;
};

struct ReductionOutput {
  FamilyVector z;
  HalfEdgeLabeling labeling;
  int rounds = 0;
};

// d⃗-arbdefective coloring with capacity ≤ Δ, onto Π_Δ([Δ]).
ReductionOutput reduce_arbdefective(const Instance& inst, const OrientedColoring& sol, const std::vector<int>& defects);
// α-arbdefective c-colored β-ruling set, onto Π_Δ([c(1+α), 0, ..., 0]).
ReductionOutput reduce_ruling(const Instance& inst, const RulingSetOutput& sol);

// ---- verification

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> violations;
  void fail(std::string v) {
    ok = false;
    if (violations.size() < 50) violations.push_back(std::move(v));
  }
};

// Only nodes of degree Δ are constrained; every edge is constrained.
VerifyReport verify_labeling(const Instance& inst, const Problem& p, const HalfEdgeLabeling& l,
                             const Context& ctx = {});
VerifyReport verify_arbdefective(const Instance& inst, const OrientedColoring& sol, const std::vector<int>& defects);
VerifyReport verify_ruling(const Instance& inst, const RulingSetOutput& sol);
// Independence plus domination within distance β.
VerifyReport verify_ruling_set(const Instance& inst, const std::vector<int>& members, int beta);

// ---- serialization

json to_json(const OrientedColoring& c);
OrientedColoring oriented_coloring_from_json(const json& j);
json to_json(const RulingSetOutput& r);
RulingSetOutput ruling_from_json(const json& j);
json to_json(const HalfEdgeLabeling& l);
HalfEdgeLabeling labeling_from_json(const json& j);
json to_json(const VerifyReport& r);

}  // namespace relim
