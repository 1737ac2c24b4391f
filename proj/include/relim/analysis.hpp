#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relim/problem.hpp"

namespace relim {

// ---- boxes (condensed configurations viewed as products of label sets)

// True if some slot permutation maps every slot of `a` into a superset slot of `b`.
bool box_leq(const Config& a, const Config& b, std::vector<int>* perm = nullptr);

// Removes boxes contained in another box; keeps one copy of equal boxes.
std::vector<Config> remove_dominated(std::vector<Config> boxes);

// All maximal boxes whose every choice lies in the union of `cs`.
std::vector<Config> maximal_boxes(const std::vector<Config>& cs, int arity, const Context& ctx = {});

// ---- diagrams

struct Diagram {
  Side side = Side::kEdge;
  int n = 0;
  // stronger[y] contains every x that is at least as strong as y (including y).
  std::vector<LabelSet> stronger;
  // Equal-strength classes, ordered by their smallest label index.
  std::vector<std::vector<int>> classes;
  std::vector<int> class_of;
  // Transitive reduction between class representatives, as (weaker, stronger).
  std::vector<std::pair<int, int>> edges;
  bool exact = true;  // false when computed from boxes above the expansion cap

  bool at_least_as_strong(int x, int y) const { return stronger[y].test(x); }
  bool strictly_stronger(int x, int y) const { return at_least_as_strong(x, y) && !at_least_as_strong(y, x); }
};

Diagram compute_diagram(const Problem& p, Side side, const Context& ctx = {});
// Diagram of an explicit constraint over `n` labels.
Diagram diagram_of(const std::vector<Config>& cs, int arity, int n, Side side, const Context& ctx = {});

// Upward closure of `ls` under the strength order.
LabelSet gen_closure(const LabelSet& ls, const Diagram& d);
bool is_right_closed(const LabelSet& ls, const Diagram& d);

// ---- relaxation

// Slot containment where set-labels compare by membership and other labels by identity.
bool label_within(const Label& a, const Label& b);
bool slot_within(const Problem& pa, const LabelSet& a, const Problem& pb, const LabelSet& b);

struct RelaxResult {
  bool ok = false;
  std::vector<int> perm;         // config case: slot k of a goes to slot perm[k] of b
  std::vector<int> mapping;      // constraint case: target index per configuration of a
  std::optional<Config> failing;  // constraint case: first configuration of a with no target
};

RelaxResult is_relaxation(const Problem& pa, const Config& a, const Problem& pb, const Config& b);
RelaxResult is_relaxation(const Problem& pa, const std::vector<Config>& a, const Problem& pb,
                          const std::vector<Config>& b);

// ---- zero-round solvability

struct PortConstraint {
  bool unconstrained = true;
  std::vector<std::vector<int>> node_ports;  // Δ-tuples over [δ]
  std::vector<std::vector<int>> edge_ports;  // δ-tuples over [Δ]
};

struct ZeroRoundResult {
  bool solvable = false;
  std::vector<int> witness;                        // solvable: the self-compatible configuration
  std::optional<std::pair<int, int>> failing_pair;  // unsolvable: an incompatible pair of the first configuration
  std::size_t configurations_checked = 0;
};

ZeroRoundResult zero_round_check(const Problem& p, const PortConstraint& pc = {}, const Context& ctx = {});

}  // namespace relim
