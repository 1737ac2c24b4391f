#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relim/analysis.hpp"
#include "relim/problem.hpp"

namespace relim {

// Universal quantifier on `universal`, existential on the other side.
// Output labels are set-labels over the input labels.
Problem quantifier_step(const Problem& p, Side universal, const Context& ctx = {});

Problem apply_re(const Problem& p, const Context& ctx = {});
Problem apply_rere(const Problem& p, const Context& ctx = {});

struct RenamingPolicy {
  enum class Kind { kNone, kUnion, kIntersection, kExplicit, kSearchBijection };
  Kind kind = Kind::kNone;
  std::map<std::string, std::string> map;  // kExplicit: old id -> new id

  static RenamingPolicy none() { return {}; }
  static RenamingPolicy union_of_colors() { return {Kind::kUnion, {}}; }
  static RenamingPolicy intersection_of_colors() { return {Kind::kIntersection, {}}; }
  static RenamingPolicy search_bijection() { return {Kind::kSearchBijection, {}}; }
  static RenamingPolicy explicit_map(std::map<std::string, std::string> m) { return {Kind::kExplicit, std::move(m)}; }
  // Accepts none | union | intersection | search | map:old=new;old=new
  static RenamingPolicy parse(const std::string& s);
};
std::string to_string(const RenamingPolicy& p);

// For kSearchBijection, `target` is the problem to match; without a match the
// input is returned unchanged.
Problem rename_labels(const Problem& p, const RenamingPolicy& policy, const Problem* target = nullptr,
                      const Context& ctx = {});

// Takes the raw output of quantifier_step and renames it after re-adding the
// non-maximal configurations on the universal side: every slot holding a
// set-label S becomes the images of all nonempty subsets of S. Supports the
// none, union and intersection policies; throws Error(kCap) past 20 members.
Problem restore_subconfigurations(const Problem& raw, Side universal, const RenamingPolicy& policy);

// Finds a label bijection mapping `p` onto `target` exactly, if one exists.
std::optional<std::map<std::string, std::string>> find_bijection(const Problem& p, const Problem& target,
                                                                  const Context& ctx = {});

// Equality of the allowed concrete configurations, matching labels by id.
bool same_semantics(const Problem& a, const Problem& b, const Context& ctx = {});

// Normal form: repeatedly drops concrete node configurations dominated under
// the edge-side strength order and edge configurations dominated under the
// node-side order. Problems with equal normal forms are interconvertible in
// zero rounds.
Problem reduce_problem(const Problem& p, const Context& ctx = {});

struct StepStats {
  int input_labels = 0;
  int intermediate_labels = 0;
  int output_labels = 0;
  std::size_t intermediate_nodes = 0;
  std::size_t intermediate_edges = 0;
  std::size_t output_nodes = 0;
  std::size_t output_edges = 0;
  double seconds = 0;
};

struct StepTrace {
  Problem input;
  Problem intermediate;  // renamed re(input)
  Problem output;
  std::vector<std::string> relaxations;
  StepStats stats;
};

struct FixedPointResult {
  bool is_fixed_point = false;
  bool literal = false;     // canonical text identical
  bool semantic = false;    // same concrete configurations
  bool normalized = false;  // same normal form under reduce_problem
  StepTrace trace;
};

// One full step re, rename, rere, rename. A kSearchBijection second policy
// matches against the input problem.
StepTrace step(const Problem& p, const std::pair<RenamingPolicy, RenamingPolicy>& policies,
               const Context& ctx = {});

FixedPointResult detect_fixed_point(const Problem& p, const std::pair<RenamingPolicy, RenamingPolicy>& policies,
                                    const Context& ctx = {});

struct RelaxAction {
  enum class Kind { kMerge, kAddConfig, kMapToStronger, kRemoveConfig };
  Kind kind = Kind::kMerge;
  std::vector<std::string> labels;  // kMerge: sources; kMapToStronger: {from}
  std::string target;               // kMerge / kMapToStronger: destination label id
  Side side = Side::kEdge;          // kAddConfig / kRemoveConfig: constraint; kMapToStronger: diagram side
  std::string config;               // kAddConfig / kRemoveConfig: configuration text
};
std::string describe(const RelaxAction& a);

// Applies the actions in order and checks the result is a relaxation of the
// input under the induced label map. Throws Error(kInvalid) naming the
// offending configuration otherwise.
Problem apply_relaxations(const Problem& p, const std::vector<RelaxAction>& actions,
                          std::vector<std::string>* log = nullptr, const Context& ctx = {});

struct SequencePolicy {
  std::pair<RenamingPolicy, RenamingPolicy> renaming{RenamingPolicy::union_of_colors(),
                                                     RenamingPolicy::intersection_of_colors()};
  // Optional replacement for the final renaming: receives the step index, the
  // step input, re(input) after the first renaming and rere of that, and
  // returns the next problem.
  std::function<Problem(int, const Problem&, const Problem&, const Problem&, std::vector<std::string>&)> relax;
};

struct SequenceResult {
  std::vector<StepTrace> traces;
  std::optional<ErrorCode> aborted;  // set when a cap or deadline ended the run early
  std::string abort_message;
};

SequenceResult run_sequence(const Problem& p0, int steps, const SequencePolicy& policy, const Context& ctx = {});

}  // namespace relim
