#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "relim/errors.hpp"
#include "relim/label_set.hpp"

namespace relim {

// Color C_{level,index} of the Π_Δ(z) family; serialized as "level.index".
struct ColorId {
  int level = 0;
  int index = 1;
  auto operator<=>(const ColorId&) const = default;
};

enum class LabelKind {
  kPlain,     // free identifier
  kColor,     // ℓ(𝒞) with 𝒞 nonempty, written L{i.j,...}
  kPointer,   // P<i>
  kUpper,     // U<i>
  kWildcard,  // X, i.e. ℓ(∅)
  kSet,       // set of labels produced by a quantifier step, written (a b ...)
};

// A label is identified by its id; the structured payload is derived from it.
struct Label {
  std::string id;
  LabelKind kind = LabelKind::kPlain;
  std::vector<ColorId> colors;  // kColor: sorted, nonempty
  int index = 0;                // kPointer / kUpper
  std::vector<Label> members;   // kSet: sorted by label_less, nonempty

  static Label parse(const std::string& id);  // throws Error(kParse)
  static Label plain(const std::string& name);
  static Label color(std::vector<ColorId> colors);  // empty -> X
  static Label pointer(int i);
  static Label upper(int i);
  static Label wildcard();
  static Label set_of(std::vector<Label> members);

  // True for ℓ(𝒞) including X = ℓ(∅).
  bool is_color_like() const { return kind == LabelKind::kColor || kind == LabelKind::kWildcard; }
  bool operator==(const Label& o) const { return id == o.id; }
};

// Canonical total order on labels used for printing and indexing.
bool label_less(const Label& a, const Label& b);
std::string color_token(const ColorId& c);

// A condensed configuration: a multiset of disjunctions (slots), kept sorted.
struct Config {
  std::vector<LabelSet> slots;

  int arity() const { return static_cast<int>(slots.size()); }
  void canonicalize();
  bool operator==(const Config& o) const { return slots == o.slots; }
  bool operator<(const Config& o) const;
};

struct ConfigHash {
  std::size_t operator()(const Config& c) const;
};

enum class Side { kNode, kEdge };
const char* to_string(Side s);

class Problem {
 public:
  Problem() = default;

  // Builds a canonical problem. Configurations index into `labels`, which
  // may be in any order and may contain duplicates by id (merged).
  static Problem make(int delta_n, int delta_e, std::vector<Label> labels,
                      std::vector<Config> nodes, std::vector<Config> edges);

  int delta_n() const { return delta_n_; }
  int delta_e() const { return delta_e_; }
  const std::vector<Label>& labels() const { return labels_; }
  int label_count() const { return static_cast<int>(labels_.size()); }
  const Label& label(int i) const { return labels_[i]; }
  std::optional<int> find(const std::string& id) const;
  int index_of(const std::string& id) const;  // throws Error(kInvalid)

  const std::vector<Config>& nodes() const { return nodes_; }
  const std::vector<Config>& edges() const { return edges_; }
  const std::vector<Config>& constraint(Side s) const { return s == Side::kNode ? nodes_ : edges_; }
  int arity(Side s) const { return s == Side::kNode ? delta_n_ : delta_e_; }

  // Labels that occur in at least one configuration.
  LabelSet used_labels() const;
  LabelSet all_labels() const { return LabelSet::range(label_count()); }

  bool operator==(const Problem& o) const;

 private:
  int delta_n_ = 0;
  int delta_e_ = 0;
  std::vector<Label> labels_;
  std::vector<Config> nodes_;
  std::vector<Config> edges_;
  std::unordered_map<std::string, int> index_;
};

Problem parse_problem(const std::string& text);
std::string format_problem(const Problem& p);
std::string format_config(const Problem& p, const Config& c);
std::string format_slot(const Problem& p, const LabelSet& s);
// Parses one configuration line against the labels of `p`.
Config parse_config(const Problem& p, const std::string& text);

// Concrete configuration: sorted label indices packed kConcreteBits per slot.
using Concrete = uint64_t;
inline constexpr int kConcreteBits = 9;
inline constexpr int kMaxArity = 64 / kConcreteBits;
Concrete pack(const std::vector<int>& sorted_labels);
std::vector<int> unpack(Concrete c, int arity);

// Deduplicated set of concrete configurations of a fixed arity.
class ConcreteSet {
 public:
  ConcreteSet() = default;
  ConcreteSet(int arity, std::vector<Concrete> sorted_unique)
      : arity_(arity), items_(std::move(sorted_unique)) {}
  int arity() const { return arity_; }
  std::size_t size() const { return items_.size(); }
  bool contains(Concrete c) const;
  bool contains(const std::vector<int>& labels) const;  // any order
  const std::vector<Concrete>& items() const { return items_; }

 private:
  int arity_ = 0;
  std::vector<Concrete> items_;
};

ConcreteSet expand_configurations(const std::vector<Config>& cs, int arity,
                                  std::size_t cap = Caps{}.expand);
ConcreteSet expand(const Problem& p, Side s, const Context& ctx = {});

}  // namespace relim
