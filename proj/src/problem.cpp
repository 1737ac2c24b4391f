#include "relim/problem.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

namespace relim {

// ---------------------------------------------------------------- lexer

namespace {

class Lexer {
 public:
  Lexer(const std::string& s, int line, int col0) : s_(s), line_(line), col0_(col0) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  char peek_raw() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_, col0_ + static_cast<int>(pos_) + 1, msg);
  }
  int read_int() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    if (pos_ - start > 6) fail("integer too large");
    return std::stoi(s_.substr(start, pos_ - start));
  }

  Label read_label() {
    skip_ws();
    char c = peek_raw();
    if (c == '(') {
      ++pos_;
      std::vector<Label> members;
      while (peek() != ')') {
        if (done()) fail("unterminated set label");
        members.push_back(read_label());
      }
      ++pos_;
      if (members.empty()) fail("empty set label");
      return Label::set_of(std::move(members));
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail("expected label");
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string ident = s_.substr(start, pos_ - start);
    if (ident == "L" && peek_raw() == '{') {
      ++pos_;
      std::vector<ColorId> colors;
      while (true) {
        int level = read_int();
        if (peek_raw() != '.') fail("expected '.' in color id");
        ++pos_;
        int index = read_int();
        if (index < 1) fail("color index must be positive");
        colors.push_back({level, index});
        char d = peek();
        if (d == ',') {
          ++pos_;
          continue;
        }
        if (d == '}') {
          ++pos_;
          break;
        }
        fail("expected ',' or '}' in color set");
      }
      return Label::color(std::move(colors));
    }
    return Label::parse(ident);
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
  int col0_;
};

bool is_positive_int(const std::string& s) {
  if (s.empty() || s[0] == '0' || s.size() > 6) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

int kind_rank(LabelKind k) {
  switch (k) {
    case LabelKind::kPlain: return 0;
    case LabelKind::kColor: return 1;
    case LabelKind::kPointer: return 2;
    case LabelKind::kUpper: return 3;
    case LabelKind::kWildcard: return 4;
    case LabelKind::kSet: return 5;
  }
  return 6;
}

}  // namespace

// ---------------------------------------------------------------- labels

std::string color_token(const ColorId& c) {
  return std::to_string(c.level) + "." + std::to_string(c.index);
}

Label Label::parse(const std::string& id) {
  if (id.empty()) throw Error(ErrorCode::kParse, "empty label");
  if (id[0] == '(' || id.rfind("L{", 0) == 0) {
    Lexer lx(id, 1, 0);
    Label l = lx.read_label();
    if (!lx.done()) lx.fail("trailing characters in label");
    return l;
  }
  if (!std::isalpha(static_cast<unsigned char>(id[0])))
    throw Error(ErrorCode::kParse, "invalid label '" + id + "'");
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
      throw Error(ErrorCode::kParse, "invalid label '" + id + "'");
  if (id == "X") return wildcard();
  if ((id[0] == 'P' || id[0] == 'U') && is_positive_int(id.substr(1))) {
    int i = std::stoi(id.substr(1));
    return id[0] == 'P' ? pointer(i) : upper(i);
  }
  return plain(id);
}

Label Label::plain(const std::string& name) {
  Label l;
  l.id = name;
  l.kind = LabelKind::kPlain;
  return l;
}

Label Label::color(std::vector<ColorId> colors) {
  std::sort(colors.begin(), colors.end());
  colors.erase(std::unique(colors.begin(), colors.end()), colors.end());
  if (colors.empty()) return wildcard();
  Label l;
  l.kind = LabelKind::kColor;
  l.id = "L{";
  for (std::size_t i = 0; i < colors.size(); ++i) {
    if (i) l.id += ",";
    l.id += color_token(colors[i]);
  }
  l.id += "}";
  l.colors = std::move(colors);
  return l;
}

Label Label::pointer(int i) {
  Label l;
  l.kind = LabelKind::kPointer;
  l.index = i;
  l.id = "P" + std::to_string(i);
  return l;
}

Label Label::upper(int i) {
  Label l;
  l.kind = LabelKind::kUpper;
  l.index = i;
  l.id = "U" + std::to_string(i);
  return l;
}

Label Label::wildcard() {
  Label l;
  l.kind = LabelKind::kWildcard;
  l.id = "X";
  return l;
}

Label Label::set_of(std::vector<Label> members) {
  if (members.empty()) throw Error(ErrorCode::kInvalid, "set label must be nonempty");
  std::sort(members.begin(), members.end(), label_less);
  members.erase(std::unique(members.begin(), members.end()), members.end());
  Label l;
  l.kind = LabelKind::kSet;
  l.id = "(";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) l.id += " ";
    l.id += members[i].id;
  }
  l.id += ")";
  l.members = std::move(members);
  return l;
}

bool label_less(const Label& a, const Label& b) {
  int ra = kind_rank(a.kind), rb = kind_rank(b.kind);
  if (ra != rb) return ra < rb;
  switch (a.kind) {
    case LabelKind::kPlain: return a.id < b.id;
    case LabelKind::kColor:
      if (a.colors.size() != b.colors.size()) return a.colors.size() < b.colors.size();
      return a.colors < b.colors;
    case LabelKind::kPointer:
    case LabelKind::kUpper: return a.index < b.index;
    case LabelKind::kWildcard: return false;
    case LabelKind::kSet: {
      std::size_t n = std::min(a.members.size(), b.members.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (label_less(a.members[i], b.members[i])) return true;
        if (label_less(b.members[i], a.members[i])) return false;
      }
      return a.members.size() < b.members.size();
    }
  }
  return false;
}

// ---------------------------------------------------------------- configs

void Config::canonicalize() {
  std::sort(slots.begin(), slots.end(), [](const LabelSet& a, const LabelSet& b) { return a.lex_less(b); });
}

bool Config::operator<(const Config& o) const {
  std::size_t n = std::min(slots.size(), o.slots.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i].lex_less(o.slots[i])) return true;
    if (o.slots[i].lex_less(slots[i])) return false;
  }
  return slots.size() < o.slots.size();
}

std::size_t ConfigHash::operator()(const Config& c) const {
  std::size_t h = c.slots.size();
  for (const auto& s : c.slots) h = h * 1000003u ^ s.hash();
  return h;
}

const char* to_string(Side s) { return s == Side::kNode ? "node" : "edge"; }

// ---------------------------------------------------------------- problem

Problem Problem::make(int delta_n, int delta_e, std::vector<Label> labels, std::vector<Config> nodes,
                      std::vector<Config> edges) {
  if (delta_n < 1 || delta_e < 1) throw Error(ErrorCode::kInvalid, "degrees must be positive");
  if (delta_n > kMaxArity || delta_e > kMaxArity)
    throw Error(ErrorCode::kCap, "arity above " + std::to_string(kMaxArity) + " is not supported");
  Problem p;
  p.delta_n_ = delta_n;
  p.delta_e_ = delta_e;

  std::vector<int> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return label_less(labels[a], labels[b]); });
  std::vector<int> remap(labels.size(), -1);
  for (int old : order) {
    if (!p.labels_.empty() && p.labels_.back().id == labels[old].id) {
      remap[old] = static_cast<int>(p.labels_.size()) - 1;
      continue;
    }
    auto dup = p.index_.find(labels[old].id);
    if (dup != p.index_.end()) {
      remap[old] = dup->second;
      continue;
    }
    remap[old] = static_cast<int>(p.labels_.size());
    p.index_[labels[old].id] = remap[old];
    p.labels_.push_back(labels[old]);
  }
  if (p.labels_.size() > static_cast<std::size_t>(kMaxLabels))
    throw Error(ErrorCode::kCap, "more than " + std::to_string(kMaxLabels) + " labels");

  auto fix = [&](std::vector<Config>& cs, int arity, std::vector<Config>& out, const char* what) {
    std::unordered_set<Config, ConfigHash> seen;
    for (auto& c : cs) {
      if (c.arity() != arity)
        throw Error(ErrorCode::kArity, std::string(what) + " configuration has arity " +
                                           std::to_string(c.arity()) + ", expected " +
                                           std::to_string(arity));
      Config n;
      for (const auto& s : c.slots) {
        if (s.empty()) throw Error(ErrorCode::kInvalid, "empty disjunction");
        LabelSet t;
        s.for_each([&](int i) {
          if (i >= static_cast<int>(remap.size())) throw Error(ErrorCode::kInvalid, "label index out of range");
          t.set(remap[i]);
        });
        n.slots.push_back(t);
      }
      n.canonicalize();
      if (seen.insert(n).second) out.push_back(std::move(n));
    }
    std::sort(out.begin(), out.end());
  };
  fix(nodes, delta_n, p.nodes_, "node");
  fix(edges, delta_e, p.edges_, "edge");
  return p;
}

std::optional<int> Problem::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Problem::index_of(const std::string& id) const {
  auto f = find(id);
  if (!f) throw Error(ErrorCode::kInvalid, "unknown label '" + id + "'");
  return *f;
}

LabelSet Problem::used_labels() const {
  LabelSet u;
  for (const auto* cs : {&nodes_, &edges_})
    for (const auto& c : *cs)
      for (const auto& s : c.slots) u |= s;
  return u;
}

bool Problem::operator==(const Problem& o) const {
  if (delta_n_ != o.delta_n_ || delta_e_ != o.delta_e_) return false;
  if (labels_.size() != o.labels_.size()) return false;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i].id != o.labels_[i].id) return false;
  return nodes_ == o.nodes_ && edges_ == o.edges_;
}

// ---------------------------------------------------------------- parsing

namespace {

struct Interner {
  std::vector<Label> labels;
  std::unordered_map<std::string, int> ids;
  const Problem* fixed = nullptr;  // when set, only labels of this problem are allowed

  int intern(const Label& l, Lexer& lx) {
    if (fixed) {
      auto f = fixed->find(l.id);
      if (!f) lx.fail("unknown label '" + l.id + "'");
      return *f;
    }
    auto it = ids.find(l.id);
    if (it != ids.end()) return it->second;
    if (labels.size() >= static_cast<std::size_t>(kMaxLabels)) lx.fail("too many labels");
    int i = static_cast<int>(labels.size());
    labels.push_back(l);
    ids.emplace(l.id, i);
    return i;
  }
};

// Parses "slot slot ... | slot ..." into configurations.
std::vector<Config> parse_configs(Lexer& lx, Interner& in) {
  std::vector<Config> out;
  Config cur;
  auto flush = [&] {
    if (cur.slots.empty()) lx.fail("empty configuration");
    out.push_back(std::move(cur));
    cur = Config{};
  };
  while (!lx.done()) {
    char c = lx.peek();
    if (c == '|') {
      lx.expect('|');
      flush();
      continue;
    }
    LabelSet slot;
    if (c == '[') {
      lx.expect('[');
      while (lx.peek() != ']') {
        if (lx.done()) lx.fail("unterminated disjunction");
        slot.set(in.intern(lx.read_label(), lx));
      }
      lx.expect(']');
      if (slot.empty()) lx.fail("empty disjunction");
    } else {
      slot.set(in.intern(lx.read_label(), lx));
    }
    int rep = 1;
    if (lx.peek() == '^') {
      lx.expect('^');
      rep = lx.read_int();
      if (rep < 1) lx.fail("repetition must be positive");
      if (rep > kMaxArity) lx.fail("repetition exceeds maximum arity " + std::to_string(kMaxArity));
    }
    for (int k = 0; k < rep; ++k) cur.slots.push_back(slot);
    if (cur.slots.size() > static_cast<std::size_t>(kMaxArity))
      lx.fail("configuration exceeds maximum arity " + std::to_string(kMaxArity));
  }
  if (!cur.slots.empty()) out.push_back(std::move(cur));
  return out;
}

std::string strip_comment(const std::string& line) {
  auto h = line.find('#');
  return h == std::string::npos ? line : line.substr(0, h);
}

bool starts_with_word(const std::string& s, std::size_t at, const std::string& w) {
  return s.compare(at, w.size(), w) == 0;
}

}  // namespace

Problem parse_problem(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  int delta_n = 0, delta_e = 0;
  bool header = false;
  enum { kNone, kNodes, kEdges } section = kNone;
  Interner intern;
  std::vector<Config> nodes, edges;
  std::vector<std::pair<int, int>> node_lines, edge_lines;  // (line, first config index)
  bool saw_nodes = false, saw_edges = false;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t body = b;
    if (starts_with_word(line, b, "delta")) {
      if (header) throw ParseError(line_no, static_cast<int>(b) + 1, "duplicate delta header");
      if (saw_nodes || saw_edges)
        throw ParseError(line_no, static_cast<int>(b) + 1, "delta header must come first");
      std::string rest = line.substr(b + 5);
      Lexer lx(rest, line_no, static_cast<int>(b) + 5);
      delta_n = lx.read_int();
      delta_e = lx.read_int();
      if (!lx.done()) lx.fail("unexpected text after delta header");
      if (delta_n < 1 || delta_e < 1) lx.fail("degrees must be positive");
      if (delta_e > delta_n) lx.fail("hyperedge rank must not exceed the node degree");
      if (delta_n > kMaxArity) lx.fail("degree above " + std::to_string(kMaxArity) + " is not supported");
      header = true;
      continue;
    }
    if (starts_with_word(line, b, "labels:")) {
      std::string rest = line.substr(b + 7);
      Lexer lx(rest, line_no, static_cast<int>(b) + 7);
      while (!lx.done()) intern.intern(lx.read_label(), lx);
      continue;
    }
    if (starts_with_word(line, b, "nodes:")) {
      if (saw_nodes) throw ParseError(line_no, static_cast<int>(b) + 1, "duplicate nodes section");
      section = kNodes;
      saw_nodes = true;
      body = b + 6;
    } else if (starts_with_word(line, b, "edges:")) {
      if (saw_edges) throw ParseError(line_no, static_cast<int>(b) + 1, "duplicate edges section");
      section = kEdges;
      saw_edges = true;
      body = b + 6;
    } else if (section == kNone) {
      throw ParseError(line_no, static_cast<int>(b) + 1, "configuration outside a nodes:/edges: section");
    }
    std::string rest = line.substr(body);
    Lexer lx(rest, line_no, static_cast<int>(body));
    auto cs = parse_configs(lx, intern);
    auto& target = section == kNodes ? nodes : edges;
    auto& lines = section == kNodes ? node_lines : edge_lines;
    for (auto& c : cs) {
      lines.push_back({line_no, 0});
      target.push_back(std::move(c));
    }
  }

  if (!header) {
    if (nodes.empty() || edges.empty())
      throw ParseError(1, 1, "missing 'delta <node degree> <edge rank>' header");
    delta_n = nodes.front().arity();
    delta_e = edges.front().arity();
  }
  auto check = [&](const std::vector<Config>& cs, const std::vector<std::pair<int, int>>& lines, int arity,
                   const char* what) {
    for (std::size_t i = 0; i < cs.size(); ++i)
      if (cs[i].arity() != arity)
        throw Error(ErrorCode::kArity,
                    "line " + std::to_string(lines[i].first) + ": " + what + " configuration has arity " +
                        std::to_string(cs[i].arity()) + ", expected " + std::to_string(arity),
                    "{\"line\":" + std::to_string(lines[i].first) + "}");
  };
  check(nodes, node_lines, delta_n, "node");
  check(edges, edge_lines, delta_e, "edge");
  return Problem::make(delta_n, delta_e, std::move(intern.labels), std::move(nodes), std::move(edges));
}

Config parse_config(const Problem& p, const std::string& text) {
  Interner in;
  in.fixed = &p;
  Lexer lx(text, 1, 0);
  auto cs = parse_configs(lx, in);
  if (cs.size() != 1) throw Error(ErrorCode::kInvalid, "expected exactly one configuration");
  cs[0].canonicalize();
  return cs[0];
}

// ---------------------------------------------------------------- printing

std::string format_slot(const Problem& p, const LabelSet& s) {
  if (s.count() == 1) return p.label(s.first()).id;
  std::string out = "[";
  bool first = true;
  s.for_each([&](int i) {
    if (!first) out += " ";
    out += p.label(i).id;
    first = false;
  });
  return out + "]";
}

std::string format_config(const Problem& p, const Config& c) {
  std::string out;
  for (std::size_t i = 0; i < c.slots.size();) {
    std::size_t j = i;
    while (j < c.slots.size() && c.slots[j] == c.slots[i]) ++j;
    if (!out.empty()) out += " ";
    out += format_slot(p, c.slots[i]);
    if (j - i > 1) out += "^" + std::to_string(j - i);
    i = j;
  }
  return out;
}

std::string format_problem(const Problem& p) {
  std::string out = "delta " + std::to_string(p.delta_n()) + " " + std::to_string(p.delta_e()) + "\n";
  LabelSet used = p.used_labels();
  if (used.count() != p.label_count()) {
    out += "labels:";
    for (const auto& l : p.labels()) out += " " + l.id;
    out += "\n";
  }
  out += "nodes:\n";
  for (const auto& c : p.nodes()) out += format_config(p, c) + "\n";
  out += "edges:\n";
  for (const auto& c : p.edges()) out += format_config(p, c) + "\n";
  return out;
}

// ---------------------------------------------------------------- expansion

Concrete pack(const std::vector<int>& sorted) {
  Concrete c = 0;
  for (int v : sorted) c = (c << kConcreteBits) | static_cast<Concrete>(v);
  return c;
}

std::vector<int> unpack(Concrete c, int arity) {
  std::vector<int> out(arity);
  for (int k = arity - 1; k >= 0; --k) {
    out[k] = static_cast<int>(c & ((Concrete{1} << kConcreteBits) - 1));
    c >>= kConcreteBits;
  }
  return out;
}

bool ConcreteSet::contains(Concrete c) const { return std::binary_search(items_.begin(), items_.end(), c); }

bool ConcreteSet::contains(const std::vector<int>& labels) const {
  std::vector<int> s = labels;
  std::sort(s.begin(), s.end());
  return contains(pack(s));
}

namespace {

void enumerate(const std::vector<std::vector<int>>& choices, const std::vector<bool>& same_as_prev, std::size_t k,
               std::vector<int>& pick, std::vector<int>& pos, std::unordered_set<Concrete>& out, std::size_t cap) {
  if (k == choices.size()) {
    std::vector<int> s = pick;
    std::sort(s.begin(), s.end());
    out.insert(pack(s));
    if (out.size() > cap)
      throw Error(ErrorCode::kCap, "expansion exceeds cap of " + std::to_string(cap) + " configurations",
                  "{\"cap\":" + std::to_string(cap) + "}");
    return;
  }
  std::size_t start = same_as_prev[k] ? static_cast<std::size_t>(pos[k - 1]) : 0;
  for (std::size_t i = start; i < choices[k].size(); ++i) {
    pick[k] = choices[k][i];
    pos[k] = static_cast<int>(i);
    enumerate(choices, same_as_prev, k + 1, pick, pos, out, cap);
  }
}

}  // namespace

ConcreteSet expand_configurations(const std::vector<Config>& cs, int arity, std::size_t cap) {
  std::unordered_set<Concrete> out;
  for (const auto& c : cs) {
    if (c.arity() != arity) throw Error(ErrorCode::kArity, "arity mismatch during expansion");
    std::vector<std::vector<int>> choices;
    std::vector<bool> same(c.slots.size(), false);
    for (std::size_t k = 0; k < c.slots.size(); ++k) {
      choices.push_back(c.slots[k].members());
      same[k] = k > 0 && c.slots[k] == c.slots[k - 1];
    }
    std::vector<int> pick(arity), pos(arity);
    enumerate(choices, same, 0, pick, pos, out, cap);
  }
  std::vector<Concrete> v(out.begin(), out.end());
  std::sort(v.begin(), v.end());
  return ConcreteSet(arity, std::move(v));
}

ConcreteSet expand(const Problem& p, Side s, const Context& ctx) {
  return expand_configurations(p.constraint(s), p.arity(s), ctx.caps.expand);
}

}  // namespace relim
