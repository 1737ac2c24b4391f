#include "relim/family.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "relim/analysis.hpp"

namespace relim {

// ---------------------------------------------------------------- vectors

FamilyVector parse_vector(const std::string& s) {
  std::string t;
  for (char ch : s)
    if (ch != '[' && ch != ']' && ch != ' ' && ch != '\t') t += ch;
  if (t.empty()) throw Error(ErrorCode::kInvalid, "empty family vector");
  FamilyVector z;
  std::stringstream ss(t);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw Error(ErrorCode::kInvalid, "bad family vector entry '" + tok + "'");
    if (tok.size() > 6) throw Error(ErrorCode::kInvalid, "family vector entry too large: " + tok);
    z.push_back(std::stoi(tok));
  }
  validate_vector(z);
  return z;
}

std::string format_vector(const FamilyVector& z) {
  std::string out = "[";
  for (std::size_t i = 0; i < z.size(); ++i) out += (i ? "," : "") + std::to_string(z[i]);
  return out + "]";
}

std::string format_vector(const BigVector& z) {
  std::string out = "[";
  for (std::size_t i = 0; i < z.size(); ++i) out += (i ? "," : "") + z[i].get_str();
  return out + "]";
}

int beta_of(const FamilyVector& z) { return static_cast<int>(z.size()) - 1; }

long total_of(const FamilyVector& z) { return std::accumulate(z.begin(), z.end(), 0L); }

void validate_vector(const FamilyVector& z) {
  if (z.empty()) throw Error(ErrorCode::kInvalid, "family vector must be nonempty");
  for (int v : z)
    if (v < 0) throw Error(ErrorCode::kInvalid, "family vector entries must be nonnegative");
  if (total_of(z) < 1) throw Error(ErrorCode::kInvalid, "family vector must have at least one color");
}

BigVector to_big(const FamilyVector& z) {
  BigVector out;
  for (int v : z) out.emplace_back(v);
  return out;
}

BigVector prefix_vector(const BigVector& z) {
  BigVector out(z.size());
  mpz_class acc = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    acc += z[i];
    out[i] = acc;
  }
  return out;
}

BigVector prefix_iter(const BigVector& z, std::uint64_t j) {
  BigVector cur = z;
  for (std::uint64_t k = 0; k < j; ++k) {
    BigVector next = prefix_vector(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

mpz_class binomial(unsigned long n, unsigned long k) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

// ---------------------------------------------------------------- problems

std::vector<ColorId> family_colors(const FamilyVector& z) {
  std::vector<ColorId> out;
  for (int l = 0; l < static_cast<int>(z.size()); ++l)
    for (int m = 1; m <= z[l]; ++m) out.push_back({l, m});
  return out;
}

int level_of(const std::vector<ColorId>& colors) {
  int lv = -1;
  for (const auto& c : colors) lv = std::max(lv, c.level);
  return lv;
}

namespace {

int min_level(const std::vector<ColorId>& colors) {
  int lv = std::numeric_limits<int>::max();
  for (const auto& c : colors) lv = std::min(lv, c.level);
  return lv;
}

std::vector<ColorId> colors_of_mask(const std::vector<ColorId>& all, unsigned mask) {
  std::vector<ColorId> out;
  for (std::size_t k = 0; k < all.size(); ++k)
    if (mask & (1U << k)) out.push_back(all[k]);
  return out;
}

bool disjoint(const std::vector<ColorId>& a, const std::vector<ColorId>& b) {
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  return true;
}

Config singleton_config(const std::vector<int>& labels) {
  Config c;
  for (int x : labels) c.slots.push_back(LabelSet::single(x));
  c.canonicalize();
  return c;
}

// Edge compatibility in Π_Δ(z) by the definition (symmetric).
bool family_edge_ok(const Label& a, const Label& b) {
  if (a.kind == LabelKind::kWildcard || b.kind == LabelKind::kWildcard) return true;
  auto one = [](const Label& x, const Label& y) -> std::optional<bool> {
    if (x.kind == LabelKind::kUpper) {
      if (y.kind == LabelKind::kUpper || y.kind == LabelKind::kColor) return true;
      if (y.kind == LabelKind::kPointer) return x.index < y.index;
    }
    if (x.kind == LabelKind::kPointer && y.kind == LabelKind::kColor) return level_of(y.colors) < x.index;
    if (x.kind == LabelKind::kColor && y.kind == LabelKind::kColor) return disjoint(x.colors, y.colors);
    return std::nullopt;
  };
  if (auto r = one(a, b)) return *r;
  if (auto r = one(b, a)) return *r;
  return false;
}

void check_family_label(const Label& l, const FamilyVector& z) {
  const int beta = beta_of(z);
  switch (l.kind) {
    case LabelKind::kWildcard:
      return;
    case LabelKind::kPointer:
    case LabelKind::kUpper:
      if (l.index >= 1 && l.index <= beta) return;
      break;
    case LabelKind::kColor: {
      bool ok = true;
      for (const auto& c : l.colors) ok = ok && c.level >= 0 && c.level <= beta && c.index >= 1 && c.index <= z[c.level];
      if (ok) return;
      break;
    }
    default:
      break;
  }
  throw Error(ErrorCode::kInternal, "label " + l.id + " is not a label of the family problem for " + format_vector(z));
}

// Node membership in Π_Δ(z) by the definition; valid for any |z|.
bool family_node_ok(const std::vector<Label>& ports, int delta, const FamilyVector& z) {
  for (const auto& l : ports) check_family_label(l, z);
  int x = 0, p = 0, u = 0;
  const Label* color = nullptr;
  for (const auto& l : ports) {
    if (l.kind == LabelKind::kWildcard) ++x;
    if (l.kind == LabelKind::kPointer) ++p;
    if (l.kind == LabelKind::kUpper) ++u;
    if (l.kind == LabelKind::kColor) {
      if (color && color->id != l.id) return false;
      color = &l;
    }
  }
  if (p || u) {
    if (p != 1 || u != delta - 1) return false;
    int i = -1;
    for (const auto& l : ports)
      if (l.kind == LabelKind::kPointer) i = l.index;
    for (const auto& l : ports)
      if (l.kind == LabelKind::kUpper && l.index != i) return false;
    return true;
  }
  if (!color) return x == delta && total_of(z) >= delta + 1;
  return x == static_cast<int>(color->colors.size()) - 1;
}

}  // namespace

long label_bound(int delta, const FamilyVector& z) { return (1L << delta) * (1 + beta_of(z)); }

Problem build_family_problem(int delta, const FamilyVector& z) {
  validate_vector(z);
  if (delta < 2) throw Error(ErrorCode::kInvalid, "Δ must be at least 2");
  if (total_of(z) > delta)
    throw Error(ErrorCode::kInvalid, "family vector " + format_vector(z) + " has more than Δ=" +
                                         std::to_string(delta) + " colors");
  const std::vector<ColorId> colors = family_colors(z);
  const int beta = beta_of(z);
  const long count = (1L << colors.size()) + 2L * beta;
  if (colors.size() > 16 || count > kMaxLabels)
    throw Error(ErrorCode::kCap, "family problem would have " + std::to_string(count) + " labels",
                "{\"labels\":" + std::to_string(count) + "}");

  std::vector<Label> labels;
  labels.push_back(Label::wildcard());
  for (int i = 1; i <= beta; ++i) {
    labels.push_back(Label::pointer(i));
    labels.push_back(Label::upper(i));
  }
  const int first_color = static_cast<int>(labels.size());
  const unsigned full = (1U << colors.size()) - 1;
  for (unsigned mask = 1; mask <= full; ++mask) labels.push_back(Label::color(colors_of_mask(colors, mask)));

  std::vector<Config> nodes, edges;
  for (unsigned mask = 1; mask <= full; ++mask) {
    const int idx = first_color + static_cast<int>(mask) - 1;
    const int x = std::popcount(mask) - 1;
    std::vector<int> v(delta - x, idx);
    v.insert(v.end(), x, 0);
    nodes.push_back(singleton_config(v));
  }
  for (int i = 1; i <= beta; ++i) {
    std::vector<int> v(delta - 1, 2 * i);
    v.push_back(2 * i - 1);
    nodes.push_back(singleton_config(v));
  }
  // One condensed row per label: {L} × compat(L).
  for (int a = 0; a < static_cast<int>(labels.size()); ++a) {
    LabelSet compat;
    for (int b = 0; b < static_cast<int>(labels.size()); ++b)
      if (family_edge_ok(labels[a], labels[b])) compat.set(b);
    if (compat.empty()) continue;
    Config c;
    c.slots = {LabelSet::single(a), compat};
    c.canonicalize();
    edges.push_back(c);
  }
  return Problem::make(delta, 2, std::move(labels), std::move(nodes), std::move(edges));
}

Problem build_fixedpoint_variant(int delta) {
  Problem base = build_family_problem(delta, {delta});
  std::vector<ColorId> colors = family_colors({delta});
  std::vector<Config> nodes;
  const int n = base.label_count();
  for (int k = 1; k <= delta; ++k) {
    for (unsigned mask = 1; mask < (1U << delta); ++mask) {
      if (std::popcount(mask) != delta - k + 1) continue;
      // Labels whose color set contains every color of `mask`.
      LabelSet up;
      for (int y = 0; y < n; ++y) {
        const Label& l = base.label(y);
        if (l.kind != LabelKind::kColor) continue;
        bool all = true;
        for (std::size_t c = 0; c < colors.size(); ++c)
          if ((mask & (1U << c)) && std::find(l.colors.begin(), l.colors.end(), colors[c]) == l.colors.end())
            all = false;
        if (all) up.set(y);
      }
      Config cfg;
      cfg.slots.assign(k, up);
      cfg.slots.insert(cfg.slots.end(), delta - k, LabelSet::range(n));
      cfg.canonicalize();
      nodes.push_back(cfg);
    }
  }
  nodes = remove_dominated(nodes);
  return Problem::make(delta, 2, base.labels(), std::move(nodes), base.edges());
}

bool closed_form_stronger(const Label& x, const Label& y) {
  if (x.id == y.id) return true;
  if (x.kind == LabelKind::kWildcard) return true;
  switch (y.kind) {
    case LabelKind::kUpper:
      return x.kind == LabelKind::kUpper && x.index < y.index;
    case LabelKind::kPointer:
      if (x.kind == LabelKind::kPointer) return x.index > y.index;
      if (x.kind == LabelKind::kUpper) return true;
      if (x.kind == LabelKind::kColor) return min_level(x.colors) >= y.index;
      return false;
    case LabelKind::kColor:
      if (x.kind == LabelKind::kColor)
        return std::includes(y.colors.begin(), y.colors.end(), x.colors.begin(), x.colors.end());
      if (x.kind == LabelKind::kUpper) return level_of(y.colors) >= x.index;
      return false;
    default:
      return false;
  }
}

// ---------------------------------------------------------------- intermediates

Intermediate parse_intermediate(const std::string& s) {
  if (s == "re-edge") return Intermediate::kReEdge;
  if (s == "relaxed-node") return Intermediate::kRelaxedNode;
  if (s == "estar-edge") return Intermediate::kEstarEdge;
  throw Error(ErrorCode::kInvalid, "unknown intermediate '" + s + "' (re-edge | relaxed-node | estar-edge)");
}

const char* to_string(Intermediate w) {
  switch (w) {
    case Intermediate::kReEdge:
      return "re-edge";
    case Intermediate::kRelaxedNode:
      return "relaxed-node";
    case Intermediate::kEstarEdge:
      return "estar-edge";
  }
  return "?";
}

namespace {

void check_hypothesis(int delta, const FamilyVector& z) {
  validate_vector(z);
  const long total = total_of(z);
  const bool ok = beta_of(z) == 0 ? total <= delta : total <= delta - 1;
  if (!ok)
    throw Error(ErrorCode::kInvalid, "family vector " + format_vector(z) + " needs |z| <= " +
                                         std::to_string(beta_of(z) == 0 ? delta : delta - 1) + " at Δ=" +
                                         std::to_string(delta));
}

// Σ_re computed from the closed-form edge diagram of Π_Δ(z).
struct ReOracle {
  Problem base;
  std::vector<ColorId> colors;
  int beta = 0;
  int x = 0;                   // index of X in base
  std::vector<int> pointer;    // pointer[i] = index of P_i
  std::vector<int> upper;      // upper[i] = index of U_i; upper[0] = X
  std::vector<int> color_idx;  // by color mask; color_idx[0] = X
  std::vector<LabelSet> sigma;                 // distinct members, in insertion order
  std::vector<std::pair<int, int>> edges;      // pairs of sigma indices
  std::vector<Label> sigma_labels;

  LabelSet gen(std::initializer_list<int> ids) const {
    LabelSet out;
    for (int y = 0; y < base.label_count(); ++y)
      for (int s : ids)
        if (closed_form_stronger(base.label(y), base.label(s))) out.set(y);
    return out;
  }
  int add(const LabelSet& s) {
    for (std::size_t k = 0; k < sigma.size(); ++k)
      if (sigma[k] == s) return static_cast<int>(k);
    sigma.push_back(s);
    return static_cast<int>(sigma.size()) - 1;
  }
  int mask_level(unsigned mask) const { return level_of(colors_of_mask(colors, mask)); }
};

ReOracle re_oracle(int delta, const FamilyVector& z) {
  ReOracle o;
  o.base = build_family_problem(delta, z);
  o.colors = family_colors(z);
  o.beta = beta_of(z);
  o.x = o.base.index_of("X");
  o.pointer.assign(o.beta + 1, -1);
  o.upper.assign(o.beta + 1, o.x);
  for (int i = 1; i <= o.beta; ++i) {
    o.pointer[i] = o.base.index_of(Label::pointer(i).id);
    o.upper[i] = o.base.index_of(Label::upper(i).id);
  }
  const unsigned full = (1U << o.colors.size()) - 1;
  o.color_idx.assign(full + 1, o.x);
  for (unsigned mask = 1; mask <= full; ++mask)
    o.color_idx[mask] = o.base.index_of(Label::color(colors_of_mask(o.colors, mask)).id);

  for (int i = 1; i <= o.beta; ++i)
    for (unsigned mask = 0; mask <= full; ++mask)
      if (o.mask_level(full & ~mask) <= i - 1) o.add(o.gen({o.pointer[i], o.color_idx[mask]}));
  for (unsigned mask = 0; mask <= full; ++mask)
    for (int i = std::max(0, o.mask_level(mask)); i <= o.beta; ++i) o.add(o.gen({o.upper[i], o.color_idx[mask]}));

  for (int i = 1; i <= o.beta; ++i)
    for (unsigned mask = 0; mask <= full; ++mask)
      if (o.mask_level(full & ~mask) <= i - 1)
        o.edges.push_back({o.add(o.gen({o.pointer[i], o.color_idx[mask]})),
                           o.add(o.gen({o.upper[i - 1], o.color_idx[full & ~mask]}))});
  for (unsigned mask = 0; mask <= full; ++mask)
    o.edges.push_back({o.add(o.gen({o.upper[o.beta], o.color_idx[mask]})),
                       o.add(o.gen({o.upper[o.beta], o.color_idx[full & ~mask]}))});

  for (const auto& s : o.sigma) {
    std::vector<Label> members;
    s.for_each([&](int y) { members.push_back(o.base.label(y)); });
    o.sigma_labels.push_back(Label::set_of(std::move(members)));
  }
  return o;
}

Problem re_edge_problem(int delta, const ReOracle& o) {
  std::vector<Config> edges;
  for (auto [a, b] : o.edges) edges.push_back(singleton_config({a, b}));
  return Problem::make(delta, 2, o.sigma_labels, {}, std::move(edges));
}

struct StarBuild {
  StarProblem star;
  std::vector<Label> labels;                 // Σ*, by local index
  std::vector<std::vector<StarForm>> forms;  // by local index
  std::vector<std::vector<int>> nodes;       // N' rows over local indices
  std::vector<std::vector<StarForm>> node_forms;  // the form behind each port of each row
};

StarBuild star_build(int delta, const FamilyVector& z) {
  check_hypothesis(delta, z);
  ReOracle o = re_oracle(delta, z);
  StarBuild sb;

  // ⟨⟨A1, A2⟩⟩: members of Σ_re containing A1 or A2.
  auto closure = [&](const LabelSet& a1, const std::optional<LabelSet>& a2) {
    std::vector<Label> members;
    for (std::size_t k = 0; k < o.sigma.size(); ++k)
      if (a1.subset_of(o.sigma[k]) || (a2 && a2->subset_of(o.sigma[k]))) members.push_back(o.sigma_labels[k]);
    if (members.empty()) throw Error(ErrorCode::kInternal, "empty relaxed label");
    return Label::set_of(std::move(members));
  };
  auto intern = [&](const Label& l, const StarForm& f) {
    for (std::size_t k = 0; k < sb.labels.size(); ++k)
      if (sb.labels[k].id == l.id) {
        sb.forms[k].push_back(f);
        return static_cast<int>(k);
      }
    sb.labels.push_back(l);
    sb.forms.push_back({f});
    return static_cast<int>(sb.labels.size()) - 1;
  };

  const int xx = intern(closure(o.gen({o.x}), std::nullopt), StarForm{StarForm::Kind::kX, 0, 0, {}});
  for (int i = 1; i <= o.beta; ++i) {
    int p = intern(closure(o.gen({o.pointer[i]}), std::nullopt), StarForm{StarForm::Kind::kP, i, 0, {}});
    int u = intern(closure(o.gen({o.upper[i]}), std::nullopt), StarForm{StarForm::Kind::kU, i, 0, {}});
    std::vector<int> row(delta - 1, u);
    row.push_back(p);
    sb.nodes.push_back(row);
    std::vector<StarForm> fr(delta - 1, StarForm{StarForm::Kind::kU, i, 0, {}});
    fr.push_back(StarForm{StarForm::Kind::kP, i, 0, {}});
    sb.node_forms.push_back(std::move(fr));
  }
  const unsigned full = (1U << o.colors.size()) - 1;
  for (unsigned mask = 1; mask <= full; ++mask) {
    const int size = std::popcount(mask);
    for (int j = std::max(0, o.mask_level(mask)); j <= o.beta; ++j)
      for (int i = j; i <= std::min(j + 1, o.beta); ++i) {
        StarForm f{StarForm::Kind::kColor, i, j, colors_of_mask(o.colors, mask)};
        std::optional<LabelSet> pj;
        if (j > 0) pj = o.gen({o.pointer[j]});
        int d = intern(closure(o.gen({o.upper[i], o.color_idx[mask]}), pj), f);
        const int a = delta - size - i + j + 1;
        const int b = size + i - j - 1;
        if (a < 0 || b < 0) throw Error(ErrorCode::kInternal, "negative exponent in relaxed node form");
        std::vector<int> row(a, d);
        row.insert(row.end(), b, xx);
        sb.nodes.push_back(row);
        std::vector<StarForm> fr(a, f);
        fr.insert(fr.end(), b, StarForm{StarForm::Kind::kX, 0, 0, {}});
        sb.node_forms.push_back(std::move(fr));
      }
  }
  return sb;
}

bool star_edge_rule(const StarForm& a, const StarForm& b) {
  using K = StarForm::Kind;
  if (a.kind == K::kX || b.kind == K::kX) return true;
  auto one = [](const StarForm& x, const StarForm& y) -> std::optional<bool> {
    if (x.kind == K::kColor) {
      if (y.kind == K::kColor) return disjoint(x.colors, y.colors) || x.i < y.j || y.i < x.j;
      if (y.kind == K::kU) return true;
      if (y.kind == K::kP) return x.i < y.i;
    }
    if (x.kind == K::kU) {
      if (y.kind == K::kU) return true;
      if (y.kind == K::kP) return x.i < y.i;
    }
    return std::nullopt;
  };
  if (auto r = one(a, b)) return *r;
  if (auto r = one(b, a)) return *r;
  return false;
}

std::set<std::vector<std::string>> config_keys(const Problem& p, Side side) {
  std::set<std::vector<std::string>> out;
  for (const auto& c : p.constraint(side)) {
    std::vector<std::string> key;
    for (const auto& s : c.slots) {
      std::vector<std::string> ids;
      s.for_each([&](int y) { ids.push_back(p.label(y).id); });
      std::sort(ids.begin(), ids.end());
      std::string joined;
      for (const auto& id : ids) joined += id + " ";
      key.push_back(joined);
    }
    std::sort(key.begin(), key.end());
    out.insert(key);
  }
  return out;
}

std::set<std::string> label_ids(const Problem& p) {
  std::set<std::string> out;
  for (const auto& l : p.labels()) out.insert(l.id);
  return out;
}

}  // namespace

StarProblem star_problem(int delta, const FamilyVector& z) {
  StarBuild sb = star_build(delta, z);
  std::vector<Config> nodes, edges;
  for (const auto& row : sb.nodes) nodes.push_back(singleton_config(row));
  const int n = static_cast<int>(sb.labels.size());
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      bool ok = false;
      for (const auto& fa : sb.forms[a])
        for (const auto& fb : sb.forms[b]) ok = ok || star_edge_rule(fa, fb);
      if (ok) edges.push_back(singleton_config({a, b}));
    }
  StarProblem out;
  out.problem = Problem::make(delta, 2, sb.labels, std::move(nodes), std::move(edges));
  for (int k = 0; k < n; ++k) out.forms[sb.labels[k].id] = sb.forms[k];
  return out;
}

std::vector<std::vector<StarForm>> star_node_rows(int delta, const FamilyVector& z) {
  return star_build(delta, z).node_forms;
}

std::string format_form(const StarForm& f) {
  switch (f.kind) {
    case StarForm::Kind::kX: return "X";
    case StarForm::Kind::kU: return "U<" + std::to_string(f.i) + ">";
    case StarForm::Kind::kP: return "P<" + std::to_string(f.i) + ">";
    case StarForm::Kind::kColor: {
      std::string s = "C<" + std::to_string(f.i) + "," + std::to_string(f.j) + ">{";
      for (std::size_t k = 0; k < f.colors.size(); ++k) s += (k ? "," : "") + color_token(f.colors[k]);
      return s + "}";
    }
  }
  return "X";
}

StarForm parse_form(const std::string& s) {
  auto bad = [&]() { return Error(ErrorCode::kParse, "malformed relaxed form '" + s + "'"); };
  auto number = [&](const std::string& t) {
    if (t.empty() || t.size() > 6 || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw bad();
    return std::stoi(t);
  };
  if (s == "X") return StarForm{};
  if ((s[0] == 'U' || s[0] == 'P') && s.size() >= 4 && s[1] == '<' && s.back() == '>') {
    StarForm f;
    f.kind = s[0] == 'U' ? StarForm::Kind::kU : StarForm::Kind::kP;
    f.i = number(s.substr(2, s.size() - 3));
    return f;
  }
  if (s.rfind("C<", 0) == 0) {
    auto close = s.find('>');
    auto comma = s.find(',');
    if (close == std::string::npos || comma == std::string::npos || comma > close) throw bad();
    StarForm f;
    f.kind = StarForm::Kind::kColor;
    f.i = number(s.substr(2, comma - 2));
    f.j = number(s.substr(comma + 1, close - comma - 1));
    Label l = Label::parse("L" + s.substr(close + 1));
    if (l.kind != LabelKind::kColor) throw bad();
    f.colors = l.colors;
    return f;
  }
  throw bad();
}

Problem expected_intermediate(int delta, const FamilyVector& z, Intermediate which) {
  check_hypothesis(delta, z);
  if (which == Intermediate::kReEdge) return re_edge_problem(delta, re_oracle(delta, z));
  StarProblem sp = star_problem(delta, z);
  const Problem& p = sp.problem;
  if (which == Intermediate::kRelaxedNode) return Problem::make(delta, 2, p.labels(), p.nodes(), {});
  return Problem::make(delta, 2, p.labels(), {}, p.edges());
}

// ---------------------------------------------------------------- projection

Label project_form(const StarForm& f, const FamilyVector& z) {
  switch (f.kind) {
    case StarForm::Kind::kX:
      return Label::wildcard();
    case StarForm::Kind::kU:
      return Label::upper(f.i);
    case StarForm::Kind::kP:
      return Label::pointer(f.i);
    case StarForm::Kind::kColor: {
      // (C, i) with C = C_{l,m} becomes the m-th level-i color after those of levels below l.
      auto lift = [&](const ColorId& c, int level) {
        int offset = 0;
        for (int l = 0; l < c.level; ++l) offset += z[l];
        return ColorId{level, offset + c.index};
      };
      std::vector<ColorId> out;
      for (const auto& c : f.colors) {
        out.push_back(lift(c, f.j));
        out.push_back(lift(c, f.i));
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return Label::color(std::move(out));
    }
  }
  return Label::wildcard();
}

std::vector<Label> project_node(const std::vector<StarForm>& ports, const FamilyVector& z) {
  std::vector<Label> out;
  for (const auto& f : ports) out.push_back(project_form(f, z));
  int x = 0;
  const Label* color = nullptr;
  for (const auto& l : out) {
    if (l.kind == LabelKind::kWildcard) ++x;
    if (l.kind == LabelKind::kColor) {
      if (color && color->id != l.id)
        throw Error(ErrorCode::kInternal, "projected node carries two different color labels");
      color = &l;
    }
  }
  if (!color) return out;
  const int need = static_cast<int>(color->colors.size()) - 1 - x;
  if (need < 0)
    throw Error(ErrorCode::kInternal, "projected node has more X ports than its color set allows",
                "{\"need\":" + std::to_string(need) + "}");
  const std::string id = color->id;
  int left = need;
  for (auto& l : out)
    if (left > 0 && l.id == id) {
      l = Label::wildcard();
      --left;
    }
  if (left > 0) throw Error(ErrorCode::kInternal, "not enough colored ports to pad");
  return out;
}

// ---------------------------------------------------------------- one step

OneStepReport check_step_artifacts(int delta, const FamilyVector& z, const Problem& re, const Problem& rere,
                                   const Context& ctx) {
  check_hypothesis(delta, z);
  auto t0 = std::chrono::steady_clock::now();
  OneStepReport r;
  r.delta = delta;
  r.z = z;
  {
    BigVector next = prefix_vector(to_big(z));
    for (const auto& v : next) {
      if (!v.fits_sint_p() || v.get_si() > 1'000'000) throw Error(ErrorCode::kCap, "prefix entry too large");
      r.z_next.push_back(static_cast<int>(v.get_si()));
    }
  }
  r.re_labels = re.label_count();
  r.rere_labels = rere.label_count();
  r.rere_nodes = rere.nodes().size();

  // re: labels and edge constraint against the characterization.
  ReOracle o = re_oracle(delta, z);
  Problem re_expected = re_edge_problem(delta, o);
  const bool same_labels = label_ids(re) == label_ids(re_expected);
  const bool same_edges = config_keys(re, Side::kEdge) == config_keys(re_expected, Side::kEdge);
  r.re_matches_oracle = same_labels && same_edges;
  if (!same_labels) r.notes.push_back("re label set differs from the characterization");
  if (!same_edges) r.notes.push_back("re edge constraint differs from the characterization");

  // rere nodes against the relaxation target.
  StarBuild sb = star_build(delta, z);
  StarProblem sp = star_problem(delta, z);
  const Problem& star = sp.problem;
  {
    std::vector<LabelSet> within(rere.label_count());
    for (int a = 0; a < rere.label_count(); ++a)
      for (int b = 0; b < star.label_count(); ++b)
        if (label_within(rere.label(a), star.label(b))) within[a].set(b);
    r.relaxed_contains = true;
    for (const auto& c : rere.nodes()) {
      ctx.deadline.check("relaxation check");
      std::vector<LabelSet> allowed;
      for (const auto& s : c.slots) {
        LabelSet acc = LabelSet::range(star.label_count());
        s.for_each([&](int a) { acc &= within[a]; });
        allowed.push_back(acc);
      }
      bool found = false;
      for (const auto& target : star.nodes()) {
        Config probe;
        probe.slots = allowed;
        // Each slot of the target is a singleton; the probe slot must contain it.
        std::vector<int> perm;
        Config t = target;
        found = box_leq(t, probe, &perm);
        if (found) break;
      }
      if (!found) {
        r.relaxed_contains = false;
        r.notes.push_back("rere node configuration " + format_config(rere, c) + " has no relaxation target");
        break;
      }
    }
  }

  // E*: existential over the engine's re edges, against the pairing rules.
  {
    ConcreteSet ere = expand(re, Side::kEdge, ctx);
    std::vector<std::vector<int>> members(star.label_count());
    bool mapped = true;
    for (int d = 0; d < star.label_count(); ++d)
      for (const auto& m : star.label(d).members) {
        auto k = re.find(m.id);
        if (!k) {
          mapped = false;
          continue;
        }
        members[d].push_back(*k);
      }
    std::vector<Config> engine_edges;
    for (int a = 0; a < star.label_count(); ++a)
      for (int b = a; b < star.label_count(); ++b) {
        bool ok = false;
        for (int x : members[a]) {
          for (int y : members[b])
            if (ere.contains(std::vector<int>{x, y})) {
              ok = true;
              break;
            }
          if (ok) break;
        }
        if (ok) engine_edges.push_back(singleton_config({a, b}));
      }
    Problem engine_star = Problem::make(delta, 2, star.labels(), star.nodes(), engine_edges);
    r.estar_matches = mapped && config_keys(engine_star, Side::kEdge) == config_keys(star, Side::kEdge);
    if (!mapped) r.notes.push_back("relaxed labels reference sets missing from re");
    if (!r.estar_matches) r.notes.push_back("derived edge constraint differs from the pairing rules");

    // Projection onto Π_Δ(prefix(z)), which exists only while prefix(z) has at most Δ colors.
    if (total_of(r.z_next) > delta) {
      r.notes.push_back("Π_Δ(prefix(z)) is undefined (" + std::to_string(total_of(r.z_next)) +
                        " colors > Δ); projection not checked");
    } else {
      r.projection_checked = true;
      r.projection_ok = true;
      std::map<std::string, Label> image;
      for (const auto& [id, forms] : sp.forms) {
        Label first = project_form(forms.front(), z);
        for (const auto& f : forms)
          if (project_form(f, z).id != first.id) {
            r.projection_ok = false;
            r.notes.push_back("label " + id + " projects ambiguously");
          }
        image[id] = first;
      }
      const Problem target = build_family_problem(delta, r.z_next);
      const ConcreteSet target_nodes = expand(target, Side::kNode, ctx);
      const ConcreteSet target_edges = expand(target, Side::kEdge, ctx);
      auto allowed = [&](const std::vector<Label>& ls, const ConcreteSet& cs) {
        std::vector<int> v;
        for (const auto& l : ls) {
          auto k = target.find(l.id);
          if (!k) return false;
          v.push_back(*k);
        }
        return cs.contains(v);
      };
      // Both routes must agree: the defining rules and the built constraint.
      for (const auto& row : sb.nodes) {
        std::vector<StarForm> ports;
        for (int k : row) ports.push_back(sp.forms.at(sb.labels[k].id).front());
        std::vector<Label> proj = project_node(ports, z);
        if (!family_node_ok(proj, delta, r.z_next) || !allowed(proj, target_nodes)) {
          r.projection_ok = false;
          std::string text;
          for (const auto& l : proj) text += l.id + " ";
          r.notes.push_back("projected node configuration " + text + "is not allowed");
          break;
        }
      }
      for (const auto& c : engine_edges) {
        const Label& a = image.at(star.label(c.slots[0].first()).id);
        const Label& b = image.at(star.label(c.slots[1].first()).id);
        if (!family_edge_ok(a, b) || !allowed({a, b}, target_edges)) {
          r.projection_ok = false;
          r.notes.push_back("projected edge configuration " + a.id + " " + b.id + " is not allowed");
          break;
        }
      }
    }
  }

  const long bound = label_bound(delta, z);
  const long base_labels = build_family_problem(delta, z).label_count();
  // Π_Δ(prefix(z)) only exists while prefix(z) has at most Δ colors.
  const long next_labels =
      total_of(r.z_next) <= delta ? (1L << total_of(r.z_next)) + 2L * beta_of(z) : 0;
  r.label_bound_ok = base_labels <= bound && re.label_count() <= bound && next_labels <= bound;
  if (!r.label_bound_ok)
    r.notes.push_back("label count exceeds 2^Δ(1+len(z)) = " + std::to_string(bound));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

OneStepReport check_one_step(int delta, const FamilyVector& z, const Context& ctx) {
  check_hypothesis(delta, z);
  auto t0 = std::chrono::steady_clock::now();
  Problem base = build_family_problem(delta, z);
  Problem re = apply_re(base, ctx);
  Problem rere = apply_rere(re, ctx);
  OneStepReport r = check_step_artifacts(delta, z, re, rere, ctx);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

SequencePolicy family_sequence_policy(int delta, const FamilyVector& z0, const Context& ctx) {
  SequencePolicy policy;
  policy.renaming = {RenamingPolicy::none(), RenamingPolicy::none()};
  auto state = std::make_shared<FamilyVector>(z0);
  policy.relax = [delta, state, ctx](int, const Problem& input, const Problem& re, const Problem& rere,
                                     std::vector<std::string>& log) {
    const FamilyVector z = *state;
    if (!(input == build_family_problem(delta, z)))
      throw Error(ErrorCode::kInvalid, "step input is not Π_Δ(" + format_vector(z) + ")");
    OneStepReport r = check_step_artifacts(delta, z, re, rere, ctx);
    log.push_back("family step " + format_vector(z) + " -> " + format_vector(r.z_next));
    log.push_back(std::string("re matches characterization: ") + (r.re_matches_oracle ? "yes" : "no"));
    log.push_back(std::string("rere nodes relax into target: ") + (r.relaxed_contains ? "yes" : "no"));
    log.push_back(std::string("derived edges match pairing rules: ") + (r.estar_matches ? "yes" : "no"));
    log.push_back(std::string("projection valid: ") + (r.projection_ok ? "yes" : "no"));
    for (const auto& n : r.notes) log.push_back(n);
    if (!r.ok()) throw Error(ErrorCode::kInternal, "family step certificate failed for " + format_vector(z));
    *state = r.z_next;
    return build_family_problem(delta, r.z_next);
  };
  return policy;
}

// ---------------------------------------------------------------- calculators

std::string LengthResult::str() const {
  switch (kind) {
    case Kind::kFinite:
      return std::to_string(t);
    case Kind::kInfinite:
      return "inf";
    case Kind::kNone:
      return "none";
    case Kind::kCapHit:
      return "cap-hit";
  }
  return "?";
}

std::string RulingResult::str() const {
  LengthResult l;
  l.kind = kind;
  l.t = t;
  return l.str();
}

mpz_class prefix_power_size(const FamilyVector& z, std::uint64_t t) {
  const int beta = beta_of(z);
  mpz_class s = 0;
  for (int i = 0; i <= beta; ++i) {
    if (z[i] == 0) continue;
    mpz_class top = mpz_class(static_cast<unsigned long>(t)) + (beta - i);
    mpz_class c;
    mpz_bin_ui(c.get_mpz_t(), top.get_mpz_t(), static_cast<unsigned long>(beta - i));
    s += c * z[i];
  }
  return s;
}

namespace {

bool length_ok(const mpz_class& size, std::uint64_t delta, int beta) {
  mpz_class d = mpz_class(std::to_string(delta));
  return beta == 0 ? size <= d : size < d;
}

}  // namespace

LengthResult lower_bound_length(std::uint64_t delta, const FamilyVector& z) {
  validate_vector(z);
  const int beta = beta_of(z);
  LengthResult r;
  r.beta_warning = delta < 63 && static_cast<std::uint64_t>(beta) > (std::uint64_t{1} << delta);
  if (!length_ok(prefix_power_size(z, 0), delta, beta)) return r;
  bool constant = true;
  for (int i = 0; i < beta; ++i) constant = constant && z[i] == 0;
  if (constant) {
    r.kind = LengthResult::Kind::kInfinite;
    return r;
  }
  // Strictly increasing: exponential then binary search for the last good t.
  std::uint64_t lo = 0, hi = 1;
  while (length_ok(prefix_power_size(z, hi), delta, beta)) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    if (length_ok(prefix_power_size(z, mid), delta, beta))
      lo = mid;
    else
      hi = mid;
  }
  r.kind = LengthResult::Kind::kFinite;
  r.t = lo;
  return r;
}

LengthResult lower_bound_length_iterative(std::uint64_t delta, const FamilyVector& z, std::uint64_t cap) {
  validate_vector(z);
  const int beta = beta_of(z);
  LengthResult r;
  r.beta_warning = delta < 63 && static_cast<std::uint64_t>(beta) > (std::uint64_t{1} << delta);
  auto size = [](const BigVector& v) {
    mpz_class s = 0;
    for (const auto& x : v) s += x;
    return s;
  };
  BigVector cur = to_big(z);
  if (!length_ok(size(cur), delta, beta)) return r;
  for (std::uint64_t t = 0; t < cap; ++t) {
    BigVector next = prefix_vector(cur);
    if (next == cur) {
      r.kind = LengthResult::Kind::kInfinite;
      return r;
    }
    if (!length_ok(size(next), delta, beta)) {
      r.kind = LengthResult::Kind::kFinite;
      r.t = t;
      return r;
    }
    cur = std::move(next);
  }
  r.kind = LengthResult::Kind::kCapHit;
  r.t = cap;
  return r;
}

RulingResult ruling_set_lower_bound(std::uint64_t delta, std::uint64_t alpha, std::uint64_t c, std::uint64_t beta) {
  if (delta < 1 || c < 1) throw Error(ErrorCode::kInvalid, "Δ and c must be positive");
  const mpz_class k = mpz_class(std::to_string(c)) * (mpz_class(std::to_string(alpha)) + 1);
  const mpz_class d(std::to_string(delta));
  auto good = [&](std::uint64_t t) {
    mpz_class top = mpz_class(std::to_string(t)) + mpz_class(std::to_string(beta));
    mpz_class b;
    mpz_bin_ui(b.get_mpz_t(), top.get_mpz_t(), static_cast<unsigned long>(beta));
    return k * b < d;
  };
  RulingResult r;
  if (!good(0)) return r;
  if (beta == 0) {
    r.kind = LengthResult::Kind::kInfinite;
    return r;
  }
  std::uint64_t lo = 0, hi = 1;
  while (good(hi)) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    std::uint64_t mid = lo + (hi - lo) / 2;
    (good(mid) ? lo : hi) = mid;
  }
  r.kind = LengthResult::Kind::kFinite;
  r.t = lo;
  r.t_minus_beta = static_cast<std::int64_t>(lo) - static_cast<std::int64_t>(beta);
  return r;
}

std::optional<std::uint64_t> ruling_floor_bound(std::uint64_t delta, std::uint64_t alpha, std::uint64_t c,
                                                std::uint64_t beta) {
  if (beta == 0 || c == 0) return std::nullopt;
  const long double x = static_cast<long double>(delta) / (static_cast<long double>(c) * (alpha + 1.0L));
  if (x <= 1) return std::nullopt;
  const long double e = std::exp(1.0L);
  if (static_cast<long double>(beta) > std::log(x) / (2 * e)) return std::nullopt;
  const long double t = static_cast<long double>(beta) / (2 * e) * std::pow(x, 1.0L / beta);
  return static_cast<std::uint64_t>(std::floor(t));
}

LiftingKind parse_lifting(const std::string& s) {
  if (s == "single-step") return LiftingKind::kSingleStep;
  if (s == "multi-step") return LiftingKind::kMultiStep;
  if (s == "zero-round") return LiftingKind::kZeroRound;
  if (s == "pn-lower") return LiftingKind::kPnLower;
  if (s == "threshold") return LiftingKind::kThreshold;
  if (s == "deterministic") return LiftingKind::kDeterministic;
  throw Error(ErrorCode::kInvalid, "unknown lifting bound '" + s +
                                       "' (single-step | multi-step | zero-round | pn-lower | threshold | "
                                       "deterministic)");
}

const char* to_string(LiftingKind k) {
  switch (k) {
    case LiftingKind::kSingleStep:
      return "single-step";
    case LiftingKind::kMultiStep:
      return "multi-step";
    case LiftingKind::kZeroRound:
      return "zero-round";
    case LiftingKind::kPnLower:
      return "pn-lower";
    case LiftingKind::kThreshold:
      return "threshold";
    case LiftingKind::kDeterministic:
      return "deterministic";
  }
  return "?";
}

namespace {

double log_add(double a, double b) {
  if (std::isinf(a) && a < 0) return b;
  if (std::isinf(b) && b < 0) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalid, "lifting bound domain error: " + what);
}

}  // namespace

LiftingResult lifting_bound(const LiftingParams& q, LiftingKind which) {
  require(std::isfinite(q.delta) && q.delta >= 2, "Δ must be at least 2");
  LiftingResult r;
  const double d = q.delta;
  switch (which) {
    case LiftingKind::kSingleStep:
    case LiftingKind::kMultiStep: {
      require(q.f >= 1, "f(Δ) must be at least 1");
      require(q.p >= 0 && q.p <= 1, "p must lie in [0,1]");
      const double lp = q.p == 0 ? -std::numeric_limits<double>::infinity() : std::log(q.p);
      if (which == LiftingKind::kSingleStep) {
        auto once = [&](double l) {
          double term = std::log(2.0) / (d + 1) + d / (d + 1) * std::log(d * q.f) + l / (d + 1);
          return log_add(term, l);
        };
        r.log_value = once(once(lp));
      } else {
        require(q.j >= 0 && std::floor(q.j) == q.j, "j must be a nonnegative integer");
        if (q.j == 0)
          r.log_value = lp;
        else
          r.log_value = 2 * std::log(2 * d * q.f) + lp * std::exp(-2 * q.j * std::log(d + 1));
      }
      break;
    }
    case LiftingKind::kZeroRound:
      require(q.f >= 1, "f(Δ) must be at least 1");
      r.log_value = -(3 * d * d * std::log(d) + d * d * std::log(q.f));
      break;
    case LiftingKind::kPnLower:
      require(q.f >= 1, "f(Δ) must be at least 1");
      require(q.t >= 0, "t must be nonnegative");
      r.log_value = -std::exp(10 * q.t * std::log(d)) * std::log(q.f);
      break;
    case LiftingKind::kThreshold:
    case LiftingKind::kDeterministic: {
      require(q.n > 1, "n must exceed 1");
      require(q.f > 1, "f(Δ) must exceed 1");
      const double ld = std::log(d);
      r.is_log = false;
      if (which == LiftingKind::kThreshold) {
        require(std::log(q.n) > 0, "log n must be positive");
        r.value = (std::log(std::log(q.n)) / ld - std::log(std::log(q.f)) / ld) / 10;
      } else {
        require(q.t >= 0, "t must be nonnegative");
        r.value = std::min(q.t, std::log(q.n) / ld - std::log(std::log(q.f)) / ld);
      }
      r.log_value = std::log(std::abs(r.value));
      return r;
    }
  }
  r.value = std::exp(r.log_value);
  return r;
}

}  // namespace relim
