#include "relim/roundelim.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <unordered_map>

namespace relim {

namespace {

Side other(Side s) { return s == Side::kNode ? Side::kEdge : Side::kNode; }

Label set_label(const Problem& p, const LabelSet& s) {
  std::vector<Label> ms;
  s.for_each([&](int i) { ms.push_back(p.label(i)); });
  return Label::set_of(std::move(ms));
}

bool family_like(const Label& l) {
  if (l.kind == LabelKind::kSet)
    return std::any_of(l.members.begin(), l.members.end(), family_like);
  return l.kind != LabelKind::kPlain;
}

bool family_like(const Problem& p) {
  return std::any_of(p.labels().begin(), p.labels().end(), [](const Label& l) { return family_like(l); });
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------- quantifiers

Problem quantifier_step(const Problem& p, Side universal, const Context& ctx) {
  std::vector<Config> boxes = maximal_boxes(p.constraint(universal), p.arity(universal), ctx);

  std::unordered_map<LabelSet, int, LabelSetHash> index;
  std::vector<LabelSet> members;
  std::vector<Label> labels;
  std::vector<Config> uq;
  for (const auto& b : boxes) {
    Config c;
    for (const auto& s : b.slots) {
      auto [it, fresh] = index.emplace(s, static_cast<int>(members.size()));
      if (fresh) {
        if (members.size() >= static_cast<std::size_t>(kMaxLabels))
          throw Error(ErrorCode::kCap, "quantifier step produces more than " + std::to_string(kMaxLabels) + " labels");
        members.push_back(s);
        labels.push_back(set_label(p, s));
      }
      c.slots.push_back(LabelSet::single(it->second));
    }
    uq.push_back(std::move(c));
  }

  std::vector<Config> ex;
  for (const auto& c : p.constraint(other(universal))) {
    Config r;
    bool ok = true;
    for (const auto& d : c.slots) {
      LabelSet s;
      for (std::size_t l = 0; l < members.size(); ++l)
        if (members[l].intersects(d)) s.set(static_cast<int>(l));
      if (s.empty()) {
        ok = false;
        break;
      }
      r.slots.push_back(s);
    }
    if (ok) ex.push_back(std::move(r));
  }
  ex = remove_dominated(std::move(ex));

  if (universal == Side::kEdge)
    return Problem::make(p.delta_n(), p.delta_e(), std::move(labels), std::move(ex), std::move(uq));
  return Problem::make(p.delta_n(), p.delta_e(), std::move(labels), std::move(uq), std::move(ex));
}

Problem apply_re(const Problem& p, const Context& ctx) {
  if (p.delta_e() > p.delta_n()) throw Error(ErrorCode::kInvalid, "edge rank exceeds node degree");
  if (p.delta_n() > ctx.caps.re_delta)
    throw Error(ErrorCode::kCap, "re is capped at degree " + std::to_string(ctx.caps.re_delta),
                "{\"delta\":" + std::to_string(p.delta_n()) + "}");
  return quantifier_step(p, Side::kEdge, ctx);
}

Problem apply_rere(const Problem& p, const Context& ctx) {
  if (p.delta_e() > p.delta_n()) throw Error(ErrorCode::kInvalid, "edge rank exceeds node degree");
  if (p.delta_n() > ctx.caps.re_delta || (family_like(p) && p.delta_n() > ctx.caps.rere_delta_family))
    throw Error(ErrorCode::kCap, "rere is capped at this degree",
                "{\"delta\":" + std::to_string(p.delta_n()) + "}");
  return quantifier_step(p, Side::kNode, ctx);
}

// ---------------------------------------------------------------- renaming

RenamingPolicy RenamingPolicy::parse(const std::string& s) {
  if (s == "none" || s.empty()) return none();
  if (s == "union") return union_of_colors();
  if (s == "intersection") return intersection_of_colors();
  if (s == "search" || s == "search-bijection") return search_bijection();
  if (s.rfind("map:", 0) == 0) {
    std::map<std::string, std::string> m;
    std::istringstream in(s.substr(4));
    std::string item;
    while (std::getline(in, item, ';')) {
      if (item.empty()) continue;
      auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kInvalid, "malformed map entry '" + item + "'");
      m[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return explicit_map(std::move(m));
  }
  throw Error(ErrorCode::kInvalid, "unknown renaming policy '" + s + "'");
}

std::string to_string(const RenamingPolicy& p) {
  switch (p.kind) {
    case RenamingPolicy::Kind::kNone: return "none";
    case RenamingPolicy::Kind::kUnion: return "union";
    case RenamingPolicy::Kind::kIntersection: return "intersection";
    case RenamingPolicy::Kind::kSearchBijection: return "search";
    case RenamingPolicy::Kind::kExplicit: {
      std::string s = "map:";
      bool first = true;
      for (const auto& [k, v] : p.map) {
        if (!first) s += ";";
        s += k + "=" + v;
        first = false;
      }
      return s;
    }
  }
  return "none";
}

namespace {

Label combine_colors(const Label& l, bool use_union) {
  if (l.kind != LabelKind::kSet) return l;
  if (l.members.size() == 1) return l.members[0];
  if (!std::all_of(l.members.begin(), l.members.end(), [](const Label& m) { return m.is_color_like(); })) return l;
  std::vector<ColorId> acc = l.members[0].colors;
  for (std::size_t i = 1; i < l.members.size(); ++i) {
    const auto& c = l.members[i].colors;
    std::vector<ColorId> next;
    if (use_union)
      std::set_union(acc.begin(), acc.end(), c.begin(), c.end(), std::back_inserter(next));
    else
      std::set_intersection(acc.begin(), acc.end(), c.begin(), c.end(), std::back_inserter(next));
    acc = std::move(next);
  }
  return Label::color(std::move(acc));
}

Problem relabel(const Problem& p, const std::vector<Label>& image) {
  return Problem::make(p.delta_n(), p.delta_e(), image, p.nodes(), p.edges());
}

// Occurrence signature used to prune bijection candidates.
std::vector<std::vector<int>> signatures(const Problem& p) {
  std::vector<std::vector<int>> sig(p.label_count());
  for (Side s : {Side::kNode, Side::kEdge})
    for (const auto& c : p.constraint(s))
      for (const auto& slot : c.slots)
        slot.for_each([&](int i) { sig[i].push_back((s == Side::kNode ? 1000 : 2000) + slot.count()); });
  for (auto& v : sig) std::sort(v.begin(), v.end());
  return sig;
}

}  // namespace

std::optional<std::map<std::string, std::string>> find_bijection(const Problem& p, const Problem& target,
                                                                  const Context& ctx) {
  if (p.delta_n() != target.delta_n() || p.delta_e() != target.delta_e()) return std::nullopt;
  if (p.label_count() != target.label_count()) return std::nullopt;
  if (p.nodes().size() != target.nodes().size() || p.edges().size() != target.edges().size()) return std::nullopt;
  const int n = p.label_count();
  if (n > ctx.caps.bijection_labels)
    throw Error(ErrorCode::kCap, "bijection search is capped at " + std::to_string(ctx.caps.bijection_labels) +
                                     " labels");
  auto sp = signatures(p), st = signatures(target);
  std::vector<int> perm(n, -1);
  std::vector<char> used(n, 0);
  std::optional<std::map<std::string, std::string>> found;
  auto rec = [&](auto&& self, int i) -> bool {
    if (i == n) {
      std::vector<Label> image(n);
      for (int k = 0; k < n; ++k) image[k] = target.label(perm[k]);
      if (!(relabel(p, image) == target)) return false;
      std::map<std::string, std::string> m;
      for (int k = 0; k < n; ++k) m[p.label(k).id] = target.label(perm[k]).id;
      found = std::move(m);
      return true;
    }
    ctx.deadline.check("bijection search");
    for (int j = 0; j < n; ++j) {
      if (used[j] || sp[i] != st[j]) continue;
      used[j] = 1;
      perm[i] = j;
      if (self(self, i + 1)) return true;
      used[j] = 0;
    }
    return false;
  };
  rec(rec, 0);
  return found;
}

Problem rename_labels(const Problem& p, const RenamingPolicy& policy, const Problem* target, const Context& ctx) {
  std::vector<Label> image = p.labels();
  switch (policy.kind) {
    case RenamingPolicy::Kind::kNone: return p;
    case RenamingPolicy::Kind::kUnion:
    case RenamingPolicy::Kind::kIntersection:
      for (auto& l : image) l = combine_colors(l, policy.kind == RenamingPolicy::Kind::kUnion);
      break;
    case RenamingPolicy::Kind::kExplicit:
      for (auto& l : image) {
        auto it = policy.map.find(l.id);
        if (it != policy.map.end()) l = Label::parse(it->second);
      }
      break;
    case RenamingPolicy::Kind::kSearchBijection: {
      if (!target) return p;
      auto m = find_bijection(p, *target, ctx);
      if (!m) return p;
      for (auto& l : image) l = Label::parse(m->at(l.id));
      break;
    }
  }
  return relabel(p, image);
}

Problem restore_subconfigurations(const Problem& raw, Side universal, const RenamingPolicy& policy) {
  if (policy.kind != RenamingPolicy::Kind::kNone && policy.kind != RenamingPolicy::Kind::kUnion &&
      policy.kind != RenamingPolicy::Kind::kIntersection)
    throw Error(ErrorCode::kInvalid, "restoring subconfigurations needs the none, union or intersection policy");
  const bool use_union = policy.kind == RenamingPolicy::Kind::kUnion;
  auto image_of = [&](const Label& l) {
    return policy.kind == RenamingPolicy::Kind::kNone ? l : combine_colors(l, use_union);
  };

  std::vector<Label> labels;
  std::unordered_map<std::string, int> index;
  auto intern = [&](const Label& l) {
    auto [it, fresh] = index.emplace(l.id, static_cast<int>(labels.size()));
    if (fresh) labels.push_back(l);
    return it->second;
  };
  std::vector<int> renamed(raw.label_count());
  for (int i = 0; i < raw.label_count(); ++i) renamed[i] = intern(image_of(raw.label(i)));

  std::vector<LabelSet> subsets(raw.label_count());
  for (int i = 0; i < raw.label_count(); ++i) {
    const Label& l = raw.label(i);
    if (l.kind != LabelKind::kSet) {
      subsets[i] = LabelSet::single(renamed[i]);
      continue;
    }
    const std::size_t k = l.members.size();
    if (k > 20) throw Error(ErrorCode::kCap, "set-label with more than 20 members");
    for (std::uint32_t mask = 1; mask < (1U << k); ++mask) {
      std::vector<Label> ms;
      for (std::size_t b = 0; b < k; ++b)
        if (mask & (1U << b)) ms.push_back(l.members[b]);
      subsets[i].set(intern(image_of(Label::set_of(std::move(ms)))));
      if (labels.size() > static_cast<std::size_t>(kMaxLabels))
        throw Error(ErrorCode::kCap, "restored problem exceeds " + std::to_string(kMaxLabels) + " labels");
    }
  }

  auto map_slots = [&](const std::vector<Config>& cs, bool widen) {
    std::vector<Config> out;
    for (const auto& c : cs) {
      Config r;
      for (const auto& s : c.slots) {
        LabelSet t;
        s.for_each([&](int i) {
          if (widen) t |= subsets[i];
          else t.set(renamed[i]);
        });
        r.slots.push_back(t);
      }
      out.push_back(std::move(r));
    }
    return out;
  };
  std::vector<Config> uq = map_slots(raw.constraint(universal), true);
  std::vector<Config> ex = map_slots(raw.constraint(other(universal)), false);
  if (universal == Side::kEdge)
    return Problem::make(raw.delta_n(), raw.delta_e(), std::move(labels), std::move(ex), std::move(uq));
  return Problem::make(raw.delta_n(), raw.delta_e(), std::move(labels), std::move(uq), std::move(ex));
}

// ---------------------------------------------------------------- comparison

bool same_semantics(const Problem& a, const Problem& b, const Context& ctx) {
  if (a.delta_n() != b.delta_n() || a.delta_e() != b.delta_e()) return false;
  std::vector<int> to_b(a.label_count(), -1);
  LabelSet used = a.used_labels();
  bool ok = true;
  used.for_each([&](int i) {
    auto f = b.find(a.label(i).id);
    if (!f) ok = false;
    else to_b[i] = *f;
  });
  if (!ok) return false;
  for (Side s : {Side::kNode, Side::kEdge}) {
    ConcreteSet ea = expand(a, s, ctx);
    ConcreteSet eb = expand(b, s, ctx);
    if (ea.size() != eb.size()) return false;
    std::vector<Concrete> mapped;
    mapped.reserve(ea.size());
    for (Concrete c : ea.items()) {
      auto v = unpack(c, a.arity(s));
      for (auto& x : v) x = to_b[x];
      std::sort(v.begin(), v.end());
      mapped.push_back(pack(v));
    }
    std::sort(mapped.begin(), mapped.end());
    if (mapped != eb.items()) return false;
  }
  return true;
}

namespace {

std::vector<Config> singletons(const std::vector<Concrete>& v, int arity) {
  std::vector<Config> out;
  out.reserve(v.size());
  for (Concrete c : v) {
    Config cfg;
    for (int x : unpack(c, arity)) cfg.slots.push_back(LabelSet::single(x));
    out.push_back(std::move(cfg));
  }
  return out;
}

bool weaker_match(const std::vector<int>& a, const std::vector<int>& b, const Diagram& d, std::size_t k,
                  unsigned used) {
  if (k == a.size()) return true;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (used & (1U << j)) continue;
    if (j > 0 && b[j] == b[j - 1] && !(used & (1U << (j - 1)))) continue;
    if (!d.at_least_as_strong(b[j], a[k])) continue;
    if (weaker_match(a, b, d, k + 1, used | (1U << j))) return true;
  }
  return false;
}

// Drops configurations strictly dominated by another one under `d`.
std::vector<Concrete> prune(const std::vector<Concrete>& v, int arity, const Diagram& d, const Context& ctx) {
  std::vector<std::vector<int>> u;
  u.reserve(v.size());
  for (Concrete c : v) u.push_back(unpack(c, arity));
  std::vector<Concrete> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((i & 255) == 0) ctx.deadline.check("reduce");
    bool dominated = false;
    for (std::size_t j = 0; j < v.size() && !dominated; ++j) {
      if (i == j) continue;
      dominated = weaker_match(u[i], u[j], d, 0, 0) && !weaker_match(u[j], u[i], d, 0, 0);
    }
    if (!dominated) out.push_back(v[i]);
  }
  return out;
}

}  // namespace

Problem reduce_problem(const Problem& p, const Context& ctx) {
  std::vector<Concrete> nv = expand(p, Side::kNode, ctx).items();
  std::vector<Concrete> ev = expand(p, Side::kEdge, ctx).items();
  const int n = p.label_count();
  while (true) {
    Diagram de = diagram_of(singletons(ev, p.delta_e()), p.delta_e(), n, Side::kEdge, ctx);
    std::vector<Concrete> nv2 = prune(nv, p.delta_n(), de, ctx);
    Diagram dn = diagram_of(singletons(nv2, p.delta_n()), p.delta_n(), n, Side::kNode, ctx);
    std::vector<Concrete> ev2 = prune(ev, p.delta_e(), dn, ctx);
    bool stable = nv2.size() == nv.size() && ev2.size() == ev.size();
    nv = std::move(nv2);
    ev = std::move(ev2);
    if (stable) break;
  }
  return Problem::make(p.delta_n(), p.delta_e(), p.labels(), singletons(nv, p.delta_n()),
                       singletons(ev, p.delta_e()));
}

// ---------------------------------------------------------------- steps

StepTrace step(const Problem& p, const std::pair<RenamingPolicy, RenamingPolicy>& policies, const Context& ctx) {
  auto t0 = std::chrono::steady_clock::now();
  StepTrace t;
  t.input = p;
  // A bijection search has nothing to match against before the second half.
  t.intermediate = rename_labels(apply_re(p, ctx), policies.first, nullptr, ctx);
  Problem rr = apply_rere(t.intermediate, ctx);
  t.output = rename_labels(rr, policies.second, &p, ctx);
  t.stats.input_labels = p.label_count();
  t.stats.intermediate_labels = t.intermediate.label_count();
  t.stats.output_labels = t.output.label_count();
  t.stats.intermediate_nodes = t.intermediate.nodes().size();
  t.stats.intermediate_edges = t.intermediate.edges().size();
  t.stats.output_nodes = t.output.nodes().size();
  t.stats.output_edges = t.output.edges().size();
  t.stats.seconds = seconds_since(t0);
  return t;
}

FixedPointResult detect_fixed_point(const Problem& p, const std::pair<RenamingPolicy, RenamingPolicy>& policies,
                                    const Context& ctx) {
  FixedPointResult r;
  r.trace = step(p, policies, ctx);
  const Problem& out = r.trace.output;
  r.literal = out == p;
  r.semantic = r.literal || same_semantics(out, p, ctx);
  r.normalized = r.semantic || same_semantics(reduce_problem(out, ctx), reduce_problem(p, ctx), ctx);
  r.is_fixed_point = r.literal || r.semantic || r.normalized;
  return r;
}

// ---------------------------------------------------------------- relaxations

std::string describe(const RelaxAction& a) {
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
  };
  switch (a.kind) {
    case RelaxAction::Kind::kMerge: return "merge " + join(a.labels) + " -> " + a.target;
    case RelaxAction::Kind::kMapToStronger:
      return "map " + join(a.labels) + " -> " + a.target + " (" + to_string(a.side) + " diagram)";
    case RelaxAction::Kind::kAddConfig: return std::string("add ") + to_string(a.side) + " " + a.config;
    case RelaxAction::Kind::kRemoveConfig: return std::string("remove ") + to_string(a.side) + " " + a.config;
  }
  return "";
}

namespace {

Problem merge_into(const Problem& p, const std::vector<std::string>& sources, const Label& target) {
  std::vector<Label> image = p.labels();
  for (const auto& s : sources) image[p.index_of(s)] = target;
  return relabel(p, image);
}

// True if every choice of `c` (a configuration of `q`) is allowed by `q`'s constraint.
bool covered(const Problem& q, Side s, const Config& c, const ConcreteSet& allowed) {
  for (const auto& t : q.constraint(s))
    if (box_leq(c, t)) return true;
  ConcreteSet mine = expand_configurations({c}, q.arity(s), allowed.size() + 1'000'000);
  for (Concrete x : mine.items())
    if (!allowed.contains(x)) return false;
  return true;
}

}  // namespace

Problem apply_relaxations(const Problem& p, const std::vector<RelaxAction>& actions, std::vector<std::string>* log,
                          const Context& ctx) {
  Problem cur = p;
  std::map<std::string, std::string> image;  // input id -> current id
  for (const auto& l : p.labels()) image[l.id] = l.id;

  for (const auto& a : actions) {
    switch (a.kind) {
      case RelaxAction::Kind::kMapToStronger: {
        if (a.labels.size() != 1) throw Error(ErrorCode::kInvalid, "map takes exactly one source label");
        int from = cur.index_of(a.labels[0]);
        int to = cur.index_of(a.target);
        Diagram d = compute_diagram(cur, a.side, ctx);
        if (!d.at_least_as_strong(to, from))
          throw Error(ErrorCode::kInvalid, "'" + a.target + "' is not at least as strong as '" + a.labels[0] + "'");
        [[fallthrough]];
      }
      case RelaxAction::Kind::kMerge: {
        if (a.labels.empty()) throw Error(ErrorCode::kInvalid, "merge needs at least one label");
        for (const auto& s : a.labels) cur.index_of(s);
        Label target = Label::parse(a.target);
        cur = merge_into(cur, a.labels, target);
        for (auto& [k, v] : image)
          if (std::find(a.labels.begin(), a.labels.end(), v) != a.labels.end()) v = target.id;
        break;
      }
      case RelaxAction::Kind::kAddConfig: {
        Config c = parse_config(cur, a.config);
        if (c.arity() != cur.arity(a.side)) throw Error(ErrorCode::kArity, "added configuration has wrong arity");
        std::vector<Config> nodes = cur.nodes(), edges = cur.edges();
        (a.side == Side::kNode ? nodes : edges).push_back(c);
        cur = Problem::make(cur.delta_n(), cur.delta_e(), cur.labels(), nodes, edges);
        break;
      }
      case RelaxAction::Kind::kRemoveConfig: {
        Config c = parse_config(cur, a.config);
        std::vector<Config> nodes = cur.nodes(), edges = cur.edges();
        auto& v = a.side == Side::kNode ? nodes : edges;
        auto it = std::find(v.begin(), v.end(), c);
        if (it == v.end()) throw Error(ErrorCode::kInvalid, "configuration not present: " + a.config);
        v.erase(it);
        cur = Problem::make(cur.delta_n(), cur.delta_e(), cur.labels(), nodes, edges);
        break;
      }
    }
    if (log) log->push_back(describe(a));
  }

  // Every input configuration, pushed through the label map, must stay allowed.
  for (Side s : {Side::kNode, Side::kEdge}) {
    ConcreteSet allowed = expand(cur, s, ctx);
    for (const auto& c : p.constraint(s)) {
      Config m;
      for (const auto& slot : c.slots) {
        LabelSet t;
        slot.for_each([&](int i) { t.set(cur.index_of(image.at(p.label(i).id))); });
        m.slots.push_back(t);
      }
      m.canonicalize();
      if (!covered(cur, s, m, allowed))
        throw Error(ErrorCode::kInvalid,
                    std::string("actions strengthen the problem: ") + to_string(s) + " configuration " +
                        format_config(p, c) + " is no longer allowed",
                    "{\"side\":\"" + std::string(to_string(s)) + "\",\"configuration\":\"" + format_config(p, c) +
                        "\"}");
    }
  }
  return cur;
}

// ---------------------------------------------------------------- sequences

SequenceResult run_sequence(const Problem& p0, int steps, const SequencePolicy& policy, const Context& ctx) {
  if (steps < 1) throw Error(ErrorCode::kInvalid, "a sequence needs at least one step");
  SequenceResult res;
  Problem cur = p0;
  for (int i = 0; i < steps; ++i) {
    try {
      auto t0 = std::chrono::steady_clock::now();
      StepTrace t;
      t.input = cur;
      t.intermediate = rename_labels(apply_re(cur, ctx), policy.renaming.first, nullptr, ctx);
      Problem rr = apply_rere(t.intermediate, ctx);
      if (policy.relax)
        t.output = policy.relax(i, cur, t.intermediate, rr, t.relaxations);
      else
        t.output = rename_labels(rr, policy.renaming.second, &cur, ctx);
      t.stats.input_labels = cur.label_count();
      t.stats.intermediate_labels = t.intermediate.label_count();
      t.stats.output_labels = t.output.label_count();
      t.stats.intermediate_nodes = t.intermediate.nodes().size();
      t.stats.intermediate_edges = t.intermediate.edges().size();
      t.stats.output_nodes = t.output.nodes().size();
      t.stats.output_edges = t.output.edges().size();
      t.stats.seconds = seconds_since(t0);
      cur = t.output;
      res.traces.push_back(std::move(t));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCap && e.code() != ErrorCode::kDeadline) throw;
      res.aborted = e.code();
      res.abort_message = e.what();
      break;
    }
  }
  return res;
}

}  // namespace relim
