#include "relim/analysis.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>

namespace relim {

// ---------------------------------------------------------------- boxes

namespace {

bool leq_rec(const Config& a, const Config& b, std::size_t k, unsigned used, std::vector<int>& perm) {
  if (k == a.slots.size()) return true;
  for (std::size_t j = 0; j < b.slots.size(); ++j) {
    if (used & (1U << j)) continue;
    if (!a.slots[k].subset_of(b.slots[j])) continue;
    perm[k] = static_cast<int>(j);
    if (leq_rec(a, b, k + 1, used | (1U << j), perm)) return true;
  }
  return false;
}

// Calls emit(box) for every consensus of `a` and `b`: one slot of each is
// united, the remaining slots are paired up and intersected.
template <class F>
void consensus(const Config& a, const Config& b, F&& emit) {
  const int n = a.arity();
  Config r;
  r.slots.resize(n);
  std::vector<int> rest_a;
  std::vector<char> used(n);
  for (int i = 0; i < n; ++i) {
    if (i > 0 && a.slots[i] == a.slots[i - 1]) continue;
    for (int j = 0; j < n; ++j) {
      if (j > 0 && b.slots[j] == b.slots[j - 1]) continue;
      const LabelSet& ai = a.slots[i];
      const LabelSet& bj = b.slots[j];
      if (ai.subset_of(bj) || bj.subset_of(ai)) continue;
      r.slots[0] = ai | bj;
      rest_a.clear();
      for (int k = 0; k < n; ++k)
        if (k != i) rest_a.push_back(k);
      std::fill(used.begin(), used.end(), 0);
      used[j] = 1;
      // Backtracking over bijections, skipping equal b-slots at each level.
      auto rec = [&](auto&& self, std::size_t pos) -> void {
        if (pos == rest_a.size()) {
          Config out = r;
          out.canonicalize();
          emit(std::move(out));
          return;
        }
        const LabelSet& as = a.slots[rest_a[pos]];
        for (int t = 0; t < n; ++t) {
          if (used[t]) continue;
          bool dup = false;
          for (int u = 0; u < t && !dup; ++u)
            dup = !used[u] && b.slots[u] == b.slots[t];
          if (dup) continue;
          LabelSet x = as & b.slots[t];
          if (x.empty()) continue;
          used[t] = 1;
          r.slots[pos + 1] = x;
          self(self, pos + 1);
          used[t] = 0;
        }
      };
      rec(rec, 0);
    }
  }
}

}  // namespace

bool box_leq(const Config& a, const Config& b, std::vector<int>* perm) {
  if (a.arity() != b.arity()) return false;
  std::vector<int> p(a.slots.size());
  bool ok = leq_rec(a, b, 0, 0, p);
  if (ok && perm) *perm = p;
  return ok;
}

std::vector<Config> remove_dominated(std::vector<Config> boxes) {
  for (auto& b : boxes) b.canonicalize();
  std::sort(boxes.begin(), boxes.end());
  boxes.erase(std::unique(boxes.begin(), boxes.end()), boxes.end());
  // Larger boxes first so that dominators are kept before the boxes they cover.
  std::vector<std::size_t> weight(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i)
    for (const auto& s : boxes[i].slots) weight[i] += s.count();
  std::vector<std::size_t> order(boxes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return weight[x] > weight[y]; });
  std::vector<Config> kept;
  for (std::size_t i : order) {
    bool dominated = false;
    for (const auto& k : kept)
      if (box_leq(boxes[i], k)) {
        dominated = true;
        break;
      }
    if (!dominated) kept.push_back(boxes[i]);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<Config> maximal_boxes(const std::vector<Config>& cs, int arity, const Context& ctx) {
  for (const auto& c : cs)
    if (c.arity() != arity) throw Error(ErrorCode::kArity, "arity mismatch in quantifier step");
  std::vector<Config> boxes = remove_dominated(cs);
  std::vector<char> alive(boxes.size(), 1);
  std::unordered_set<Config, ConfigHash> seen(boxes.begin(), boxes.end());
  std::deque<std::size_t> work;
  for (std::size_t i = 0; i < boxes.size(); ++i) work.push_back(i);
  std::size_t alive_count = boxes.size();

  auto add = [&](Config&& r) {
    if (!seen.insert(r).second) return;
    for (std::size_t k = 0; k < boxes.size(); ++k)
      if (alive[k] && box_leq(r, boxes[k])) return;
    for (std::size_t k = 0; k < boxes.size(); ++k)
      if (alive[k] && box_leq(boxes[k], r)) {
        alive[k] = 0;
        --alive_count;
      }
    boxes.push_back(std::move(r));
    alive.push_back(1);
    ++alive_count;
    if (alive_count > ctx.caps.boxes)
      throw Error(ErrorCode::kCap, "quantifier step exceeds cap of " + std::to_string(ctx.caps.boxes) + " boxes",
                  "{\"boxes\":" + std::to_string(alive_count) + "}");
    work.push_back(boxes.size() - 1);
  };

  while (!work.empty()) {
    std::size_t cur = work.front();
    work.pop_front();
    if (!alive[cur]) continue;
    ctx.deadline.check("quantifier step");
    for (std::size_t k = 0; k <= cur && k < boxes.size(); ++k) {
      if (!alive[k] || !alive[cur]) continue;
      // Copies: `add` may reallocate `boxes`.
      Config a = boxes[cur], b = boxes[k];
      std::vector<Config> produced;
      consensus(a, b, [&](Config&& r) { produced.push_back(std::move(r)); });
      for (auto& r : produced) add(std::move(r));
    }
  }
  std::vector<Config> out;
  for (std::size_t k = 0; k < boxes.size(); ++k)
    if (alive[k]) out.push_back(boxes[k]);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------- diagrams

namespace {

void finish_diagram(Diagram& d) {
  const int n = d.n;
  d.class_of.assign(n, -1);
  d.classes.clear();
  for (int y = 0; y < n; ++y) {
    if (d.class_of[y] >= 0) continue;
    int c = static_cast<int>(d.classes.size());
    d.classes.push_back({});
    for (int x = y; x < n; ++x)
      if (d.class_of[x] < 0 && d.at_least_as_strong(x, y) && d.at_least_as_strong(y, x)) {
        d.class_of[x] = c;
        d.classes[c].push_back(x);
      }
  }
  d.edges.clear();
  const int m = static_cast<int>(d.classes.size());
  for (int a = 0; a < m; ++a) {
    int ya = d.classes[a][0];
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      int xb = d.classes[b][0];
      if (!d.strictly_stronger(xb, ya)) continue;
      bool between = false;
      for (int c = 0; c < m && !between; ++c) {
        if (c == a || c == b) continue;
        int zc = d.classes[c][0];
        between = d.strictly_stronger(zc, ya) && d.strictly_stronger(xb, zc);
      }
      if (!between) d.edges.push_back({ya, xb});
    }
  }
  std::sort(d.edges.begin(), d.edges.end());
}

}  // namespace

Diagram diagram_of(const std::vector<Config>& cs, int arity, int n, Side side, const Context& ctx) {
  Diagram d;
  d.side = side;
  d.n = n;
  d.stronger.assign(n, LabelSet::range(n));
  std::optional<ConcreteSet> concrete;
  try {
    concrete = expand_configurations(cs, arity, ctx.caps.expand);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kCap) throw;
  }
  if (concrete) {
    const ConcreteSet& s = *concrete;
    std::vector<int> v, w;
    for (Concrete c : s.items()) {
      v = unpack(c, arity);
      for (int k = 0; k < arity; ++k) {
        if (k > 0 && v[k] == v[k - 1]) continue;
        int y = v[k];
        LabelSet cand = d.stronger[y];
        cand.reset(y);
        cand.for_each([&](int x) {
          w = v;
          w[k] = x;
          std::sort(w.begin(), w.end());
          if (!s.contains(pack(w))) d.stronger[y].reset(x);
        });
      }
    }
  } else {
    d.exact = false;
    std::vector<Config> boxes = maximal_boxes(cs, arity, ctx);
    for (const auto& b : boxes) {
      ctx.deadline.check("diagram");
      for (int k = 0; k < arity; ++k) {
        b.slots[k].for_each([&](int y) {
          LabelSet cand = d.stronger[y];
          cand.reset(y);
          cand.for_each([&](int x) {
            if (b.slots[k].test(x)) return;
            Config r = b;
            r.slots[k] = LabelSet::single(x);
            bool covered = false;
            for (const auto& m : boxes)
              if (box_leq(r, m)) {
                covered = true;
                break;
              }
            if (!covered) d.stronger[y].reset(x);
          });
        });
      }
    }
  }
  finish_diagram(d);
  return d;
}

Diagram compute_diagram(const Problem& p, Side side, const Context& ctx) {
  return diagram_of(p.constraint(side), p.arity(side), p.label_count(), side, ctx);
}

LabelSet gen_closure(const LabelSet& ls, const Diagram& d) {
  LabelSet out;
  ls.for_each([&](int i) {
    if (i >= d.n) throw Error(ErrorCode::kInvalid, "label index outside the diagram");
    out |= d.stronger[i];
  });
  return out;
}

bool is_right_closed(const LabelSet& ls, const Diagram& d) { return gen_closure(ls, d) == ls; }

// ---------------------------------------------------------------- relaxation

bool label_within(const Label& a, const Label& b) {
  if (a.kind == LabelKind::kSet && b.kind == LabelKind::kSet) {
    // Members are sorted by label_less; ids are canonical.
    std::size_t j = 0;
    for (const auto& m : a.members) {
      while (j < b.members.size() && label_less(b.members[j], m)) ++j;
      if (j == b.members.size() || b.members[j].id != m.id) return false;
      ++j;
    }
    return true;
  }
  return a.id == b.id;
}

bool slot_within(const Problem& pa, const LabelSet& a, const Problem& pb, const LabelSet& b) {
  if (&pa == &pb && a.subset_of(b)) return true;
  bool ok = true;
  a.for_each([&](int x) {
    if (!ok) return;
    const Label& la = pa.label(x);
    bool found = false;
    b.for_each([&](int y) {
      if (!found && label_within(la, pb.label(y))) found = true;
    });
    ok = found;
  });
  return ok;
}

namespace {

bool relax_rec(const Problem& pa, const Config& a, const Problem& pb, const Config& b, std::size_t k, unsigned used,
               std::vector<int>& perm) {
  if (k == a.slots.size()) return true;
  for (std::size_t j = 0; j < b.slots.size(); ++j) {
    if (used & (1U << j)) continue;
    if (!slot_within(pa, a.slots[k], pb, b.slots[j])) continue;
    perm[k] = static_cast<int>(j);
    if (relax_rec(pa, a, pb, b, k + 1, used | (1U << j), perm)) return true;
  }
  return false;
}

}  // namespace

RelaxResult is_relaxation(const Problem& pa, const Config& a, const Problem& pb, const Config& b) {
  if (a.arity() != b.arity())
    throw Error(ErrorCode::kArity, "relaxation check between configurations of different arity");
  RelaxResult r;
  r.perm.assign(a.slots.size(), -1);
  r.ok = relax_rec(pa, a, pb, b, 0, 0, r.perm);
  if (!r.ok) r.perm.clear();
  return r;
}

RelaxResult is_relaxation(const Problem& pa, const std::vector<Config>& a, const Problem& pb,
                          const std::vector<Config>& b) {
  RelaxResult r;
  r.ok = true;
  for (const auto& c : a) {
    int target = -1;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (is_relaxation(pa, c, pb, b[j]).ok) {
        target = static_cast<int>(j);
        break;
      }
    r.mapping.push_back(target);
    if (target < 0 && r.ok) {
      r.ok = false;
      r.failing = c;
    }
  }
  return r;
}

// ---------------------------------------------------------------- zero rounds

ZeroRoundResult zero_round_check(const Problem& p, const PortConstraint& pc, const Context& ctx) {
  if (!pc.unconstrained)
    throw Error(ErrorCode::kUnsupported, "zero-round check supports unconstrained port numbering only");
  if (p.delta_e() != 2) throw Error(ErrorCode::kInvalid, "zero-round check requires rank-2 edges");
  ConcreteSet nodes = expand(p, Side::kNode, ctx);
  ConcreteSet edges = expand(p, Side::kEdge, ctx);
  ZeroRoundResult r;
  for (Concrete c : nodes.items()) {
    ++r.configurations_checked;
    std::vector<int> v = unpack(c, p.delta_n());
    std::optional<std::pair<int, int>> bad;
    for (std::size_t i = 0; i < v.size() && !bad; ++i)
      for (std::size_t j = i; j < v.size() && !bad; ++j)
        if (!edges.contains(std::vector<int>{v[i], v[j]})) bad = std::make_pair(v[i], v[j]);
    if (!bad) {
      r.solvable = true;
      r.witness = v;
      r.failing_pair.reset();
      return r;
    }
    if (!r.failing_pair) {
      r.witness = v;
      r.failing_pair = bad;
    }
  }
  return r;
}

}  // namespace relim
