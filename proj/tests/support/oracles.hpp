#pragma once

// Brute-force reference implementations used by the tests. They work on
// label ids and small alphabets only and share no code with the engine.

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <gmpxx.h>

#include <bit>

#include "relim/problem.hpp"

namespace oracle {

using Multiset = std::vector<std::string>;  // sorted label ids
using Constraint = std::set<Multiset>;

inline Multiset sorted(Multiset m) {
  std::sort(m.begin(), m.end());
  return m;
}

// Every concrete configuration of one side, by label id.
inline Constraint concrete(const relim::Problem& p, relim::Side side) {
  Constraint out;
  for (const auto& cfg : p.constraint(side)) {
    std::vector<std::vector<std::string>> slots;
    for (const auto& s : cfg.slots) {
      std::vector<std::string> ids;
      for (int i = 0; i < p.label_count(); ++i)
        if (s.test(i)) ids.push_back(p.label(i).id);
      slots.push_back(ids);
    }
    Multiset cur;
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == slots.size()) {
        out.insert(sorted(cur));
        return;
      }
      for (const auto& id : slots[k]) {
        cur.push_back(id);
        rec(k + 1);
        cur.pop_back();
      }
    };
    rec(0);
  }
  return out;
}

// All multisets of size k over `alphabet`.
inline std::vector<Multiset> multisets(const std::vector<std::string>& alphabet, int k) {
  std::vector<Multiset> out;
  Multiset cur;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(sorted(cur));
      return;
    }
    for (std::size_t i = from; i < alphabet.size(); ++i) {
      cur.push_back(alphabet[i]);
      rec(i);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Quantifier step with a universal edge side, computed from definitions:
// edge configurations are the maximal multisets of label sets all of whose
// choices are allowed; node configurations are the multisets over the
// surviving sets with at least one allowed choice. Sets are written (a b).
struct ReResult {
  Constraint nodes;
  Constraint edges;
};

inline std::string set_id(const std::vector<std::string>& members) {
  std::string s = "(";
  for (std::size_t i = 0; i < members.size(); ++i) s += (i ? " " : "") + members[i];
  return s + ")";
}

inline ReResult re(const relim::Problem& p) {
  const Constraint E = concrete(p, relim::Side::kEdge);
  const Constraint N = concrete(p, relim::Side::kNode);
  const int de = p.arity(relim::Side::kEdge), dn = p.arity(relim::Side::kNode);
  std::vector<std::string> sigma;
  for (int i = 0; i < p.label_count(); ++i) sigma.push_back(p.label(i).id);
  const int n = static_cast<int>(sigma.size());

  using Tuple = std::vector<unsigned>;  // label-set bitmasks
  // Whether every (or some) choice of one member per set lies in `c`.
  auto choices = [&](const Tuple& t, const Constraint& c, bool every) {
    Multiset cur;
    std::function<bool(std::size_t)> rec = [&](std::size_t k) -> bool {
      if (k == t.size()) return c.count(sorted(cur)) > 0;
      for (int i = 0; i < n; ++i) {
        if (!(t[k] >> i & 1U)) continue;
        cur.push_back(sigma[i]);
        const bool r = rec(k + 1);
        cur.pop_back();
        if (every && !r) return false;
        if (!every && r) return true;
      }
      return every;
    };
    return rec(0);
  };

  std::vector<Tuple> good;
  Tuple cur;
  std::function<void(unsigned)> rec = [&](unsigned from) {
    if (static_cast<int>(cur.size()) == de) {
      if (choices(cur, E, true)) good.push_back(cur);
      return;
    }
    for (unsigned s = from; s < (1U << n); ++s) {
      cur.push_back(s);
      rec(s);
      cur.pop_back();
    }
  };
  rec(1);
  auto dominated = [&](const Tuple& a, const Tuple& b) {
    Tuple pb = b;
    std::sort(pb.begin(), pb.end());
    do {
      bool ok = true;
      for (std::size_t k = 0; k < a.size() && ok; ++k) ok = (a[k] & ~pb[k]) == 0;
      if (ok) return true;
    } while (std::next_permutation(pb.begin(), pb.end()));
    return false;
  };
  std::vector<Tuple> maximal;
  for (const auto& a : good) {
    bool dom = false;
    for (const auto& b : good)
      if (a != b && dominated(a, b)) dom = true;
    if (!dom) maximal.push_back(a);
  }
  auto name = [&](unsigned s) {
    std::vector<std::string> m;
    for (int i = 0; i < n; ++i)
      if (s >> i & 1U) m.push_back(sigma[i]);
    return set_id(m);
  };
  ReResult r;
  std::set<unsigned> used;
  for (const auto& t : maximal) {
    Multiset m;
    for (unsigned s : t) {
      m.push_back(name(s));
      used.insert(s);
    }
    r.edges.insert(sorted(m));
  }
  std::vector<unsigned> labels(used.begin(), used.end());
  Tuple nc;
  std::function<void(std::size_t)> nrec = [&](std::size_t from) {
    if (static_cast<int>(nc.size()) == dn) {
      if (choices(nc, N, false)) {
        Multiset m;
        for (unsigned s : nc) m.push_back(name(s));
        r.nodes.insert(sorted(m));
      }
      return;
    }
    for (std::size_t i = from; i < labels.size(); ++i) {
      nc.push_back(labels[i]);
      nrec(i);
      nc.pop_back();
    }
  };
  nrec(0);
  return r;
}

// Zero rounds on a star: every node runs the same port-to-label map f, so a
// solution exists iff some f gives an allowed node configuration whose labels
// are pairwise compatible, a label with itself included.
inline bool zero_round_star(const relim::Problem& p) {
  const Constraint E = concrete(p, relim::Side::kEdge);
  const Constraint N = concrete(p, relim::Side::kNode);
  for (const auto& cfg : N) {
    bool ok = true;
    for (const auto& a : cfg)
      for (const auto& b : cfg) ok = ok && E.count(sorted({a, b})) > 0;
    if (ok) return true;
  }
  return false;
}

// ---- family definitions over one level of Δ colors

inline std::string color_label(const std::vector<int>& cs) {
  if (cs.empty()) return "X";
  std::string s = "L{";
  for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? "," : "") + std::string("0.") + std::to_string(cs[i]);
  return s + "}";
}

inline std::vector<int> members(unsigned mask, int delta) {
  std::vector<int> v;
  for (int i = 0; i < delta; ++i)
    if (mask >> i & 1U) v.push_back(i + 1);
  return v;
}

// Δ colors on one level: ℓ(C)^{Δ-|C|+1} X^{|C|-1} per nonempty C; edges join disjoint sets.
inline Constraint colored_nodes(int delta) {
  Constraint out;
  for (unsigned m = 1; m < (1U << delta); ++m) {
    const int k = std::popcount(m);
    Multiset c(delta - k + 1, color_label(members(m, delta)));
    for (int i = 0; i < k - 1; ++i) c.push_back("X");
    out.insert(sorted(c));
  }
  return out;
}

inline Constraint disjoint_edges(int delta) {
  Constraint out;
  for (unsigned a = 0; a < (1U << delta); ++a)
    for (unsigned b = 0; b < (1U << delta); ++b)
      if ((a & b) == 0) out.insert(sorted({color_label(members(a, delta)), color_label(members(b, delta))}));
  return out;
}

// Node configurations where some k ports share at least Δ-k+1 colors.
inline Constraint variant_nodes(int delta) {
  Constraint out;
  const unsigned full = (1U << delta) - 1;
  std::vector<unsigned> cur;
  std::function<void(unsigned)> rec = [&](unsigned from) {
    if (static_cast<int>(cur.size()) == delta) {
      bool ok = false;
      for (unsigned pick = 1; pick < (1U << delta) && !ok; ++pick) {
        unsigned inter = full;
        for (int i = 0; i < delta; ++i)
          if (pick >> i & 1U) inter &= cur[i];
        ok = std::popcount(inter) >= delta - std::popcount(pick) + 1;
      }
      if (ok) {
        Multiset m;
        for (unsigned s : cur) m.push_back(color_label(members(s, delta)));
        out.insert(sorted(m));
      }
      return;
    }
    for (unsigned s = from; s <= full; ++s) {
      cur.push_back(s);
      rec(s);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

inline mpz_class pascal(unsigned n, unsigned k) {
  std::vector<mpz_class> row{1};
  for (unsigned i = 1; i <= n; ++i) {
    std::vector<mpz_class> next(i + 1, 1);
    for (unsigned j = 1; j < i; ++j) next[j] = row[j - 1] + row[j];
    row = std::move(next);
  }
  return k <= n ? row[k] : mpz_class(0);
}


}  // namespace oracle
