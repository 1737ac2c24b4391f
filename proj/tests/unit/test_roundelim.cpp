#include <fstream>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "relim/family.hpp"
#include "relim/roundelim.hpp"

using namespace relim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Random problem over labels a.. with explicit concrete rows.
std::string random_concrete_problem(std::mt19937_64& rng, int labels, int dn) {
  std::vector<std::string> sigma;
  for (int i = 0; i < labels; ++i) sigma.push_back(std::string(1, static_cast<char>('a' + i)));
  auto rows = [&](int arity) {
    std::string out;
    int count = 0;
    for (const auto& m : oracle::multisets(sigma, arity))
      if (rng() % 3 == 0) {
        for (std::size_t i = 0; i < m.size(); ++i) out += (i ? " " : "") + m[i];
        out += "\n";
        ++count;
      }
    if (count == 0) {
      for (int i = 0; i < arity; ++i) out += (i ? " " : "") + sigma[rng() % labels];
      out += "\n";
    }
    return out;
  };
  return "delta " + std::to_string(dn) + " 2\nnodes:\n" + rows(dn) + "edges:\n" + rows(2);
}

// Engine set-label ids rewritten with members in input-label order.
std::string normalized_set(const Problem& input, const std::string& id) {
  Label l = Label::parse(id);
  std::vector<std::string> members;
  for (int i = 0; i < input.label_count(); ++i)
    for (const auto& m : l.members)
      if (m.id == input.label(i).id) members.push_back(m.id);
  return oracle::set_id(members);
}

oracle::Constraint normalized(const Problem& input, const Problem& out, Side s) {
  oracle::Constraint r;
  for (const auto& m : oracle::concrete(out, s)) {
    oracle::Multiset n;
    for (const auto& id : m) n.push_back(normalized_set(input, id));
    r.insert(oracle::sorted(n));
  }
  return r;
}

// Swaps the node and edge sides.
Problem swapped(const Problem& p) {
  return Problem::make(p.delta_e(), p.delta_n(), p.labels(), p.edges(), p.nodes());
}

const std::string kMis = "delta 3 2\nnodes:\nM^3\nP O^2\nedges:\nM [O P]\nO^2\n";

}  // namespace

TEST_CASE("re matches the brute-force quantifier step") {
  std::mt19937_64 rng(3);
  int nonempty = 0;
  for (int it = 0; it < 60; ++it) {
    Problem p = parse_problem(random_concrete_problem(rng, 2 + static_cast<int>(rng() % 2), 3));
    oracle::ReResult ref = oracle::re(p);
    Problem out;
    try {
      out = apply_re(p);
    } catch (const Error& e) {
      // An empty result is reported as an error; the oracle must agree.
      CHECK(ref.edges.empty());
      continue;
    }
    ++nonempty;
    CHECK(normalized(p, out, Side::kEdge) == ref.edges);
    CHECK(normalized(p, out, Side::kNode) == ref.nodes);
  }
  CHECK(nonempty > 20);
}

TEST_CASE("rere agrees with re on the side-swapped problem") {
  std::mt19937_64 rng(8);
  for (int it = 0; it < 30; ++it) {
    Problem p = parse_problem(random_concrete_problem(rng, 3, 2));
    Problem a, b;
    bool a_ok = true, b_ok = true;
    try {
      a = apply_rere(p);
    } catch (const Error&) {
      a_ok = false;
    }
    try {
      b = swapped(apply_re(swapped(p)));
    } catch (const Error&) {
      b_ok = false;
    }
    REQUIRE(a_ok == b_ok);
    if (a_ok) CHECK(same_semantics(a, b));
  }
}

TEST_CASE("sinkless orientation step matches the golden files") {
  for (int d : {3, 4, 5}) {
    const std::string dir = RELIM_GOLDEN_DIR;
    Problem p = parse_problem(slurp(dir + "/sinkless_" + std::to_string(d) + ".txt"));
    Problem out = rename_labels(apply_re(p), RenamingPolicy::parse("map:(W)=W;(B W)=B"));
    CHECK(format_problem(out) == slurp(dir + "/sinkless_re_" + std::to_string(d) + ".txt"));
  }
}

TEST_CASE("renaming by union and intersection of colors") {
  Problem p = parse_problem("delta 2 2\nnodes:\n(L{0.1} L{0.2}) (X L{0.1})\nedges:\n(L{0.1} L{0.2}) (X L{0.1})\n");
  Problem u = rename_labels(p, RenamingPolicy::union_of_colors());
  CHECK(u.find("L{0.1,0.2}").has_value());
  CHECK(u.find("L{0.1}").has_value());
  Problem i = rename_labels(p, RenamingPolicy::intersection_of_colors());
  CHECK(i.find("X").has_value());
  CHECK_FALSE(i.find("L{0.1,0.2}").has_value());
}

TEST_CASE("bijection search finds a relabeling") {
  Problem p = parse_problem(kMis);
  Problem q = parse_problem("delta 3 2\nnodes:\nb^3\nc a^2\nedges:\nb [a c]\na^2\n");
  auto m = find_bijection(q, p);
  REQUIRE(m.has_value());
  CHECK(m->at("b") == "M");
  CHECK(m->at("c") == "P");
  Problem r = rename_labels(q, RenamingPolicy::explicit_map(*m));
  CHECK(r == p);
}

TEST_CASE("relaxations are checked") {
  Problem p = parse_problem(kMis);
  RelaxAction merge;
  merge.kind = RelaxAction::Kind::kMerge;
  merge.labels = {"P", "O"};
  merge.target = "Q";
  Problem r = apply_relaxations(p, {merge});
  CHECK(r.find("Q").has_value());
  CHECK_FALSE(r.find("P").has_value());

  RelaxAction remove;
  remove.kind = RelaxAction::Kind::kRemoveConfig;
  remove.side = Side::kNode;
  remove.config = "M^3";
  CHECK_THROWS_AS(apply_relaxations(p, {remove}), Error);

  RelaxAction add;
  add.kind = RelaxAction::Kind::kAddConfig;
  add.side = Side::kEdge;
  add.config = "P^2";
  Problem added = apply_relaxations(p, {add});
  CHECK(expand(added, Side::kEdge).size() == expand(p, Side::kEdge).size() + 1);
}

TEST_CASE("zero-round solvability") {
  CHECK_FALSE(zero_round_check(parse_problem(kMis)).solvable);
  CHECK(zero_round_check(parse_problem("delta 3 2\nnodes:\nA^3\nedges:\nA^2\n")).solvable);
  for (int d = 3; d <= 5; ++d) CHECK_FALSE(zero_round_check(build_family_problem(d, {d})).solvable);
}

TEST_CASE("zero-round check agrees with the star oracle") {
  std::mt19937_64 rng(17);
  int solvable = 0;
  for (int it = 0; it < 100; ++it) {
    Problem p = parse_problem(random_concrete_problem(rng, 2 + static_cast<int>(rng() % 3), 3));
    const bool ref = oracle::zero_round_star(p);
    CHECK(zero_round_check(p).solvable == ref);
    solvable += ref;
  }
  CHECK(solvable > 0);
  CHECK(solvable < 100);
}

TEST_CASE("fixed point detection") {
  FixedPointResult fp = detect_fixed_point(build_family_problem(3, {3}), {RenamingPolicy::union_of_colors(),
                                                                         RenamingPolicy::intersection_of_colors()});
  CHECK(fp.semantic);
  CHECK(fp.is_fixed_point);
  FixedPointResult mis = detect_fixed_point(parse_problem(kMis), {RenamingPolicy::none(), RenamingPolicy::search_bijection()});
  CHECK_FALSE(mis.is_fixed_point);
}

TEST_CASE("normal form is idempotent and preserves zero-round status") {
  std::mt19937_64 rng(21);
  for (int it = 0; it < 30; ++it) {
    Problem p = parse_problem(random_concrete_problem(rng, 3, 3));
    Problem r = reduce_problem(p);
    CHECK(reduce_problem(r) == r);
    CHECK(zero_round_check(r).solvable == zero_round_check(p).solvable);
  }
}

TEST_CASE("caps are enforced") {
  Context ctx;
  ctx.caps.re_delta = 2;
  CHECK_THROWS_AS(apply_re(parse_problem(kMis), ctx), Error);
  try {
    apply_re(parse_problem(kMis), ctx);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCap);
  }
}

TEST_CASE("sequence runs and records traces") {
  SequencePolicy pol;
  SequenceResult r = run_sequence(build_family_problem(3, {3}), 2, pol);
  REQUIRE(r.traces.size() == 2);
  CHECK_FALSE(r.aborted.has_value());
  CHECK(same_semantics(r.traces[1].output, build_family_problem(3, {3})));
}
