#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "relim/family.hpp"

using namespace relim;

TEST_CASE("vectors parse and format") {
  CHECK(parse_vector("[1,0,2]") == FamilyVector{1, 0, 2});
  CHECK(parse_vector("1,0,2") == FamilyVector{1, 0, 2});
  CHECK(format_vector(FamilyVector{1, 0, 2}) == "[1,0,2]");
  CHECK_THROWS_AS(parse_vector("[0,0]"), Error);
  CHECK_THROWS_AS(parse_vector("[1,-1]"), Error);
  CHECK(beta_of({1, 0, 2}) == 2);
  CHECK(total_of({1, 0, 2}) == 3);
}

TEST_CASE("prefix sums") {
  CHECK(prefix_vector(to_big({1, 0})) == to_big({1, 1}));
  CHECK(prefix_vector(to_big({1, 1})) == to_big({1, 2}));
  CHECK(prefix_vector(to_big({2, 0, 1})) == to_big({2, 2, 3}));
  // Iterating from a unit vector yields binomial coefficients.
  for (unsigned j = 0; j <= 12; ++j) {
    BigVector v = prefix_iter(to_big({1, 0, 0, 0}), j);
    for (unsigned k = 0; k < 4; ++k) CHECK(v[k] == oracle::pascal(j + k - 1 + (j == 0 && k == 0 ? 1 : 0), k));
  }
}

TEST_CASE("binomial agrees with Pascal's triangle") {
  for (unsigned n = 0; n <= 60; ++n)
    for (unsigned k = 0; k <= n; ++k) CHECK(binomial(n, k) == oracle::pascal(n, k));
}

TEST_CASE("colored problem matches its definition") {
  for (int d = 3; d <= 4; ++d) {
    Problem p = build_family_problem(d, {d});
    CHECK(oracle::concrete(p, Side::kNode) == oracle::colored_nodes(d));
    CHECK(oracle::concrete(p, Side::kEdge) == oracle::disjoint_edges(d));
  }
}

TEST_CASE("three-color problem matches the hand listing") {
  const std::string text =
      "delta 3 2\nnodes:\n"
      "L{0.1}^3\nL{0.2}^3\nL{0.3}^3\n"
      "L{0.1,0.2}^2 X\nL{0.1,0.3}^2 X\nL{0.2,0.3}^2 X\nL{0.1,0.2,0.3} X^2\n"
      "edges:\n"
      "X [X L{0.1} L{0.2} L{0.3} L{0.1,0.2} L{0.2,0.3} L{0.1,0.3} L{0.1,0.2,0.3}]\n"
      "L{0.1} [X L{0.2} L{0.3} L{0.2,0.3}]\n"
      "L{0.2} [X L{0.1} L{0.3} L{0.1,0.3}]\n"
      "L{0.3} [X L{0.1} L{0.2} L{0.1,0.2}]\n"
      "L{0.1,0.2} [X L{0.3}]\nL{0.1,0.3} [X L{0.2}]\nL{0.2,0.3} [X L{0.1}]\nL{0.1,0.2,0.3} X\n";
  CHECK(same_semantics(parse_problem(text), build_family_problem(3, {3})));
}

TEST_CASE("fixed-point variant matches its definition") {
  for (int d = 3; d <= 4; ++d) {
    Problem v = build_fixedpoint_variant(d);
    CHECK(oracle::concrete(v, Side::kNode) == oracle::variant_nodes(d));
    CHECK(oracle::concrete(v, Side::kEdge) == oracle::disjoint_edges(d));
  }
}

TEST_CASE("label bound") {
  CHECK(label_bound(3, {1, 0}) == 16);
  CHECK(label_bound(4, {4}) == 16);
  for (int d = 3; d <= 5; ++d)
    for (const FamilyVector& z : {FamilyVector{1}, FamilyVector{1, 1}, FamilyVector{1, 0, 1}})
      CHECK(build_family_problem(d, z).label_count() <= label_bound(d, z));
}

TEST_CASE("star forms round-trip through text") {
  for (const std::string s : {"X", "U<2>", "P<1>", "C<1,0>{0.1,1.2}"}) CHECK(format_form(parse_form(s)) == s);
  CHECK_THROWS_AS(parse_form("C<1>{0.1}"), Error);
  CHECK_THROWS_AS(parse_form("Q"), Error);
}

TEST_CASE("one family step on small cases") {
  for (const FamilyVector& z : {FamilyVector{1}, FamilyVector{2}, FamilyVector{1, 0}, FamilyVector{0, 1}, FamilyVector{3}}) {
    OneStepReport r = check_one_step(3, z);
    INFO(format_vector(z));
    CHECK(r.re_matches_oracle);
    CHECK(r.relaxed_contains);
    CHECK(r.estar_matches);
    CHECK(r.label_bound_ok);
    if (r.projection_checked) CHECK(r.projection_ok);
    CHECK(r.ok());
  }
}

TEST_CASE("closed-form length equals direct iteration") {
  std::mt19937_64 rng(9);
  for (int it = 0; it < 300; ++it) {
    const std::uint64_t delta = 1 + rng() % 64;
    const int len = 1 + static_cast<int>(rng() % 5);
    FamilyVector z(len, 0);
    for (auto& x : z) x = static_cast<int>(rng() % 3);
    if (total_of(z) == 0) z[0] = 1;
    LengthResult a = lower_bound_length(delta, z), b = lower_bound_length_iterative(delta, z);
    INFO(delta, " ", format_vector(z));
    CHECK(a.kind == b.kind);
    CHECK(a.t == b.t);
  }
}

TEST_CASE("length of a unit vector follows binomial sizes") {
  // |prefix^j(e_0)| at length k+1 is C(j+k, k); the bound is the last j below Δ.
  for (std::uint64_t delta = 2; delta <= 64; ++delta)
    for (int k = 1; k <= 8; ++k) {
      FamilyVector z(k + 1, 0);
      z[0] = 1;
      std::uint64_t expect = 0;
      while (oracle::pascal(static_cast<unsigned>(expect + 1 + k), k) < delta) ++expect;
      LengthResult r = lower_bound_length(delta, z);
      REQUIRE(r.kind == LengthResult::Kind::kFinite);
      CHECK(r.t == expect);
    }
}

TEST_CASE("ruling-set bound") {
  RulingResult r = ruling_set_lower_bound(16, 0, 1, 2);
  CHECK(r.str() == "4");
  CHECK(r.t_minus_beta == 2);
  CHECK(ruling_set_lower_bound(10, 0, 1, 1).t == 8);
  CHECK(ruling_set_lower_bound(4, 1, 2, 0).kind == LengthResult::Kind::kNone);
  CHECK(ruling_set_lower_bound(5, 1, 2, 0).kind == LengthResult::Kind::kInfinite);
  for (std::uint64_t beta = 1; beta <= 6; ++beta)
    for (std::uint64_t delta = 2; delta <= (1U << 20); delta = delta * 3 / 2 + 1) {
      auto fl = ruling_floor_bound(delta, 0, 1, beta);
      if (!fl) continue;
      CHECK(ruling_set_lower_bound(delta, 0, 1, beta).t >= *fl);
    }
}

TEST_CASE("lifting bounds follow the per-step recursion") {
  for (double d : {3.0, 5.0, 16.0}) {
    for (double f : {8.0, 64.0}) {
      const double lp = std::log(1e-12);
      const double a = std::log(2 * d * f);
      double chain = lp;
      for (int k = 1; k <= 12; ++k) {
        chain = a + chain / (d + 1);
        const double bound = 2 * a + lp / std::pow(d + 1, k);
        CHECK(chain <= bound + 1e-9 * std::abs(bound));
        if (k % 2 == 0) {
          LiftingParams q{d, f, 1e-12, static_cast<double>(k / 2), 0, 0};
          CHECK(lifting_bound(q, LiftingKind::kMultiStep).log_value == doctest::Approx(bound).epsilon(1e-9));
        }
      }
      LiftingParams q{d, f, 1e-12, 1, 0, 0};
      const double one = a + lp / (d + 1);
      CHECK(lifting_bound(q, LiftingKind::kSingleStep).log_value <= a + one / (d + 1) + 1e-9);
    }
  }
  LiftingParams z{3, 8, 0, 0, 0, 0};
  CHECK(lifting_bound(z, LiftingKind::kZeroRound).log_value ==
        doctest::Approx(-(27 * std::log(3.0) + 9 * std::log(8.0))));
  CHECK_THROWS_AS(lifting_bound(LiftingParams{1, 8, 0.1, 1, 0, 0}, LiftingKind::kSingleStep), Error);
}
