#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relim/problem.hpp"
#include "relim/roundelim.hpp"

namespace relim {

// ---- vectors z = [z_0, ..., z_beta]

using FamilyVector = std::vector<int>;
using BigVector = std::vector<mpz_class>;

// Accepts "1,0,2" or "[1,0,2]".
FamilyVector parse_vector(const std::string& s);
std::string format_vector(const FamilyVector& z);
std::string format_vector(const BigVector& z);
int beta_of(const FamilyVector& z);
long total_of(const FamilyVector& z);
void validate_vector(const FamilyVector& z);  // nonempty, nonnegative, |z| >= 1

BigVector to_big(const FamilyVector& z);
BigVector prefix_vector(const BigVector& z);
BigVector prefix_iter(const BigVector& z, std::uint64_t j);
mpz_class binomial(unsigned long n, unsigned long k);

// ---- problems

std::vector<ColorId> family_colors(const FamilyVector& z);
int level_of(const std::vector<ColorId>& colors);  // -1 for the empty set

Problem build_family_problem(int delta, const FamilyVector& z);
Problem build_fixedpoint_variant(int delta);

// Closed-form edge-side strength: x is at least as strong as y.
bool closed_form_stronger(const Label& x, const Label& y);

// 2^Δ (1 + len(z)).
long label_bound(int delta, const FamilyVector& z);

// ---- characterized intermediates

enum class Intermediate { kReEdge, kRelaxedNode, kEstarEdge };
Intermediate parse_intermediate(const std::string& s);
const char* to_string(Intermediate w);

// Shape of a label of the relaxed intermediate problem.
struct StarForm {
  enum class Kind { kX, kU, kP, kColor };
  Kind kind = Kind::kX;
  int i = 0;
  int j = 0;
  std::vector<ColorId> colors;  // kColor
};

struct StarProblem {
  Problem problem;  // labels Σ*, nodes N', edges from the pairing rules
  // Every form producing a label, by label id. Distinct forms may coincide as sets.
  std::map<std::string, std::vector<StarForm>> forms;
};

// Requires |z| ≤ Δ when len(z)=0 and |z| ≤ Δ-1 otherwise.
Problem expected_intermediate(int delta, const FamilyVector& z, Intermediate which);
StarProblem star_problem(int delta, const FamilyVector& z);
// Node rows of the relaxed intermediate, one form per port.
std::vector<std::vector<StarForm>> star_node_rows(int delta, const FamilyVector& z);

// Text form of a StarForm: X, U<i>, P<i>, or C<i,j>{l.k,...}.
std::string format_form(const StarForm& f);
StarForm parse_form(const std::string& s);

// ---- projection onto Π_Δ(prefix(z))

// Label before the X-padding step.
Label project_form(const StarForm& f, const FamilyVector& z);
// Projects one node's ports and applies the X padding on the lowest eligible ports.
std::vector<Label> project_node(const std::vector<StarForm>& ports, const FamilyVector& z);

// ---- one-step law

struct OneStepReport {
  int delta = 0;
  FamilyVector z;
  FamilyVector z_next;
  int re_labels = 0;
  int rere_labels = 0;
  std::size_t rere_nodes = 0;
  bool re_matches_oracle = false;
  bool relaxed_contains = false;
  bool estar_matches = false;
  bool projection_checked = false;
  bool projection_ok = false;
  bool label_bound_ok = false;
  double seconds = 0;
  std::vector<std::string> notes;
  bool ok() const {
    return re_matches_oracle && relaxed_contains && estar_matches && label_bound_ok &&
           (!projection_checked || projection_ok);
  }
};

OneStepReport check_one_step(int delta, const FamilyVector& z, const Context& ctx = {});

// Checks the relaxed intermediate for an already computed re/rere pair.
OneStepReport check_step_artifacts(int delta, const FamilyVector& z, const Problem& re, const Problem& rere,
                                   const Context& ctx = {});

// Relaxation policy for run_sequence that follows the family: each step is
// certified with check_step_artifacts and yields Π_Δ(prefix(z)).
SequencePolicy family_sequence_policy(int delta, const FamilyVector& z0, const Context& ctx = {});

// ---- calculators

struct LengthResult {
  enum class Kind { kFinite, kInfinite, kNone, kCapHit };
  Kind kind = Kind::kNone;
  std::uint64_t t = 0;
  bool beta_warning = false;  // β > 2^Δ
  std::string str() const;
};

// Exact: uses |prefix^t(z)| = Σ_i z_i C(t+β-i, β-i), which is constant in t
// iff z is zero below level β, and strictly increasing otherwise.
LengthResult lower_bound_length(std::uint64_t delta, const FamilyVector& z);
// Direct iteration of prefix(·); returns kCapHit after `cap` iterations.
LengthResult lower_bound_length_iterative(std::uint64_t delta, const FamilyVector& z,
                                          std::uint64_t cap = 1'000'000);
mpz_class prefix_power_size(const FamilyVector& z, std::uint64_t t);

struct RulingResult {
  LengthResult::Kind kind = LengthResult::Kind::kNone;
  std::uint64_t t = 0;
  std::int64_t t_minus_beta = 0;
  std::string str() const;
};

RulingResult ruling_set_lower_bound(std::uint64_t delta, std::uint64_t alpha, std::uint64_t c, std::uint64_t beta);

// Floor bound on t valid when β ≤ ln(x)/(2e), x = Δ/(c(α+1)); nullopt otherwise.
std::optional<std::uint64_t> ruling_floor_bound(std::uint64_t delta, std::uint64_t alpha, std::uint64_t c,
                                                std::uint64_t beta);

enum class LiftingKind { kSingleStep, kMultiStep, kZeroRound, kPnLower, kThreshold, kDeterministic };
LiftingKind parse_lifting(const std::string& s);
const char* to_string(LiftingKind k);

struct LiftingParams {
  double delta = 0;
  double f = 0;  // label-count bound f(Δ)
  double p = 0;  // local failure probability
  double j = 0;  // steps
  double t = 0;  // rounds
  double n = 0;  // nodes
};

struct LiftingResult {
  double log_value = 0;  // natural log of the bound (probability kinds)
  double value = 0;      // exp(log_value), or the round count for threshold/deterministic
  bool is_log = true;
};

LiftingResult lifting_bound(const LiftingParams& params, LiftingKind which);

}  // namespace relim
