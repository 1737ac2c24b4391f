#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace relim {

enum class ErrorCode {
  kParse,        // malformed problem text
  kArity,        // configuration arity mismatch
  kInvalid,      // precondition violation or bad argument
  kCap,          // configured resource cap exceeded
  kDeadline,     // caller deadline passed
  kUnsupported,  // recognised but deliberately unsupported variant
  kNotFound,     // unknown id
  kConflict,     // concurrent or stale modification
  kIo,           // filesystem failure
  kInternal,     // an invariant that must hold did not
};

const char* to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg, std::string details = {})
      : std::runtime_error(msg), code_(code), details_(std::move(details)) {}
  ErrorCode code() const { return code_; }
  // Free-form JSON text with extra context; may be empty.
  const std::string& details() const { return details_; }

 private:
  ErrorCode code_;
  std::string details_;
};

class ParseError : public Error {
 public:
  ParseError(int line, int col, const std::string& msg);
  int line() const { return line_; }
  int column() const { return col_; }

 private:
  int line_;
  int col_;
};

// Resource limits shared by the engine. Overridable through RELIM_CAPS,
// e.g. "expand=200000,re_delta=5,rere_delta=4,boxes=50000,deadline=30".
struct Caps {
  std::size_t expand = 1'000'000;  // concrete configurations per expansion
  int re_delta = 6;                // largest Δ accepted by apply_re
  int rere_delta_family = 4;       // largest Δ accepted by apply_rere on family problems
  std::size_t boxes = 250'000;     // maximal boxes kept during a quantifier step
  int bijection_labels = 9;        // search-bijection renaming bound on |Σ|
  double deadline_seconds = 60.0;  // default per-request deadline for the service
};

Caps caps_from_env();
Caps parse_caps(const std::string& spec, Caps base = {});

class Deadline {
 public:
  Deadline() = default;
  static Deadline after(double seconds);
  static Deadline none() { return {}; }
  bool expired() const;
  // Throws Error(kDeadline) when expired.
  void check(const char* where) const;

 private:
  bool active_ = false;
  std::chrono::steady_clock::time_point at_{};
};

struct Context {
  Caps caps{};
  Deadline deadline{};
};

}  // namespace relim
