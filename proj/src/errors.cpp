#include "relim/errors.hpp"

#include <cstdlib>
#include <sstream>

namespace relim {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kArity: return "arity_error";
    case ErrorCode::kInvalid: return "invalid_argument";
    case ErrorCode::kCap: return "cap_exceeded";
    case ErrorCode::kDeadline: return "deadline_exceeded";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kInternal: return "internal_error";
  }
  return "unknown";
}

static std::string where(int line, int col, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line << ", column " << col << ": " << msg;
  return os.str();
}

ParseError::ParseError(int line, int col, const std::string& msg)
    : Error(ErrorCode::kParse, where(line, col, msg),
            "{\"line\":" + std::to_string(line) + ",\"column\":" + std::to_string(col) + "}"),
      line_(line),
      col_(col) {}

Caps parse_caps(const std::string& spec, Caps base) {
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kInvalid, "malformed cap entry '" + item + "'");
    std::string key = item.substr(0, eq);
    std::string val = item.substr(eq + 1);
    try {
      if (key == "expand") base.expand = std::stoull(val);
      else if (key == "re_delta") base.re_delta = std::stoi(val);
      else if (key == "rere_delta") base.rere_delta_family = std::stoi(val);
      else if (key == "boxes") base.boxes = std::stoull(val);
      else if (key == "bijection") base.bijection_labels = std::stoi(val);
      else if (key == "deadline") base.deadline_seconds = std::stod(val);
      else throw Error(ErrorCode::kInvalid, "unknown cap '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalid, "bad value for cap '" + key + "'");
    }
  }
  return base;
}

Caps caps_from_env() {
  const char* env = std::getenv("RELIM_CAPS");
  if (!env) return {};
  return parse_caps(env);
}

Deadline Deadline::after(double seconds) {
  Deadline d;
  d.active_ = seconds > 0;
  d.at_ = std::chrono::steady_clock::now() +
          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
              std::chrono::duration<double>(seconds));
  return d;
}

bool Deadline::expired() const {
  return active_ && std::chrono::steady_clock::now() > at_;
}

void Deadline::check(const char* where) const {
  if (expired()) throw Error(ErrorCode::kDeadline, std::string("deadline exceeded during ") + where);
}

}  // namespace relim
