#include "relim/session.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "relim/ops.hpp"
#include "relim/problem.hpp"

namespace relim {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- helpers

std::string new_uuid() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  std::uint64_t a = rng(), b = rng();
  a = (a & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;
  b = (b & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(a >> 32),
                static_cast<unsigned>((a >> 16) & 0xffff), static_cast<unsigned>(a & 0xffff),
                static_cast<unsigned>(b >> 48), static_cast<unsigned long long>(b & 0xffffffffffffULL));
  return buf;
}

std::string utc_timestamp(std::int64_t* ms) {
  auto now = std::chrono::system_clock::now();
  auto count = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  if (ms) *ms = count;
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(count % 1000));
  return buf;
}

json Session::to_json() const {
  json h = json::array();
  for (const auto& e : history) h.push_back({{"problem", e.problem}, {"action", e.action}, {"timestamp", e.timestamp}});
  return {{"version", 1},     {"id", id},           {"name", name},
          {"notes", notes},   {"cursor", cursor},   {"created", created},
          {"updated", updated}, {"updated_ms", updated_ms}, {"history", h}};
}

Session Session::from_json(const json& j) {
  try {
    Session s;
    s.id = j.at("id").get<std::string>();
    s.name = j.value("name", "");
    s.notes = j.value("notes", "");
    s.cursor = j.at("cursor").get<int>();
    s.created = j.value("created", "");
    s.updated = j.value("updated", "");
    s.updated_ms = j.value("updated_ms", std::int64_t{0});
    for (const auto& e : j.at("history"))
      s.history.push_back({e.at("problem").get<std::string>(), e.value("action", json()), e.value("timestamp", "")});
    if (s.history.empty()) throw Error(ErrorCode::kInvalid, "session has an empty history");
    if (s.cursor < 0 || s.cursor >= static_cast<int>(s.history.size()))
      throw Error(ErrorCode::kInvalid, "session cursor out of range");
    for (const auto& e : s.history) parse_problem(e.problem);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalid, std::string("malformed session document: ") + e.what());
  }
}

json session_summary(const Session& s) {
  return {{"id", s.id},
          {"name", s.name},
          {"cursor", s.cursor},
          {"length", s.history.size()},
          {"updated", s.updated},
          {"labels", parse_problem(s.history[s.cursor].problem).label_count()}};
}

json session_view(const Session& s) {
  json v = s.to_json();
  v.erase("version");
  v["length"] = s.history.size();
  v["current"] = s.history[s.cursor].problem;
  return v;
}

// ---------------------------------------------------------------- actions

namespace {

struct Alias {
  const char* op;
  bool needs_problem;
};

// Session action names mapped onto operations.
const std::map<std::string, Alias>& aliases() {
  static const std::map<std::string, Alias> a{
      {"parse", {"parse", true}},
      {"re", {"re", true}},
      {"rere", {"rere", true}},
      {"step", {"step", true}},
      {"rename", {"rename", true}},
      {"relax", {"relax", true}},
      {"fixed-point-check", {"fixedpoint", true}},
      {"fixedpoint", {"fixedpoint", true}},
      {"family-build", {"family-build", false}},
      {"sequence", {"sequence", true}},
      {"diagram", {"diagram", true}},
      {"zero-round", {"zero-round", true}},
      {"simulate", {"sim-run", false}},
      {"verify", {"sim-verify", false}},
  };
  return a;
}

std::string calculator_op(const json& params) {
  const std::string c = params.value("calculator", "");
  if (c == "lifting") return "calc-lifting";
  if (c == "lowerbound" || c == "ruling") return "family-lowerbound";
  if (c == "prefix") return "family-prefix";
  if (c == "oracle") return "family-oracle";
  if (c == "project") return "family-project";
  if (c == "check") return "family-check";
  throw Error(ErrorCode::kInvalid, "unknown calculator '" + c + "'");
}

bool has_problem(const json& p) { return p.contains("problem") || p.contains("family") || p.contains("variant"); }

}  // namespace

json execute_action(const std::string& problem, const json& action, const Context& ctx) {
  if (!action.is_object()) throw Error(ErrorCode::kInvalid, "action must be a JSON object");
  const std::string name = action.value("op", "");
  json params = action.value("params", json::object());
  if (!params.is_object()) throw Error(ErrorCode::kInvalid, "action params must be a JSON object");
  std::string op;
  if (name == "calculate") {
    op = calculator_op(params);
  } else if (auto it = aliases().find(name); it != aliases().end()) {
    op = it->second.op;
    if (it->second.needs_problem && !has_problem(params)) params["problem"] = problem;
    if (op == "sim-verify" && params.value("kind", "") == "labeling" && !has_problem(params)) params["problem"] = problem;
  } else {
    throw Error(ErrorCode::kInvalid, "unknown action '" + name + "'");
  }
  json result = run_op(op, params, ctx);
  auto next = produced_problem(op, result);
  return {{"result", result}, {"problem", next ? *next : problem}};
}

std::string initial_problem(const json& body, const Context&) {
  if (!body.is_object()) throw Error(ErrorCode::kInvalid, "request body must be a JSON object");
  if (!has_problem(body)) throw Error(ErrorCode::kInvalid, "give 'problem' text or a 'family' spec");
  return format_problem(problem_from_params(body));
}

// ---------------------------------------------------------------- store

SessionStore::SessionStore(std::string dir, Context ctx) : dir_(std::move(dir)), ctx_(ctx) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create store directory " + dir_ + ": " + ec.message());
  for (const auto& de : fs::directory_iterator(dir_, ec)) {
    const fs::path& path = de.path();
    if (path.extension() != ".json" || path.filename().string().front() == '.') continue;
    try {
      std::ifstream in(path);
      if (!in) throw Error(ErrorCode::kIo, "cannot read");
      Session s = Session::from_json(json::parse(in));
      auto e = std::make_shared<Entry>();
      e->current = std::make_shared<const Session>(std::move(s));
      sessions_[e->current->id] = e;
    } catch (const std::exception& ex) {
      warnings_.push_back("skipping " + path.string() + ": " + ex.what());
    }
  }
  if (ec) throw Error(ErrorCode::kIo, "cannot list store directory " + dir_ + ": " + ec.message());
}

Context SessionStore::request_context() const {
  Context c = ctx_;
  c.deadline = Deadline::after(ctx_.caps.deadline_seconds);
  return c;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(const std::string& id) const {
  std::lock_guard lock(map_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "no session '" + id + "'");
  return it->second;
}

std::shared_ptr<const Session> SessionStore::snapshot(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->ptr);
  return e->current;
}

void SessionStore::persist(const Session& s) const {
  const std::string final_path = (fs::path(dir_) / (s.id + ".json")).string();
  const std::string tmp = (fs::path(dir_) / ("." + s.id + ".json.tmp")).string();
  const std::string text = s.to_json().dump(1) + "\n";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(ErrorCode::kIo, "cannot write " + tmp);
  std::size_t off = 0;
  while (off < text.size()) {
    ssize_t n = ::write(fd, text.data() + off, text.size() - off);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorCode::kIo, "short write to " + tmp);
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) throw Error(ErrorCode::kIo, "cannot sync " + tmp);
  if (hook_) hook_(tmp);
  if (std::rename(tmp.c_str(), final_path.c_str()) != 0) throw Error(ErrorCode::kIo, "cannot rename " + tmp + " to " + final_path);
  int dfd = ::open(dir_.c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

void SessionStore::publish(Entry& e, Session s) {
  persist(s);
  std::lock_guard lock(e.ptr);
  e.current = std::make_shared<const Session>(std::move(s));
}

json SessionStore::insert(Session s) {
  persist(s);
  auto e = std::make_shared<Entry>();
  e->current = std::make_shared<const Session>(std::move(s));
  std::lock_guard lock(map_);
  sessions_[e->current->id] = e;
  return session_view(*e->current);
}

json SessionStore::create(const json& body) {
  Context ctx = request_context();
  Session s;
  s.id = new_uuid();
  s.name = body.value("name", "");
  s.notes = body.value("notes", "");
  s.created = s.updated = utc_timestamp(&s.updated_ms);
  json params = body;
  params.erase("name");
  params.erase("notes");
  s.history.push_back({initial_problem(body, ctx), {{"op", "create"}, {"params", params}}, s.created});
  return insert(std::move(s));
}

json SessionStore::list() const {
  std::vector<std::shared_ptr<const Session>> all;
  {
    std::lock_guard lock(map_);
    for (const auto& [id, e] : sessions_) {
      std::lock_guard l2(e->ptr);
      all.push_back(e->current);
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a->updated_ms != b->updated_ms ? a->updated_ms > b->updated_ms : a->id < b->id;
  });
  json out = json::array();
  for (const auto& s : all) out.push_back(session_summary(*s));
  return out;
}

json SessionStore::get(const std::string& id) const { return session_view(*snapshot(id)); }

json SessionStore::apply(const std::string& id, const json& action) {
  auto e = entry(id);
  std::unique_lock lock(e->write, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::kConflict, "session '" + id + "' is busy");
  std::shared_ptr<const Session> cur;
  {
    std::lock_guard l2(e->ptr);
    cur = e->current;
  }
  if (action.is_object() && action.contains("expect_cursor") && action["expect_cursor"] != json(cur->cursor))
    throw Error(ErrorCode::kConflict, "session cursor moved to " + std::to_string(cur->cursor));
  json clean = {{"op", action.value("op", "")}, {"params", action.value("params", json::object())}};
  json out = execute_action(cur->history[cur->cursor].problem, clean, request_context());
  Session s = *cur;
  s.history.resize(s.cursor + 1);
  s.updated = utc_timestamp(&s.updated_ms);
  clean["result"] = out["result"];
  s.history.push_back({out["problem"].get<std::string>(), clean, s.updated});
  s.cursor = static_cast<int>(s.history.size()) - 1;
  json view = session_view(s);
  publish(*e, std::move(s));
  return {{"session", view}, {"result", out["result"]}};
}

json SessionStore::seek(const std::string& id, int cursor) {
  auto e = entry(id);
  std::unique_lock lock(e->write, std::try_to_lock);
  if (!lock.owns_lock()) throw Error(ErrorCode::kConflict, "session '" + id + "' is busy");
  std::shared_ptr<const Session> cur;
  {
    std::lock_guard l2(e->ptr);
    cur = e->current;
  }
  if (cursor < 0 || cursor >= static_cast<int>(cur->history.size()))
    throw Error(ErrorCode::kInvalid, "cursor " + std::to_string(cursor) + " outside [0," +
                                         std::to_string(cur->history.size()) + ")");
  Session s = *cur;
  s.cursor = cursor;
  json view = session_view(s);
  publish(*e, std::move(s));
  return view;
}

json SessionStore::clone(const std::string& id) {
  Session s = *snapshot(id);
  s.id = new_uuid();
  s.name = s.name.empty() ? "" : s.name + " (fork)";
  s.updated = utc_timestamp(&s.updated_ms);
  return insert(std::move(s));
}

std::string SessionStore::export_problem(const std::string& id) const {
  auto s = snapshot(id);
  return s->history[s->cursor].problem;
}

json SessionStore::replay(const std::string& id) const {
  auto s = snapshot(id);
  json diff = json::array();
  Context ctx = request_context();
  try {
    const json& create = s->history[0].action;
    std::string first = initial_problem(create.value("params", json::object()), ctx);
    if (first != s->history[0].problem)
      diff.push_back({{"index", 0}, {"field", "problem"}, {"expected", s->history[0].problem}, {"actual", first}});
  } catch (const Error& e) {
    diff.push_back({{"index", 0}, {"field", "error"}, {"actual", e.what()}});
  }
  std::string current = s->history[0].problem;
  for (std::size_t i = 1; i < s->history.size(); ++i) {
    const auto& h = s->history[i];
    try {
      json out = execute_action(current, h.action, ctx);
      const std::string p = out["problem"].get<std::string>();
      if (p != h.problem) diff.push_back({{"index", i}, {"field", "problem"}, {"expected", h.problem}, {"actual", p}});
      if (out["result"].dump() != h.action.value("result", json()).dump())
        diff.push_back({{"index", i}, {"field", "result"}});
    } catch (const Error& e) {
      diff.push_back({{"index", i}, {"field", "error"}, {"actual", e.what()}});
    }
    current = h.problem;
  }
  return {{"ok", diff.empty()}, {"diff", diff}, {"length", s->history.size()}};
}

}  // namespace relim
