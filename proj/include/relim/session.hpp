#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "relim/errors.hpp"

namespace relim {

using json = nlohmann::json;

struct HistoryEntry {
  std::string problem;  // canonical problem text
  json action;          // {"op", "params", "result"}
  std::string timestamp;
};

struct Session {
  std::string id;
  std::string name;
  std::string notes;
  std::vector<HistoryEntry> history;
  int cursor = 0;
  std::string created;
  std::string updated;
  std::int64_t updated_ms = 0;

  json to_json() const;
  // Unknown fields are ignored. Throws Error(kInvalid) on a malformed document.
  static Session from_json(const json& j);
};

// Session views returned by the API.
json session_view(const Session& s);
json session_summary(const Session& s);

// Runs one session action against `problem`; returns {"result", "problem"}
// where "problem" is the next snapshot.
json execute_action(const std::string& problem, const json& action, const Context& ctx);

// Initial problem text for a create request.
std::string initial_problem(const json& body, const Context& ctx);

// One JSON file per session, replaced through a temporary file and rename.
class SessionStore {
 public:
  explicit SessionStore(std::string dir, Context ctx = {});

  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::string& dir() const { return dir_; }

  json create(const json& body);
  json list() const;
  json get(const std::string& id) const;
  // Branch-on-edit: drops history after the cursor, then appends.
  json apply(const std::string& id, const json& action);
  json seek(const std::string& id, int cursor);
  json clone(const std::string& id);
  std::string export_problem(const std::string& id) const;
  // Re-executes the action log from snapshot 0 and diffs against the stored snapshots.
  json replay(const std::string& id) const;

  std::shared_ptr<const Session> snapshot(const std::string& id) const;

  // Runs after the temporary file is written and before the rename.
  void set_commit_hook(std::function<void(const std::string&)> hook) { hook_ = std::move(hook); }

 private:
  struct Entry {
    std::mutex write;  // serializes mutations of one session
    mutable std::mutex ptr;
    std::shared_ptr<const Session> current;
  };

  std::shared_ptr<Entry> entry(const std::string& id) const;
  void persist(const Session& s) const;
  void publish(Entry& e, Session s);
  json insert(Session s);
  Context request_context() const;

  std::string dir_;
  Context ctx_;
  std::vector<std::string> warnings_;
  mutable std::mutex map_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::function<void(const std::string&)> hook_;
};

std::string new_uuid();
std::string utc_timestamp(std::int64_t* ms = nullptr);

}  // namespace relim
