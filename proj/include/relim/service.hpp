#pragma once

#include <memory>
#include <string>

#include "relim/session.hpp"

namespace relim {

// HTTP status for an engine error.
int http_status(ErrorCode c);
json error_body(const Error& e);

// HTTP/JSON front end over a SessionStore. Also exposes every operation
// statelessly at POST /ops/{name}, returning the same bytes as `relim --json`.
class Service {
 public:
  Service(SessionStore& store, Context ctx = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen_after_bind();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace relim
