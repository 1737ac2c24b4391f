#include "relim/service.hpp"

#include "httplib.h"
#include "relim/ops.hpp"

namespace relim {

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kParse:
    case ErrorCode::kArity: return 422;
    case ErrorCode::kInvalid:
    case ErrorCode::kUnsupported: return 400;
    case ErrorCode::kCap:
    case ErrorCode::kDeadline:
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kIo:
    case ErrorCode::kInternal: return 500;
  }
  return 500;
}

json error_body(const Error& e) {
  json details = nullptr;
  if (!e.details().empty()) {
    details = json::parse(e.details(), nullptr, false);
    if (details.is_discarded()) details = e.details();
  }
  return {{"code", to_string(e.code())}, {"message", e.what()}, {"details", details}};
}

struct Service::Impl {
  SessionStore& store;
  Context ctx;
  httplib::Server server;

  Impl(SessionStore& s, Context c) : store(s), ctx(c) {}

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(dump_json(body), "application/json");
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kInvalid, "request body is not valid JSON");
    return j;
  }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send_json(res, http_status(e.code()), error_body(e));
    } catch (const std::exception& e) {
      send_json(res, 500, {{"code", "internal_error"}, {"message", e.what()}, {"details", nullptr}});
    }
  }

  void routes() {
    using Req = httplib::Request;
    using Res = httplib::Response;
    server.Get("/health", [](const Req&, Res& res) { send_json(res, 200, {{"ok", true}}); });
    server.Get("/ops", [](const Req&, Res& res) { send_json(res, 200, op_names()); });
    server.Post(R"(/ops/([a-z\-]+))", [this](const Req& req, Res& res) {
      guarded(res, [&] {
        Context c = ctx;
        c.deadline = Deadline::after(ctx.caps.deadline_seconds);
        json r = run_op(req.matches[1], body_of(req), c);
        res.status = 200;
        res.set_content(dump_json(r), "application/json");
      });
    });
    server.Post("/sessions", [this](const Req& req, Res& res) {
      guarded(res, [&] { send_json(res, 201, store.create(body_of(req))); });
    });
    server.Get("/sessions", [this](const Req&, Res& res) { guarded(res, [&] { send_json(res, 200, store.list()); }); });
    server.Get(R"(/sessions/([0-9a-f\-]+))", [this](const Req& req, Res& res) {
      guarded(res, [&] { send_json(res, 200, store.get(req.matches[1])); });
    });
    server.Post(R"(/sessions/([0-9a-f\-]+)/actions)", [this](const Req& req, Res& res) {
      guarded(res, [&] { send_json(res, 200, store.apply(req.matches[1], body_of(req))); });
    });
    server.Post(R"(/sessions/([0-9a-f\-]+)/seek)", [this](const Req& req, Res& res) {
      guarded(res, [&] {
        json b = body_of(req);
        if (!b.contains("cursor") || !b["cursor"].is_number_integer())
          throw Error(ErrorCode::kInvalid, "seek needs an integer 'cursor'");
        send_json(res, 200, store.seek(req.matches[1], b["cursor"].get<int>()));
      });
    });
    server.Post(R"(/sessions/([0-9a-f\-]+)/clone)", [this](const Req& req, Res& res) {
      guarded(res, [&] { send_json(res, 201, store.clone(req.matches[1])); });
    });
    server.Get(R"(/sessions/([0-9a-f\-]+)/export)", [this](const Req& req, Res& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(store.export_problem(req.matches[1]), "text/plain; charset=utf-8");
      });
    });
    server.Get(R"(/sessions/([0-9a-f\-]+)/replay)", [this](const Req& req, Res& res) {
      guarded(res, [&] { send_json(res, 200, store.replay(req.matches[1])); });
    });
  }
};

Service::Service(SessionStore& store, Context ctx) : impl_(std::make_unique<Impl>(store, ctx)) { impl_->routes(); }

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace relim
