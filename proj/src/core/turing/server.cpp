// SPDX-License-Identifier: Apache-2.0
#include <httplib.h>

#include <mutex>

#include "turing/turing.hpp"

namespace molswap::turing {

struct HttpServer::Impl {
  Service& service;
  ServerConfig cfg;
  httplib::Server server;
  int port = -1;
  std::mutex state_mutex;
  bool stop_requested = false;
  bool serving = false;

  Impl(Service& s, ServerConfig c) : service(s), cfg(std::move(c)) {}

  void reply(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  static json parse_body(const httplib::Request& req) {
    return json::parse(req.body, nullptr, /*allow_exceptions=*/false);
  }

  void install() {
    if (!cfg.allowed_origin.empty()) {
      server.set_default_headers({{"Access-Control-Allow-Origin", cfg.allowed_origin},
                                  {"Access-Control-Allow-Headers", "Content-Type"},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
      server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
    server.Post("/api/session", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.create_session(parse_body(req)));
    });
    server.Get(R"(/api/session/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.get_status(req.matches[1]));
    });
    server.Get(R"(/api/session/([0-9a-f]+)/round)", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.get_round(req.matches[1]));
    });
    server.Post(R"(/api/session/([0-9a-f]+)/round)", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.post_round(req.matches[1], parse_body(req)));
    });
    server.Get(R"(/api/session/([0-9a-f]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, service.get_result(req.matches[1]));
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) res.set_content(json{{"error", "not found"}}.dump(), "application/json");
    });
    if (!cfg.static_dir.empty()) server.set_mount_point("/", cfg.static_dir.string());
  }
};

HttpServer::HttpServer(Service& service, ServerConfig cfg) : impl_(std::make_unique<Impl>(service, std::move(cfg))) {
  impl_->install();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->cfg.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->cfg.host);
  } else {
    impl_->port = impl_->server.bind_to_port(impl_->cfg.host, impl_->cfg.port) ? impl_->cfg.port : -1;
  }
  return impl_->port;
}

void HttpServer::serve() {
  {
    std::lock_guard lock(impl_->state_mutex);
    if (impl_->stop_requested) return;
    impl_->serving = true;
  }
  impl_->server.listen_after_bind();
}

bool HttpServer::listen() {
  if (bind() < 0) return false;
  serve();
  return true;
}

// httplib ignores stop() until its accept loop runs, so a stop that races
// serve() waits for the loop first.
void HttpServer::stop() {
  if (!impl_) return;
  std::lock_guard lock(impl_->state_mutex);
  impl_->stop_requested = true;
  if (!impl_->serving) return;
  impl_->server.wait_until_ready();
  impl_->server.stop();
}

}  // namespace molswap::turing
