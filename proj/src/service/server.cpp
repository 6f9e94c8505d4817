#include "rxsentinel/service/server.hpp"

#include <httplib.h>

namespace rxsentinel::service {

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::string pharmacist_of(const httplib::Request& req) {
  const std::string id = req.get_header_value(kPharmacistHeader);
  return id.empty() ? "anonymous" : id;
}

// Parses a request body, answering 400 itself when it is not JSON.
bool parse_body(const httplib::Request& req, httplib::Response& res, nlohmann::json& out) {
  out = nlohmann::json::parse(req.body, nullptr, false);
  if (out.is_discarded()) {
    send(res, {400, {{"code", "BAD_REQUEST"}, {"message", "body is not valid JSON"}}});
    return false;
  }
  return true;
}

}  // namespace

ReviewServer::ReviewServer(StudyState& state)
    : state_(state), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers",
                          std::string("Content-Type, ") + kPharmacistHeader}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });
  s.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    send(res, state_.health());
  });
  s.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
    send(res, state_.metrics());
  });
  s.Get("/queue/next", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, state_.next(pharmacist_of(req)));
  });
  s.Post(R"(/profiles/([^/]+)/ratings)", [this](const httplib::Request& req,
                                                httplib::Response& res) {
    nlohmann::json body;
    if (parse_body(req, res, body)) send(res, state_.rate(req.matches[1], body, pharmacist_of(req)));
  });
  s.Get(R"(/profiles/([^/]+)/prediction)", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
    send(res, state_.prediction(req.matches[1], pharmacist_of(req)));
  });
  s.Post(R"(/profiles/([^/]+)/agreement)", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
    nlohmann::json body;
    if (parse_body(req, res, body)) {
      send(res, state_.agreement(req.matches[1], body, pharmacist_of(req)));
    }
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                             std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, {500, {{"code", "INTERNAL"}, {"message", what}}});
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(nlohmann::json{{"code", "NOT_FOUND"}, {"message", "no such route"}}.dump(),
                      "application/json");
    }
  });
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool ReviewServer::bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool ReviewServer::listen_after_bind() { return server_->listen_after_bind(); }

void ReviewServer::stop() {
  if (server_->is_running()) server_->stop();
}

void ReviewServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace rxsentinel::service
