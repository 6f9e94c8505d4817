#pragma once

#include <memory>
#include <string>

#include "rxsentinel/service/study.hpp"

namespace httplib {
class Server;
}

namespace rxsentinel::service {

inline constexpr const char* kPharmacistHeader = "X-Pharmacist-Id";

/// JSON-over-HTTP front end of a StudyState:
///   GET  /queue/next
///   POST /profiles/{id}/ratings
///   GET  /profiles/{id}/prediction
///   POST /profiles/{id}/agreement
///   GET  /metrics
///   GET  /healthz
/// Rejections carry {"code", "message"} bodies.
class ReviewServer {
 public:
  explicit ReviewServer(StudyState& state);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Returns the bound port, or -1.
  int bind_any_port(const std::string& host);
  bool bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  StudyState& state_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace rxsentinel::service
