#include <doctest.h>

#include <httplib.h>

#include <set>
#include <thread>

#include "rxsentinel/service/server.hpp"

using namespace rxsentinel;
using namespace rxsentinel::service;
using nlohmann::json;
using orders::Department;

namespace {

std::vector<QueueEntry> small_queue(int n) {
  std::vector<QueueEntry> q;
  for (int i = 0; i < n; ++i) {
    orders::PharmacologicalProfile p;
    p.hospitalization_id = "H" + std::to_string(i);
    p.patient_id = "P" + std::to_string(i);
    p.department = i % 2 ? Department::nicu : Department::surgery;
    p.as_of = Date(2021, 3, 2);
    p.drugs = {orders::DrugId("AMOX"), orders::DrugId("PARA")};
    q.push_back({p, 0.1 * i, std::vector<std::string>{"AMOX"}});
  }
  return q;
}

eval::ThresholdSet pooled(double t) {
  eval::ThresholdSet s;
  s.pooled = t;
  return s;
}

StudyConfig no_calibration() {
  StudyConfig c;
  c.calibration_fraction = 0.0;
  return c;
}

class Running {
 public:
  explicit Running(StudyState& state) : server_(state) {
    port_ = server_.bind_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client(const std::string& pharmacist) const {
    httplib::Client c("127.0.0.1", port_);
    c.set_default_headers({{kPharmacistHeader, pharmacist}});
    return c;
  }

 private:
  ReviewServer server_;
  int port_ = -1;
  std::thread thread_;
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

httplib::Result post(httplib::Client& c, const std::string& path, const json& body) {
  return c.Post(path, body.dump(), "application/json");
}

}  // namespace

TEST_CASE("http: a full review round trip") {
  StudyState state(small_queue(3), pooled(0.15), no_calibration(), "d1", "");
  Running server(state);
  auto c = server.client("alice");

  auto health = c.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Content-Type") == "application/json");
  CHECK(body_of(health)["artifact_digest"] == "d1");

  auto next = c.Get("/queue/next");
  CHECK(next->status == 200);
  const json view = body_of(next);
  const std::string id = view["profile_id"];
  CHECK(id == "H0@2021-03-02");
  CHECK(view["orders"].size() == 2);
  CHECK(!view.contains("score"));

  auto early = c.Get("/profiles/" + id + "/prediction");
  CHECK(early->status == 409);
  CHECK(body_of(early)["code"] == "RATE_FIRST");
  CHECK(body_of(early)["total"] == 2);

  auto partial = post(c, "/profiles/" + id + "/ratings", {{"ratings", {{"AMOX", "atypical"}}}});
  CHECK(partial->status == 200);
  CHECK(body_of(partial)["complete"] == false);
  CHECK(body_of(c.Get("/profiles/" + id + "/prediction"))["rated"] == 1);
  auto full = post(c, "/profiles/" + id + "/ratings",
                   {{"ratings", json::array({{{"drug", "PARA"}, {"rating", "typical"}}})}});
  CHECK(body_of(full)["complete"] == true);

  CHECK(post(c, "/profiles/" + id + "/agreement", {{"agreement", "agree"}})->status == 409);

  auto pred = c.Get("/profiles/" + id + "/prediction");
  CHECK(pred->status == 200);
  const json p = body_of(pred);
  CHECK(p["class"] == "typical");
  CHECK(p["label_before"] == "atypical");
  CHECK(p["flags"] == json::array({"AMOX"}));
  CHECK(p["threshold"] == 0.15);

  auto agree = post(c, "/profiles/" + id + "/agreement", {{"agreement", "disagree"}});
  CHECK(agree->status == 200);
  CHECK(body_of(agree)["agreement"] == "disagree");
  auto conflict = post(c, "/profiles/" + id + "/agreement", {{"agreement", "agree"}});
  CHECK(conflict->status == 409);
  CHECK(body_of(conflict)["code"] == "ALREADY_AGREED");

  auto closed = post(c, "/profiles/" + id + "/ratings", {{"ratings", {{"AMOX", "typical"}}}});
  CHECK(closed->status == 409);
  CHECK(body_of(closed)["code"] == "ALREADY_REVEALED");

  const json m = body_of(c.Get("/metrics"));
  CHECK(m["profiles_before"]["confusion"]["fn"] == 1);
  CHECK(m["profiles_after"]["confusion"]["fn"] == 1);
  CHECK(m["orders"]["confusion"]["tp"] == 1);
  CHECK(m["orders"]["confusion"]["tn"] == 1);
  CHECK(m["records"]["agreed"] == 1);
}

TEST_CASE("http: rejections carry a code and a message") {
  StudyState state(small_queue(2), pooled(0.5), no_calibration(), "d1", "");
  Running server(state);
  auto c = server.client("bob");
  const std::string id = body_of(c.Get("/queue/next"))["profile_id"];

  struct Case {
    httplib::Result result;
    int status;
    const char* code;
  };
  std::vector<Case> cases;
  cases.push_back({post(c, "/profiles/nope/ratings", {{"ratings", {{"AMOX", "typical"}}}}), 404, "UNKNOWN_PROFILE"});
  cases.push_back({c.Get("/profiles/nope/prediction"), 404, "UNKNOWN_PROFILE"});
  cases.push_back({post(c, "/profiles/nope/agreement", {{"agreement", "agree"}}), 404, "UNKNOWN_PROFILE"});
  cases.push_back({post(c, "/profiles/" + id + "/ratings", {{"ratings", {{"XYZ", "typical"}}}}), 400, "UNKNOWN_DRUG"});
  cases.push_back({post(c, "/profiles/" + id + "/ratings", {{"ratings", {{"AMOX", 3}}}}), 400, "BAD_RATING"});
  cases.push_back({post(c, "/profiles/" + id + "/ratings", {{"rating", "typical"}}), 400, "BAD_REQUEST"});
  cases.push_back({c.Post("/profiles/" + id + "/ratings", "{not json", "application/json"), 400, "BAD_REQUEST"});
  cases.push_back({c.Get("/profiles/H1@2021-03-02/prediction"), 409, "NOT_SERVED"});
  cases.push_back({c.Get("/no/such/route"), 404, "NOT_FOUND"});
  for (auto& k : cases) {
    REQUIRE(k.result);
    INFO(k.code);
    CHECK(k.result->status == k.status);
    const json b = json::parse(k.result->body);
    CHECK(b["code"] == k.code);
    CHECK(b["message"].is_string());
  }

  post(c, "/profiles/" + id + "/ratings", {{"ratings", {{"AMOX", "typical"}, {"PARA", "typical"}}}});
  c.Get("/profiles/" + id + "/prediction");
  CHECK(body_of(post(c, "/profiles/" + id + "/agreement", {{"agreement", 1}}))["code"] == "BAD_AGREEMENT");
  CHECK(c.Post("/profiles/" + id + "/agreement", "[", "application/json")->status == 400);

  auto other = server.client("carol");
  const std::string id2 = body_of(other.Get("/queue/next"))["profile_id"];
  CHECK(id2 != id);
  auto empty = server.client("dave").Get("/queue/next");
  CHECK(empty->status == 404);
  CHECK(body_of(empty)["code"] == "QUEUE_EMPTY");
}

TEST_CASE("http: a second profile of a reviewed patient is refused") {
  std::vector<QueueEntry> q = small_queue(1);
  QueueEntry again = q[0];
  again.profile.as_of = Date(2021, 3, 9);
  q.push_back(again);
  StudyState state(q, pooled(0.5), no_calibration(), "d1", "");
  Running server(state);
  auto c = server.client("erin");
  CHECK(body_of(c.Get("/queue/next"))["profile_id"] == "H0@2021-03-02");
  auto frank = server.client("frank");
  auto dup = post(frank, "/profiles/H0@2021-03-09/ratings", {{"ratings", {{"AMOX", "typical"}}}});
  CHECK(dup->status == 409);
  CHECK(body_of(dup)["code"] == "PATIENT_SEEN");
  CHECK(body_of(frank.Get("/queue/next"))["code"] == "QUEUE_EMPTY");
}

TEST_CASE("http: cross-origin preflight is answered") {
  StudyState state(small_queue(1), pooled(0.5), no_calibration(), "d1", "");
  Running server(state);
  auto c = server.client("x");
  auto r = c.Options("/queue/next");
  REQUIRE(r);
  CHECK(r->status == 204);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(r->get_header_value("Access-Control-Allow-Headers").find(kPharmacistHeader) != std::string::npos);
  CHECK(r->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("http: concurrent reviewers never share a patient") {
  StudyState state(small_queue(40), pooled(0.5), no_calibration(), "d1", "");
  Running server(state);
  std::vector<std::vector<std::string>> served(8);
  std::vector<std::thread> workers;
  for (int w = 0; w < 8; ++w) {
    workers.emplace_back([&, w] {
      auto c = server.client("ph" + std::to_string(w));
      for (int k = 0; k < 10; ++k) {
        auto next = c.Get("/queue/next");
        if (!next || next->status != 200) break;
        const std::string id = json::parse(next->body)["profile_id"];
        auto r = c.Post("/profiles/" + id + "/ratings",
                        R"({"ratings": {"AMOX": "typical", "PARA": "typical"}})", "application/json");
        if (!r || r->status != 200) break;
        auto p = c.Get("/profiles/" + id + "/prediction");
        if (!p || p->status != 200) break;
        served[static_cast<std::size_t>(w)].push_back(id);
      }
    });
  }
  for (auto& t : workers) t.join();
  std::set<std::string> all;
  std::size_t total = 0;
  for (const auto& s : served) {
    total += s.size();
    all.insert(s.begin(), s.end());
  }
  CHECK(total == 40);
  CHECK(all.size() == 40);
  CHECK(state.records().size() == 40);
}
