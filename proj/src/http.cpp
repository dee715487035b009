#include "httplib.h"

#include "exforge/service.hpp"

namespace exforge::service {

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

void mount(httplib::Server& server, Service& service) {
  constexpr const char* kId = "([a-z0-9_-]+)";
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/exercises", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, service.get_exercises());
  });
  server.Get(std::string("/exercises/") + kId, [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_exercise(req.matches[1], req.get_param_value("student")));
  });
  server.Put(std::string("/exercises/") + kId, [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.put_exercise(req.matches[1], req.body, req.get_header_value("Authorization")));
  });
  server.Post(std::string("/exercises/") + kId + "/submissions",
              [&](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.post_submission(req.matches[1], req.body));
              });
  server.Get(std::string("/exercises/") + kId + "/leaderboard",
             [&](const httplib::Request& req, httplib::Response& res) {
               reply(res, service.get_leaderboard(std::string(req.matches[1])));
             });
  server.Get("/leaderboard", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, service.get_leaderboard(std::nullopt));
  });
  server.Get(std::string("/exercises/") + kId + "/stats",
             [&](const httplib::Request& req, httplib::Response& res) {
               reply(res, service.get_stats(req.matches[1]));
             });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(nlohmann::json{{"error", "not found"}}.dump(), "application/json");
  });
}

}  // namespace exforge::service
