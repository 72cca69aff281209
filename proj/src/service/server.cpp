#include "cranio/service/server.hpp"

#include "httplib.h"

namespace cranio {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class Handler>
auto guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const ServiceError& e) {
            send_json(res, e.status(), e.payload());
        } catch (const json::exception& e) {
            send_json(res, 400, {{"code", "malformed_request"}, {"message", e.what()}});
        } catch (const Error& e) {
            send_json(res, 500, {{"code", e.code()}, {"message", e.what()}});
        } catch (const std::exception& e) {
            send_json(res, 500, {{"code", "internal_error"}, {"message", e.what()}});
        }
    };
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ServiceError(400, "malformed_request", std::string("request body is not JSON: ") + e.what());
    }
}

}  // namespace

HttpService::HttpService(SessionManager& sessions)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    SessionManager& m = sessions_;

    s.Get("/cases", guarded([&m](const httplib::Request&, httplib::Response& res) { send_json(res, 200, m.list_cases()); }));

    s.Post("/sessions", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               const json body = parse_body(req);
               if (!body.is_object() || !body.contains("case_id") || !body["case_id"].is_string())
                   throw ServiceError(400, errc::kInvalidArgument, "body must be {\"case_id\": string}", "case_id");
               send_json(res, 201, m.create_session(body["case_id"].get<std::string>()));
           }));

    s.Get(R"(/sessions/([^/]+))", guarded([&m](const httplib::Request& req, httplib::Response& res) {
              send_json(res, 200, m.session_state(req.matches[1]));
          }));

    s.Patch(R"(/sessions/([^/]+)/config)", guarded([&m](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, m.update_config(req.matches[1], parse_body(req)));
            }));

    s.Post(R"(/sessions/([^/]+)/stages/([^/]+))", guarded([&m](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               const std::string stage = req.matches[2];
               m.execute_stage(id, stage);
               send_json(res, 202, {{"session_id", id}, {"stage", stage}, {"status", "running"}});
           }));

    s.Get(R"(/sessions/([^/]+)/artifacts/([^/]+))", guarded([&m](const httplib::Request& req, httplib::Response& res) {
              Artifact a = m.fetch_artifact(req.matches[1], req.matches[2]);
              res.status = 200;
              res.set_content(std::string(a.bytes.begin(), a.bytes.end()), a.content_type);
          }));
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpService::listen_after_bind() { return server_->listen_after_bind(); }

void HttpService::stop() {
    if (server_) server_->stop();
}

}  // namespace cranio
