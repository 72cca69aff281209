#pragma once

#include <memory>
#include <string>

#include "cranio/service/session.hpp"

namespace httplib {
class Server;
}

namespace cranio {

/// HTTP + JSON front end of a SessionManager:
///   GET    /cases
///   POST   /sessions                      {case_id}
///   GET    /sessions/{id}
///   PATCH  /sessions/{id}/config          {field: value, ...}
///   POST   /sessions/{id}/stages/{name}   -> 202
///   GET    /sessions/{id}/artifacts/{name}
/// Errors are {code, message, field?} with a 4xx status.
class HttpService {
public:
    explicit HttpService(SessionManager& sessions);
    ~HttpService();

    /// Binds host:port (port 0 picks a free port) and returns the bound port,
    /// or -1 on failure.
    int bind(const std::string& host, int port);
    /// Serves until stop(); blocking.
    bool listen_after_bind();
    void stop();

private:
    SessionManager& sessions_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace cranio
