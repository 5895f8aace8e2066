#pragma once

#include <memory>
#include <string>

#include <httplib.h>

#include "service.hpp"

namespace lkg {

/// Routes every GET and POST through `service`; responses are JSON.
inline void bind_service(httplib::Server& server, const Service& service) {
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    r.body = req.body;
    const auto out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
    res.set_header("Access-Control-Allow-Origin", "*");
  };
  server.Get(R"(/.*)", dispatch);
  server.Post(R"(/.*)", dispatch);
}

} // namespace lkg
