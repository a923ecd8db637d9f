#include "urbanrisk/service/http_server.hpp"

// 1,000-id edge queries exceed the 8 KiB default.
#define CPPHTTPLIB_REQUEST_URI_MAX_LENGTH 65536
#include <httplib.h>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::service {

using nlohmann::json;

ErrorResponse error_response(const std::exception& e) {
  json body = {{"message", e.what()}};
  int status = 500;
  std::string kind = "internal";
  if (auto* v = dynamic_cast<const ValidationError*>(&e)) {
    status = 422;
    kind = "validation";
    json fields = json::array();
    for (const auto& f : v->fields()) fields.push_back({{"field", f.field}, {"message", f.message}});
    body["fields"] = fields;
  } else if (dynamic_cast<const ServiceUnavailable*>(&e)) {
    status = 503;
    kind = "unavailable";
  } else if (dynamic_cast<const StateError*>(&e)) {
    status = 409;
    kind = "state";
  } else if (dynamic_cast<const json::exception*>(&e) || dynamic_cast<const FormatError*>(&e)) {
    status = 400;
    kind = "format";
  } else if (dynamic_cast<const ArgumentError*>(&e)) {
    status = 400;
    kind = "argument";
  }
  body["error"] = kind;
  return {status, body};
}

json edge_query_json(const EdgeQuery& q) {
  json results = json::array();
  for (const auto& w : q.results) {
    json r = {{"edge_id", w.edge_id}, {"status", edge_status_name(w.status)}};
    if (w.multiplier) r["multiplier"] = *w.multiplier;
    results.push_back(std::move(r));
  }
  return {{"schema_version", 1}, {"version", q.version}, {"edges", results}};
}

struct HttpServer::Impl {
  httplib::Server server;
};

namespace {

void send_error(httplib::Response& res, const std::exception& e) {
  const auto err = error_response(e);
  res.status = err.status;
  res.set_content(err.body.dump(), "application/json");
}

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    if (end > start) out.push_back(s.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

HttpServer::HttpServer(const LayerStore& store, const ScenarioService* scenarios)
    : impl_(std::make_unique<Impl>()) {
  auto& svr = impl_->server;
  svr.Get("/health", [&store](const httplib::Request&, httplib::Response& res) {
    json body = {{"status", "ok"}, {"layer_version", store.version()}};
    res.set_content(body.dump(), "application/json");
  });
  svr.Get("/layers/current", [&store](const httplib::Request&, httplib::Response& res) {
    try {
      res.set_content(store.current()->body, "application/json");
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });
  svr.Get("/layers/current/edges", [&store](const httplib::Request& req, httplib::Response& res) {
    try {
      if (!req.has_param("ids")) throw ArgumentError("query parameter ids is required");
      const auto ids = split_ids(req.get_param_value("ids"));
      res.set_content(edge_query_json(store.query_edge_weights(ids)).dump(), "application/json");
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });
  svr.Post("/layers/current/edges", [&store](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto body = json::parse(req.body);
      if (!body.is_object() || !body.contains("ids") || !body["ids"].is_array()) {
        throw ValidationError(std::vector<FieldError>{{"ids", "must be an array of edge ids"}});
      }
      std::vector<std::string> ids;
      for (const auto& id : body["ids"]) {
        if (!id.is_string()) throw ValidationError(std::vector<FieldError>{{"ids", "must contain only strings"}});
        ids.push_back(id.get<std::string>());
      }
      res.set_content(edge_query_json(store.query_edge_weights(ids)).dump(), "application/json");
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });
  svr.Post("/scenarios", [scenarios](const httplib::Request& req, httplib::Response& res) {
    try {
      if (!scenarios) throw StateError("scenario runs are not enabled on this server");
      res.set_content(scenarios->handle(json::parse(req.body)).dump(), "application/json");
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = svr.bind_to_any_port(host);
  } else if (!svr.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw StateError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace urbanrisk::service
