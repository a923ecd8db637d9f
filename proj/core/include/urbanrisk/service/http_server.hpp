#pragma once

#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "urbanrisk/service/layer_store.hpp"
#include "urbanrisk/service/scenario_service.hpp"

namespace urbanrisk::service {

// HTTP status and JSON body for an exception thrown while serving a request.
struct ErrorResponse {
  int status = 500;
  nlohmann::json body;
};
ErrorResponse error_response(const std::exception& e);

// Body of GET /layers/current/edges for a comma-separated id list.
nlohmann::json edge_query_json(const EdgeQuery& q);

/// GET /health, GET /layers/current, GET /layers/current/edges?ids=a,b,
/// POST /layers/current/edges {"ids": [...]}, POST /scenarios. scenarios
/// may be null, in which case POST /scenarios answers 409.
class HttpServer {
 public:
  HttpServer(const LayerStore& store, const ScenarioService* scenarios);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds (port 0 picks a free port) and returns the bound port; throws StateError on failure.
  int bind(const std::string& host, int port);
  void serve();   // blocks until stop()
  void start();   // serve() on a background thread
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace urbanrisk::service
