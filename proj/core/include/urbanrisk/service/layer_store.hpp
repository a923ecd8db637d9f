#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "urbanrisk/service/risk_layer.hpp"

namespace urbanrisk::service {

/// One immutable published document together with its edge index and
/// pre-serialized JSON body.
struct PublishedLayer {
  RiskLayer layer;
  std::unordered_map<std::string, std::size_t> edge_index;
  std::string body;
};

enum class EdgeStatus { kFound, kRemoved, kNotFound };
std::string_view edge_status_name(EdgeStatus s);

struct EdgeWeight {
  std::string edge_id;
  EdgeStatus status = EdgeStatus::kNotFound;
  std::optional<double> multiplier;
};

struct EdgeQuery {
  std::uint64_t version = 0;
  std::vector<EdgeWeight> results;  // request order
};

/// Many readers, one publisher. Publication swaps a shared pointer under a
/// mutex, so a reader holds either the old or the new document in full.
class LayerStore {
 public:
  /// Version 0 means "next"; an explicit version must be current + 1.
  /// Throws StateError for a stale version (<= current), ArgumentError for a
  /// version gap or an inconsistent layer. Returns the published version.
  std::uint64_t publish(RiskLayer layer);

  std::uint64_t version() const;                          // 0 before the first publish
  std::shared_ptr<const PublishedLayer> current() const;  // throws ServiceUnavailable
  std::shared_ptr<const PublishedLayer> try_current() const;

  // Unknown ids come back as kNotFound. Throws ServiceUnavailable before the first publish.
  EdgeQuery query_edge_weights(std::span<const std::string> edge_ids) const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const PublishedLayer> current_;
  std::mutex publish_mu_;
};

/// Rebuilds and publishes a layer every cadence on a background thread.
/// Build failures are reported to on_error and the previous layer stays live.
class LayerRefresher {
 public:
  using Builder = std::function<RiskLayer()>;
  using ErrorSink = std::function<void(const std::string&)>;

  LayerRefresher(LayerStore& store, Builder build, std::chrono::milliseconds cadence,
                 ErrorSink on_error = {});
  ~LayerRefresher();
  LayerRefresher(const LayerRefresher&) = delete;
  LayerRefresher& operator=(const LayerRefresher&) = delete;

  void start();
  void stop();
  std::size_t refreshes() const;

 private:
  void run();

  LayerStore& store_;
  Builder build_;
  std::chrono::milliseconds cadence_;
  ErrorSink on_error_;
  std::thread thread_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::size_t refreshes_ = 0;
};

}  // namespace urbanrisk::service
