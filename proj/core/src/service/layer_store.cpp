#include "urbanrisk/service/layer_store.hpp"

#include <utility>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::service {

std::string_view edge_status_name(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::kFound: return "found";
    case EdgeStatus::kRemoved: return "removed";
    case EdgeStatus::kNotFound: return "not_found";
  }
  return "?";
}

std::uint64_t LayerStore::publish(RiskLayer layer) {
  std::lock_guard publish_lock(publish_mu_);
  const std::uint64_t current = version();
  if (layer.version == 0) {
    layer.version = current + 1;
  } else if (layer.version <= current) {
    throw StateError("stale layer version " + std::to_string(layer.version) + " (current " +
                     std::to_string(current) + ")");
  } else if (layer.version != current + 1) {
    throw ArgumentError("layer version must be " + std::to_string(current + 1));
  }
  if (!layer.consistent()) throw ArgumentError("layer checksum does not match its content");

  auto published = std::make_shared<PublishedLayer>();
  published->edge_index.reserve(layer.weights.entries.size());
  for (std::size_t i = 0; i < layer.weights.entries.size(); ++i) {
    if (!published->edge_index.emplace(layer.weights.entries[i].edge_id, i).second) {
      throw ArgumentError("duplicate edge id " + layer.weights.entries[i].edge_id + " in layer");
    }
  }
  published->body = risk_layer_to_json(layer).dump();
  published->layer = std::move(layer);
  const auto v = published->layer.version;
  std::shared_ptr<const PublishedLayer> old;
  {
    std::lock_guard lock(mu_);
    old = std::exchange(current_, std::move(published));
  }
  return v;
}

std::uint64_t LayerStore::version() const {
  std::lock_guard lock(mu_);
  return current_ ? current_->layer.version : 0;
}

std::shared_ptr<const PublishedLayer> LayerStore::try_current() const {
  std::lock_guard lock(mu_);
  return current_;
}

std::shared_ptr<const PublishedLayer> LayerStore::current() const {
  auto p = try_current();
  if (!p) throw ServiceUnavailable("no risk layer has been published");
  return p;
}

EdgeQuery LayerStore::query_edge_weights(std::span<const std::string> edge_ids) const {
  const auto p = current();
  EdgeQuery q;
  q.version = p->layer.version;
  q.results.reserve(edge_ids.size());
  for (const auto& id : edge_ids) {
    EdgeWeight w{id, EdgeStatus::kNotFound, std::nullopt};
    auto it = p->edge_index.find(id);
    if (it != p->edge_index.end()) {
      w.multiplier = p->layer.weights.entries[it->second].multiplier;
      w.status = w.multiplier ? EdgeStatus::kFound : EdgeStatus::kRemoved;
    }
    q.results.push_back(std::move(w));
  }
  return q;
}

LayerRefresher::LayerRefresher(LayerStore& store, Builder build, std::chrono::milliseconds cadence,
                               ErrorSink on_error)
    : store_(store), build_(std::move(build)), cadence_(cadence), on_error_(std::move(on_error)) {
  if (cadence_.count() <= 0) throw ArgumentError("refresh cadence must be positive");
}

LayerRefresher::~LayerRefresher() { stop(); }

void LayerRefresher::start() {
  std::lock_guard lock(mu_);
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] { run(); });
}

void LayerRefresher::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::size_t LayerRefresher::refreshes() const {
  std::lock_guard lock(mu_);
  return refreshes_;
}

void LayerRefresher::run() {
  std::unique_lock lock(mu_);
  while (!cv_.wait_for(lock, cadence_, [this] { return stopping_; })) {
    lock.unlock();
    try {
      store_.publish(build_());
      lock.lock();
      ++refreshes_;
    } catch (const std::exception& e) {
      if (on_error_) on_error_(e.what());
      lock.lock();
    }
  }
}

}  // namespace urbanrisk::service
