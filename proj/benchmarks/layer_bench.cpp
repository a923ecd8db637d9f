#include <benchmark/benchmark.h>

#include "urbanrisk/graph/weight_layer.hpp"
#include "urbanrisk/service/layer_store.hpp"

namespace {

using namespace urbanrisk;

// 51 x 51 bidirectional grid: 10,200 edges.
std::shared_ptr<const graph::RoadNetwork> grid() {
  static const auto net = [] {
    constexpr int n = 51;
    std::vector<graph::Node> nodes;
    std::vector<graph::EdgeSpec> edges;
    auto id = [](int r, int c) { return "n" + std::to_string(r) + "_" + std::to_string(c); };
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) nodes.push_back({id(r, c), 55.0 + r * 1e-3, 12.0 + c * 1e-3});
    }
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (c + 1 < n) {
          edges.push_back({"h" + std::to_string(edges.size()), id(r, c), id(r, c + 1), 30.0});
          edges.push_back({"h" + std::to_string(edges.size()), id(r, c + 1), id(r, c), 30.0});
        }
        if (r + 1 < n) {
          edges.push_back({"v" + std::to_string(edges.size()), id(r, c), id(r + 1, c), 30.0});
          edges.push_back({"v" + std::to_string(edges.size()), id(r + 1, c), id(r, c), 30.0});
        }
      }
    }
    return std::make_shared<const graph::RoadNetwork>(graph::RoadNetwork::build(nodes, edges));
  }();
  return net;
}

service::RiskLayer layer() {
  service::RiskLayer l;
  l.weights = graph::make_weight_layer(graph::ConditionedNetwork::free_flow(grid()), "t");
  l.seal();
  return l;
}

void BM_QueryEdgeWeights(benchmark::State& state) {
  service::LayerStore store;
  store.publish(layer());
  std::vector<std::string> ids;
  const auto& entries = store.current()->layer.weights.entries;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    ids.push_back(entries[(i * 7919) % entries.size()].edge_id);
  }
  for (auto _ : state) benchmark::DoNotOptimize(store.query_edge_weights(ids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QueryEdgeWeights)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_Publish(benchmark::State& state) {
  service::LayerStore store;
  const auto l = layer();
  for (auto _ : state) store.publish(l);
}
BENCHMARK(BM_Publish)->Unit(benchmark::kMillisecond);

}  // namespace
