#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "urbanrisk/data/records.hpp"
#include "urbanrisk/repr/attention.hpp"

namespace urbanrisk::repr {

enum class Modality : int { kImg = 0, kTab, kGraph, kTs };
inline constexpr std::size_t kNumModalities = 4;
std::string_view modality_name(Modality m);

struct ModalityDims {
  int img = 512;
  int tab = 256;
  int graph = 256;
  int ts = 256;
  int attn_out = 512;

  static ModalityDims desk() { return {16, 12, 12, 12, 16}; }
  int fused() const { return attn_out + tab + graph + ts; }
  int of(Modality m) const;
  void validate() const;  // throws ArgumentError for non-positive dims
  bool operator==(const ModalityDims&) const = default;
};

nlohmann::json dims_to_json(const ModalityDims& d);
ModalityDims dims_from_json(const nlohmann::json& j);

struct ModalityEmbedding {
  Eigen::VectorXd z_img, z_tab, z_graph, z_ts;
  std::array<bool, kNumModalities> masked{};

  static ModalityEmbedding zeros(const ModalityDims& d);
  Eigen::VectorXd& slot(Modality m);
  const Eigen::VectorXd& slot(Modality m) const;
  // Zeroes the modality and sets its mask bit.
  void mask(Modality m);
};

/// CrossAttn(z_img, [z_tab, z_graph, z_ts]) concatenated with z_tab, z_graph
/// and z_ts.
class FusionModule {
 public:
  FusionModule(const ModalityDims& dims, std::uint64_t seed);
  const ModalityDims& dims() const { return dims_; }
  Eigen::VectorXd fuse(const ModalityEmbedding& me) const;

 private:
  ModalityDims dims_;
  CrossAttention attention_;
};

/// Independently masks each modality with probability rate. Throws
/// ArgumentError for rate outside [0, 1].
ModalityEmbedding modality_dropout(const ModalityEmbedding& me, double rate, std::uint64_t seed);

/// Small frozen feed-forward encoders standing in for the pretrained imagery,
/// tabular, graph and time-series encoders. Inputs are normalized record
/// features: geo + elevation for imagery, struct/demo/infra for tabular,
/// transport for graph and climate for time series. A modality is masked when
/// every feature group feeding it is missing.
class ModalityEncoders {
 public:
  ModalityEncoders(const ModalityDims& dims, std::uint64_t seed);
  ModalityEmbedding encode(const data::BuildingRecord& normalized) const;
  static Eigen::VectorXd inputs(const data::BuildingRecord& normalized, Modality m);

 private:
  ModalityDims dims_;
  std::array<Eigen::MatrixXd, kNumModalities> weights_;
  std::array<Eigen::VectorXd, kNumModalities> biases_;
};

}  // namespace urbanrisk::repr
