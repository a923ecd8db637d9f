#include "urbanrisk/repr/fusion.hpp"

#include <random>
#include <vector>

#include "urbanrisk/errors.hpp"
#include "urbanrisk/random.hpp"

namespace urbanrisk::repr {

using data::FeatureGroup;

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kImg:
      return "img";
    case Modality::kTab:
      return "tab";
    case Modality::kGraph:
      return "graph";
    case Modality::kTs:
      return "ts";
  }
  return "unknown";
}

int ModalityDims::of(Modality m) const {
  switch (m) {
    case Modality::kImg:
      return img;
    case Modality::kTab:
      return tab;
    case Modality::kGraph:
      return graph;
    case Modality::kTs:
      return ts;
  }
  return 0;
}

void ModalityDims::validate() const {
  if (img < 1 || tab < 1 || graph < 1 || ts < 1 || attn_out < 1) {
    throw ArgumentError("modality dims must be positive");
  }
}

nlohmann::json dims_to_json(const ModalityDims& d) {
  return {{"img", d.img}, {"tab", d.tab}, {"graph", d.graph}, {"ts", d.ts}, {"attn_out", d.attn_out}};
}

ModalityDims dims_from_json(const nlohmann::json& j) {
  ModalityDims d{j.at("img").get<int>(), j.at("tab").get<int>(), j.at("graph").get<int>(),
                 j.at("ts").get<int>(), j.at("attn_out").get<int>()};
  d.validate();
  return d;
}

ModalityEmbedding ModalityEmbedding::zeros(const ModalityDims& d) {
  ModalityEmbedding me;
  me.z_img = Eigen::VectorXd::Zero(d.img);
  me.z_tab = Eigen::VectorXd::Zero(d.tab);
  me.z_graph = Eigen::VectorXd::Zero(d.graph);
  me.z_ts = Eigen::VectorXd::Zero(d.ts);
  return me;
}

Eigen::VectorXd& ModalityEmbedding::slot(Modality m) {
  switch (m) {
    case Modality::kImg:
      return z_img;
    case Modality::kTab:
      return z_tab;
    case Modality::kGraph:
      return z_graph;
    case Modality::kTs:
      break;
  }
  return z_ts;
}

const Eigen::VectorXd& ModalityEmbedding::slot(Modality m) const {
  return const_cast<ModalityEmbedding*>(this)->slot(m);
}

void ModalityEmbedding::mask(Modality m) {
  slot(m).setZero();
  masked[static_cast<std::size_t>(m)] = true;
}

FusionModule::FusionModule(const ModalityDims& dims, std::uint64_t seed)
    : dims_(dims),
      attention_((dims.validate(), dims.img), {dims.tab, dims.graph, dims.ts}, dims.attn_out,
                 dims.attn_out, seed) {}

Eigen::VectorXd FusionModule::fuse(const ModalityEmbedding& me) const {
  const auto attended = attention_.apply(me.z_img, {me.z_tab, me.z_graph, me.z_ts});
  Eigen::VectorXd out(dims_.fused());
  out << attended.output.row(0).transpose(), me.z_tab, me.z_graph, me.z_ts;
  return out;
}

ModalityEmbedding modality_dropout(const ModalityEmbedding& me, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ArgumentError("modality dropout rate must be in [0, 1]");
  ModalityEmbedding out = me;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    if (u(rng) < rate) out.mask(static_cast<Modality>(m));
  }
  return out;
}

namespace {

struct Source {
  FeatureGroup group;
  std::vector<std::string_view> names;
};

const std::vector<Source>& sources(Modality m) {
  namespace f = data::feature;
  static const std::array<std::vector<Source>, kNumModalities> table = {{
      {{FeatureGroup::kGeo, {f::kSlope, f::kDistWater, f::kGreenCover}}},
      {{FeatureGroup::kStruct,
        {f::kStructuralScore, f::kAgeYears, f::kFloors, f::kDamageProbability}},
       {FeatureGroup::kDemo, {f::kIncomeQuintile, f::kPopulationDensity, f::kHomeownership}},
       {FeatureGroup::kInfra, {f::kImperviousness, f::kDrainageCapacity, f::kDistHospital}}},
      {{FeatureGroup::kTransport,
        {f::kHazardTravelTime, f::kReachable, f::kRedundancy, f::kNodeDegree}}},
      {{FeatureGroup::kClimate,
        {f::kAnnualPrecip, f::kSummerTmax, f::kHeatwaveDays, f::kFloodHistory}}},
  }};
  return table[static_cast<std::size_t>(m)];
}

int input_dim(Modality m) {
  int n = m == Modality::kImg ? 1 : 0;  // elevation
  for (const auto& s : sources(m)) n += static_cast<int>(s.names.size());
  return n;
}

}  // namespace

Eigen::VectorXd ModalityEncoders::inputs(const data::BuildingRecord& r, Modality m) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(input_dim(m));
  Eigen::Index k = 0;
  if (m == Modality::kImg) x(k++) = r.elevation;
  for (const auto& s : sources(m)) {
    for (auto name : s.names) {
      if (!r.is_missing(s.group)) x(k) = r.find(s.group, name).value_or(0.0);
      ++k;
    }
  }
  return x;
}

ModalityEncoders::ModalityEncoders(const ModalityDims& dims, std::uint64_t seed) : dims_(dims) {
  dims_.validate();
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    const auto mod = static_cast<Modality>(m);
    weights_[m] = seeded_matrix(dims_.of(mod), input_dim(mod), derive_seed(seed, 10 + m), 1.5);
    biases_[m] = 0.1 * seeded_matrix(dims_.of(mod), 1, derive_seed(seed, 20 + m));
  }
}

ModalityEmbedding ModalityEncoders::encode(const data::BuildingRecord& r) const {
  auto me = ModalityEmbedding::zeros(dims_);
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    const auto mod = static_cast<Modality>(m);
    bool any_present = false;
    for (const auto& s : sources(mod)) any_present = any_present || !r.is_missing(s.group);
    if (!any_present) {
      me.mask(mod);
      continue;
    }
    me.slot(mod) = (weights_[m] * inputs(r, mod) + biases_[m]).array().tanh().matrix();
  }
  return me;
}

}  // namespace urbanrisk::repr
