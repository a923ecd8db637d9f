#include "urbanrisk/scenario/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "urbanrisk/errors.hpp"

namespace urbanrisk::scenario {

using nlohmann::json;

std::string_view kind_name(InterventionKind k) {
  switch (k) {
    case InterventionKind::kGreenInfrastructure:
      return "green_infrastructure";
    case InterventionKind::kBuildingRetrofit:
      return "building_retrofit";
    case InterventionKind::kTransportationUpgrade:
      return "transportation_upgrade";
  }
  return "unknown";
}

std::optional<InterventionKind> parse_kind(std::string_view s) {
  for (auto k : {InterventionKind::kGreenInfrastructure, InterventionKind::kBuildingRetrofit,
                 InterventionKind::kTransportationUpgrade}) {
    if (kind_name(k) == s) return k;
  }
  return std::nullopt;
}

namespace {

void check_range(double v, double hi, const char* name) {
  if (!(v >= 0.0 && v <= hi)) {
    std::ostringstream msg;
    msg << name << " = " << v << " outside [0, " << hi << "]";
    throw ArgumentError(msg.str());
  }
}

}  // namespace

double flood_multiplier(double delta_drain) {
  check_range(delta_drain, kMaxDrainageDelta, "delta_drain");
  return 1.0 - 0.6 * delta_drain;
}

double damage_multiplier(double delta_str) {
  check_range(delta_str, kMaxStructuralDelta, "delta_str");
  return std::exp(-0.02 * delta_str);
}

double road_multiplier(double delta_cap) {
  check_range(delta_cap, kMaxCapacityDelta, "delta_cap");
  return 1.0 - 0.5 * delta_cap;
}

bool TargetSelector::matches(const data::BuildingRecord& r) const {
  if (building_ids) {
    const bool hit = std::any_of(building_ids->begin(), building_ids->end(), [&](const auto& id) {
      return id == r.building_id || id == r.id;
    });
    if (!hit) return false;
  }
  if (bbox && !bbox->contains(r.position())) return false;
  return true;
}

void InterventionPrompt::validate() const {
  std::vector<FieldError> errors;
  auto in_range = [&](double v, double hi, const char* field) {
    if (!(v >= 0.0 && v <= hi)) {
      std::ostringstream msg;
      msg << "must be within [0, " << hi << "], got " << v;
      errors.push_back({field, msg.str()});
    }
  };
  in_range(deltas.imperviousness, kMaxImperviousnessDelta, "deltas.imperviousness");
  in_range(deltas.drainage, kMaxDrainageDelta, "deltas.drainage");
  in_range(deltas.structural, kMaxStructuralDelta, "deltas.structural");
  in_range(deltas.capacity, kMaxCapacityDelta, "deltas.capacity");

  auto must_be_zero = [&](double v, const char* field) {
    if (v != 0.0) {
      errors.push_back({field, "not applicable to kind " + std::string(kind_name(kind))});
    }
  };
  switch (kind) {
    case InterventionKind::kGreenInfrastructure:
      must_be_zero(deltas.structural, "deltas.structural");
      must_be_zero(deltas.capacity, "deltas.capacity");
      break;
    case InterventionKind::kBuildingRetrofit:
      must_be_zero(deltas.imperviousness, "deltas.imperviousness");
      must_be_zero(deltas.drainage, "deltas.drainage");
      must_be_zero(deltas.capacity, "deltas.capacity");
      break;
    case InterventionKind::kTransportationUpgrade:
      must_be_zero(deltas.imperviousness, "deltas.imperviousness");
      must_be_zero(deltas.drainage, "deltas.drainage");
      must_be_zero(deltas.structural, "deltas.structural");
      break;
  }
  if (selector.bbox) {
    const auto& b = *selector.bbox;
    if (!(b.min_lat <= b.max_lat && b.min_lon <= b.max_lon)) {
      errors.push_back({"selector.bbox", "min corner must not exceed max corner"});
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

InterventionPrompt scaled_prompt(const InterventionPrompt& p, double factor) {
  InterventionPrompt out = p;
  out.deltas.imperviousness = std::clamp(p.deltas.imperviousness * factor, 0.0, kMaxImperviousnessDelta);
  out.deltas.drainage = std::clamp(p.deltas.drainage * factor, 0.0, kMaxDrainageDelta);
  out.deltas.structural = std::clamp(p.deltas.structural * factor, 0.0, kMaxStructuralDelta);
  out.deltas.capacity = std::clamp(p.deltas.capacity * factor, 0.0, kMaxCapacityDelta);
  std::ostringstream suffix;
  suffix << "@" << factor;
  out.id = p.id + suffix.str();
  return out;
}

json prompt_to_json(const InterventionPrompt& p) {
  json selector = json::object();
  if (p.selector.building_ids) selector["building_ids"] = *p.selector.building_ids;
  if (p.selector.edge_ids) selector["edge_ids"] = *p.selector.edge_ids;
  if (p.selector.bbox) {
    const auto& b = *p.selector.bbox;
    selector["bbox"] = {b.min_lat, b.min_lon, b.max_lat, b.max_lon};
  }
  return {{"id", p.id},
          {"kind", kind_name(p.kind)},
          {"deltas",
           {{"imperviousness", p.deltas.imperviousness},
            {"drainage", p.deltas.drainage},
            {"structural", p.deltas.structural},
            {"capacity", p.deltas.capacity}}},
          {"selector", std::move(selector)},
          {"label", p.label}};
}

InterventionPrompt prompt_from_json(const json& j) {
  std::vector<FieldError> errors;
  InterventionPrompt p;
  if (!j.is_object()) throw ValidationError(std::vector<FieldError>{{"prompt", "must be a JSON object"}});

  auto get_string = [&](const char* key, std::string& out, bool required) {
    if (!j.contains(key)) {
      if (required) errors.push_back({key, "is required"});
      return;
    }
    if (!j[key].is_string()) {
      errors.push_back({key, "must be a string"});
      return;
    }
    out = j[key].get<std::string>();
  };
  get_string("id", p.id, false);
  get_string("label", p.label, false);
  std::string kind;
  get_string("kind", kind, true);
  if (!kind.empty()) {
    if (auto k = parse_kind(kind)) {
      p.kind = *k;
    } else {
      errors.push_back({"kind", "unknown kind '" + kind +
                                    "'; expected green_infrastructure, building_retrofit or "
                                    "transportation_upgrade"});
    }
  }

  if (j.contains("deltas")) {
    const auto& d = j["deltas"];
    if (!d.is_object()) {
      errors.push_back({"deltas", "must be an object"});
    } else {
      for (const auto& [key, value] : d.items()) {
        double* slot = nullptr;
        if (key == "imperviousness") slot = &p.deltas.imperviousness;
        if (key == "drainage") slot = &p.deltas.drainage;
        if (key == "structural") slot = &p.deltas.structural;
        if (key == "capacity") slot = &p.deltas.capacity;
        if (!slot) {
          errors.push_back({"deltas." + key, "unknown delta"});
        } else if (!value.is_number()) {
          errors.push_back({"deltas." + key, "must be a number"});
        } else {
          *slot = value.get<double>();
        }
      }
    }
  }

  if (j.contains("selector") && !j["selector"].is_null()) {
    const auto& s = j["selector"];
    auto string_list = [&](const char* key) -> std::optional<std::vector<std::string>> {
      if (!s.contains(key)) return std::nullopt;
      const auto& v = s[key];
      if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); })) {
        errors.push_back({std::string("selector.") + key, "must be an array of strings"});
        return std::nullopt;
      }
      return v.get<std::vector<std::string>>();
    };
    if (!s.is_object()) {
      errors.push_back({"selector", "must be an object"});
    } else {
      p.selector.building_ids = string_list("building_ids");
      p.selector.edge_ids = string_list("edge_ids");
      if (s.contains("bbox")) {
        const auto& b = s["bbox"];
        if (!b.is_array() || b.size() != 4 ||
            !std::all_of(b.begin(), b.end(), [](const json& e) { return e.is_number(); })) {
          errors.push_back({"selector.bbox", "must be [min_lat, min_lon, max_lat, max_lon]"});
        } else {
          p.selector.bbox = BoundingBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                        b[3].get<double>()};
        }
      }
    }
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));
  p.validate();
  return p;
}

}  // namespace urbanrisk::scenario
