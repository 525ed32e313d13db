#include "famloc/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "famloc/errors.hpp"
#include "famloc/metrics.hpp"

namespace famloc {

void RunConfig::validate() const {
  try {
    params.validate();
  } catch (const ValidationError& ex) {
    throw ValidationError(std::string("config: ") + ex.what());
  }
  if (!(gate > 0.0 && gate < 1.0)) {
    throw ValidationError(fmt::format("config: field 'gate' must lie in (0, 1), got {}", gate));
  }
  if (!(min_iou > 0.0 && min_iou <= 1.0)) {
    throw ValidationError(
        fmt::format("config: field 'min_iou' must lie in (0, 1], got {}", min_iou));
  }
  if (!iou_grid.empty()) {
    try {
      validate_iou_grid(iou_grid);
    } catch (const ValidationError& ex) {
      throw ValidationError(std::string("config: field 'iou_grid': ") + ex.what());
    }
  }
}

std::vector<double> RunConfig::effective_iou_grid() const {
  return iou_grid.empty() ? default_iou_grid() : iou_grid;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ValidationError(fmt::format("{}: malformed JSON: {}", path.string(), ex.what()));
  }
  if (!doc.is_object()) throw ValidationError(path.string() + ": expected a JSON object");

  auto num = [&](const char* key, double& dst) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_number()) {
      throw ValidationError(fmt::format("{}: field '{}': expected a number", path.string(), key));
    }
    dst = doc[key].get<double>();
  };
  auto str = [&](const char* key) -> std::optional<std::string> {
    if (!doc.contains(key)) return std::nullopt;
    if (!doc[key].is_string()) {
      throw ValidationError(fmt::format("{}: field '{}': expected a string", path.string(), key));
    }
    return doc[key].get<std::string>();
  };

  num("t", config.params.t);
  num("s", config.params.s);
  num("e", config.params.e);
  num("gate", config.gate);
  num("min_iou", config.min_iou);
  if (doc.contains("iou_grid")) {
    const auto& g = doc["iou_grid"];
    try {
      if (g.is_string()) {
        config.iou_grid = parse_iou_grid(g.get<std::string>());
      } else if (g.is_array()) {
        config.iou_grid = g.get<std::vector<double>>();
      } else {
        throw ValidationError("expected a string or an array");
      }
    } catch (const std::exception& ex) {
      throw ValidationError(fmt::format("{}: field 'iou_grid': {}", path.string(), ex.what()));
    }
  }
  if (auto v = str("weights")) config.weights = *v;
  if (auto v = str("manifest")) config.manifest = *v;
  if (auto v = str("out")) config.out_dir = *v;
}

std::string config_to_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["t"] = config.params.t;
  j["s"] = config.params.s;
  j["e"] = config.params.e;
  j["gate"] = config.gate;
  j["min_iou"] = config.min_iou;
  j["iou_grid"] = config.effective_iou_grid();
  j["weights"] = config.weights ? nlohmann::ordered_json(config.weights->generic_string())
                                : nlohmann::ordered_json(nullptr);
  j["manifest"] = config.manifest ? nlohmann::ordered_json(config.manifest->generic_string())
                                  : nlohmann::ordered_json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace famloc
