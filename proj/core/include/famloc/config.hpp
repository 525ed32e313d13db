#ifndef FAMLOC_CONFIG_HPP_
#define FAMLOC_CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "famloc/localizer.hpp"

namespace famloc {

/// Effective settings for a CLI run. Precedence: command-line flags, then a
/// JSON config file, then these defaults.
struct RunConfig {
  LocalizerParams params{};
  double gate = 0.5;
  std::vector<double> iou_grid;  // empty means the default grid
  double min_iou = 0.5;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out_dir = ".";

  /// Throws ValidationError naming the offending field.
  void validate() const;
  /// iou_grid, or the default grid when unset.
  std::vector<double> effective_iou_grid() const;
};

/// Overlays the keys present in a JSON config file onto `config`.
/// Recognized keys: t, s, e, gate, min_iou, iou_grid (string or array),
/// weights, manifest, out.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Canonical JSON rendering (stable key order, paths as given). The output
/// directory is left out so runs into different directories echo identically.
std::string config_to_json(const RunConfig& config);

}  // namespace famloc

#endif  // FAMLOC_CONFIG_HPP_
