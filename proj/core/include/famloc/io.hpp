#ifndef FAMLOC_IO_HPP_
#define FAMLOC_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "famloc/activation_map.hpp"
#include "famloc/gap_head.hpp"
#include "famloc/joint_eval.hpp"
#include "famloc/metrics.hpp"

namespace famloc::io {

// Validation failures raise ValidationError with "file:line: field" context;
// unreadable or unwritable files raise IoError.

// --- FSTK feature stacks -------------------------------------------------
//
//   bytes 0-3  "FSTK"
//   u32 LE     version (1), K, H, W
//   f32 LE     K*H*W values, k-major, then row, then column

inline constexpr std::uint32_t kFstkVersion = 1;

FeatureStack read_fstk(const std::filesystem::path& path);
/// Values are narrowed to 32-bit floats.
void write_fstk(const std::filesystem::path& path, const FeatureStack& stack);

// --- weights ---------------------------------------------------------------

/// {"weights": [...], "bias": number}
WeightVector load_weight_vector(const std::filesystem::path& path);
void save_weight_vector(const std::filesystem::path& path, const WeightVector& w);

/// {"conv": {"out", "in", "kernels", "bias"}, "softmax": {"weights", "bias"}}
HeadModel load_head_model(const std::filesystem::path& path);
void save_head_model(const std::filesystem::path& path, const HeadModel& model);

/// True when the JSON document at path carries a "conv" block.
bool is_head_model_file(const std::filesystem::path& path);

// --- annotations and predictions (JSON lines, one image per line) ---------

struct ImageAnnotations {
  std::string image_id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<GroundTruthBox> boxes;
};

struct ImagePredictions {
  std::string image_id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Prediction> boxes;
};

std::vector<ImageAnnotations> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path,
                       const std::vector<ImageAnnotations>& images);

std::vector<ImagePredictions> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<ImagePredictions>& images);

/// {"image_id", "predictions": [{"class", "score", "x_min", ...}]}
LabeledByImage read_labeled_predictions(const std::filesystem::path& path);
void write_labeled_predictions(const std::filesystem::path& path, const LabeledByImage& labeled);

GroundTruthByImage group_ground_truth(const std::vector<ImageAnnotations>& images);
PredictionsByImage group_predictions(const std::vector<ImagePredictions>& images);

/// One label per line; blank lines and surrounding whitespace ignored.
std::set<std::string> read_class_list(const std::filesystem::path& path);

// --- dataset manifest -------------------------------------------------------

struct ManifestEntry {
  std::string image_id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::filesystem::path features;
  std::optional<std::filesystem::path> annotations;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

/// JSON lines {"image_id", "width", "height", "features", "annotations"?}.
/// Relative paths resolve against the manifest's directory. Every
/// referenced file must exist when the manifest is loaded.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace famloc::io

#endif  // FAMLOC_IO_HPP_
