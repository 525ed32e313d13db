#ifndef FAMLOC_JOINT_EVAL_HPP_
#define FAMLOC_JOINT_EVAL_HPP_

#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "famloc/box.hpp"
#include "famloc/metrics.hpp"

namespace famloc {

/// Label that makes classify_boxes discard a box.
inline constexpr std::string_view kNonFoodLabel = "non-food";

struct LabeledPrediction {
  BoundingBox box;
  std::string image_id;
  std::string class_label;
  double recognition_score = 1.0;
};

using LabeledByImage = std::map<std::string, std::vector<LabeledPrediction>>;

/// Every box gets the same label with score 1.
struct ConstantClassifier {
  std::string label;
};

/// Label of the ground truth with the highest IoU on the same image (lowest
/// index on ties), score 1. Boxes overlapping no ground truth get the
/// reject label.
struct OracleClassifier {
  GroundTruthByImage ground_truth;
};

/// Labels looked up from a previously produced labeled-predictions set by
/// image id and box coordinates (within 1e-6).
struct FileClassifier {
  LabeledByImage labels;
};

using ClassifierSource = std::variant<ConstantClassifier, OracleClassifier, FileClassifier>;

/// One labeled prediction per box, minus the ones labeled "non-food".
/// Throws ValidationError when a file-backed source has no entry for a box.
std::vector<LabeledPrediction> classify_boxes(std::span<const Prediction> boxes,
                                              const ClassifierSource& source);

/// Trims surrounding whitespace; case is preserved.
std::string normalize_label(std::string_view label);

struct ClassMetrics {
  std::map<std::string, Counts> counts;
  std::map<std::string, Metrics> per_class;
  Metrics macro;
};

/// Per class: match predictions and ground truths of that class at min_iou,
/// sum counts over images, then compute P/R/Acc. Macro values are unweighted
/// means over the declared class set. Without an explicit class set the
/// union of ground-truth and predicted labels is used; with one, any label
/// outside it is rejected.
ClassMetrics joint_evaluate(const LabeledByImage& labeled, const GroundTruthByImage& gts,
                            double min_iou = 0.5,
                            const std::optional<std::set<std::string>>& classes = std::nullopt);

/// CSV `class,precision,recall,accuracy`, one row per class in label order.
void write_class_metrics_csv(std::ostream& os, const ClassMetrics& metrics);
void write_class_metrics_json(std::ostream& os, const ClassMetrics& metrics);

}  // namespace famloc

#endif  // FAMLOC_JOINT_EVAL_HPP_
