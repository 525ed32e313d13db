#ifndef FAMLOC_METRICS_HPP_
#define FAMLOC_METRICS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "famloc/box.hpp"

namespace famloc {

struct GroundTruthBox {
  BoundingBox box;
  std::string class_label;
  std::string image_id;
};

struct Prediction {
  BoundingBox box;
  std::string image_id;
  std::optional<double> score;
  std::optional<std::string> class_label;
};

struct Assignment {
  std::size_t prediction = 0;
  std::size_t ground_truth = 0;
  double iou = 0.0;
};

struct MatchReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<Assignment> assignments;
};

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct Metrics {
  double precision = 1.0;
  double recall = 1.0;
  double accuracy = 1.0;
};

struct MetricPoint {
  double iou_threshold = 0.5;
  double precision = 1.0;
  double recall = 1.0;
  double accuracy = 1.0;
};

using PredictionsByImage = std::map<std::string, std::vector<Prediction>>;
using GroundTruthByImage = std::map<std::string, std::vector<GroundTruthBox>>;

/// Intersection over union; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Greedy matching in descending score order (unscored or tied predictions
/// keep input order). Each prediction takes the unmatched ground truth with
/// the highest IoU >= min_iou (and equal class when require_class), lowest
/// index on ties. Duplicates on an already-matched object become FPs.
/// Throws ValidationError for mixed image ids or min_iou outside (0, 1].
MatchReport match_detections(std::span<const Prediction> preds,
                             std::span<const GroundTruthBox> gts, double min_iou = 0.5,
                             bool require_class = false);

/// P = TP/(TP+FP), R = TP/(TP+FN), Acc = TP/(TP+FP+FN). A ratio whose
/// denominator is zero is 1.0.
Metrics metrics_from_counts(const Counts& c);
Metrics metrics_from_report(const MatchReport& report);

/// 0.05, 0.10, ..., 0.95.
std::vector<double> default_iou_grid();

/// Parses "start:stop:step" (inclusive stop) or a comma list. Values are
/// rounded to 1e-9 so that decimal steps land on their decimal values.
/// Throws ValidationError for a malformed or non-ascending grid.
std::vector<double> parse_iou_grid(std::string_view text);

/// Throws ValidationError unless the grid is non-empty, strictly ascending
/// and inside (0, 1].
void validate_iou_grid(std::span<const double> grid);

/// Micro-aggregated precision/recall/accuracy per IoU threshold. Predictions
/// on an image id with no ground-truth entry count as FPs and are reported
/// on `warnings` when it is non-null.
std::vector<MetricPoint> curves(const PredictionsByImage& preds, const GroundTruthByImage& gts,
                                std::span<const double> iou_grid,
                                std::ostream* warnings = nullptr);

/// Header `iou_threshold,precision,recall,accuracy`, six decimals.
void write_curves_csv(std::ostream& os, std::span<const MetricPoint> points);

}  // namespace famloc

#endif  // FAMLOC_METRICS_HPP_
