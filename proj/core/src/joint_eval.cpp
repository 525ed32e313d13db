#include "famloc/joint_eval.hpp"

#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "famloc/errors.hpp"

namespace famloc {

namespace {

constexpr double kCoordTolerance = 1e-6;

bool same_box(const BoundingBox& a, const BoundingBox& b) {
  return std::abs(a.x_min - b.x_min) <= kCoordTolerance &&
         std::abs(a.y_min - b.y_min) <= kCoordTolerance &&
         std::abs(a.x_max - b.x_max) <= kCoordTolerance &&
         std::abs(a.y_max - b.y_max) <= kCoordTolerance;
}

std::string describe(const Prediction& p) {
  return fmt::format("image '{}' box ({}, {}, {}, {})", p.image_id, p.box.x_min, p.box.y_min,
                     p.box.x_max, p.box.y_max);
}

std::optional<LabeledPrediction> label_one(const Prediction& p, const ConstantClassifier& src) {
  return LabeledPrediction{p.box, p.image_id, normalize_label(src.label), 1.0};
}

std::optional<LabeledPrediction> label_one(const Prediction& p, const OracleClassifier& src) {
  std::string label(kNonFoodLabel);
  if (const auto it = src.ground_truth.find(p.image_id); it != src.ground_truth.end()) {
    double best = 0.0;
    for (const auto& g : it->second) {
      const double v = iou(p.box, g.box);
      if (v > best) {
        best = v;
        label = normalize_label(g.class_label);
      }
    }
  }
  return LabeledPrediction{p.box, p.image_id, label, 1.0};
}

std::optional<LabeledPrediction> label_one(const Prediction& p, const FileClassifier& src) {
  if (const auto it = src.labels.find(p.image_id); it != src.labels.end()) {
    for (const auto& entry : it->second) {
      if (same_box(entry.box, p.box)) {
        return LabeledPrediction{p.box, p.image_id, normalize_label(entry.class_label),
                                 entry.recognition_score};
      }
    }
  }
  throw ValidationError("classifier file has no label for " + describe(p));
}

}  // namespace

std::string normalize_label(std::string_view label) {
  constexpr std::string_view ws = " \t\r\n";
  const auto first = label.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = label.find_last_not_of(ws);
  return std::string(label.substr(first, last - first + 1));
}

std::vector<LabeledPrediction> classify_boxes(std::span<const Prediction> boxes,
                                              const ClassifierSource& source) {
  std::vector<LabeledPrediction> out;
  out.reserve(boxes.size());
  for (const auto& p : boxes) {
    if (!p.box.valid()) throw ValidationError("classify_boxes: invalid " + describe(p));
    auto labeled = std::visit([&](const auto& src) { return label_one(p, src); }, source);
    if (!labeled) continue;
    if (labeled->class_label.empty()) {
      throw ValidationError("classify_boxes: empty label for " + describe(p));
    }
    if (labeled->class_label == kNonFoodLabel) continue;
    out.push_back(std::move(*labeled));
  }
  return out;
}

ClassMetrics joint_evaluate(const LabeledByImage& labeled, const GroundTruthByImage& gts,
                            double min_iou, const std::optional<std::set<std::string>>& classes) {
  if (!(min_iou > 0.0 && min_iou <= 1.0)) {
    throw ValidationError(fmt::format("joint_evaluate: min_iou must lie in (0, 1], got {}",
                                      min_iou));
  }

  // Regroup by image, then by normalized class.
  using ByClass = std::map<std::string, std::vector<Prediction>>;
  using GtByClass = std::map<std::string, std::vector<GroundTruthBox>>;
  std::map<std::string, ByClass> pred_groups;
  std::map<std::string, GtByClass> gt_groups;
  std::set<std::string> declared;
  if (classes) {
    for (const auto& c : *classes) declared.insert(normalize_label(c));
  }
  auto check_declared = [&](const std::string& label, const std::string& image, const char* kind) {
    if (label.empty()) {
      throw ValidationError(fmt::format("joint_evaluate: empty {} label on image '{}'", kind,
                                        image));
    }
    if (classes) {
      if (!declared.contains(label)) {
        throw ValidationError(fmt::format(
            "joint_evaluate: {} class '{}' on image '{}' is not in the declared class set", kind,
            label, image));
      }
    } else {
      declared.insert(label);
    }
  };

  for (const auto& [image, list] : gts) {
    for (const auto& g : list) {
      GroundTruthBox copy = g;
      copy.class_label = normalize_label(g.class_label);
      check_declared(copy.class_label, image, "ground-truth");
      gt_groups[image][copy.class_label].push_back(std::move(copy));
    }
  }
  for (const auto& [image, list] : labeled) {
    for (const auto& lp : list) {
      const std::string label = normalize_label(lp.class_label);
      check_declared(label, image, "prediction");
      pred_groups[image][label].push_back(
          Prediction{lp.box, lp.image_id, lp.recognition_score, label});
    }
  }

  ClassMetrics result;
  for (const auto& c : declared) result.counts[c] = Counts{};

  static const std::vector<Prediction> kNoPreds;
  static const std::vector<GroundTruthBox> kNoGts;
  std::set<std::string> images;
  for (const auto& [id, _] : pred_groups) images.insert(id);
  for (const auto& [id, _] : gt_groups) images.insert(id);
  for (const auto& image : images) {
    const ByClass& p_by = pred_groups[image];
    const GtByClass& g_by = gt_groups[image];
    for (const auto& c : declared) {
      const auto pit = p_by.find(c);
      const auto git = g_by.find(c);
      const auto& p = pit == p_by.end() ? kNoPreds : pit->second;
      const auto& g = git == g_by.end() ? kNoGts : git->second;
      if (p.empty() && g.empty()) continue;
      const MatchReport r = match_detections(p, g, min_iou, true);
      result.counts[c] += Counts{r.tp, r.fp, r.fn};
    }
  }

  Metrics sum{0.0, 0.0, 0.0};
  for (const auto& [c, counts] : result.counts) {
    const Metrics m = metrics_from_counts(counts);
    result.per_class[c] = m;
    sum.precision += m.precision;
    sum.recall += m.recall;
    sum.accuracy += m.accuracy;
  }
  if (result.per_class.empty()) {
    result.macro = Metrics{};
  } else {
    const auto n = static_cast<double>(result.per_class.size());
    result.macro = Metrics{sum.precision / n, sum.recall / n, sum.accuracy / n};
  }
  return result;
}

void write_class_metrics_csv(std::ostream& os, const ClassMetrics& metrics) {
  os << "class,precision,recall,accuracy\n";
  for (const auto& [c, m] : metrics.per_class) {
    // Quote labels that would break the CSV row.
    std::string field = c;
    if (field.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : field) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      field = quoted + "\"";
    }
    os << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", field, m.precision, m.recall, m.accuracy);
  }
}

void write_class_metrics_json(std::ostream& os, const ClassMetrics& metrics) {
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& [c, m] : metrics.per_class) {
    const Counts& n = metrics.counts.at(c);
    per_class[c] = {{"tp", n.tp},
                    {"fp", n.fp},
                    {"fn", n.fn},
                    {"precision", m.precision},
                    {"recall", m.recall},
                    {"accuracy", m.accuracy}};
  }
  nlohmann::ordered_json j;
  j["per_class"] = std::move(per_class);
  j["macro"] = {{"precision", metrics.macro.precision},
                {"recall", metrics.macro.recall},
                {"accuracy", metrics.macro.accuracy},
                {"classes", metrics.per_class.size()}};
  os << j.dump(2) << '\n';
}

}  // namespace famloc
