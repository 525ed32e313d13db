#include "famloc/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "famloc/errors.hpp"

namespace famloc {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

MatchReport match_detections(std::span<const Prediction> preds,
                             std::span<const GroundTruthBox> gts, double min_iou,
                             bool require_class) {
  if (!(min_iou > 0.0 && min_iou <= 1.0)) {
    throw ValidationError(fmt::format("match_detections: min_iou must lie in (0, 1], got {}",
                                      min_iou));
  }
  const std::string* image = nullptr;
  auto check_image = [&](const std::string& id) {
    if (image == nullptr) {
      image = &id;
    } else if (*image != id) {
      throw ValidationError(fmt::format(
          "match_detections: mixed image ids '{}' and '{}'", *image, id));
    }
  };
  for (const auto& p : preds) check_image(p.image_id);
  for (const auto& g : gts) check_image(g.image_id);

  // Scored predictions first by descending score, then unscored; input
  // order breaks every tie.
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    const auto& sa = preds[a].score;
    const auto& sb = preds[b].score;
    if (sa && sb) return *sa > *sb;
    return sa.has_value() && !sb.has_value();
  });

  MatchReport report;
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t pi : order) {
    const Prediction& p = preds[pi];
    std::size_t best = gts.size();
    double best_iou = -1.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (taken[gi]) continue;
      if (require_class && (!p.class_label || *p.class_label != gts[gi].class_label)) continue;
      const double v = iou(p.box, gts[gi].box);
      if (v >= min_iou && v > best_iou) {
        best = gi;
        best_iou = v;
      }
    }
    if (best < gts.size()) {
      taken[best] = true;
      report.assignments.push_back(Assignment{pi, best, best_iou});
    }
  }
  report.tp = report.assignments.size();
  report.fp = preds.size() - report.tp;
  report.fn = gts.size() - report.tp;
  return report;
}

Metrics metrics_from_counts(const Counts& c) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  return Metrics{ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn),
                 ratio(c.tp, c.tp + c.fp + c.fn)};
}

Metrics metrics_from_report(const MatchReport& report) {
  return metrics_from_counts(Counts{report.tp, report.fp, report.fn});
}

namespace {

double round_nano(double v) { return std::round(v * 1e9) / 1e9; }

double parse_number(std::string_view token) {
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ValidationError(fmt::format("iou grid: cannot parse number '{}'", token));
  }
  return v;
}

}  // namespace

std::vector<double> default_iou_grid() { return parse_iou_grid("0.05:0.95:0.05"); }

std::vector<double> parse_iou_grid(std::string_view text) {
  std::vector<double> grid;
  if (text.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = text.find(':', pos);
      parts.push_back(parse_number(text.substr(pos, next - pos)));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    if (parts.size() != 3) {
      throw ValidationError(fmt::format("iou grid: expected start:stop:step, got '{}'", text));
    }
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || stop < start) {
      throw ValidationError(fmt::format("iou grid: bad range '{}'", text));
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
      grid.push_back(round_nano(start + static_cast<double>(i) * step));
    }
  } else {
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = text.find(',', pos);
      grid.push_back(parse_number(text.substr(pos, next - pos)));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
  }
  validate_iou_grid(grid);
  return grid;
}

void validate_iou_grid(std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("iou grid: empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) {
      throw ValidationError(fmt::format("iou grid: threshold {} outside (0, 1]", grid[i]));
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ValidationError("iou grid: thresholds must be strictly ascending");
    }
  }
}

std::vector<MetricPoint> curves(const PredictionsByImage& preds, const GroundTruthByImage& gts,
                                std::span<const double> iou_grid, std::ostream* warnings) {
  validate_iou_grid(iou_grid);
  std::set<std::string> ids;
  for (const auto& [id, _] : preds) ids.insert(id);
  for (const auto& [id, _] : gts) ids.insert(id);

  static const std::vector<Prediction> kNoPreds;
  static const std::vector<GroundTruthBox> kNoGts;
  if (warnings != nullptr) {
    for (const auto& [id, list] : preds) {
      if (!list.empty() && !gts.contains(id)) {
        *warnings << "warning: " << list.size() << " prediction(s) on unknown image '" << id
                  << "' counted as false positives\n";
      }
    }
  }

  std::vector<MetricPoint> points;
  points.reserve(iou_grid.size());
  for (double threshold : iou_grid) {
    Counts total;
    for (const auto& id : ids) {
      const auto pit = preds.find(id);
      const auto git = gts.find(id);
      const auto& p = pit == preds.end() ? kNoPreds : pit->second;
      const auto& g = git == gts.end() ? kNoGts : git->second;
      const MatchReport r = match_detections(p, g, threshold, false);
      total += Counts{r.tp, r.fp, r.fn};
    }
    const Metrics m = metrics_from_counts(total);
    points.push_back(MetricPoint{threshold, m.precision, m.recall, m.accuracy});
  }
  return points;
}

void write_curves_csv(std::ostream& os, std::span<const MetricPoint> points) {
  os << "iou_threshold,precision,recall,accuracy\n";
  for (const auto& p : points) {
    os << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f}\n", p.iou_threshold, p.precision, p.recall,
                      p.accuracy);
  }
}

}  // namespace famloc
