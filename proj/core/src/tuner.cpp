#include "famloc/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "famloc/errors.hpp"

namespace famloc {

namespace {

void check_axis(const std::vector<double>& values, const char* name) {
  if (values.empty()) throw ValidationError(fmt::format("grid spec: {} list is empty", name));
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw ValidationError(fmt::format("grid spec: {} values must be strictly ascending", name));
    }
  }
}

}  // namespace

void GridSpec::validate() const {
  check_axis(t_values, "t");
  check_axis(s_values, "s");
  check_axis(e_values, "e");
  for (double t : t_values) LocalizerParams{t, 0.0, 0.0}.validate();
  for (double s : s_values) LocalizerParams{1.0, s, 0.0}.validate();
  for (double e : e_values) LocalizerParams{1.0, 0.0, e}.validate();
}

double tuning_objective(std::span<const ValidationImage> validation,
                        const LocalizerParams& params, std::span<const double> iou_grid) {
  PredictionsByImage preds;
  GroundTruthByImage gts;
  for (const auto& img : validation) {
    auto& plist = preds[img.image_id];
    for (const auto& box : propose_boxes(img.fam, img.decision, params, img.img_h, img.img_w)) {
      plist.push_back(Prediction{box, img.image_id, std::nullopt, std::nullopt});
    }
    auto& glist = gts[img.image_id];
    glist.insert(glist.end(), img.ground_truth.begin(), img.ground_truth.end());
  }
  const auto points = curves(preds, gts, iou_grid);
  double sum = 0.0;
  for (const auto& p : points) sum += p.accuracy;
  return sum / static_cast<double>(points.size());
}

TuneResult grid_search(std::span<const ValidationImage> validation, const GridSpec& spec,
                       std::span<const double> iou_grid, unsigned threads) {
  if (validation.empty()) throw ValidationError("grid_search: empty validation set");
  spec.validate();
  validate_iou_grid(iou_grid);

  TuneResult result;
  result.table.reserve(spec.size());
  for (double t : spec.t_values) {
    for (double s : spec.s_values) {
      for (double e : spec.e_values) result.table.push_back(TuneEntry{{t, s, e}, 0.0});
    }
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(result.table.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < result.table.size(); i = next++) {
      auto& entry = result.table[i];
      try {
        entry.objective = tuning_objective(validation, entry.params, iou_grid);
      } catch (const std::exception& ex) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::make_exception_ptr(ValidationError(
              fmt::format("grid_search: combination t={} s={} e={} failed: {}", entry.params.t,
                          entry.params.s, entry.params.e, ex.what())));
        }
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  // Canonical order scan with strict improvement keeps the smallest triple on ties.
  const TuneEntry* best = &result.table.front();
  for (const auto& entry : result.table) {
    if (entry.objective > best->objective) best = &entry;
  }
  result.best = best->params;
  result.objective = best->objective;
  return result;
}

void write_tune_csv(std::ostream& os, const TuneResult& result) {
  os << "t,s,e,objective\n";
  for (const auto& entry : result.table) {
    os << fmt::format("{:.6f},{:.6f},{:.6f},{:.6f}\n", entry.params.t, entry.params.s,
                      entry.params.e, entry.objective);
  }
}

void write_tune_json(std::ostream& os, const TuneResult& result) {
  nlohmann::ordered_json j;
  j["best"] = {{"t", result.best.t}, {"s", result.best.s}, {"e", result.best.e}};
  j["objective"] = result.objective;
  j["combinations"] = result.table.size();
  os << j.dump(2) << '\n';
}

}  // namespace famloc
