#ifndef FAMLOC_TUNER_HPP_
#define FAMLOC_TUNER_HPP_

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "famloc/activation_map.hpp"
#include "famloc/gap_head.hpp"
#include "famloc/localizer.hpp"
#include "famloc/metrics.hpp"

namespace famloc {

struct GridSpec {
  std::vector<double> t_values{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> s_values{0.0, 0.02, 0.04, 0.06, 0.08, 0.10};
  std::vector<double> e_values{0.2, 0.4, 0.6, 0.8, 1.0};

  std::size_t size() const { return t_values.size() * s_values.size() * e_values.size(); }
  /// Non-empty, strictly ascending lists of in-range values.
  void validate() const;
};

/// One validation image with its cached activation map.
struct ValidationImage {
  std::string image_id;
  ActivationGrid fam;
  FoodDecision decision;
  std::vector<GroundTruthBox> ground_truth;
  std::size_t img_h = 0;
  std::size_t img_w = 0;
};

struct TuneEntry {
  LocalizerParams params;
  double objective = 0.0;
};

struct TuneResult {
  LocalizerParams best;
  double objective = 0.0;
  /// Every combination in (t, s, e) lexicographic order.
  std::vector<TuneEntry> table;
};

/// Mean accuracy over the IoU grid for one parameter triple.
double tuning_objective(std::span<const ValidationImage> validation,
                        const LocalizerParams& params, std::span<const double> iou_grid);

/// Exhaustive search maximizing tuning_objective; ties go to the
/// lexicographically smallest (t, s, e). threads == 0 picks the hardware
/// concurrency. The result does not depend on the thread count.
TuneResult grid_search(std::span<const ValidationImage> validation, const GridSpec& spec,
                       std::span<const double> iou_grid, unsigned threads = 0);

/// CSV `t,s,e,objective`.
void write_tune_csv(std::ostream& os, const TuneResult& result);
/// {"best": {"t","s","e"}, "objective", "combinations"}.
void write_tune_json(std::ostream& os, const TuneResult& result);

}  // namespace famloc

#endif  // FAMLOC_TUNER_HPP_
