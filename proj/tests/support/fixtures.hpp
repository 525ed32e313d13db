#ifndef FAMLOC_TESTS_FIXTURES_HPP_
#define FAMLOC_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <unistd.h>
#include <string>
#include <vector>

#include "famloc/gap_head.hpp"
#include "famloc/io.hpp"
#include "famloc/localizer.hpp"
#include "famloc/tuner.hpp"

namespace famloc::testing {

inline constexpr std::size_t kGrid = 14;

/// Raises cells to peak - slope * chebyshev_distance(center) where positive.
inline void add_pyramid(ActivationGrid& g, long cy, long cx, double peak, double slope) {
  for (std::size_t y = 0; y < g.height(); ++y)
    for (std::size_t x = 0; x < g.width(); ++x) {
      const long d = std::max(std::labs(static_cast<long>(y) - cy), std::labs(static_cast<long>(x) - cx));
      const double v = peak - slope * static_cast<double>(d);
      if (v > 0.0) g.at(y, x) = std::max(g.at(y, x), v);
    }
}

inline void fill_block(ActivationGrid& g, std::size_t y0, std::size_t x0, std::size_t y1,
                       std::size_t x1, double v) {
  for (std::size_t y = y0; y <= y1; ++y)
    for (std::size_t x = x0; x <= x1; ++x) g.at(y, x) = v;
}

inline FoodDecision food() { return FoodDecision{1.0, 0.0, true}; }
inline FoodDecision not_food() { return FoodDecision{0.0, 1.0, false}; }

/// Validation images whose ground truth is the localizer's own output at
/// (t=0.4, s=0.1, e=0.2). The graded blobs make other t values change box
/// extents, a 16-cell decoy (ratio 0.0816) survives every s below 0.1, and
/// any other e changes box size.
inline std::vector<ValidationImage> tuner_fixture() {
  std::vector<ValidationImage> out;

  ActivationGrid a(kGrid, kGrid);
  add_pyramid(a, 4, 4, 10.0, 2.0);
  fill_block(a, 10, 10, 13, 13, 5.0);
  out.push_back({"blob_and_decoy", a, food(), {}, 224, 224});

  ActivationGrid b(kGrid, kGrid);
  add_pyramid(b, 3, 9, 10.0, 3.0);
  add_pyramid(b, 10, 3, 8.0, 2.0);
  out.push_back({"two_blobs", b, food(), {}, 448, 336});

  ActivationGrid c(kGrid, kGrid);
  add_pyramid(c, 7, 7, 10.0, 2.0);
  out.push_back({"gated_off", c, not_food(), {}, 224, 224});

  out.push_back({"cold", ActivationGrid(kGrid, kGrid), food(), {}, 224, 224});

  const LocalizerParams truth{0.4, 0.1, 0.2};
  for (auto& img : out) {
    for (const auto& box : propose_boxes(img.fam, img.decision, truth, img.img_h, img.img_w)) {
      img.ground_truth.push_back(GroundTruthBox{box, "food", img.image_id});
    }
  }
  return out;
}

/// Head that passes a single-channel input through unchanged: identity
/// kernel, food weight 1, all biases 0. An image counts as food iff the
/// mean of its input is >= 0.
inline HeadModel identity_head() {
  std::vector<double> kernel(9, 0.0);
  kernel[4] = 1.0;
  HeadModel m;
  m.conv = ConvKernelBank(1, 1, kernel, {0.0});
  m.softmax.class_weights = {std::vector<double>{0.0}, std::vector<double>{1.0}};
  m.softmax.class_biases = {0.0, 0.0};
  return m;
}

inline FeatureStack as_stack(const ActivationGrid& g) {
  return FeatureStack(1, g.height(), g.width(), std::vector<double>(g.values().begin(), g.values().end()));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("famloc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Writes the tuner fixture as an on-disk dataset: one FSTK per image
/// (identity-head inputs), head.json, gt.jsonl and manifest.jsonl. The
/// gated-off image gets a strongly negative background so its mean is < 0.
inline void write_fixture_dataset(const std::filesystem::path& dir) {
  auto images = tuner_fixture();
  io::DatasetManifest manifest;
  std::vector<io::ImageAnnotations> gts;
  for (auto& img : images) {
    ActivationGrid input = img.fam;
    if (!img.decision.is_food) {
      for (std::size_t y = 0; y < input.height(); ++y)
        for (std::size_t x = 0; x < input.width(); ++x)
          if (input.at(y, x) == 0.0) input.at(y, x) = -50.0;
    }
    const auto fstk = dir / (img.image_id + ".fstk");
    io::write_fstk(fstk, as_stack(input));
    manifest.entries.push_back({img.image_id, img.img_w, img.img_h, fstk, dir / "gt.jsonl"});
    gts.push_back({img.image_id, img.img_w, img.img_h, img.ground_truth});
  }
  io::save_head_model(dir / "head.json", identity_head());
  io::write_annotations(dir / "gt.jsonl", gts);
  io::write_manifest(dir / "manifest.jsonl", manifest);
}

}  // namespace famloc::testing

#endif  // FAMLOC_TESTS_FIXTURES_HPP_
