#ifndef FAMLOC_ACTIVATION_MAP_HPP_
#define FAMLOC_ACTIVATION_MAP_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace famloc {

// All spatial indexing is (y, x), origin top-left, y growing downward,
// i.e. raster order.

/// K feature maps of H x W activations, stored k-major then row then column.
class FeatureStack {
 public:
  FeatureStack() = default;
  /// Zero-filled stack.
  FeatureStack(std::size_t k_count, std::size_t height, std::size_t width);
  /// Throws ValidationError on a size mismatch, zero dimension or non-finite value.
  FeatureStack(std::size_t k_count, std::size_t height, std::size_t width,
               std::vector<double> values);

  std::size_t k_count() const { return k_count_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }

  double at(std::size_t k, std::size_t y, std::size_t x) const {
    return values_[(k * height_ + y) * width_ + x];
  }
  double& at(std::size_t k, std::size_t y, std::size_t x) {
    return values_[(k * height_ + y) * width_ + x];
  }

  std::span<const double> channel(std::size_t k) const {
    return {values_.data() + k * plane_size(), plane_size()};
  }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t k_count_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

/// Per-kernel class weights plus the class bias. The bias never enters the
/// activation grid; it only completes the logit.
struct WeightVector {
  std::vector<double> weights;
  double bias = 0.0;

  /// Throws ValidationError on non-finite entries.
  void validate() const;
};

/// A single H x W real-valued map.
class ActivationGrid {
 public:
  ActivationGrid() = default;
  ActivationGrid(std::size_t height, std::size_t width);
  /// Throws ValidationError on a size mismatch, zero dimension or non-finite value.
  ActivationGrid(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t area() const { return height_ * width_; }
  bool empty() const { return values_.empty(); }

  double at(std::size_t y, std::size_t x) const { return values_[y * width_ + x]; }
  double& at(std::size_t y, std::size_t x) { return values_[y * width_ + x]; }

  std::span<const double> values() const { return values_; }

  friend bool operator==(const ActivationGrid&, const ActivationGrid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

/// FAM(y, x) = sum_k w_k * f_k(y, x). Throws LengthMismatch when the weight
/// count differs from the stack's channel count.
ActivationGrid compute_fam(const FeatureStack& stack, const WeightVector& w);

/// Maximum entry. Throws ValidationError on an empty grid.
double grid_max(const ActivationGrid& grid);

/// Writes a binary 8-bit PGM, min-max normalized to [0, 255] with
/// half-away-from-zero rounding. A constant grid maps to all zeros.
void export_heatmap(const ActivationGrid& grid, const std::filesystem::path& path);

/// Pixel values export_heatmap would write, in raster order.
std::vector<unsigned char> heatmap_pixels(const ActivationGrid& grid);

}  // namespace famloc

#endif  // FAMLOC_ACTIVATION_MAP_HPP_
