#ifndef FAMLOC_LOCALIZER_HPP_
#define FAMLOC_LOCALIZER_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "famloc/activation_map.hpp"
#include "famloc/box.hpp"
#include "famloc/gap_head.hpp"

namespace famloc {

/// Box generation parameters.
///   t: threshold as a fraction of the grid maximum, 0 < t <= 1
///   s: minimum region area as a fraction of the grid area, 0 <= s < 1
///   e: total growth fraction per box dimension, e >= 0
struct LocalizerParams {
  double t = 0.4;
  double s = 0.1;
  double e = 0.2;

  /// Throws ValidationError when any field is out of range.
  void validate() const;

  friend bool operator==(const LocalizerParams&, const LocalizerParams&) = default;
};

class Mask {
 public:
  Mask() = default;
  Mask(std::size_t height, std::size_t width)
      : height_(height), width_(width), cells_(height * width, 0) {}

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  bool at(std::size_t y, std::size_t x) const { return cells_[y * width_ + x] != 0; }
  void set(std::size_t y, std::size_t x, bool v) { cells_[y * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct Cell {
  std::size_t y = 0;
  std::size_t x = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Maximal 8-connected set of mask cells, stored in raster order.
struct Region {
  std::vector<Cell> cells;

  std::size_t area() const { return cells.size(); }
  std::size_t min_y() const;
  std::size_t min_x() const;
};

/// Cell is set iff value >= t * max. Nothing is set when the max is <= 0.
Mask threshold_mask(const ActivationGrid& grid, double t);

/// 8-connected components ordered by (min y, min x) of each region; ties
/// (impossible for disjoint regions sharing both minima) fall back to the
/// first raster cell.
std::vector<Region> connected_components(const Mask& mask);

/// Keeps regions with area / grid_area >= s, preserving order.
std::vector<Region> filter_regions(std::vector<Region> regions, std::size_t grid_area, double s);

/// Cell (y, x) covers [x, x+1) x [y, y+1) in grid units; the bounding
/// rectangle is scaled by img_w / grid_w and img_h / grid_h.
BoundingBox region_to_box(const Region& region, std::size_t grid_h, std::size_t grid_w,
                          std::size_t img_h, std::size_t img_w);

/// Grows width and height by a factor (1 + e) around the center, then clips
/// to [0, img_w] x [0, img_h].
BoundingBox expand_box(const BoundingBox& box, double e, std::size_t img_h, std::size_t img_w);

/// threshold -> components -> size filter -> boxes -> expansion. Empty when
/// the decision is non-food.
std::vector<BoundingBox> propose_boxes(const ActivationGrid& grid, const FoodDecision& decision,
                                       const LocalizerParams& params, std::size_t img_h,
                                       std::size_t img_w);

}  // namespace famloc

#endif  // FAMLOC_LOCALIZER_HPP_
