#include "famloc/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "famloc/errors.hpp"

namespace famloc {

void LocalizerParams::validate() const {
  if (!(t > 0.0 && t <= 1.0)) {
    throw ValidationError("localizer params: t must lie in (0, 1], got " + std::to_string(t));
  }
  if (!(s >= 0.0 && s < 1.0)) {
    throw ValidationError("localizer params: s must lie in [0, 1), got " + std::to_string(s));
  }
  if (!(e >= 0.0) || !std::isfinite(e)) {
    throw ValidationError("localizer params: e must be >= 0, got " + std::to_string(e));
  }
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::ranges::count(cells_, std::uint8_t{1}));
}

std::size_t Region::min_y() const {
  return std::ranges::min(cells, {}, &Cell::y).y;
}

std::size_t Region::min_x() const {
  return std::ranges::min(cells, {}, &Cell::x).x;
}

Mask threshold_mask(const ActivationGrid& grid, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw ValidationError("threshold_mask: t must lie in (0, 1], got " + std::to_string(t));
  }
  Mask mask(grid.height(), grid.width());
  if (grid.empty()) return mask;
  const double peak = grid_max(grid);
  if (peak <= 0.0) return mask;
  const double cutoff = t * peak;
  for (std::size_t y = 0; y < grid.height(); ++y) {
    for (std::size_t x = 0; x < grid.width(); ++x) mask.set(y, x, grid.at(y, x) >= cutoff);
  }
  return mask;
}

namespace {

// Disjoint sets over provisional labels with path halving.
class LabelForest {
 public:
  std::size_t make() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Region> connected_components(const Mask& mask) {
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> label(h * w, kNone);
  LabelForest forest;

  // First pass: provisional labels from the already-visited 8-neighbours
  // (W, NW, N, NE), recording equivalences.
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      std::size_t current = kNone;
      auto visit = [&](std::size_t ny, std::size_t nx) {
        const std::size_t l = label[ny * w + nx];
        if (l == kNone) return;
        if (current == kNone) {
          current = l;
        } else {
          forest.unite(current, l);
        }
      };
      if (x > 0) visit(y, x - 1);
      if (y > 0) {
        if (x > 0) visit(y - 1, x - 1);
        visit(y - 1, x);
        if (x + 1 < w) visit(y - 1, x + 1);
      }
      label[y * w + x] = current == kNone ? forest.make() : current;
    }
  }

  // Second pass: gather cells per root in raster order.
  std::vector<std::size_t> slot_of_root;
  std::vector<Region> regions;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t l = label[y * w + x];
      if (l == kNone) continue;
      const std::size_t root = forest.find(l);
      if (root >= slot_of_root.size()) slot_of_root.resize(root + 1, kNone);
      if (slot_of_root[root] == kNone) {
        slot_of_root[root] = regions.size();
        regions.emplace_back();
      }
      regions[slot_of_root[root]].cells.push_back(Cell{y, x});
    }
  }

  // Regions were discovered in order of their first raster cell; reorder by
  // (min y, min x), keeping discovery order for ties.
  std::ranges::stable_sort(regions, [](const Region& a, const Region& b) {
    return std::tuple(a.min_y(), a.min_x()) < std::tuple(b.min_y(), b.min_x());
  });
  return regions;
}

std::vector<Region> filter_regions(std::vector<Region> regions, std::size_t grid_area, double s) {
  if (grid_area == 0) throw ValidationError("filter_regions: grid area must be positive");
  if (!(s >= 0.0 && s < 1.0)) {
    throw ValidationError("filter_regions: s must lie in [0, 1), got " + std::to_string(s));
  }
  const auto total = static_cast<double>(grid_area);
  std::erase_if(regions,
                [&](const Region& r) { return static_cast<double>(r.area()) / total < s; });
  return regions;
}

BoundingBox region_to_box(const Region& region, std::size_t grid_h, std::size_t grid_w,
                          std::size_t img_h, std::size_t img_w) {
  if (region.cells.empty()) throw ValidationError("region_to_box: empty region");
  if (grid_h == 0 || grid_w == 0 || img_h == 0 || img_w == 0) {
    throw ValidationError("region_to_box: dimensions must be positive");
  }
  std::size_t y0 = grid_h, x0 = grid_w, y1 = 0, x1 = 0;
  for (const Cell& c : region.cells) {
    if (c.y >= grid_h || c.x >= grid_w) {
      throw ValidationError("region_to_box: cell outside the grid");
    }
    y0 = std::min(y0, c.y);
    x0 = std::min(x0, c.x);
    y1 = std::max(y1, c.y + 1);
    x1 = std::max(x1, c.x + 1);
  }
  const double sx = static_cast<double>(img_w) / static_cast<double>(grid_w);
  const double sy = static_cast<double>(img_h) / static_cast<double>(grid_h);
  return BoundingBox{static_cast<double>(x0) * sx, static_cast<double>(y0) * sy,
                     static_cast<double>(x1) * sx, static_cast<double>(y1) * sy};
}

BoundingBox expand_box(const BoundingBox& box, double e, std::size_t img_h, std::size_t img_w) {
  if (!box.valid()) throw ValidationError("expand_box: invalid box");
  if (!(e >= 0.0)) throw ValidationError("expand_box: e must be >= 0");
  const double dx = box.width() * e / 2.0;
  const double dy = box.height() * e / 2.0;
  const auto w = static_cast<double>(img_w);
  const auto h = static_cast<double>(img_h);
  return BoundingBox{std::clamp(box.x_min - dx, 0.0, w), std::clamp(box.y_min - dy, 0.0, h),
                     std::clamp(box.x_max + dx, 0.0, w), std::clamp(box.y_max + dy, 0.0, h)};
}

std::vector<BoundingBox> propose_boxes(const ActivationGrid& grid, const FoodDecision& decision,
                                       const LocalizerParams& params, std::size_t img_h,
                                       std::size_t img_w) {
  params.validate();
  if (!decision.is_food) return {};
  const auto regions = filter_regions(connected_components(threshold_mask(grid, params.t)),
                                      grid.area(), params.s);
  std::vector<BoundingBox> boxes;
  boxes.reserve(regions.size());
  for (const Region& r : regions) {
    boxes.push_back(
        expand_box(region_to_box(r, grid.height(), grid.width(), img_h, img_w), params.e, img_h,
                   img_w));
  }
  return boxes;
}

}  // namespace famloc
