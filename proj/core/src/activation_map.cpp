#include "famloc/activation_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "famloc/errors.hpp"

namespace famloc {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError(std::string(what) + ": non-finite value at flat index " +
                            std::to_string(i));
    }
  }
}

}  // namespace

FeatureStack::FeatureStack(std::size_t k_count, std::size_t height, std::size_t width)
    : FeatureStack(k_count, height, width, std::vector<double>(k_count * height * width, 0.0)) {}

FeatureStack::FeatureStack(std::size_t k_count, std::size_t height, std::size_t width,
                           std::vector<double> values)
    : k_count_(k_count), height_(height), width_(width), values_(std::move(values)) {
  if (k_count == 0 || height == 0 || width == 0) {
    throw ValidationError("feature stack: dimensions must be positive");
  }
  if (values_.size() != k_count * height * width) {
    throw ValidationError("feature stack: expected " + std::to_string(k_count * height * width) +
                          " values, got " + std::to_string(values_.size()));
  }
  require_finite(values_, "feature stack");
}

void WeightVector::validate() const {
  require_finite(weights, "weight vector");
  if (!std::isfinite(bias)) throw ValidationError("weight vector: non-finite bias");
}

ActivationGrid::ActivationGrid(std::size_t height, std::size_t width)
    : ActivationGrid(height, width, std::vector<double>(height * width, 0.0)) {}

ActivationGrid::ActivationGrid(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height == 0 || width == 0) {
    throw ValidationError("activation grid: dimensions must be positive");
  }
  if (values_.size() != height * width) {
    throw ValidationError("activation grid: expected " + std::to_string(height * width) +
                          " values, got " + std::to_string(values_.size()));
  }
  require_finite(values_, "activation grid");
}

ActivationGrid compute_fam(const FeatureStack& stack, const WeightVector& w) {
  if (w.weights.size() != stack.k_count()) {
    throw LengthMismatch("compute_fam: " + std::to_string(w.weights.size()) +
                         " weights for a stack of " + std::to_string(stack.k_count()) +
                         " channels");
  }
  std::vector<double> out(stack.plane_size(), 0.0);
  for (std::size_t k = 0; k < stack.k_count(); ++k) {
    const double wk = w.weights[k];
    const auto plane = stack.channel(k);
    for (std::size_t i = 0; i < plane.size(); ++i) out[i] += wk * plane[i];
  }
  return ActivationGrid(stack.height(), stack.width(), std::move(out));
}

double grid_max(const ActivationGrid& grid) {
  if (grid.empty()) throw ValidationError("grid_max: empty grid");
  return *std::ranges::max_element(grid.values());
}

std::vector<unsigned char> heatmap_pixels(const ActivationGrid& grid) {
  std::vector<unsigned char> pixels(grid.area(), 0);
  if (grid.empty()) return pixels;
  const auto [lo_it, hi_it] = std::ranges::minmax_element(grid.values());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0)) return pixels;
  const auto values = grid.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    // std::lround rounds halfway cases away from zero.
    const long v = std::lround(255.0 * (values[i] - lo) / range);
    pixels[i] = static_cast<unsigned char>(std::clamp(v, 0L, 255L));
  }
  return pixels;
}

void export_heatmap(const ActivationGrid& grid, const std::filesystem::path& path) {
  const auto pixels = heatmap_pixels(grid);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << grid.width() << ' ' << grid.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace famloc
