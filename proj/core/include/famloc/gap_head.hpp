#ifndef FAMLOC_GAP_HEAD_HPP_
#define FAMLOC_GAP_HEAD_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "famloc/activation_map.hpp"

namespace famloc {

// Forward-only replica of the localization head:
//   3x3 stride-1 conv (zero same-padding) -> global average pooling
//   -> two-way softmax (non-food, food).
// No nonlinearity is applied after the conv; callers that want post-ReLU
// maps clamp before head_fam.

inline constexpr std::size_t kKernelSize = 3;
inline constexpr std::size_t kNonFood = 0;
inline constexpr std::size_t kFood = 1;

/// 3x3 kernels, flattened (out, in, ky, kx)-major, plus one bias per output.
class ConvKernelBank {
 public:
  ConvKernelBank() = default;
  /// Throws ValidationError on wrong kernel/bias counts or non-finite values.
  ConvKernelBank(std::size_t out_channels, std::size_t in_channels, std::vector<double> kernels,
                 std::vector<double> bias);

  std::size_t out_channels() const { return out_; }
  std::size_t in_channels() const { return in_; }

  double weight(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return kernels_[((o * in_ + i) * kKernelSize + ky) * kKernelSize + kx];
  }
  double bias(std::size_t o) const { return bias_[o]; }

  std::span<const double> kernels() const { return kernels_; }
  std::span<const double> biases() const { return bias_; }

 private:
  std::size_t out_ = 0;
  std::size_t in_ = 0;
  std::vector<double> kernels_;
  std::vector<double> bias_;
};

/// Two-row linear classifier; row kNonFood then row kFood.
struct SoftmaxHead {
  std::array<std::vector<double>, 2> class_weights;
  std::array<double, 2> class_biases{0.0, 0.0};

  std::size_t width() const { return class_weights[kFood].size(); }
  /// Throws ValidationError if rows differ in length, are empty, or hold non-finite values.
  void validate() const;
  /// The food row as a WeightVector (bias = food bias).
  WeightVector food_weights() const;
};

struct FoodDecision {
  double p_food = 0.0;
  double p_nonfood = 1.0;
  bool is_food = false;
};

struct HeadModel {
  ConvKernelBank conv;
  SoftmaxHead softmax;
};

/// Same-size cross-correlation with zero padding. Each output entry sums
/// (in, ky, kx) in that order, then adds the output bias.
/// Throws LengthMismatch on a channel mismatch.
FeatureStack conv_forward(const FeatureStack& input, const ConvKernelBank& bank);

/// Spatial mean of every channel.
std::vector<double> gap(const FeatureStack& stack);

/// Softmax over the two head logits. gate must lie in (0, 1); p_food >= gate is food.
FoodDecision classify(std::span<const double> pooled, const SoftmaxHead& head, double gate = 0.5);

/// The two logits (non-food, food) for a pooled vector.
std::array<double, 2> logits(std::span<const double> pooled, const SoftmaxHead& head);

/// compute_fam against the food row of the head.
ActivationGrid head_fam(const FeatureStack& conv_out, const SoftmaxHead& head);

struct HeadOutput {
  FeatureStack conv_out;
  FoodDecision decision;
  ActivationGrid fam;
};

/// conv_forward -> gap -> classify, plus head_fam on the same conv output.
HeadOutput run_head(const FeatureStack& input, const HeadModel& model, double gate = 0.5);

}  // namespace famloc

#endif  // FAMLOC_GAP_HEAD_HPP_
