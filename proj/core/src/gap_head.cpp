#include "famloc/gap_head.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "famloc/errors.hpp"

namespace famloc {

namespace {

bool all_finite(std::span<const double> v) {
  return std::ranges::all_of(v, [](double d) { return std::isfinite(d); });
}

}  // namespace

ConvKernelBank::ConvKernelBank(std::size_t out_channels, std::size_t in_channels,
                               std::vector<double> kernels, std::vector<double> bias)
    : out_(out_channels), in_(in_channels), kernels_(std::move(kernels)), bias_(std::move(bias)) {
  if (out_ == 0 || in_ == 0) throw ValidationError("conv bank: channel counts must be positive");
  const std::size_t expected = out_ * in_ * kKernelSize * kKernelSize;
  if (kernels_.size() != expected) {
    throw ValidationError("conv bank: expected " + std::to_string(expected) +
                          " kernel values (out*in*3*3), got " + std::to_string(kernels_.size()));
  }
  if (bias_.size() != out_) {
    throw ValidationError("conv bank: expected " + std::to_string(out_) + " biases, got " +
                          std::to_string(bias_.size()));
  }
  if (!all_finite(kernels_) || !all_finite(bias_)) {
    throw ValidationError("conv bank: non-finite value");
  }
}

void SoftmaxHead::validate() const {
  if (class_weights[kNonFood].size() != class_weights[kFood].size()) {
    throw ValidationError("softmax head: rows have different lengths");
  }
  if (class_weights[kFood].empty()) throw ValidationError("softmax head: empty weight rows");
  for (const auto& row : class_weights) {
    if (!all_finite(row)) throw ValidationError("softmax head: non-finite weight");
  }
  if (!all_finite(class_biases)) throw ValidationError("softmax head: non-finite bias");
}

WeightVector SoftmaxHead::food_weights() const {
  return WeightVector{class_weights[kFood], class_biases[kFood]};
}

FeatureStack conv_forward(const FeatureStack& input, const ConvKernelBank& bank) {
  if (input.k_count() != bank.in_channels()) {
    throw LengthMismatch("conv_forward: input has " + std::to_string(input.k_count()) +
                         " channels, bank expects " + std::to_string(bank.in_channels()));
  }
  const auto h = static_cast<std::ptrdiff_t>(input.height());
  const auto w = static_cast<std::ptrdiff_t>(input.width());
  constexpr std::ptrdiff_t half = kKernelSize / 2;
  FeatureStack out(bank.out_channels(), input.height(), input.width());
  for (std::size_t o = 0; o < bank.out_channels(); ++o) {
    for (std::ptrdiff_t y = 0; y < h; ++y) {
      for (std::ptrdiff_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < bank.in_channels(); ++i) {
          for (std::size_t ky = 0; ky < kKernelSize; ++ky) {
            const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(ky) - half;
            if (sy < 0 || sy >= h) continue;
            for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
              const std::ptrdiff_t sx = x + static_cast<std::ptrdiff_t>(kx) - half;
              if (sx < 0 || sx >= w) continue;
              acc += bank.weight(o, i, ky, kx) *
                     input.at(i, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
            }
          }
        }
        out.at(o, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = acc + bank.bias(o);
      }
    }
  }
  return out;
}

std::vector<double> gap(const FeatureStack& stack) {
  std::vector<double> pooled(stack.k_count(), 0.0);
  const auto n = static_cast<double>(stack.plane_size());
  for (std::size_t k = 0; k < stack.k_count(); ++k) {
    double sum = 0.0;
    for (double v : stack.channel(k)) sum += v;
    pooled[k] = sum / n;
  }
  return pooled;
}

std::array<double, 2> logits(std::span<const double> pooled, const SoftmaxHead& head) {
  if (pooled.size() != head.width()) {
    throw LengthMismatch("classify: pooled vector has " + std::to_string(pooled.size()) +
                         " entries, head expects " + std::to_string(head.width()));
  }
  std::array<double, 2> z{};
  for (std::size_t c = 0; c < 2; ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < pooled.size(); ++k) acc += head.class_weights[c][k] * pooled[k];
    z[c] = acc + head.class_biases[c];
  }
  return z;
}

FoodDecision classify(std::span<const double> pooled, const SoftmaxHead& head, double gate) {
  if (!(gate > 0.0 && gate < 1.0)) {
    throw ValidationError("classify: gate must lie in (0, 1), got " + std::to_string(gate));
  }
  const auto z = logits(pooled, head);
  const double m = std::max(z[kNonFood], z[kFood]);
  const double e_non = std::exp(z[kNonFood] - m);
  const double e_food = std::exp(z[kFood] - m);
  const double denom = e_non + e_food;
  FoodDecision d;
  d.p_food = e_food / denom;
  d.p_nonfood = e_non / denom;
  d.is_food = d.p_food >= gate;
  return d;
}

ActivationGrid head_fam(const FeatureStack& conv_out, const SoftmaxHead& head) {
  return compute_fam(conv_out, head.food_weights());
}

HeadOutput run_head(const FeatureStack& input, const HeadModel& model, double gate) {
  FeatureStack conv_out = conv_forward(input, model.conv);
  const auto pooled = gap(conv_out);
  FoodDecision decision = classify(pooled, model.softmax, gate);
  ActivationGrid fam = head_fam(conv_out, model.softmax);
  return HeadOutput{std::move(conv_out), decision, std::move(fam)};
}

}  // namespace famloc
