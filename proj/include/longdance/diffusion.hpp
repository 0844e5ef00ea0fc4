#pragma once

#include <torch/torch.h>

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace longdance {

enum class ScheduleKind { kCosine, kLinear };

/// Throws InvalidArgument for anything other than "cosine" or "linear".
ScheduleKind parse_schedule_kind(std::string_view name);
std::string to_string(ScheduleKind kind);

/// Per-step coefficients indexed by t = 0..T. Index 0 is the clean-data
/// convention (alpha = alpha_bar = 1); steps 1..T are the noising steps.
struct NoiseSchedule {
  int T = 0;
  ScheduleKind kind = ScheduleKind::kCosine;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  double beta(int t) const { return 1.0 - alpha[t]; }
  /// Variance of q(x_{t-1} | x_t, x_0).
  double posterior_variance(int t) const;
  /// Coefficients (c0, ct) of the posterior mean c0 * x0 + ct * x_t.
  std::pair<double, double> posterior_mean_coefs(int t) const;
};

/// Throws InvalidArgument when T < 2.
NoiseSchedule make_schedule(int T, ScheduleKind kind = ScheduleKind::kCosine);

/// Closed form of iterated single-step noising:
///   x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise.
/// `t` is a scalar step or an int64 tensor [B] broadcast over the leading
/// dimension of x0. t = 0 returns x0. Throws RangeError outside [0, T].
torch::Tensor q_sample(const torch::Tensor& x0, int t, const torch::Tensor& noise, const NoiseSchedule& sched);
torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& noise,
                       const NoiseSchedule& sched);

/// One window of model input. All tensors are batch-first:
/// music [B, Lm, Dm], past [B, Lp, D], future [B, Lf, D], step int64 [B].
struct ConditioningContext {
  torch::Tensor music;
  torch::Tensor past;
  torch::Tensor future;
  torch::Tensor step;

  int64_t batch() const { return past.size(0); }
};

/// Noises only the future segment; music and past are passed through untouched.
ConditioningContext partial_noise(const ConditioningContext& clean, const torch::Tensor& t, const torch::Tensor& noise,
                                  const NoiseSchedule& sched);

/// Ancestral step from x_t to x_{t-1} given the predicted clean signal.
/// At t = 1 the posterior mean is returned and `noise` is ignored.
torch::Tensor posterior_sample(const torch::Tensor& x_t, const torch::Tensor& x0_hat, int t, const NoiseSchedule& sched,
                               const torch::Tensor& noise);

/// Predicts the clean future window from a noised context.
using Denoiser = std::function<torch::Tensor(const ConditioningContext&)>;

/// Reverse chain from pure noise at t = T down to t = 1. All randomness comes
/// from `gen`. Throws ShapeError when the denoiser returns the wrong shape.
torch::Tensor sample_window(const Denoiser& denoiser, const torch::Tensor& music, const torch::Tensor& past,
                            int64_t future_frames, const NoiseSchedule& sched, torch::Generator& gen);

/// CPU generator seeded deterministically.
torch::Generator make_generator(uint64_t seed);

}  // namespace longdance
