#include "longdance/diffusion.hpp"

#include <ATen/CPUGeneratorImpl.h>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <numbers>

#include "longdance/error.hpp"

namespace longdance {

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "cosine") return ScheduleKind::kCosine;
  if (name == "linear") return ScheduleKind::kLinear;
  throw InvalidArgument(fmt::format("unknown schedule kind '{}'", name));
}

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::kCosine ? "cosine" : "linear"; }

double NoiseSchedule::posterior_variance(int t) const {
  return (1.0 - alpha_bar[t - 1]) / (1.0 - alpha_bar[t]) * beta(t);
}

std::pair<double, double> NoiseSchedule::posterior_mean_coefs(int t) const {
  const double denom = 1.0 - alpha_bar[t];
  return {std::sqrt(alpha_bar[t - 1]) * beta(t) / denom, std::sqrt(alpha[t]) * (1.0 - alpha_bar[t - 1]) / denom};
}

NoiseSchedule make_schedule(int T, ScheduleKind kind) {
  if (T < 2) throw InvalidArgument(fmt::format("schedule needs T >= 2, got {}", T));
  constexpr double kMaxBeta = 0.999;
  NoiseSchedule s;
  s.T = T;
  s.kind = kind;
  s.alpha.assign(T + 1, 1.0);
  s.alpha_bar.assign(T + 1, 1.0);
  if (kind == ScheduleKind::kCosine) {
    // Squared-cosine alpha_bar curve with a small offset so early steps are not vanishingly small.
    constexpr double kOffset = 0.008;
    auto f = [&](double t) {
      return std::pow(std::cos((t / T + kOffset) / (1.0 + kOffset) * std::numbers::pi / 2.0), 2);
    };
    for (int t = 1; t <= T; ++t) s.alpha[t] = 1.0 - std::min(1.0 - f(t) / f(t - 1), kMaxBeta);
  } else {
    // Linear betas spanning 1e-4..0.02 at T = 1000, rescaled for other T.
    // The end point is capped as a whole so short schedules stay strictly monotone.
    const double scale = 1000.0 / T;
    const double lo = scale * 1e-4, hi = std::min(scale * 0.02, kMaxBeta);
    for (int t = 1; t <= T; ++t) s.alpha[t] = 1.0 - (lo + (hi - lo) * (t - 1) / (T - 1));
  }
  for (int t = 1; t <= T; ++t) s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  return s;
}

namespace {

torch::Tensor broadcast_coef(const std::vector<double>& values, const torch::Tensor& t, const torch::Tensor& like) {
  auto table = torch::tensor(values, torch::TensorOptions().dtype(torch::kFloat64));
  auto c = table.index_select(0, t.to(torch::kInt64)).to(like.dtype());
  std::vector<int64_t> shape(like.dim(), 1);
  shape[0] = like.size(0);
  return c.view(shape);
}

void check_steps(const torch::Tensor& t, int lo, int hi) {
  if (t.numel() == 0) return;
  const int64_t mn = t.min().item<int64_t>(), mx = t.max().item<int64_t>();
  if (mn < lo || mx > hi) throw RangeError(fmt::format("diffusion step outside [{}, {}]: {}..{}", lo, hi, mn, mx));
}

}  // namespace

torch::Tensor q_sample(const torch::Tensor& x0, int t, const torch::Tensor& noise, const NoiseSchedule& sched) {
  if (t < 0 || t > sched.T) throw RangeError(fmt::format("diffusion step {} outside [0, {}]", t, sched.T));
  if (!noise.sizes().equals(x0.sizes())) throw ShapeError("noise must match x0");
  if (t == 0) return x0;
  return std::sqrt(sched.alpha_bar[t]) * x0 + std::sqrt(1.0 - sched.alpha_bar[t]) * noise;
}

torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& noise,
                       const NoiseSchedule& sched) {
  if (!noise.sizes().equals(x0.sizes())) throw ShapeError("noise must match x0");
  if (t.dim() != 1 || t.size(0) != x0.size(0)) throw ShapeError("step tensor must be [B]");
  check_steps(t, 0, sched.T);
  std::vector<double> sqrt_ab(sched.T + 1), sqrt_1mab(sched.T + 1);
  for (int i = 0; i <= sched.T; ++i) {
    sqrt_ab[i] = std::sqrt(sched.alpha_bar[i]);
    sqrt_1mab[i] = std::sqrt(1.0 - sched.alpha_bar[i]);
  }
  return broadcast_coef(sqrt_ab, t, x0) * x0 + broadcast_coef(sqrt_1mab, t, x0) * noise;
}

ConditioningContext partial_noise(const ConditioningContext& clean, const torch::Tensor& t, const torch::Tensor& noise,
                                  const NoiseSchedule& sched) {
  ConditioningContext out;
  out.music = clean.music;
  out.past = clean.past;
  out.future = q_sample(clean.future, t, noise, sched);
  out.step = t.to(torch::kInt64);
  return out;
}

torch::Tensor posterior_sample(const torch::Tensor& x_t, const torch::Tensor& x0_hat, int t, const NoiseSchedule& sched,
                               const torch::Tensor& noise) {
  if (t < 1 || t > sched.T) throw RangeError(fmt::format("diffusion step {} outside [1, {}]", t, sched.T));
  if (!x_t.sizes().equals(x0_hat.sizes())) throw ShapeError("x0 prediction must match x_t");
  const auto [c0, ct] = sched.posterior_mean_coefs(t);
  auto mean = c0 * x0_hat + ct * x_t;
  if (t == 1) return mean;
  if (!noise.sizes().equals(x_t.sizes())) throw ShapeError("noise must match x_t");
  return mean + std::sqrt(sched.posterior_variance(t)) * noise;
}

torch::Tensor sample_window(const Denoiser& denoiser, const torch::Tensor& music, const torch::Tensor& past,
                            int64_t future_frames, const NoiseSchedule& sched, torch::Generator& gen) {
  const int64_t batch = past.size(0);
  const std::vector<int64_t> shape{batch, future_frames, past.size(2)};
  const auto opts = torch::TensorOptions().dtype(past.dtype());
  ConditioningContext ctx{music, past, torch::randn(shape, gen, opts), {}};
  for (int t = sched.T; t >= 1; --t) {
    ctx.step = torch::full({batch}, t, torch::kInt64);
    const auto x0_hat = denoiser(ctx);
    if (!x0_hat.sizes().equals(shape)) {
      throw ShapeError(fmt::format("denoiser returned {} but the window is [{}, {}, {}]",
                                   fmt::join(x0_hat.sizes(), "x"), shape[0], shape[1], shape[2]));
    }
    const auto noise = t > 1 ? torch::randn(shape, gen, opts) : torch::Tensor();
    ctx.future = posterior_sample(ctx.future, x0_hat, t, sched, noise);
  }
  return ctx.future;
}

torch::Generator make_generator(uint64_t seed) { return at::make_generator<at::CPUGeneratorImpl>(seed); }

}  // namespace longdance
