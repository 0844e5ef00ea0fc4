#include "longdance/losses.hpp"

#include <fmt/format.h>

#include "longdance/error.hpp"

namespace longdance {

void LossWeights::validate() const {
  for (double w : {mi, mp, pos, vel, contact, mi_clamp}) {
    if (!(w >= 0.0)) throw InvalidArgument(fmt::format("loss weights must be non-negative, got {}", w));
  }
}

Normalizer Normalizer::fit(const torch::Tensor& frames, double min_std) {
  if (frames.dim() != 2 || frames.size(0) < 1) throw ShapeError("normalizer needs frames [N, D]");
  const auto x = frames.to(torch::kFloat64);
  Normalizer n;
  n.mean = x.mean(0).to(torch::kFloat32);
  n.std = x.std(0, /*unbiased=*/false).clamp_min(min_std).to(torch::kFloat32);
  return n;
}

Normalizer Normalizer::identity(int64_t dim) { return {torch::zeros({dim}), torch::ones({dim})}; }

torch::Tensor Normalizer::normalize(const torch::Tensor& x) const {
  return (x - mean.to(x.dtype())) / std.to(x.dtype());
}

torch::Tensor Normalizer::denormalize(const torch::Tensor& x) const {
  return x * std.to(x.dtype()) + mean.to(x.dtype());
}

MotionDistributionSummary summarize(const torch::Tensor& features) {
  if (features.dim() != 3) throw ShapeError("features must be [B, L, W]");
  return {features.mean(1), features.var(1, /*unbiased=*/false).clamp_min(1e-6)};
}

torch::Tensor gaussian_kl(const MotionDistributionSummary& p, const MotionDistributionSummary& q) {
  if (!p.mean.sizes().equals(q.mean.sizes()) || !p.var.sizes().equals(p.mean.sizes()) ||
      !q.var.sizes().equals(q.mean.sizes())) {
    throw ShapeError("summaries must share one shape");
  }
  // NaN passes through so training can report it with context
  if ((p.var <= 0).any().item<bool>() || (q.var <= 0).any().item<bool>()) {
    throw RangeError("summary variance must be positive");
  }
  const auto diff = p.mean - q.mean;
  const auto per_dim = 0.5 * (torch::log(q.var / p.var) + (p.var + diff * diff) / q.var - 1.0);
  return per_dim.sum(-1);
}

torch::Tensor recon_loss(const torch::Tensor& target, const torch::Tensor& pred) {
  if (!target.sizes().equals(pred.sizes())) throw ShapeError("recon_loss needs matching shapes");
  return (target - pred).pow(2).mean();
}

torch::Tensor mi_loss(const MotionDistributionSummary& past, const MotionDistributionSummary& future, double clamp) {
  const auto kl = gaussian_kl(past, future);
  return torch::clamp(-kl, -clamp, 0.0).mean();
}

PerceptualLosses perceptual_losses(const torch::Tensor& target, const torch::Tensor& pred, const SkeletonTensors& skel,
                                   const FrameLayout& layout, const torch::Tensor& contacts, const Normalizer* norm) {
  if (!target.sizes().equals(pred.sizes()) || target.dim() != 3 || target.size(2) != layout.dim()) {
    throw ShapeError(fmt::format("perceptual losses need [B, L, {}] frames of equal shape", layout.dim()));
  }
  const int64_t L = target.size(1);
  if (L < 2) throw InvalidArgument("velocity and contact terms need at least 2 frames");
  const int64_t C = static_cast<int64_t>(skel.foot_joints.size());
  if (contacts.dim() != 3 || contacts.size(0) != target.size(0) || contacts.size(1) != L || contacts.size(2) != C) {
    throw ShapeError(fmt::format("contacts must be [B, {}, {}]", L, C));
  }

  const auto raw_t = norm ? norm->denormalize(target) : target;
  const auto raw_p = norm ? norm->denormalize(pred) : pred;
  const auto pos_t = fk_from_frames(skel, layout, raw_t);  // [B, L, J, 3]
  const auto pos_p = fk_from_frames(skel, layout, raw_p);

  PerceptualLosses out;
  out.pos = (pos_t - pos_p).pow(2).sum({2, 3}).mean();

  const auto dt = target.narrow(1, 1, L - 1) - target.narrow(1, 0, L - 1);
  const auto dp = pred.narrow(1, 1, L - 1) - pred.narrow(1, 0, L - 1);
  out.vel = (dt - dp).pow(2).mean();

  const auto feet = torch::tensor(skel.foot_joints, torch::kInt64);
  const auto foot_p = pos_p.index_select(2, feet);  // [B, L, C, 3]
  const auto step = foot_p.narrow(1, 1, L - 1) - foot_p.narrow(1, 0, L - 1);
  const auto mask = contacts.narrow(1, 0, L - 1).to(step.dtype());
  out.contact = (step.pow(2).sum(-1) * mask).sum(-1).mean();
  return out;
}

torch::Tensor total_loss(const LossTerms& t, const LossWeights& w) {
  const auto mp = w.pos * t.pos + w.vel * t.vel + w.contact * t.contact;
  return t.recon + w.mi * t.mi + w.mp * mp;
}

}  // namespace longdance
