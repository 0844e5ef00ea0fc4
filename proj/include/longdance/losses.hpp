#pragma once

#include <torch/torch.h>

#include "longdance/motion.hpp"
#include "longdance/tensor_kinematics.hpp"

namespace longdance {

struct LossWeights {
  double mi = 0.1;
  double mp = 1.0;
  double pos = 1.0;
  double vel = 1.0;
  double contact = 1.0;
  /// mi_loss is clamped to [-mi_clamp, 0].
  double mi_clamp = 5.0;

  /// Throws InvalidArgument for negative weights.
  void validate() const;
};

/// Per-channel affine normalization: x_n = (x - mean) / std.
struct Normalizer {
  torch::Tensor mean;  // [D], float32
  torch::Tensor std;   // [D], float32, floored

  /// Statistics over all rows of `frames` ([N, D]); std is floored at `min_std`.
  static Normalizer fit(const torch::Tensor& frames, double min_std = 1e-3);
  static Normalizer identity(int64_t dim);

  int64_t dim() const { return mean.size(0); }
  torch::Tensor normalize(const torch::Tensor& x) const;
  torch::Tensor denormalize(const torch::Tensor& x) const;
};

/// Mean and diagonal variance of embedded motion features over one window.
struct MotionDistributionSummary {
  torch::Tensor mean;  // [B, W]
  torch::Tensor var;   // [B, W], floored at 1e-6
};

/// features [B, L, W] -> per-window summary.
MotionDistributionSummary summarize(const torch::Tensor& features);

/// KL(p || q) between diagonal Gaussians, summed over channels: [B].
/// Throws RangeError when a variance is not positive.
torch::Tensor gaussian_kl(const MotionDistributionSummary& p, const MotionDistributionSummary& q);

/// Mean squared error over every element. Throws ShapeError on mismatch.
torch::Tensor recon_loss(const torch::Tensor& target, const torch::Tensor& pred);

/// -KL(past || future) per window, clamped to [-clamp, 0], averaged over the batch.
torch::Tensor mi_loss(const MotionDistributionSummary& past, const MotionDistributionSummary& future,
                      double clamp = 5.0);

struct PerceptualLosses {
  torch::Tensor pos;
  torch::Tensor vel;
  torch::Tensor contact;
};

/// target/pred: frames [B, L, D] laid out per `layout`; contacts: ground-truth
/// foot labels [B, L, C] in skeleton foot order.
///   pos     mean over frames of the summed squared joint-position error
///   vel     mean over frame pairs of the squared difference of temporal
///           differences, averaged over channels
///   contact mean over frame pairs of the summed squared predicted foot
///           displacement where the label is set
/// When `norm` is given the frames are in normalized units: forward kinematics
/// runs on denormalized frames while vel stays in normalized units.
/// Throws InvalidArgument for fewer than 2 frames and ShapeError on mismatch.
PerceptualLosses perceptual_losses(const torch::Tensor& target, const torch::Tensor& pred, const SkeletonTensors& skel,
                                   const FrameLayout& layout, const torch::Tensor& contacts,
                                   const Normalizer* norm = nullptr);

struct LossTerms {
  torch::Tensor recon;
  torch::Tensor mi;
  torch::Tensor pos;
  torch::Tensor vel;
  torch::Tensor contact;
};

/// recon + w.mi * mi + w.mp * (w.pos * pos + w.vel * vel + w.contact * contact)
torch::Tensor total_loss(const LossTerms& terms, const LossWeights& w);

}  // namespace longdance
