#pragma once

#include <torch/torch.h>

#include "longdance/diffusion.hpp"

namespace longdance {

struct DenoiserConfig {
  int64_t model_width = 64;
  int64_t num_heads = 4;
  int64_t num_blocks = 4;
  int64_t ffn_mult = 2;
  int64_t music_window = 240;
  int64_t past_window = 120;
  int64_t future_window = 20;
  int64_t motion_dim = 0;
  int64_t music_dim = 0;
  int64_t temporal_conv_kernel = 3;
  /// Offset of the 3 root-translation channels inside a motion frame.
  int64_t trajectory_offset = 0;
  /// Largest diffusion step the network accepts.
  int64_t max_step = 50;

  int64_t num_tokens() const { return music_window + past_window + future_window; }
  int64_t future_begin() const { return music_window + past_window; }

  /// Throws InvalidArgument on inconsistent sizes.
  void validate() const;
};

/// Feature-wise affine modulation driven by the root trajectory:
/// F <- gamma(r) * F + beta(r), with gamma and beta linear in r.
/// Initialized to the identity (gamma = 1, beta = 0).
class GTMLayerImpl : public torch::nn::Module {
 public:
  explicit GTMLayerImpl(int64_t width);

  /// features [B, L, W], trajectory [B, L, 3]. Throws ShapeError on a length mismatch.
  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& trajectory);

  torch::nn::Linear scale_map{nullptr};
  torch::nn::Linear shift_map{nullptr};
};
TORCH_MODULE(GTMLayer);

/// One temporal convolution shared by the past and noised-future streams.
class SharedMotionEmbedderImpl : public torch::nn::Module {
 public:
  SharedMotionEmbedderImpl(int64_t motion_dim, int64_t width, int64_t kernel);

  /// motion [B, L, D] -> [B, L, W], zero ("same") padding at the stream edges.
  torch::Tensor forward(const torch::Tensor& motion);
  /// Same map with the parameters cut out of the autograd graph.
  torch::Tensor forward_frozen(const torch::Tensor& motion);

  torch::nn::Conv1d conv{nullptr};
};
TORCH_MODULE(SharedMotionEmbedder);

/// Pre-norm self-attention block with a feed-forward layer.
class AttentionBlockImpl : public torch::nn::Module {
 public:
  AttentionBlockImpl(int64_t width, int64_t heads, int64_t ffn_mult);

  /// Keys and values span all of `h`; queries (and the output) start at
  /// `query_begin`.
  torch::Tensor forward(const torch::Tensor& h, int64_t query_begin = 0);

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  torch::nn::Linear qkv{nullptr}, proj{nullptr}, ffn_in{nullptr}, ffn_out{nullptr};
  int64_t heads;
};
TORCH_MODULE(AttentionBlock);

struct DenoiseOptions {
  bool bypass_gtm = false;
};

/// Predicts the clean future window from [music | past | noised future]
/// tokens with full self-attention.
class DenoiserNetImpl : public torch::nn::Module {
 public:
  explicit DenoiserNetImpl(const DenoiserConfig& cfg);

  /// Music projection and shared motion embedding per stream, before any
  /// positional, segment or timestep terms: {music, past, future}.
  std::array<torch::Tensor, 3> embed_streams(const ConditioningContext& ctx);

  /// [B, num_tokens, W] token sequence fed to the first attention block.
  torch::Tensor embed_tokens(const ConditioningContext& ctx);

  /// [B, future_window, motion_dim].
  torch::Tensor forward(const ConditioningContext& ctx, const DenoiseOptions& opts = {});

  const DenoiserConfig& config() const { return cfg_; }

  torch::nn::Linear music_proj{nullptr};
  SharedMotionEmbedder motion_embed{nullptr};
  torch::nn::Linear time_in{nullptr}, time_out{nullptr};
  torch::Tensor segment_embed;
  torch::nn::ModuleList blocks{nullptr};
  torch::nn::ModuleList gtm_layers{nullptr};
  torch::nn::LayerNorm out_norm{nullptr};
  torch::nn::Linear out_head{nullptr};

 private:
  void check_context(const ConditioningContext& ctx) const;

  DenoiserConfig cfg_;
  torch::Tensor positional_;
};
TORCH_MODULE(DenoiserNet);

/// Sinusoidal embedding of integer steps: [B] -> [B, width].
torch::Tensor timestep_embedding(const torch::Tensor& steps, int64_t width);

}  // namespace longdance
