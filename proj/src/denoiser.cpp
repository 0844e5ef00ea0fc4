#include "longdance/denoiser.hpp"

#include <fmt/format.h>

#include <cmath>

#include "longdance/error.hpp"

namespace longdance {

namespace F = torch::nn::functional;

void DenoiserConfig::validate() const {
  if (model_width <= 0 || num_heads <= 0 || model_width % num_heads != 0) {
    throw InvalidArgument(fmt::format("model width {} is not divisible by {} heads", model_width, num_heads));
  }
  if (num_blocks < 1) throw InvalidArgument("denoiser needs at least one block");
  if (music_window < 1 || past_window < 1 || future_window < 1)
    throw InvalidArgument("window lengths must be positive");
  if (motion_dim < 3 || music_dim < 1) throw InvalidArgument("motion_dim and music_dim must be set");
  if (trajectory_offset < 0 || trajectory_offset + 3 > motion_dim) {
    throw InvalidArgument(fmt::format("trajectory channels [{}, {}) outside a {}-dim frame", trajectory_offset,
                                      trajectory_offset + 3, motion_dim));
  }
  if (temporal_conv_kernel < 1 || temporal_conv_kernel % 2 == 0) {
    throw InvalidArgument("temporal convolution kernel must be odd");
  }
  if (ffn_mult < 1 || max_step < 1) throw InvalidArgument("ffn_mult and max_step must be positive");
}

GTMLayerImpl::GTMLayerImpl(int64_t width) {
  scale_map = register_module("scale_map", torch::nn::Linear(3, width));
  shift_map = register_module("shift_map", torch::nn::Linear(3, width));
  torch::NoGradGuard ng;
  scale_map->weight.zero_();
  scale_map->bias.fill_(1.0);
  shift_map->weight.zero_();
  shift_map->bias.zero_();
}

torch::Tensor GTMLayerImpl::forward(const torch::Tensor& features, const torch::Tensor& trajectory) {
  if (trajectory.dim() != features.dim() || trajectory.size(-1) != 3 || trajectory.size(-2) != features.size(-2)) {
    throw ShapeError(fmt::format("trajectory of {} frames does not match {} feature frames",
                                 trajectory.dim() >= 2 ? trajectory.size(-2) : 0, features.size(-2)));
  }
  return scale_map(trajectory) * features + shift_map(trajectory);
}

SharedMotionEmbedderImpl::SharedMotionEmbedderImpl(int64_t motion_dim, int64_t width, int64_t kernel) {
  conv = register_module("conv",
                         torch::nn::Conv1d(torch::nn::Conv1dOptions(motion_dim, width, kernel).padding(kernel / 2)));
}

torch::Tensor SharedMotionEmbedderImpl::forward(const torch::Tensor& motion) {
  return conv(motion.transpose(1, 2)).transpose(1, 2);
}

torch::Tensor SharedMotionEmbedderImpl::forward_frozen(const torch::Tensor& motion) {
  const auto& o = conv->options;
  return F::conv1d(motion.transpose(1, 2), conv->weight.detach(),
                   F::Conv1dFuncOptions().bias(conv->bias.detach()).padding(o.padding()))
      .transpose(1, 2);
}

AttentionBlockImpl::AttentionBlockImpl(int64_t width, int64_t heads_, int64_t ffn_mult) : heads(heads_) {
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({width})));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({width})));
  qkv = register_module("qkv", torch::nn::Linear(width, 3 * width));
  proj = register_module("proj", torch::nn::Linear(width, width));
  ffn_in = register_module("ffn_in", torch::nn::Linear(width, ffn_mult * width));
  ffn_out = register_module("ffn_out", torch::nn::Linear(ffn_mult * width, width));
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& h, int64_t query_begin) {
  const int64_t B = h.size(0), L = h.size(1), W = h.size(2), hd = W / heads;
  const int64_t Lq = L - query_begin;
  auto split = [&](const torch::Tensor& x, int64_t len) { return x.view({B, len, heads, hd}).transpose(1, 2); };

  const auto n = norm1(h);
  const auto parts = qkv(n).chunk(3, -1);
  const auto q = split(parts[0].narrow(1, query_begin, Lq).contiguous(), Lq);
  const auto k = split(parts[1].contiguous(), L);
  const auto v = split(parts[2].contiguous(), L);
  auto att = at::scaled_dot_product_attention(q, k, v);
  att = att.transpose(1, 2).reshape({B, Lq, W});

  auto x = h.narrow(1, query_begin, Lq) + proj(att);
  return x + ffn_out(torch::gelu(ffn_in(norm2(x))));
}

torch::Tensor timestep_embedding(const torch::Tensor& steps, int64_t width) {
  const int64_t half = width / 2;
  const auto opts = torch::TensorOptions().dtype(torch::kFloat32);
  const auto freqs = torch::exp(-std::log(10000.0) * torch::arange(half, opts) / half);
  const auto args = steps.to(torch::kFloat32).unsqueeze(1) * freqs.unsqueeze(0);
  auto emb = torch::cat({torch::sin(args), torch::cos(args)}, 1);
  if (width % 2 == 1) emb = F::pad(emb, F::PadFuncOptions({0, 1}));
  return emb;
}

namespace {

torch::Tensor sinusoidal_positions(int64_t length, int64_t width) {
  return timestep_embedding(torch::arange(length, torch::kInt64), width);
}

}  // namespace

DenoiserNetImpl::DenoiserNetImpl(const DenoiserConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int64_t W = cfg_.model_width;
  music_proj = register_module("music_proj", torch::nn::Linear(cfg_.music_dim, W));
  motion_embed = register_module("motion_embed", SharedMotionEmbedder(cfg_.motion_dim, W, cfg_.temporal_conv_kernel));
  time_in = register_module("time_in", torch::nn::Linear(W, W));
  time_out = register_module("time_out", torch::nn::Linear(W, W));
  segment_embed = register_parameter("segment_embed", 0.02 * torch::randn({3, W}));
  blocks = register_module("blocks", torch::nn::ModuleList());
  gtm_layers = register_module("gtm_layers", torch::nn::ModuleList());
  for (int64_t i = 0; i < cfg_.num_blocks; ++i) {
    blocks->push_back(AttentionBlock(W, cfg_.num_heads, cfg_.ffn_mult));
    gtm_layers->push_back(GTMLayer(W));
  }
  out_norm = register_module("out_norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({W})));
  out_head = register_module("out_head", torch::nn::Linear(W, cfg_.motion_dim));
  positional_ = register_buffer("positional", sinusoidal_positions(cfg_.num_tokens(), W));
}

void DenoiserNetImpl::check_context(const ConditioningContext& ctx) const {
  auto expect = [](const torch::Tensor& t, const char* name, int64_t len, int64_t dim) {
    if (!t.defined() || t.dim() != 3 || t.size(1) != len || t.size(2) != dim) {
      throw ShapeError(fmt::format("{} must be [B, {}, {}]", name, len, dim));
    }
  };
  expect(ctx.music, "music", cfg_.music_window, cfg_.music_dim);
  expect(ctx.past, "past", cfg_.past_window, cfg_.motion_dim);
  expect(ctx.future, "future", cfg_.future_window, cfg_.motion_dim);
  const int64_t B = ctx.past.size(0);
  if (ctx.music.size(0) != B || ctx.future.size(0) != B) throw ShapeError("batch sizes differ across streams");
  if (!ctx.step.defined() || ctx.step.dim() != 1 || ctx.step.size(0) != B) throw ShapeError("step must be [B]");
  const int64_t lo = ctx.step.min().item<int64_t>(), hi = ctx.step.max().item<int64_t>();
  if (lo < 1 || hi > cfg_.max_step) {
    throw RangeError(fmt::format("diffusion step {}..{} outside [1, {}]", lo, hi, cfg_.max_step));
  }
}

std::array<torch::Tensor, 3> DenoiserNetImpl::embed_streams(const ConditioningContext& ctx) {
  check_context(ctx);
  const auto dtype = music_proj->weight.scalar_type();
  return {music_proj(ctx.music.to(dtype)), motion_embed(ctx.past.to(dtype)), motion_embed(ctx.future.to(dtype))};
}

torch::Tensor DenoiserNetImpl::embed_tokens(const ConditioningContext& ctx) {
  auto [m, p, f] = embed_streams(ctx);
  const auto dtype = m.scalar_type();
  auto tokens = torch::cat({m + segment_embed[0], p + segment_embed[1], f + segment_embed[2]}, 1);
  tokens = tokens + positional_.to(dtype).unsqueeze(0);
  const auto temb = time_out(torch::silu(time_in(timestep_embedding(ctx.step, cfg_.model_width).to(dtype))));
  return tokens + temb.unsqueeze(1);
}

torch::Tensor DenoiserNetImpl::forward(const ConditioningContext& ctx, const DenoiseOptions& opts) {
  auto h = embed_tokens(ctx);
  const int64_t fb = cfg_.future_begin(), Lf = cfg_.future_window;
  const auto trajectory = ctx.future.narrow(2, cfg_.trajectory_offset, 3).to(h.scalar_type());
  const int64_t n = cfg_.num_blocks;
  for (int64_t i = 0; i < n; ++i) {
    const bool last = i == n - 1;
    h = blocks[i]->as<AttentionBlock>()->forward(h, last ? fb : 0);
    if (opts.bypass_gtm) continue;
    auto gtm = gtm_layers[i]->as<GTMLayer>();
    if (last) {
      h = gtm->forward(h, trajectory);
    } else {
      const auto fut = gtm->forward(h.narrow(1, fb, Lf), trajectory);
      h = torch::cat({h.narrow(1, 0, fb), fut}, 1);
    }
  }
  if (h.size(1) != Lf) h = h.narrow(1, fb, Lf);
  return out_head(out_norm(h));
}

}  // namespace longdance
