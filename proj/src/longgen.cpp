#include "longdance/longgen.hpp"

#include <fmt/format.h>

#include "longdance/error.hpp"
#include "longdance/tensor_kinematics.hpp"

namespace longdance {

std::vector<GenerationWindow> window_plan(int64_t target_frames, const RunConfig::Windows& w, int64_t music_frames) {
  if (target_frames < w.past) {
    throw InvalidArgument(fmt::format("target of {} frames is shorter than the {}-frame seed", target_frames, w.past));
  }
  std::vector<GenerationWindow> plan;
  for (int64_t start = 0; start + w.past < target_frames; start += w.future) {
    GenerationWindow g;
    g.past = {start, start + w.past};
    g.future = {start + w.past, start + w.past + w.future};
    g.music = {start, start + w.music};
    g.music_available = {std::min(start, music_frames), std::min(start + w.music, music_frames)};
    plan.push_back(g);
  }
  return plan;
}

MotionSequence generate_long(const DanceModel& model, const GenerationRequest& req) {
  return generate_long(model, model.denoiser(), req);
}

MotionSequence generate_long(const DanceModel& model, const Denoiser& denoiser, const GenerationRequest& req) {
  const auto& w = model.config.windows;
  if (req.seed_motion.num_frames() != w.past) {
    throw ShapeError(
        fmt::format("seed motion has {} frames, the past window is {}", req.seed_motion.num_frames(), w.past));
  }
  if (req.seed_motion.layout != model.layout) throw ShapeError("seed motion layout differs from the model");
  if (req.music.num_frames() == 0) throw InvalidArgument("music is empty");
  if (req.music.dim() != model.music_dim) {
    throw ShapeError(fmt::format("music has {} channels, the model expects {}", req.music.dim(), model.music_dim));
  }

  const auto plan = window_plan(req.target_frames, w, req.music.num_frames());
  MotionSequence out;
  out.fps = req.seed_motion.fps;
  out.layout = model.layout;
  out.frames.resize(req.target_frames, model.layout.dim());
  out.frames.topRows(w.past) = req.seed_motion.frames;
  if (plan.empty()) return out;

  // raw music followed by explicit zero rows, normalized once
  auto music = to_tensor(req.music.frames);
  const int64_t needed = plan.back().music.end;
  if (needed > music.size(0)) music = torch::cat({music, torch::zeros({needed - music.size(0), music.size(1)})}, 0);
  music = model.music_norm.normalize(music);

  auto gen = make_generator(req.seed);
  torch::Tensor frames = to_tensor(out.frames);
  for (const auto& g : plan) {
    if (req.on_window) req.on_window(g);
    const auto past = model.motion_norm.normalize(frames.narrow(0, g.past.begin, g.past.size())).unsqueeze(0);
    const auto m = music.narrow(0, g.music.begin, g.music.size()).unsqueeze(0);
    const auto future = sample_window(denoiser, m, past, w.future, model.schedule, gen);
    const int64_t keep = std::min(g.future.end, req.target_frames) - g.future.begin;
    frames.narrow(0, g.future.begin, keep).copy_(model.motion_norm.denormalize(future[0]).narrow(0, 0, keep));
  }
  out.frames = to_frame_matrix(frames);
  out.frames.topRows(w.past) = req.seed_motion.frames;
  return out;
}

}  // namespace longdance
