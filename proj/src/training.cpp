#include "longdance/training.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

#include "longdance/diffusion.hpp"
#include "longdance/error.hpp"
#include "longdance/io.hpp"
#include "longdance/tensor_kinematics.hpp"

namespace longdance {

namespace fs = std::filesystem;

void fit_normalizers(DanceModel& model, const std::vector<TrainingPair>& pairs) {
  if (pairs.empty()) throw InvalidArgument("no training pairs");
  std::vector<torch::Tensor> motion, music;
  for (const auto& p : pairs) {
    motion.push_back(to_tensor(p.motion.frames));
    music.push_back(to_tensor(p.music.frames));
  }
  const double floor = model.config.training.normalizer_min_std;
  model.motion_norm = Normalizer::fit(torch::cat(motion, 0), floor);
  model.music_norm = Normalizer::fit(torch::cat(music, 0), floor);
}

WindowDataset::WindowDataset(const std::vector<TrainingPair>& pairs, const DanceModel& model)
    : music_window_(model.config.windows.music),
      past_window_(model.config.windows.past),
      future_window_(model.config.windows.future),
      layout_(model.layout) {
  const int64_t need = past_window_ + future_window_;
  for (const auto& p : pairs) {
    if (p.motion.layout != layout_) throw ShapeError(fmt::format("{}: motion layout differs from the model", p.name));
    if (p.music.dim() != model.music_dim)
      throw ShapeError(fmt::format("{}: music width differs from the model", p.name));
    if (p.motion.num_frames() < need) continue;
    const auto raw = to_tensor(p.motion.frames);
    motion_.push_back(model.motion_norm.normalize(raw));
    auto music = to_tensor(p.music.frames);
    const int64_t pad = p.motion.num_frames() + music_window_ - music.size(0);
    if (pad > 0) music = torch::cat({music, torch::zeros({pad, music.size(1)})}, 0);
    music_.push_back(model.music_norm.normalize(music));
    contacts_.push_back((raw.narrow(1, layout_.contacts_begin(), layout_.contacts) > 0.5).to(torch::kFloat32));
  }
  if (motion_.empty()) throw InvalidArgument(fmt::format("no sequence has the {} frames one window needs", need));
}

WindowDataset::Batch WindowDataset::window(size_t index, int64_t start) const {
  const auto& m = motion_.at(index);
  if (start < 0 || start + past_window_ + future_window_ > m.size(0)) {
    throw RangeError(fmt::format("window at {} does not fit a {}-frame sequence", start, m.size(0)));
  }
  Batch b;
  b.clean.music = music_[index].narrow(0, start, music_window_).unsqueeze(0);
  b.clean.past = m.narrow(0, start, past_window_).unsqueeze(0);
  b.clean.future = m.narrow(0, start + past_window_, future_window_).unsqueeze(0);
  b.contacts = contacts_[index].narrow(0, start + past_window_, future_window_).unsqueeze(0);
  return b;
}

WindowDataset::Batch WindowDataset::sample(int batch, std::mt19937_64& rng) const {
  std::vector<torch::Tensor> music, past, future, contacts;
  std::uniform_int_distribution<size_t> pick(0, motion_.size() - 1);
  for (int i = 0; i < batch; ++i) {
    const size_t k = pick(rng);
    std::uniform_int_distribution<int64_t> start(0, motion_[k].size(0) - past_window_ - future_window_);
    auto w = window(k, start(rng));
    music.push_back(w.clean.music);
    past.push_back(w.clean.past);
    future.push_back(w.clean.future);
    contacts.push_back(w.contacts);
  }
  Batch b;
  b.clean = {torch::cat(music), torch::cat(past), torch::cat(future), {}};
  b.contacts = torch::cat(contacts);
  return b;
}

LossTerms compute_loss_terms(DanceModel& model, const WindowDataset::Batch& batch, const torch::Tensor& t,
                             const torch::Tensor& noise) {
  const auto noisy = partial_noise(batch.clean, t, noise, model.schedule);
  const auto pred = model.net->forward(noisy);
  LossTerms terms;
  terms.recon = recon_loss(batch.clean.future, pred);
  // embedder weights are held fixed here so this term only shapes the prediction
  const auto past_feat = model.net->motion_embed->forward_frozen(batch.clean.past);
  const auto future_feat = model.net->motion_embed->forward_frozen(pred);
  terms.mi = mi_loss(summarize(past_feat), summarize(future_feat), model.config.loss.mi_clamp);
  auto perc = perceptual_losses(batch.clean.future, pred, model.skeleton_tensors, model.layout, batch.contacts,
                                &model.motion_norm);
  terms.pos = perc.pos;
  terms.vel = perc.vel;
  terms.contact = perc.contact;
  return terms;
}

std::string loss_log_header() { return "step,t,L_recon,L_MI,L_pos,L_vel,L_contact,total"; }

std::string format_loss_record(const LossRecord& r) {
  return fmt::format("{},{:.2f},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}", r.step, r.t, r.recon, r.mi, r.pos, r.vel,
                     r.contact, r.total);
}

TrainResult train(DanceModel& model, const std::vector<TrainingPair>& pairs, const TrainOptions& opts) {
  const auto& cfg = model.config;
  fit_normalizers(model, pairs);
  const WindowDataset data(pairs, model);
  model.net->train();
  auto optimizer = make_optimizer(model);

  std::ofstream log;
  if (!opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir / "checkpoints");
    write_file_atomic(opts.out_dir / "config.json", cfg.to_json().dump(2) + "\n");
    log.open(opts.out_dir / "loss_log.csv", std::ios::trunc);
    log << loss_log_header() << "\n";
  }

  std::mt19937_64 rng(cfg.seed);
  auto gen = make_generator(cfg.seed + 1);
  TrainResult result;
  for (int step = 1; step <= cfg.training.steps; ++step) {
    const auto batch = data.sample(cfg.training.batch, rng);
    const auto t = torch::randint(1, model.schedule.T + 1, {cfg.training.batch}, gen, torch::kInt64);
    const auto noise = torch::randn(batch.clean.future.sizes(), gen, batch.clean.future.options());
    const auto terms = compute_loss_terms(model, batch, t, noise);
    const auto total = total_loss(terms, cfg.loss);

    LossRecord r{step,
                 t.to(torch::kFloat64).mean().item<double>(),
                 terms.recon.item<double>(),
                 terms.mi.item<double>(),
                 terms.pos.item<double>(),
                 terms.vel.item<double>(),
                 terms.contact.item<double>(),
                 total.item<double>()};
    if (log.is_open()) log << format_loss_record(r) << "\n" << std::flush;
    if (!std::isfinite(r.total)) {
      throw TrainingDivergedError(
          fmt::format("non-finite loss at step {} (mean t {:.2f}): recon={} mi={} pos={} vel={} contact={} total={}",
                      step, r.t, r.recon, r.mi, r.pos, r.vel, r.contact, r.total));
    }
    optimizer->zero_grad();
    total.backward();
    optimizer->step();
    result.log.push_back(r);
    if (opts.on_step) opts.on_step(r);

    const int every = cfg.training.checkpoint_every;
    if (!opts.out_dir.empty() && every > 0 && step % every == 0) {
      save_checkpoint(opts.out_dir / "checkpoints" / fmt::format("step_{:06d}.pt", step), model, optimizer.get(), step);
    }
  }
  model.net->eval();
  if (!opts.out_dir.empty()) {
    result.final_checkpoint = opts.out_dir / "model.pt";
    save_checkpoint(result.final_checkpoint, model, optimizer.get(), cfg.training.steps);
  }
  return result;
}

}  // namespace longdance
