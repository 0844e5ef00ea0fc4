// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
//
//   acceptance [--reuse] [--only N[,N...]]
//
// --reuse keeps an existing toy dataset and trained runs in the work directory.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "longdance/dataset.hpp"
#include "longdance/denoiser.hpp"
#include "longdance/diffusion.hpp"
#include "longdance/error.hpp"
#include "longdance/io.hpp"
#include "longdance/losses.hpp"
#include "longdance/metrics.hpp"
#include "longdance/model.hpp"
#include "longdance/tensor_kinematics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace longdance;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------- helpers

using ScalarFn = std::function<torch::Tensor(const torch::Tensor&)>;

double fd_rel_error(const ScalarFn& f, const torch::Tensor& x0, double h = 1e-6) {
  auto x = x0.detach().clone().requires_grad_(true);
  f(x).backward();
  const auto analytic = x.grad().flatten();
  auto numeric = torch::zeros_like(analytic);
  auto flat = x0.detach().clone().flatten();
  torch::NoGradGuard ng;
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double v = flat[i].item<double>();
    flat[i] = v + h;
    const double up = f(flat.view(x0.sizes())).item<double>();
    flat[i] = v - h;
    const double down = f(flat.view(x0.sizes())).item<double>();
    flat[i] = v;
    numeric[i] = (up - down) / (2 * h);
  }
  return (analytic - numeric).norm().item<double>() / std::max(numeric.norm().item<double>(), 1e-12);
}

double module_fd_rel_error(torch::nn::Module& m, torch::Tensor& param, const std::function<torch::Tensor()>& f,
                           double h = 1e-6) {
  m.zero_grad();
  f().backward();
  const auto analytic = param.grad().clone().flatten();
  auto numeric = torch::zeros_like(analytic);
  torch::NoGradGuard ng;
  auto flat = param.view(-1);
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double v = flat[i].item<double>();
    flat[i] = v + h;
    const double up = f().item<double>();
    flat[i] = v - h;
    const double down = f().item<double>();
    flat[i] = v;
    numeric[i] = (up - down) / (2 * h);
  }
  return (analytic - numeric).norm().item<double>() / std::max(numeric.norm().item<double>(), 1e-12);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& cmd, const fs::path& log) {
  const std::string full = cmd + " >> \"" + log.string() + "\" 2>&1";
  std::ofstream(log, std::ios::app) << "$ " << cmd << "\n";
  return std::system(full.c_str());
}

// ---------------------------------------------------------------- 1-8

Outcome diffusion_correctness() {
  const auto t0 = Clock::now();
  const NoiseSchedule s = make_schedule(50);
  auto gen = make_generator(2024);
  // one draw is a 20-frame window of a static 3-channel pose
  const int n = 10000, frames = 20;
  const auto pose = torch::tensor({0.7, -1.2, 2.0}, torch::kFloat64);
  const auto x0 = pose.expand({n, frames, 3});
  double worst = 0.0;
  for (int t : {1, 10, 25, 40, 50}) {
    const auto closed = q_sample(x0, t, torch::randn({n, frames, 3}, gen, torch::kFloat64), s);
    auto it = x0.clone();
    for (int k = 1; k <= t; ++k) {
      it =
          std::sqrt(s.alpha[k]) * it + std::sqrt(1.0 - s.alpha[k]) * torch::randn({n, frames, 3}, gen, torch::kFloat64);
    }
    const double var = 1.0 - s.alpha_bar[t], sd = std::sqrt(var);
    for (const auto& d : {closed, it}) {
      const auto flat = d.reshape({n * frames, 3});
      const auto mean = flat.mean(0), v = flat.var(0);
      for (int c = 0; c < 3; ++c) {
        const double mu = std::sqrt(s.alpha_bar[t]) * pose[c].item<double>();
        worst = std::max(worst, std::abs(mean[c].item<double>() - mu) / std::max(std::abs(mu), sd));
        worst = std::max(worst, std::abs(v[c].item<double>() - var) / var);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 0.02 && secs < 30.0, fmt::format("worst relative moment error {:.4f}, {:.1f} s", worst, secs)};
}

Outcome partial_noising_purity() {
  const NoiseSchedule s = make_schedule(50);
  auto gen = make_generator(7);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int64_t> len(1, 40), dim(1, 12), batch(1, 4);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const int64_t b = batch(rng), d = dim(rng);
    ConditioningContext ctx{torch::randn({b, len(rng), dim(rng)}, gen),
                            torch::randn({b, len(rng), d}, gen),
                            torch::randn({b, len(rng), d}, gen),
                            {}};
    const auto music = ctx.music.clone(), past = ctx.past.clone();
    const auto t = torch::randint(1, 51, {b}, gen, torch::kInt64);
    const auto noisy = partial_noise(ctx, t, torch::randn(ctx.future.sizes(), gen), s);
    bad += !(torch::equal(noisy.music, music) && torch::equal(noisy.past, past) && torch::equal(ctx.music, music) &&
             torch::equal(ctx.past, past));
  }
  return {bad == 0, fmt::format("{} of 1000 contexts altered", bad)};
}

Outcome oracle_reverse_chain() {
  const NoiseSchedule s = make_schedule(50);
  auto gen = make_generator(11);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto target = torch::randn({1, 20, 295}, gen, torch::kFloat64);
    const Denoiser oracle = [&](const ConditioningContext& ctx) { return target.expand_as(ctx.future); };
    const auto out = sample_window(oracle, torch::zeros({1, 240, 83}, torch::kFloat64),
                                   torch::zeros({1, 120, 295}, torch::kFloat64), 20, s, gen);
    worst = std::max(worst, (out - target).norm().item<double>() / target.norm().item<double>());
  }
  return {worst < 0.05, fmt::format("worst relative error {:.2e} over 5 targets", worst)};
}

Outcome gradient_suite() {
  const Skeleton skel = Skeleton::toy5();
  const auto st = SkeletonTensors::from(skel);
  const FrameLayout layout = FrameLayout::for_skeleton(skel);
  auto gen = make_generator(3);
  const int64_t L = 8;
  auto frames = [&] {
    auto x = 0.3 * torch::randn({1, L, layout.dim()}, gen, torch::kFloat64);
    x.narrow(2, layout.rotations_begin(), 6 * layout.joints)
        .add_(torch::tensor({1.0, 0.0, 0.0, 0.0, 1.0, 0.0}, torch::kFloat64).repeat({layout.joints}));
    return x;
  };
  const auto target = frames(), pred = frames();
  auto contacts = (torch::rand({1, L, skel.num_contacts()}, gen, torch::kFloat64) > 0.4).to(torch::kFloat64);
  const auto weights = torch::randn({1, L, skel.num_joints(), 3}, gen, torch::kFloat64);

  std::vector<std::pair<std::string, double>> errs;
  errs.emplace_back(
      "FK",
      fd_rel_error([&](const torch::Tensor& p) { return (fk_from_frames(st, layout, p) * weights).sum(); }, pred));
  errs.emplace_back(
      "L_pos",
      fd_rel_error([&](const torch::Tensor& p) { return perceptual_losses(target, p, st, layout, contacts).pos; },
                   pred));
  errs.emplace_back(
      "L_vel",
      fd_rel_error([&](const torch::Tensor& p) { return perceptual_losses(target, p, st, layout, contacts).vel; },
                   pred));
  errs.emplace_back(
      "L_contact",
      fd_rel_error([&](const torch::Tensor& p) { return perceptual_losses(target, p, st, layout, contacts).contact; },
                   pred));
  const auto past_feat = torch::randn({2, L, 6}, gen, torch::kFloat64);
  errs.emplace_back(
      "mi_loss", fd_rel_error([&](const torch::Tensor& f) { return mi_loss(summarize(past_feat), summarize(f), 1e3); },
                              0.5 * torch::randn({2, L, 6}, gen, torch::kFloat64) + 0.2));

  torch::manual_seed(3);
  GTMLayer gtm(6);
  gtm->to(torch::kFloat64);
  {
    torch::NoGradGuard ng;
    for (auto& p : gtm->parameters()) p.copy_(0.3 * torch::randn(p.sizes(), gen, torch::kFloat64));
  }
  const auto feats = torch::randn({1, L, 6}, gen, torch::kFloat64);
  const auto traj = torch::randn({1, L, 3}, gen, torch::kFloat64);
  const auto w = torch::randn({1, L, 6}, gen, torch::kFloat64);
  auto objective = [&] { return (gtm->forward(feats, traj) * w).sum(); };
  double gtm_err = 0.0;
  for (auto* p : {&gtm->scale_map->weight, &gtm->scale_map->bias, &gtm->shift_map->weight, &gtm->shift_map->bias}) {
    gtm_err = std::max(gtm_err, module_fd_rel_error(*gtm, *p, objective));
  }
  errs.emplace_back("GTM", gtm_err);

  bool ok = true;
  std::string detail;
  for (const auto& [name, e] : errs) {
    ok = ok && e < 1e-4;
    detail += fmt::format("{}{} {:.1e}", detail.empty() ? "" : ", ", name, e);
  }
  return {ok, detail};
}

DenoiserConfig desk_denoiser() {
  DenoiserConfig c;
  c.motion_dim = FrameLayout::for_skeleton(Skeleton::smpl24()).dim();
  c.music_dim = 83;
  c.trajectory_offset = FrameLayout::for_skeleton(Skeleton::smpl24()).root_begin();
  return c;
}

ConditioningContext random_context(const DenoiserConfig& c, int64_t batch) {
  return {torch::randn({batch, c.music_window, c.music_dim}), torch::randn({batch, c.past_window, c.motion_dim}),
          torch::randn({batch, c.future_window, c.motion_dim}), torch::randint(1, c.max_step + 1, {batch})};
}

Outcome gtm_identity() {
  torch::manual_seed(21);
  DenoiserNet net(desk_denoiser());
  const auto ctx = random_context(net->config(), 2);
  torch::NoGradGuard ng;
  const double diff = (net->forward(ctx) - net->forward(ctx, {.bypass_gtm = true})).abs().max().item<double>();
  return {diff < 1e-6, fmt::format("max |with - bypassed| = {:.2e}", diff)};
}

Outcome attention_reachability() {
  torch::manual_seed(22);
  DenoiserNet net(desk_denoiser());
  {
    torch::NoGradGuard ng;
    for (auto& p : net->parameters()) p.copy_(0.1 * torch::randn_like(p));
  }
  auto ctx = random_context(net->config(), 1);
  ctx.music.requires_grad_(true);
  ctx.past.requires_grad_(true);
  net->forward(ctx).pow(2).sum().backward();
  const double music_min = ctx.music.grad()[0].norm(2, {1}).min().item<double>();
  const double past_min = ctx.past.grad()[0].norm(2, {1}).min().item<double>();
  return {music_min > 0 && past_min > 0,
          fmt::format("min token gradient norm: music {:.2e}, past {:.2e}", music_min, past_min)};
}

Outcome metric_degeneracies() {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(40, 5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  expect(std::abs(frechet_distance(x, x)) < 1e-6, "FID(X,X)");
  Eigen::MatrixXd same(6, 5);
  same.rowwise() = x.row(0);
  expect(diversity(same) == 0.0, "diversity(identical)");

  const Skeleton skel = Skeleton::smpl24();
  std::vector<Vec3> roots(240, Vec3(0, 0.92, 0));
  std::vector<std::vector<Rotation6D>> rots(240, std::vector<Rotation6D>(skel.num_joints()));
  const auto constant = build_motion(skel, 60.0, roots, rots);
  const auto th = default_freezing_thresholds();
  expect(freezing_rate(constant, th) == 1.0, "freezing(constant)");

  SynthMusicOptions mo;
  mo.duration_s = 5;
  const auto music = synth_music(mo);
  const auto half =
      synth_dance(skel, music.beats, 240, 60.0, {.genre = 0, .seed = 3, .chunk_energy = {1.0, 1.0, 0.0, 0.0}});
  expect(freezing_rate(half, th) == 0.5, "freezing(half frozen)");

  // one joint that stops every 30 frames
  JointTrack p{60.0, 1, {}};
  for (int t = 0; t < 300; ++t) {
    const double u = (t % 30) / 30.0;
    const double s = u - std::sin(2 * M_PI * u) / (2 * M_PI);
    p.xyz.emplace_back((t / 30) % 2 == 0 ? s : 1 - s, 0, 0);
  }
  BeatGrid on, late;
  for (int b = 0; b <= 300; b += 30) {
    on.beat_frames.push_back(b);
    late.beat_frames.push_back(b + 3);
  }
  const double a1 = beat_align(p, on).score, a2 = beat_align(p, late).score;
  expect(a1 == 1.0, fmt::format("beat_align(aligned) = {}", a1));
  expect(std::abs(a2 - std::exp(-0.5)) < 1e-6, fmt::format("beat_align(offset sigma) = {}", a2));

  std::string detail = failed.empty() ? "FID, diversity, freezing x2, beat_align x2 all exact" : "failed:";
  for (const auto& f : failed) detail += " " + f + ";";
  return {failed.empty(), detail};
}

Outcome fid_oracle() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  const int n = 10000;
  const double m1 = 0.5, s1 = 1.0, m2 = 2.5, s2 = 1.6;
  Eigen::MatrixXd a(n, 1), b(n, 1);
  for (int i = 0; i < n; ++i) {
    a(i, 0) = m1 + s1 * g(rng);
    b(i, 0) = m2 + s2 * g(rng);
  }
  const double closed = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
  const double fid = frechet_distance(a, b);
  const double rel = std::abs(fid - closed) / closed;
  return {rel < 0.05, fmt::format("FID {:.4f} vs closed form {:.4f} ({:.2f}% off)", fid, closed, 100 * rel)};
}

// ---------------------------------------------------------------- 9-11

struct ToyRun {
  fs::path dir;
  json metrics;
  double train_seconds = 0.0;
};

struct ToyWorld {
  fs::path work, cli, log;
  bool reuse = false;
  bool data_ready = false;
  DatasetManifest manifest;
  std::map<std::string, ToyRun> runs;
  std::string error;
};

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void ensure_data(ToyWorld& w) {
  if (w.data_ready) return;
  const fs::path data = w.work / "data";
  if (!(w.reuse && fs::exists(data / "manifest.json"))) {
    fs::remove_all(data);
    if (run(fmt::format("{} synth-data --sequences 64 --genres 2 --seed 0 --duration-s 20 --out {}", q(w.cli), q(data)),
            w.log) != 0) {
      throw std::runtime_error("synth-data failed");
    }
  }
  w.manifest = read_manifest(data / "manifest.json");
  w.data_ready = true;
}

ToyRun& ensure_run(ToyWorld& w, const std::string& name, double lambda_mi) {
  if (auto it = w.runs.find(name); it != w.runs.end()) return it->second;
  ensure_data(w);
  ToyRun r;
  r.dir = w.work / name;
  const fs::path cfg = w.work / (name + ".json");
  const json c{{"data", {{"manifest", (w.work / "data" / "manifest.json").string()}}},
               {"training", {{"steps", 2000}, {"batch", 16}, {"checkpoint_every", 500}}},
               {"model", {{"width", 64}}},
               {"diffusion", {{"steps", 50}}},
               {"loss", {{"mi", lambda_mi}}},
               {"seed", 0}};
  std::ofstream(cfg) << c.dump(2);
  const fs::path timing = r.dir / "train_seconds.txt";
  if (w.reuse && fs::exists(r.dir / "model.pt") && fs::exists(timing)) {
    std::ifstream(timing) >> r.train_seconds;
  } else {
    fs::remove_all(r.dir);
    const auto t0 = Clock::now();
    if (run(fmt::format("{} train --config {} --out {}", q(w.cli), q(cfg), q(r.dir)), w.log) != 0) {
      throw std::runtime_error("train failed for " + name);
    }
    r.train_seconds = seconds_since(t0);
    std::ofstream(timing) << r.train_seconds;
  }

  const fs::path gen = r.dir / "generated";
  fs::remove_all(gen);
  for (const auto* e : w.manifest.split("test")) {
    if (run(fmt::format("{} generate --checkpoint {} --music {} --seed-motion {} --length-s 20 --seed 1 --out {}",
                        q(w.cli), q(r.dir / "model.pt"), q(w.manifest.root / e->music), q(w.manifest.root / e->motion),
                        q(gen)),
            w.log) != 0) {
      throw std::runtime_error("generate failed for " + e->name);
    }
  }
  if (run(fmt::format("{} evaluate --config {} --generated {} --out {}", q(w.cli), q(cfg), q(gen), q(r.dir / "eval")),
          w.log) != 0) {
    throw std::runtime_error("evaluate failed for " + name);
  }
  r.metrics = json::parse(slurp(r.dir / "eval" / "metrics.json"));
  return w.runs.emplace(name, std::move(r)).first->second;
}

std::vector<MotionSequence> read_generated(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().string().ends_with(".motion.json")) files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MotionSequence> out;
  for (const auto& f : files) out.push_back(read_motion(f));
  return out;
}

Outcome toy_end_to_end(ToyWorld& w) {
  const auto& r = ensure_run(w, "run_mi", 0.1);
  std::vector<std::string> parts;
  bool ok = r.train_seconds < 3600.0;
  parts.push_back(fmt::format("train {:.0f} s", r.train_seconds));

  // (a) reconstruction loss: first 10 steps vs last 100 steps
  std::ifstream log(r.dir / "loss_log.csv");
  std::string line;
  std::getline(log, line);
  std::vector<double> recon;
  while (std::getline(log, line)) {
    std::stringstream ss(line);
    std::string field;
    for (int i = 0; i < 3; ++i) std::getline(ss, field, ',');
    recon.push_back(std::stod(field));
  }
  if (recon.size() < 200) return {false, "loss log too short"};
  const double early = std::accumulate(recon.begin(), recon.begin() + 10, 0.0) / 10;
  const double late = std::accumulate(recon.end() - 100, recon.end(), 0.0) / 100;
  const bool a = late <= 0.5 * early;
  parts.push_back(fmt::format("(a) L_recon {:.4f} -> {:.4f} {}", early, late, a ? "ok" : "FAIL"));

  // (b) beat alignment against beat-shuffled controls
  const Skeleton skel = load_skeleton(w.manifest);
  const auto gen = read_generated(r.dir / "generated");
  const auto test = load_split(w.manifest, "test");
  std::mt19937_64 rng(123);
  double ba = 0.0, ctrl = 0.0;
  int shuffles = 0;
  for (size_t i = 0; i < gen.size() && i < test.size(); ++i) {
    const auto pos = fk_track(skel, gen[i]);
    ba += beat_align(pos, *test[i].beats).score;
    const int n = gen[i].num_frames();
    std::uniform_int_distribution<int> frame(0, n - 1);
    for (int k = 0; k < 20; ++k) {
      BeatGrid shuffled = *test[i].beats;
      for (auto& b : shuffled.beat_frames) b = frame(rng);
      std::sort(shuffled.beat_frames.begin(), shuffled.beat_frames.end());
      ctrl += beat_align(pos, shuffled).score;
      ++shuffles;
    }
  }
  ba /= static_cast<double>(gen.size());
  ctrl /= shuffles;
  const bool b = gen.size() == test.size() && ba >= 1.5 * ctrl;
  parts.push_back(fmt::format("(b) BeatAlign {:.3f} vs shuffled {:.3f} {}", ba, ctrl, b ? "ok" : "FAIL"));

  // (c) FID_k against pure-noise motion drawn from the model's frame statistics
  const auto model = load_checkpoint(r.dir / "model.pt").model;
  auto ngen = make_generator(77);
  std::vector<FeatureVector> fk_gen, fk_ref, fk_noise;
  for (const auto& m : gen) fk_gen.push_back(kinematic_features(fk_track(skel, m)));
  for (const auto& e : test) fk_ref.push_back(kinematic_features(fk_track(skel, e.pair.motion)));
  for (const auto& m : gen) {
    MotionSequence noise = m;
    const auto z = torch::randn({m.num_frames(), model.layout.dim()}, ngen);
    noise.frames = to_frame_matrix(model.motion_norm.denormalize(z));
    fk_noise.push_back(kinematic_features(fk_track(skel, noise)));
  }
  const double fid_gen = frechet_distance(fk_gen, fk_ref), fid_noise = frechet_distance(fk_noise, fk_ref);
  const bool c = fid_gen <= 0.5 * fid_noise;
  parts.push_back(fmt::format("(c) FID_k {:.3g} vs noise {:.3g} {}", fid_gen, fid_noise, c ? "ok" : "FAIL"));

  // (d) freezing
  const double fr = r.metrics.at("freezing_rate").get<double>();
  const bool d = fr <= 0.30;
  parts.push_back(fmt::format("(d) freezing {:.3f} {}", fr, d ? "ok" : "FAIL"));

  ok = ok && a && b && c && d;
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  return {ok, detail};
}

Outcome mi_ablation(ToyWorld& w) {
  const auto& with = ensure_run(w, "run_mi", 0.1);
  const auto& without = ensure_run(w, "run_nomi", 0.0);
  const double dk1 = with.metrics.at("dist_k").get<double>(), dk0 = without.metrics.at("dist_k").get<double>();
  const double fr1 = with.metrics.at("freezing_rate").get<double>();
  const double fr0 = without.metrics.at("freezing_rate").get<double>();
  return {dk1 > dk0 && fr1 <= fr0,
          fmt::format("Dist_k {:.3f} (mi 0.1) vs {:.3f} (mi 0); freezing {:.3f} vs {:.3f}", dk1, dk0, fr1, fr0)};
}

Outcome generate_determinism(ToyWorld& w) {
  const auto& r = ensure_run(w, "run_mi", 0.1);
  const auto* e = w.manifest.split("test").front();
  std::vector<std::string> bytes;
  for (const char* tag : {"det_a", "det_b"}) {
    const fs::path out = w.work / tag;
    fs::remove_all(out);
    if (run(fmt::format("{} generate --checkpoint {} --music {} --seed-motion {} --length-s 20 --seed 5 --out {}",
                        q(w.cli), q(r.dir / "model.pt"), q(w.manifest.root / e->music), q(w.manifest.root / e->motion),
                        q(out)),
            w.log) != 0) {
      return {false, "generate failed"};
    }
    bytes.push_back(slurp(out / (e->name + ".motion.json")) + slurp(out / (e->name + ".motion.bin")));
  }
  const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
  return {same, fmt::format("{} bytes, {}", bytes[0].size(), same ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  ToyWorld world;
  world.work = LONGDANCE_ACCEPT_DIR;
  world.cli = LONGDANCE_CLI;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--reuse") {
      world.reuse = true;
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--reuse] [--only N[,N...]]\n";
      return 64;
    }
  }
  fs::create_directories(world.work);
  world.log = world.work / "commands.log";
  std::ofstream(world.log, std::ios::trunc);

  const std::vector<std::tuple<int, std::string, std::function<Outcome()>>> criteria{
      {1, "diffusion correctness", diffusion_correctness},
      {2, "partial noising purity", partial_noising_purity},
      {3, "oracle reverse chain", oracle_reverse_chain},
      {4, "gradient suite", gradient_suite},
      {5, "GTM identity", gtm_identity},
      {6, "full-attention reachability", attention_reachability},
      {7, "metric degeneracies", metric_degeneracies},
      {8, "FID oracle", fid_oracle},
      {9, "toy end-to-end", [&] { return toy_end_to_end(world); }},
      {10, "MI ablation direction", [&] { return mi_ablation(world); }},
      {11, "generate determinism", [&] { return generate_determinism(world); }},
  };
  int failures = 0;
  for (const auto& [id, name, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    fmt::print("[{}] {:>2} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail, seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
