#include <cmath>

#include "doctest.h"
#include "longdance/diffusion.hpp"
#include "longdance/error.hpp"

using namespace longdance;

namespace {

// Independent route: apply the single-step kernel t times.
torch::Tensor iterate_single_steps(const torch::Tensor& x0, int t, const NoiseSchedule& s, torch::Generator& gen) {
  auto x = x0.clone();
  for (int k = 1; k <= t; ++k) {
    x = std::sqrt(s.alpha[k]) * x + std::sqrt(1.0 - s.alpha[k]) * torch::randn(x.sizes(), gen, x.options());
  }
  return x;
}

}  // namespace

TEST_CASE("make_schedule properties") {
  for (auto kind : {ScheduleKind::kCosine, ScheduleKind::kLinear}) {
    for (int T : {2, 10, 50, 1000}) {
      const NoiseSchedule s = make_schedule(T, kind);
      CHECK(s.alpha[0] == 1.0);
      CHECK(s.alpha_bar[0] == 1.0);
      for (int t = 1; t <= T; ++t) {
        CHECK(s.alpha[t] > 0.0);
        CHECK(s.alpha[t] < 1.0);
        if (t > 1) CHECK(s.alpha[t] < s.alpha[t - 1]);
        CHECK(s.alpha_bar[t] == doctest::Approx(s.alpha_bar[t - 1] * s.alpha[t]));
      }
      if (T >= 50) CHECK(s.alpha_bar[T] < 1e-3);
    }
  }
  const NoiseSchedule two = make_schedule(2, ScheduleKind::kLinear);
  CHECK(two.alpha_bar[1] == two.alpha[1]);
  CHECK(two.alpha_bar[2] == two.alpha[1] * two.alpha[2]);
  CHECK(make_schedule(1000).alpha_bar[1000] < 1e-3);
  CHECK_THROWS_AS(make_schedule(1), InvalidArgument);
  CHECK_THROWS_AS(parse_schedule_kind("sigmoid"), InvalidArgument);
  CHECK(parse_schedule_kind("linear") == ScheduleKind::kLinear);
}

TEST_CASE("q_sample limits and range checks") {
  const NoiseSchedule s = make_schedule(50);
  auto x0 = torch::randn({3, 20, 7}, torch::kFloat64);
  auto noise = torch::randn({3, 20, 7}, torch::kFloat64);
  CHECK(torch::equal(q_sample(x0, 0, noise, s), x0));
  const auto xt = q_sample(x0, 50, noise, s);
  CHECK((xt - noise).abs().max().item<double>() < 0.05 * x0.abs().max().item<double>());
  CHECK_THROWS_AS(q_sample(x0, 51, noise, s), RangeError);
  CHECK_THROWS_AS(q_sample(x0, -1, noise, s), RangeError);
  CHECK_THROWS_AS(q_sample(x0, torch::tensor({1, 2, 60}), noise, s), RangeError);
  // per-sample steps agree with the scalar form
  const auto batched = q_sample(x0, torch::tensor({0, 7, 33}), noise, s);
  CHECK(torch::allclose(batched[1], q_sample(x0[1], 7, noise[1], s)));
  CHECK(torch::allclose(batched[2], q_sample(x0[2], 33, noise[2], s)));
}

TEST_CASE("closed-form noising matches iterated single steps in the first two moments") {
  const NoiseSchedule s = make_schedule(50);
  auto gen = make_generator(1234);
  const auto x0 = torch::tensor({1.5, -0.8, 0.3, 2.0}, torch::kFloat64).expand({10000, 4});
  for (int t : {5, 20, 35, 50}) {
    const auto closed = q_sample(x0, t, torch::randn(x0.sizes(), gen, torch::kFloat64), s);
    const auto iterated = iterate_single_steps(x0, t, s, gen);
    const double sd = std::sqrt(1.0 - s.alpha_bar[t]);
    for (int c = 0; c < 4; ++c) {
      const double mu = std::sqrt(s.alpha_bar[t]) * x0[0][c].item<double>();
      const double scale = std::max(std::abs(mu), sd);
      for (const auto& draws : {closed, iterated}) {
        const auto col = draws.select(1, c);
        CHECK(std::abs(col.mean().item<double>() - mu) <= 0.02 * scale);
      }
    }
    CHECK(closed.var(0).mean().item<double>() == doctest::Approx(sd * sd).epsilon(0.02));
    CHECK(iterated.var(0).mean().item<double>() == doctest::Approx(sd * sd).epsilon(0.02));
  }
}

TEST_CASE("partial_noise leaves the conditions untouched") {
  const NoiseSchedule s = make_schedule(50);
  ConditioningContext ctx{torch::randn({2, 24, 5}), torch::randn({2, 12, 9}), torch::randn({2, 4, 9}), {}};
  const auto music0 = ctx.music.clone(), past0 = ctx.past.clone();
  const auto t = torch::tensor({3, 50});
  auto noisy = partial_noise(ctx, t, torch::randn({2, 4, 9}), s);
  CHECK(torch::equal(noisy.music, music0));
  CHECK(torch::equal(noisy.past, past0));
  CHECK(torch::equal(ctx.music, music0));
  CHECK(torch::equal(noisy.step, t));

  auto zero = partial_noise(ctx, t, torch::zeros({2, 4, 9}), s);
  CHECK(torch::allclose(zero.future[0], std::sqrt(s.alpha_bar[3]) * ctx.future[0]));
  CHECK(torch::allclose(zero.future[1], std::sqrt(s.alpha_bar[50]) * ctx.future[1]));
}

TEST_CASE("partial_noise at t = T looks like standard normal noise") {
  const NoiseSchedule s = make_schedule(50);
  auto gen = make_generator(5);
  ConditioningContext ctx{torch::zeros({256, 8, 3}),
                          torch::zeros({256, 8, 6}),
                          torch::randn({256, 20, 6}, gen, torch::kFloat64) * 2 + 1,
                          {}};
  const auto out =
      partial_noise(ctx, torch::full({256}, 50, torch::kInt64), torch::randn({256, 20, 6}, gen, torch::kFloat64), s);
  CHECK(std::abs(out.future.mean().item<double>()) < 0.03);
  CHECK(out.future.var().item<double>() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("posterior_sample") {
  const NoiseSchedule s = make_schedule(50);
  auto x_t = torch::randn({2, 20, 5}, torch::kFloat64);
  auto x0 = torch::randn({2, 20, 5}, torch::kFloat64);
  auto noise = torch::randn({2, 20, 5}, torch::kFloat64);
  // t = 1 is deterministic and equals the x0 prediction
  CHECK(torch::allclose(posterior_sample(x_t, x0, 1, s, noise), x0));
  CHECK(torch::equal(posterior_sample(x_t, x0, 1, s, noise), posterior_sample(x_t, x0, 1, s, noise * 3)));

  // a step that does not noise is a fixed point when the prediction equals x_t
  NoiseSchedule flat = s;
  flat.alpha[10] = 1.0;
  flat.alpha_bar[10] = flat.alpha_bar[9];
  const auto [c0, ct] = flat.posterior_mean_coefs(10);
  CHECK(c0 == 0.0);
  CHECK(ct == doctest::Approx(1.0));
  CHECK(torch::allclose(posterior_sample(x_t, x_t, 10, flat, torch::zeros_like(x_t)), x_t));
  CHECK_THROWS_AS(posterior_sample(x_t, x0, 0, s, noise), RangeError);
  CHECK_THROWS_AS(posterior_sample(x_t, x0, 51, s, noise), RangeError);
}

TEST_CASE("sample_window with an oracle denoiser reconstructs the target") {
  const NoiseSchedule s = make_schedule(50);
  auto gen = make_generator(77);
  const auto target = torch::randn({1, 20, 11}, gen, torch::kFloat64);
  const Denoiser oracle = [&](const ConditioningContext& ctx) { return target.expand_as(ctx.future); };
  const auto music = torch::zeros({1, 24, 3}, torch::kFloat64);
  const auto past = torch::zeros({1, 12, 11}, torch::kFloat64);
  const auto out = sample_window(oracle, music, past, 20, s, gen);
  CHECK(out.sizes() == target.sizes());
  CHECK((out - target).norm().item<double>() / target.norm().item<double>() < 0.05);

  // an oracle that only sees x_t through the posterior still converges over the full chain
  int calls = 0;
  const Denoiser counting = [&](const ConditioningContext& ctx) {
    ++calls;
    CHECK(ctx.step[0].item<int64_t>() == s.T - calls + 1);
    return target.expand_as(ctx.future);
  };
  sample_window(counting, music, past, 20, s, gen);
  CHECK(calls == 50);
}

TEST_CASE("sample_window is deterministic and checks the denoiser shape") {
  const NoiseSchedule s = make_schedule(10);
  const Denoiser shrink = [](const ConditioningContext& ctx) { return 0.5 * ctx.future + 0.1 * ctx.past.mean(); };
  const auto music = torch::randn({2, 24, 3});
  const auto past = torch::randn({2, 12, 7});
  auto g1 = make_generator(9), g2 = make_generator(9);
  const auto a = sample_window(shrink, music, past, 20, s, g1);
  const auto b = sample_window(shrink, music, past, 20, s, g2);
  CHECK(torch::equal(a, b));
  CHECK((a.sizes() == std::vector<int64_t>{2, 20, 7}));

  const Denoiser wrong = [](const ConditioningContext& ctx) { return ctx.future.narrow(1, 0, 10); };
  auto g3 = make_generator(1);
  CHECK_THROWS_AS(sample_window(wrong, music, past, 20, s, g3), ShapeError);
}
