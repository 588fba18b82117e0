#include <doctest.h>
#include <torch/torch.h>

#include <cmath>

#include "oreyolo/ema.hpp"
#include "oreyolo/errors.hpp"
#include "test_support.hpp"

using namespace oreyolo;

namespace {

double loop_mean(const torch::Tensor& x, int64_t n, int64_t c) {
  auto a = x.accessor<float, 4>();
  double sum = 0.0;
  for (int64_t i = 0; i < x.size(2); ++i) {
    for (int64_t j = 0; j < x.size(3); ++j) {
      sum += a[n][c][i][j];
    }
  }
  return sum / static_cast<double>(x.size(2) * x.size(3));
}

}  // namespace

TEST_CASE("global average pooling examples") {
  CHECK(global_avg_pool2d(torch::full({1, 3, 5, 7}, 2.5f)).allclose(torch::full({1, 3}, 2.5f)));
  auto m = torch::tensor({1.0f, 2.0f, 3.0f, 4.0f}).reshape({1, 1, 2, 2});
  CHECK(global_avg_pool2d(m).item<float>() == doctest::Approx(2.5));
  CHECK(global_avg_pool2d(torch::full({1, 1, 1, 1}, 7.0f)).item<float>() == 7.0f);
}

TEST_CASE("global average pooling matches a loop oracle") {
  torch::manual_seed(3);
  testing::Gen g(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = torch::randn({g.integer(1, 3), g.integer(1, 6), g.integer(1, 9), g.integer(1, 9)});
    auto pooled = global_avg_pool2d(x);
    auto p = pooled.accessor<float, 2>();
    for (int64_t n = 0; n < x.size(0); ++n) {
      for (int64_t c = 0; c < x.size(1); ++c) {
        CHECK(std::abs(p[n][c] - loop_mean(x, n, c)) < 1e-6);
      }
    }
  }
}

TEST_CASE("directional profiles") {
  auto m = torch::tensor({1.0f, 2.0f, 3.0f, 4.0f}).reshape({1, 1, 2, 2});
  auto d = directional_pool(m);
  CHECK(d.along_height.sizes() == torch::IntArrayRef({1, 1, 2, 1}));
  CHECK(d.along_width.sizes() == torch::IntArrayRef({1, 1, 1, 2}));
  CHECK(d.along_height.flatten().allclose(torch::tensor({1.5f, 3.5f})));
  CHECK(d.along_width.flatten().allclose(torch::tensor({2.0f, 3.0f})));

  auto row = torch::randn({2, 3, 1, 6});
  auto r = directional_pool(row);
  CHECK(r.along_height.squeeze().allclose(global_avg_pool2d(row)));
  CHECK(r.along_width.allclose(row));

  auto c = directional_pool(torch::full({1, 2, 3, 4}, -1.25f));
  CHECK((c.along_height == -1.25f).all().item<bool>());
  CHECK((c.along_width == -1.25f).all().item<bool>());
}

TEST_CASE("pooling rejects non feature maps") {
  CHECK_THROWS_AS(global_avg_pool2d(torch::randn({3, 4})), ShapeError);
  CHECK_THROWS_AS(directional_pool(torch::randn({1, 3, 0, 4})), ShapeError);
}

TEST_CASE("EMA config validation") {
  CHECK_NOTHROW(EmaConfig({256, 4}).validate());
  CHECK_THROWS_AS(EmaConfig({30, 4}).validate(), InvalidConfigError);
  CHECK_THROWS_AS(EmaConfig({8, 4}).validate(), InvalidConfigError);
  CHECK_THROWS_AS(EmaConfig({8, 0}).validate(), InvalidConfigError);
}

TEST_CASE("EMA preserves shape and gates within the sigmoid range") {
  torch::manual_seed(5);
  testing::Gen g(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int groups = g.integer(1, 4);
    const int channels = groups * 4 * g.integer(1, 3);
    EmaAttention ema(EmaConfig{channels, groups});
    auto x = torch::randn({g.integer(1, 3), channels, g.integer(1, 12), g.integer(1, 12)});
    auto t = ema->forward_traced(x);
    CHECK(t.output.sizes() == x.sizes());
    CHECK((t.gate > 0).all().item<bool>());
    CHECK((t.gate < 1).all().item<bool>());
    CHECK((t.output.abs() <= x.abs() + 1e-6).all().item<bool>());
    CHECK(t.descriptor_1x1.sum(-1).allclose(torch::ones_like(t.descriptor_1x1.sum(-1))));
    CHECK(t.descriptor_3x3.sum(-1).allclose(torch::ones_like(t.descriptor_3x3.sum(-1))));
  }
}

TEST_CASE("EMA rejects a channel mismatch") {
  EmaAttention ema(EmaConfig{16, 4});
  CHECK_THROWS_AS(ema->forward(torch::randn({1, 8, 4, 4})), ShapeError);
}

TEST_CASE("EMA gradient matches central finite differences") {
  torch::manual_seed(9);
  EmaAttention ema(EmaConfig{8, 2});
  ema->to(torch::kDouble);
  auto x = torch::randn({1, 8, 4, 4}, torch::kDouble).requires_grad_(true);
  auto weights = torch::randn({1, 8, 4, 4}, torch::kDouble);
  auto objective = [&](const torch::Tensor& input) { return (ema->forward(input) * weights).sum(); };

  auto grad = torch::autograd::grad({objective(x)}, {x})[0];
  torch::NoGradGuard guard;
  auto base = x.detach().clone();
  const double eps = 1e-6;
  double worst = 0.0;
  auto flat = base.view(-1);
  auto g = grad.view(-1);
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double keep = flat[i].item<double>();
    flat[i] = keep + eps;
    const double up = objective(base).item<double>();
    flat[i] = keep - eps;
    const double down = objective(base).item<double>();
    flat[i] = keep;
    const double fd = (up - down) / (2 * eps);
    const double an = g[i].item<double>();
    worst = std::max(worst, std::abs(fd - an) / std::max(1e-3, std::abs(fd) + std::abs(an)));
  }
  CHECK(worst < 1e-5);
}
