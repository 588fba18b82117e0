#include <doctest.h>
#include <torch/torch.h>

#include "oreyolo/model.hpp"
#include "oreyolo/profile.hpp"

using namespace oreyolo;

namespace {

ModelConfig variant(bool ema, bool afpn, bool sppfcspc) {
  ModelConfig c = ModelConfig::base();
  c.use_ema = ema;
  c.neck_kind = afpn ? NeckKind::AFPN : NeckKind::PAN;
  c.spp_kind = sppfcspc ? SppKind::SPPFCSPC : SppKind::SPPF;
  return c;
}

std::int64_t params(const ModelConfig& c) {
  OreYolo m(c);
  return count_parameters(*m);
}

}  // namespace

TEST_CASE("level widths follow the width multiple") {
  CHECK(level_channels(ModelConfig{}) == std::array<int, 3>{64, 128, 256});
}

TEST_CASE("backbone produces the three pyramid levels") {
  torch::NoGradGuard guard;
  ModelConfig cfg;
  const auto specs = build_backbone(cfg);
  REQUIRE(specs.size() == 9);
  CHECK(specs[0].kind == BlockKind::CBM);
  CHECK(specs[0].kernel == 6);
  CHECK(specs[8].kind == BlockKind::CSP3_EMA);
  CHECK(specs[2].repeats == 1);
  CHECK(specs[4].repeats == 1);
  CHECK(specs[6].repeats == 2);

  Backbone backbone(cfg);
  backbone->eval();
  auto p = backbone->forward(torch::randn({1, 3, 640, 640}));
  CHECK(p.p3.sizes() == torch::IntArrayRef({1, 64, 80, 80}));
  CHECK(p.p4.sizes() == torch::IntArrayRef({1, 128, 40, 40}));
  CHECK(p.p5.sizes() == torch::IntArrayRef({1, 256, 20, 20}));

  cfg.use_ema = false;
  CHECK(build_backbone(cfg)[8].kind == BlockKind::CSP3);
}

TEST_CASE("head output maps") {
  torch::NoGradGuard guard;
  ModelConfig cfg;
  cfg.input_size = 256;
  cfg.num_classes = 3;
  OreYolo model(cfg);
  model->eval();
  auto raw = model->forward(torch::randn({2, 3, 256, 256}));
  REQUIRE(raw.size() == 3);
  CHECK(raw[0].sizes() == torch::IntArrayRef({2, 24, 32, 32}));
  CHECK(raw[1].sizes() == torch::IntArrayRef({2, 24, 16, 16}));
  CHECK(raw[2].sizes() == torch::IntArrayRef({2, 24, 8, 8}));
}

TEST_CASE("parameter budgets sit near the ablation targets") {
  const double base = static_cast<double>(params(variant(false, false, false)));
  const double ema = static_cast<double>(params(variant(true, false, false)));
  const double afpn = static_cast<double>(params(variant(false, true, false)));
  const double spp = static_cast<double>(params(variant(false, false, true)));
  const double full = static_cast<double>(params(ModelConfig::full()));
  CHECK(base == doctest::Approx(1.710e6).epsilon(0.05));
  CHECK(full == doctest::Approx(3.458e6).epsilon(0.05));
  CHECK(spp == doctest::Approx(3.317e6).epsilon(0.05));
  CHECK(ema - base == doctest::Approx(0.039e6).epsilon(0.30));
  CHECK(afpn - base == doctest::Approx(0.138e6).epsilon(0.30));
}

TEST_CASE("enabling a feature only ever adds parameters") {
  for (int mask = 0; mask < 8; ++mask) {
    const bool e = mask & 1, a = mask & 2, s = mask & 4;
    const auto p = params(variant(e, a, s));
    if (!e) CHECK(params(variant(true, a, s)) > p);
    if (!a) CHECK(params(variant(e, true, s)) > p);
    if (!s) CHECK(params(variant(e, a, true)) > p);
  }
}

TEST_CASE("parameter count ignores input size and flops scale with area") {
  ModelConfig small = ModelConfig::full();
  small.input_size = 320;
  const auto r640 = profile_model(ModelConfig::full());
  const auto r320 = profile_model(small);
  CHECK(r640.param_count == r320.param_count);
  CHECK(r640.gflops / r320.gflops == doctest::Approx(4.0).epsilon(0.02));
  CHECK(r640.gflops == doctest::Approx(6.3).epsilon(0.15));
}

TEST_CASE("forward is deterministic in eval mode") {
  torch::NoGradGuard guard;
  ModelConfig cfg;
  cfg.input_size = 128;
  OreYolo model(cfg);
  model->eval();
  auto x = torch::randn({1, 3, 128, 128});
  auto a = model->forward(x);
  auto b = model->forward(x);
  for (int i = 0; i < 3; ++i) {
    CHECK(torch::equal(a[i], b[i]));
  }
}
