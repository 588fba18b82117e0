#include <doctest.h>
#include <torch/torch.h>

#include "oreyolo/blocks.hpp"
#include "oreyolo/errors.hpp"
#include "oreyolo/flops.hpp"

using namespace oreyolo;

namespace {

// conv weights + BN affine pair
std::int64_t cba_params(std::int64_t in, std::int64_t out, std::int64_t k) { return k * k * in * out + 2 * out; }

std::int64_t csp3_params(std::int64_t in, std::int64_t out, int repeats) {
  const std::int64_t h = out / 2;
  std::int64_t total = cba_params(in, h, 1) + cba_params(in, h, 1) + cba_params(2 * h, out, 1);
  for (int i = 0; i < repeats; ++i) {
    total += cba_params(h, h, 1) + cba_params(h, h, 3);
  }
  return total;
}

}  // namespace

TEST_CASE("conv block output shapes") {
  torch::NoGradGuard guard;
  auto x = torch::randn({1, 3, 640, 640});
  CHECK(conv_block(x, {BlockKind::CBM, 3, 16, 6, 2, 1}).sizes() == torch::IntArrayRef({1, 16, 320, 320}));
  auto y = torch::randn({1, 16, 320, 320});
  CHECK(conv_block(y, {BlockKind::CBS, 16, 32, 3, 2, 1}).sizes() == torch::IntArrayRef({1, 32, 160, 160}));
  auto z = torch::randn({1, 32, 160, 160});
  CHECK(conv_block(z, {BlockKind::CBS, 32, 32, 1, 1, 1}).sizes() == torch::IntArrayRef({1, 32, 160, 160}));
}

TEST_CASE("conv block rejects mismatched input channels") {
  auto x = torch::randn({1, 8, 16, 16});
  CHECK_THROWS_AS(conv_block(x, {BlockKind::CBS, 4, 8, 3, 1, 1}), ShapeError);
  CHECK_THROWS_AS(conv_block(torch::randn({8, 16}), {BlockKind::CBS, 8, 8, 3, 1, 1}), ShapeError);
}

TEST_CASE("block spec validation") {
  CHECK_THROWS_AS(BlockSpec({BlockKind::CBS, 4, 8, 3, 3, 1}).validate(), InvalidConfigError);
  CHECK_THROWS_AS(BlockSpec({BlockKind::CSP3, 4, 8, 1, 1, 0}).validate(), InvalidConfigError);
  CHECK_THROWS_AS(BlockSpec({BlockKind::CBS, 0, 8, 1, 1, 1}).validate(), InvalidConfigError);
}

TEST_CASE("csp3 preserves shape with and without attention") {
  torch::NoGradGuard guard;
  auto x = torch::randn({1, 32, 40, 40});
  const BlockSpec spec{BlockKind::CSP3, 32, 32, 1, 1, 1};
  CHECK(csp3_block(x, spec, false).sizes() == x.sizes());
  CHECK(csp3_block(x, spec, true).sizes() == x.sizes());
}

TEST_CASE("parameter counts match the closed form") {
  CHECK(count_parameters(*ConvBnAct(3, 16, 6, 2, BlockKind::CBM)) == cba_params(3, 16, 6));
  CHECK(count_parameters(*ConvBnAct(64, 128, 3, 2)) == cba_params(64, 128, 3));
  for (int repeats : {1, 2, 3}) {
    Csp3 block(BlockSpec{BlockKind::CSP3, 64, 64, 1, 1, repeats});
    CHECK(count_parameters(*block) == csp3_params(64, 64, repeats));
  }
  Csp3 wide(BlockSpec{BlockKind::CSP3, 128, 64, 1, 1, 1});
  CHECK(count_parameters(*wide) == csp3_params(128, 64, 1));
}

TEST_CASE("flop counter records conv MACs") {
  torch::NoGradGuard guard;
  ConvBnAct conv(8, 16, 3, 2);
  conv->eval();
  FlopCounter counter;
  conv->forward(torch::randn({1, 8, 32, 32}));
  // output 16 x 16 x 16 positions, 8 * 3 * 3 MACs each
  CHECK(counter.macs() == 16LL * 16 * 16 * 8 * 9);
  CHECK(counter.gflops() == doctest::Approx(2.0 * counter.macs() / 1e9));
}

TEST_CASE("nested flop counters only feed the innermost") {
  torch::NoGradGuard guard;
  ConvBnAct conv(4, 4, 1, 1);
  FlopCounter outer;
  {
    FlopCounter inner;
    conv->forward(torch::randn({1, 4, 4, 4}));
    CHECK(inner.macs() == 4 * 4 * 4 * 4);
  }
  CHECK(outer.macs() == 0);
  FlopCounter::add(5);
  CHECK(outer.macs() == 5);
}
