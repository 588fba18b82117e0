#include <doctest.h>
#include <torch/torch.h>

#include "oreyolo/blocks.hpp"
#include "oreyolo/errors.hpp"
#include "oreyolo/sppfcspc.hpp"
#include "reference.hpp"

using namespace oreyolo;
using testing::max_filter;


TEST_CASE("max_pool_same matches a brute-force max filter") {
  torch::manual_seed(1);
  for (int k : {3, 5, 7}) {
    auto x = torch::randn({1, 2, 9, 11});
    CHECK(torch::equal(max_pool_same(x, k), max_filter(x, k)));
  }
}

TEST_CASE("three chained k=5 pools equal one k=13 pool") {
  torch::manual_seed(2);
  testing::Gen g(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = torch::randn({g.integer(1, 2), g.integer(1, 4), g.integer(1, 24), g.integer(1, 24)});
    auto chained = max_pool_same(max_pool_same(max_pool_same(x, 5), 5), 5);
    CHECK(torch::equal(chained, max_pool_same(x, 13)));
  }
}

TEST_CASE("sppf chain output layout") {
  auto x = torch::randn({1, 4, 20, 20});
  auto y = sppf_chain(x, 5);
  CHECK(y.sizes() == torch::IntArrayRef({1, 16, 20, 20}));
  CHECK(torch::equal(y.slice(1, 0, 4), x));
  CHECK(torch::equal(y.slice(1, 12, 16), max_pool_same(x, 13)));

  auto constant = torch::full({1, 2, 7, 7}, 3.0f);
  CHECK((sppf_chain(constant, 5) == 3.0f).all().item<bool>());
}

TEST_CASE("single bright pixel spreads to a 13x13 plateau") {
  auto x = torch::zeros({1, 1, 31, 31});
  x[0][0][15][15] = 1.0f;
  auto p3 = sppf_chain(x, 5).slice(1, 3, 4);
  CHECK(p3.sum().item<float>() == 169.0f);
  CHECK((p3.slice(2, 9, 22).slice(3, 9, 22) == 1.0f).all().item<bool>());
}

TEST_CASE("spp blocks preserve shape") {
  torch::NoGradGuard guard;
  auto x = torch::randn({1, 256, 20, 20});
  CHECK(sppfcspc_forward(x, {SppKind::SPPFCSPC, 5, 256}).sizes() == x.sizes());
  CHECK(sppfcspc_forward(x, {SppKind::SPPF, 5, 256}).sizes() == x.sizes());
  CHECK_THROWS_AS(sppfcspc_forward(x, {SppKind::SPPFCSPC, 5, 128}), ShapeError);
  CHECK_THROWS_AS(SppSpec({SppKind::SPPF, 4, 256}).validate(), InvalidConfigError);
}

TEST_CASE("spp parameter counts") {
  for (std::int64_t c : {16, 64, 256}) {
    Sppfcspc block(SppSpec{SppKind::SPPFCSPC, 5, static_cast<int>(c)});
    // seven convs: 1x1, 3x3, 1x1, 4c->c 1x1, 3x3, shortcut 1x1, 2c->c 1x1
    CHECK(count_parameters(*block) == 27 * c * c + 7 * 2 * c);
    Sppf fast(static_cast<int>(c), static_cast<int>(c));
    const std::int64_t h = c / 2;
    CHECK(count_parameters(*fast) == c * h + 2 * h + 4 * h * c + 2 * c);
  }
}
