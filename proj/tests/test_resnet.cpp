#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "hexnet/resnet.hpp"
#include "hexnet/rng.hpp"

using namespace hexnet;

namespace {

struct CountRow {
  std::size_t depth;
  std::size_t identity_pad;
  std::size_t projection;
  std::size_t hex_projection;
};

constexpr CountRow kCountTable[] = {
    {20, 269722, 272474, 287834},
    {32, 464154, 466906, 482266},
    {44, 658586, 661338, 676698},
    {56, 853018, 855770, 871130},
};

ResNet<float> make_net(std::size_t depth, ShortcutMode mode, std::size_t limit = 0) {
  ArchConfig cfg;
  cfg.depth = depth;
  cfg.shortcut = mode;
  return ResNet<float>(cfg, limit);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

TEST_CASE("parameter counts match the frozen table for every depth and shortcut mode") {
  for (const CountRow& row : kCountTable) {
    CAPTURE(row.depth);
    CHECK(make_net(row.depth, ShortcutMode::IdentityPad).parameter_count() == row.identity_pad);
    CHECK(make_net(row.depth, ShortcutMode::Projection1x1).parameter_count() == row.projection);
    CHECK(make_net(row.depth, ShortcutMode::HexProjection).parameter_count() == row.hex_projection);
  }
}

TEST_CASE("count deltas between shortcut modes are depth independent") {
  for (const CountRow& row : kCountTable) {
    CAPTURE(row.depth);
    CHECK(row.projection - row.identity_pad == 2752);
    CHECK(row.hex_projection - row.identity_pad == 18112);
    CHECK(row.hex_projection - row.projection == 15360);
  }
}

TEST_CASE("parameter count equals stored scalar count minus the structural hex zeros") {
  for (ShortcutMode mode :
       {ShortcutMode::IdentityPad, ShortcutMode::Projection1x1, ShortcutMode::HexProjection}) {
    CAPTURE(to_string(mode));
    ResNet<float> net = make_net(20, mode);
    std::size_t stored = 0;
    std::size_t structural_zeros = 0;
    for (const Param<float>* p : net.parameters()) {
      stored += p->value.size();
      if (ends_with(p->name, ".side")) structural_zeros += 2 * (p->value.size() / 6);
    }
    CHECK(net.parameter_count() == stored - structural_zeros);
    CHECK(structural_zeros == (mode == ShortcutMode::HexProjection ? 2 * (512 + 2048) : 0u));
  }
}

TEST_CASE("only hex projection networks contain hexagonal layers") {
  CHECK(make_net(20, ShortcutMode::IdentityPad).hex_layer_count() == 0);
  CHECK(make_net(20, ShortcutMode::Projection1x1).hex_layer_count() == 0);
  CHECK(make_net(20, ShortcutMode::HexProjection).hex_layer_count() == 2);
  CHECK(make_net(56, ShortcutMode::HexProjection).hex_layer_count() == 2);
}

TEST_CASE("depth must come from the supported family and classes must be at least two") {
  ArchConfig cfg;
  cfg.depth = 21;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.depth = 18;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.depth = 20;
  CHECK_NOTHROW(cfg.validate());
  cfg.num_classes = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.num_classes = 2;
  CHECK_NOTHROW(cfg.validate());

  CHECK(ArchConfig{20}.blocks_per_stage() == 3);
  CHECK(ArchConfig{32}.blocks_per_stage() == 5);
  CHECK(ArchConfig{44}.blocks_per_stage() == 7);
  CHECK(ArchConfig{56}.blocks_per_stage() == 9);
}

TEST_CASE("shortcut mode names round trip and reject unknown strings") {
  for (ShortcutMode mode :
       {ShortcutMode::IdentityPad, ShortcutMode::Projection1x1, ShortcutMode::HexProjection}) {
    CHECK(shortcut_mode_from_string(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(shortcut_mode_from_string("identity"), std::invalid_argument);
}

TEST_CASE("forward produces one logit row per class for every shortcut mode") {
  Rng rng(3);
  Tensor<float> x(2, 3, 32, 32);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.uniform());

  for (ShortcutMode mode :
       {ShortcutMode::IdentityPad, ShortcutMode::Projection1x1, ShortcutMode::HexProjection}) {
    CAPTURE(to_string(mode));
    ResNet<float> net = make_net(20, mode, 1);
    Rng init(7);
    net.init(init);
    Tensor<float> logits = net.forward(x, Mode::Eval);
    CHECK(logits.n() == 2);
    CHECK(logits.c() == 10);
    CHECK(logits.h() == 1);
    CHECK(logits.w() == 1);
    for (std::size_t i = 0; i < logits.size(); ++i) CHECK(std::isfinite(logits.data()[i]));
  }
}

TEST_CASE("forward accepts odd spatial extents") {
  ResNet<float> net = make_net(20, ShortcutMode::HexProjection, 1);
  Rng init(13);
  net.init(init);
  Tensor<float> x(1, 3, 9, 9, 0.25f);
  Tensor<float> logits = net.forward(x, Mode::Eval);
  CHECK(logits.c() == 10);
  for (std::size_t i = 0; i < logits.size(); ++i) CHECK(std::isfinite(logits.data()[i]));
}

TEST_CASE("identical seeds give identical initializations and different seeds diverge") {
  ResNet<float> a = make_net(20, ShortcutMode::HexProjection);
  ResNet<float> b = make_net(20, ShortcutMode::HexProjection);
  ResNet<float> c = make_net(20, ShortcutMode::HexProjection);
  Rng ra(42), rb(42), rc(43);
  a.init(ra);
  b.init(rb);
  c.init(rc);

  const auto& pa = a.parameters();
  const auto& pb = b.parameters();
  const auto& pc = c.parameters();
  REQUIRE(pa.size() == pb.size());
  bool any_diff_from_c = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i]->value.size() == pb[i]->value.size());
    for (std::size_t j = 0; j < pa[i]->value.size(); ++j) {
      CHECK(pa[i]->value.data()[j] == pb[i]->value.data()[j]);
      if (pa[i]->value.data()[j] != pc[i]->value.data()[j]) any_diff_from_c = true;
    }
  }
  CHECK(any_diff_from_c);
}

TEST_CASE("parameter names are unique and ordered stem first, head last") {
  ResNet<float> net = make_net(20, ShortcutMode::HexProjection);
  const auto& params = net.parameters();
  REQUIRE_FALSE(params.empty());
  std::set<std::string> names;
  for (const Param<float>* p : params) names.insert(p->name);
  CHECK(names.size() == params.size());
  CHECK(params.front()->name == "stem.conv.weight");
  CHECK(params.back()->name == "head.fc.bias");
}

TEST_CASE("buffer list carries running stats for every normalization layer") {
  ResNet<float> plain = make_net(20, ShortcutMode::IdentityPad);
  ResNet<float> proj = make_net(20, ShortcutMode::Projection1x1);
  auto plain_buffers = plain.buffers();
  auto proj_buffers = proj.buffers();
  CHECK(plain_buffers.size() == 2 * (1 + 2 * 9));
  CHECK(proj_buffers.size() == 2 * (1 + 2 * 9 + 2));
  std::size_t means = 0, vars = 0;
  for (const auto& b : plain_buffers) {
    if (ends_with(b.name, ".running_mean")) ++means;
    if (ends_with(b.name, ".running_var")) ++vars;
  }
  CHECK(means == plain_buffers.size() / 2);
  CHECK(vars == plain_buffers.size() / 2);
}

TEST_CASE("stage truncation shrinks the network but keeps the stage structure") {
  ResNet<float> full = make_net(56, ShortcutMode::IdentityPad);
  ResNet<float> slim = make_net(56, ShortcutMode::IdentityPad, 1);
  CHECK(full.blocks_per_stage() == 9);
  CHECK(slim.blocks_per_stage() == 1);
  CHECK(slim.parameter_count() < full.parameter_count());
  CHECK(slim.parameter_count() == make_net(20, ShortcutMode::IdentityPad, 1).parameter_count());

  ResNet<float> unclamped = make_net(20, ShortcutMode::IdentityPad, 5);
  CHECK(unclamped.blocks_per_stage() == 3);
}

TEST_CASE("pad shortcut keeps original channels and zero-fills the appended ones") {
  ResidualBlock<float> block("b", 2, 4, 2, ShortcutMode::IdentityPad);
  std::vector<Param<float>*> params;
  block.collect(params);
  for (Param<float>* p : params) {
    if (ends_with(p->name, ".weight") || ends_with(p->name, ".gamma")) p->value.fill(0.0f);
  }

  Tensor<float> x(1, 2, 4, 4);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(i + 1);
  Tensor<float> y = block.forward(x, Mode::Eval);
  REQUIRE(y.n() == 1);
  REQUIRE(y.c() == 4);
  REQUIRE(y.h() == 2);
  REQUIRE(y.w() == 2);

  Tensor<float> sub = subsample2(x);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < y.plane(); ++i)
      CHECK(y.plane_data(0, c)[i] == sub.plane_data(0, c)[i]);
  for (std::size_t c = 2; c < 4; ++c)
    for (std::size_t i = 0; i < y.plane(); ++i) CHECK(y.plane_data(0, c)[i] == 0.0f);
}

TEST_CASE("model backward requires a train-mode forward first") {
  ResNet<float> net = make_net(20, ShortcutMode::IdentityPad, 1);
  Rng init(5);
  net.init(init);
  Tensor<float> x(1, 3, 8, 8, 0.5f);
  Tensor<float> g(1, 10, 1, 1, 1.0f);
  CHECK_THROWS_AS(net.backward(g), StateError);
  net.forward(x, Mode::Eval);
  CHECK_THROWS_AS(net.backward(g), StateError);
  net.forward(x, Mode::Train);
  Tensor<float> gx = net.backward(g);
  CHECK(gx.same_shape(x));
}
