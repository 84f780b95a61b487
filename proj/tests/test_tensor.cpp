#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hexnet/rng.hpp"
#include "hexnet/tensor.hpp"

using namespace hexnet;

namespace {

Tensor<float> random_tensor(Rng& rng, std::size_t n, std::size_t c, std::size_t h,
                            std::size_t w) {
  Tensor<float> t(n, c, h, w);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] = static_cast<float>(rng.uniform() * 2.0 - 1.0);
  return t;
}

}  // namespace

TEST_CASE("shape accessors and row-major layout") {
  Tensor<float> t(2, 3, 4, 5);
  CHECK(t.n() == 2);
  CHECK(t.c() == 3);
  CHECK(t.h() == 4);
  CHECK(t.w() == 5);
  CHECK(t.size() == 2 * 3 * 4 * 5);
  CHECK(t.plane() == 20);
  CHECK_FALSE(t.empty());

  t(1, 2, 3, 4) = 7.0f;
  CHECK(t.data()[((1 * 3 + 2) * 4 + 3) * 5 + 4] == 7.0f);

  t(0, 1, 0, 0) = 3.0f;
  CHECK(t.plane_data(0, 1)[0] == 3.0f);
  CHECK(t.sample_data(0)[1 * 20] == 3.0f);

  Tensor<float> d;
  CHECK(d.empty());
  CHECK(d.size() == 0);
}

TEST_CASE("fill and fill value on construction") {
  Tensor<float> t(1, 1, 2, 2, 4.5f);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.data()[i] == 4.5f);
  t.fill(-1.0f);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.data()[i] == -1.0f);
}

TEST_CASE("pad2d places the original block and zero borders") {
  Tensor<float> t(1, 1, 2, 2);
  t(0, 0, 0, 0) = 1;
  t(0, 0, 0, 1) = 2;
  t(0, 0, 1, 0) = 3;
  t(0, 0, 1, 1) = 4;
  Tensor<float> p = pad2d(t, 1, 2, 3, 0);
  CHECK(p.h() == 5);
  CHECK(p.w() == 5);
  CHECK(p(0, 0, 1, 3) == 1);
  CHECK(p(0, 0, 1, 4) == 2);
  CHECK(p(0, 0, 2, 3) == 3);
  CHECK(p(0, 0, 2, 4) == 4);
  double border_sum = 0;
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) border_sum += std::abs(p(0, 0, r, c));
  CHECK(border_sum == 10.0);
}

TEST_CASE("crop2d inverts pad2d") {
  Rng rng(11);
  Tensor<float> t = random_tensor(rng, 2, 3, 4, 6);
  Tensor<float> p = pad2d(t, 2, 1, 0, 3);
  Tensor<float> back = crop2d(p, 2, 1, 0, 3);
  REQUIRE(back.same_shape(t));
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.data()[i] == t.data()[i]);
}

TEST_CASE("crop2d rejects margins exceeding the extents") {
  Tensor<float> t(1, 1, 3, 3);
  CHECK_THROWS_AS(crop2d(t, 2, 2, 0, 0), ShapeError);
  CHECK_THROWS_AS(crop2d(t, 0, 0, 3, 1), ShapeError);
}

TEST_CASE("split and merge columns round-trip both parities") {
  Rng rng(5);
  for (std::size_t w : {1u, 2u, 3u, 4u, 5u, 8u, 9u}) {
    Tensor<float> t = random_tensor(rng, 2, 2, 3, w);
    Tensor<float> even = split_even_columns(t);
    Tensor<float> odd = split_odd_columns(t);
    CHECK(even.w() == (w + 1) / 2);
    CHECK(odd.w() == w / 2);
    Tensor<float> merged = merge_columns(even, odd);
    REQUIRE(merged.same_shape(t));
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(merged.data()[i] == t.data()[i]);
  }
}

TEST_CASE("merge_columns rejects widths that cannot interleave") {
  Tensor<float> a(1, 1, 2, 4);
  Tensor<float> b(1, 1, 2, 2);
  CHECK_THROWS_AS(merge_columns(a, b), ShapeError);
  Tensor<float> c(1, 1, 3, 2);
  CHECK_THROWS_AS(merge_columns(a, c), ShapeError);
}

TEST_CASE("elementwise add and add_inplace") {
  Rng rng(2);
  Tensor<float> a = random_tensor(rng, 1, 2, 2, 3);
  Tensor<float> b = random_tensor(rng, 1, 2, 2, 3);
  Tensor<float> s = elementwise_add(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(s.data()[i] == a.data()[i] + b.data()[i]);
  Tensor<float> a2 = a;
  add_inplace(a2, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a2.data()[i] == s.data()[i]);

  Tensor<float> wrong(1, 2, 3, 2);
  CHECK_THROWS_AS(elementwise_add(a, wrong), ShapeError);
  CHECK_THROWS_AS(add_inplace(a2, wrong), ShapeError);
}

TEST_CASE("cast converts between precisions") {
  Tensor<float> a(1, 1, 1, 3);
  a(0, 0, 0, 0) = 0.5f;
  a(0, 0, 0, 1) = -2.0f;
  a(0, 0, 0, 2) = 8.25f;
  Tensor<double> d = a.cast<double>();
  CHECK(d(0, 0, 0, 0) == 0.5);
  CHECK(d(0, 0, 0, 1) == -2.0);
  CHECK(d(0, 0, 0, 2) == 8.25);
  Tensor<float> back = d.cast<float>();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(back.data()[i] == a.data()[i]);
}

TEST_CASE("kaiming_init matches the target moments") {
  Rng rng(123);
  const std::size_t fan_in = 32;
  Tensor<float> t = kaiming_init<float>(rng, {16, 16, 4, 4}, fan_in);
  double sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sum += t.data()[i];
    sum_sq += static_cast<double>(t.data()[i]) * t.data()[i];
  }
  const double mean = sum / t.size();
  const double var = sum_sq / t.size() - mean * mean;
  const double target_var = 2.0 / fan_in;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(target_var).epsilon(0.1));

  CHECK_THROWS_AS(kaiming_init<float>(rng, {1, 1, 1, 1}, 0), std::invalid_argument);
}

TEST_CASE("require_same_shape message names both shapes") {
  Tensor<float> a(1, 2, 3, 4);
  Tensor<float> b(4, 3, 2, 1);
  try {
    require_same_shape(a, b, "op");
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1,2,3,4)") != std::string::npos);
    CHECK(msg.find("(4,3,2,1)") != std::string::npos);
  }
}
