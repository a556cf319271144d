#include <doctest.h>

#include <cmath>

#include "cemee/rng.hpp"

using namespace cemee;

TEST_CASE("identical seeds replay identical streams") {
  Rng a = Rng::stream(42, {stream_tag::states, 3});
  Rng b = Rng::stream(42, {stream_tag::states, 3});
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct substreams differ") {
  Rng a = Rng::stream(42, {stream_tag::states, 3});
  Rng b = Rng::stream(42, {stream_tag::states, 4});
  Rng c = Rng::stream(42, {stream_tag::outcomes, 3});
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    same_ab += va == b.next_u64();
    same_ac += va == c.next_u64();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("uniform stays inside the open interval with the right mean") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / 100000 - 0.5) < 0.005);
}

TEST_CASE("uniform_int is unbiased over small ranges") {
  Rng rng(11);
  int counts[3] = {0, 0, 0};
  const int n = 150000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(3)];
  for (int k = 0; k < 3; ++k)
    CHECK(std::fabs(counts[k] / static_cast<double>(n) - 1.0 / 3) < 0.01);
  CHECK_THROWS(rng.uniform_int(0));
}

TEST_CASE("bernoulli frequency tracks p") {
  Rng rng(13);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.2);
  CHECK(std::fabs(hits / static_cast<double>(n) - 0.2) < 0.005);
}
