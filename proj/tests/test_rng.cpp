#include <doctest.h>

#include <iscvx/rng.hpp>

using namespace iscvx;

TEST_SUITE("rng") {

TEST_CASE("streams are deterministic per seed") {
  Xoshiro256pp a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t va = a.next();
    all_equal = all_equal && va == b.next();
    any_diff = any_diff || va != c.next();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform01 stays in the half-open unit interval") {
  Xoshiro256pp rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("gaussian moments are roughly standard") {
  Xoshiro256pp rng(8);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("unit samples are unit") {
  Xoshiro256pp rng(9);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(rng.unit_vec3().norm() - 1.0) < 1e-12);
    CHECK(rng.unit_quaternion().is_unit(1e-12));
  }
}

}  // TEST_SUITE
