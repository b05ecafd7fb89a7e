#include <catch_amalgamated.hpp>

#include "cmi/rng.hpp"

using cmi::Rng;

TEST_CASE("substreams are pure functions of (key, path)") {
  Rng a(42), b(42);
  Rng s1 = a.substream({3, 7});
  // deriving after drawing must not change the substream
  (void)b.uniform();
  (void)b.normal();
  Rng s2 = b.substream({3, 7});
  for (int i = 0; i < 100; ++i) REQUIRE(s1.uniform() == s2.uniform());

  REQUIRE(Rng(42).substream({3, 7}).key() != Rng(42).substream({7, 3}).key());
  REQUIRE(Rng(42).substream({3}).key() != Rng(43).substream({3}).key());
}

TEST_CASE("uniform stays in [0,1) and has the right mean") {
  Rng rng(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  REQUIRE_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 0.01));
}

TEST_CASE("normal moments") {
  Rng rng(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  REQUIRE_THAT(s / n, Catch::Matchers::WithinAbs(0.0, 0.01));
  REQUIRE_THAT(s2 / n, Catch::Matchers::WithinAbs(1.0, 0.02));
}

TEST_CASE("uniform_index covers the range") {
  Rng rng(5);
  bool seen[10] = {};
  for (int i = 0; i < 1000; ++i) {
    const auto k = rng.uniform_index(10);
    REQUIRE(k < 10);
    seen[k] = true;
  }
  for (bool b : seen) REQUIRE(b);
}
