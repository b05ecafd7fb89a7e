#include <catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "cmi/kernel.hpp"
#include "cmi/kernel_weights.hpp"
#include "cmi/quadrature.hpp"
#include "cmi/rng.hpp"

using namespace cmi;

TEST_CASE("biweight point values") {
  REQUIRE(biweight(0.0) == 0.9375);
  REQUIRE(biweight(1.0) == 0.0);
  REQUIRE(biweight(-1.0) == 0.0);
  REQUIRE(biweight(1.5) == 0.0);
  REQUIRE_THAT(biweight(-0.5), Catch::Matchers::WithinAbs(0.52734375, 1e-15));
}

TEST_CASE("order 2 equals the plain biweight") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double u = rng.uniform(-1.5, 1.5);
    REQUIRE(higher_order_biweight(2, u) == biweight(u));
  }
}

TEST_CASE("kernel moment conditions by quadrature") {
  const QuadRule rule = gauss_legendre(10000);
  for (int p : {2, 4, 6}) {
    auto mom = [&](int j) {
      return integrate(rule, -1.0, 1.0,
                       [&](double u) { return std::pow(u, j) * higher_order_biweight(p, u); });
    };
    REQUIRE_THAT(mom(0), Catch::Matchers::WithinAbs(1.0, 1e-9));
    for (int j = 1; j < p; ++j) REQUIRE_THAT(mom(j), Catch::Matchers::WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("higher-order kernels go negative inside (0,1)") {
  bool neg = false;
  for (double u = 0.01; u < 1.0; u += 0.01)
    if (higher_order_biweight(4, u) < 0.0) neg = true;
  REQUIRE(neg);
}

TEST_CASE("kernels are even and compactly supported") {
  Rng rng(2);
  for (int p : {2, 4, 6}) {
    for (int i = 0; i < 50; ++i) {
      const double u = rng.uniform(0.0, 1.2);
      REQUIRE(higher_order_biweight(p, u) == higher_order_biweight(p, -u));
    }
    REQUIRE(higher_order_biweight(p, 1.0001) == 0.0);
  }
}

TEST_CASE("unsupported order rejected") {
  REQUIRE_THROWS_AS(higher_order_biweight(3, 0.5), invalid_config);
  KernelConfig k{.order_p = 8, .scale_c = 1.0, .rate_r = 0.2};
  REQUIRE_THROWS_AS(k.validate(), invalid_config);
}

TEST_CASE("bandwidth rule") {
  KernelConfig k{.order_p = 2, .scale_c = 2.0, .rate_r = 0.2};
  REQUIRE(bandwidth(1, k) == 2.0);
  k.scale_c = 3.05;
  REQUIRE_THAT(bandwidth(250, k), Catch::Matchers::WithinAbs(3.05 * std::pow(250.0, -0.2), 1e-12));
  KernelConfig k2 = k;
  k2.scale_c = 2 * k.scale_c;
  REQUIRE_THAT(bandwidth(77, k2), Catch::Matchers::WithinAbs(2 * bandwidth(77, k), 1e-15));
}

TEST_CASE("sample_std") {
  std::vector<double> two{0.0, 2.0};
  REQUIRE_THAT(sample_std(two), Catch::Matchers::WithinAbs(std::sqrt(2.0), 1e-15));
  std::vector<double> four{1.0, 2.0, 3.0, 4.0};
  REQUIRE_THAT(sample_std(four), Catch::Matchers::WithinAbs(std::sqrt(5.0 / 3.0), 1e-15));
  std::vector<double> flat{1.0, 1.0, 1.0};
  REQUIRE_THROWS_AS(sample_std(flat), degenerate_scale);
  std::vector<double> one{1.0};
  REQUIRE_THROWS_AS(sample_std(one), invalid_data);
}

TEST_CASE("index kernel weight") {
  const SignModel model = make_binary_model(0.5, 2);
  EvalPoint v;
  v.x = {0.3, -0.2};
  v.gamma = {1.0, 0.5};
  const ParamPoint b{1.0, -0.4};
  // xi equal to x: both differences vanish
  REQUIRE_THAT(index_kernel_weight(v.x, v, b, model, 1.0, 1.0, 1.0),
               Catch::Matchers::WithinAbs(0.9375 * 0.9375, 1e-15));
  // far point: zero by compact support
  std::vector<double> far{100.0, 100.0};
  REQUIRE(index_kernel_weight(far, v, b, model, 1.0, 1.0, 1.0) == 0.0);
  // even in the sign of the differences
  std::vector<double> xp{0.5, -0.2}, xm{0.1, -0.2};
  REQUIRE_THAT(index_kernel_weight(xp, v, b, model, 1.0, 1.0, 1.0),
               Catch::Matchers::WithinAbs(index_kernel_weight(xm, v, b, model, 1.0, 1.0, 1.0), 1e-15));
}

TEST_CASE("full kernel weight") {
  std::vector<double> x{0.1, 0.2, -0.3};
  std::vector<double> scales{1.0, 1.0, 1.0};
  const double k0 = higher_order_biweight(4, 0.0);
  REQUIRE_THAT(full_kernel_weight(x, x, 1.0, scales, 4),
               Catch::Matchers::WithinAbs(k0 * k0 * k0, 1e-15));
  std::vector<double> far{0.1, 0.2, 5.0};
  REQUIRE(full_kernel_weight(far, x, 1.0, scales, 4) == 0.0);
  // d = 1 reduces to the univariate kernel
  std::vector<double> a{0.4}, bpt{0.1}, s1{2.0};
  REQUIRE_THAT(full_kernel_weight(a, bpt, 0.5, s1, 6),
               Catch::Matchers::WithinAbs(higher_order_biweight(6, (0.1 - 0.4) / (2.0 * 0.5)), 1e-15));
}
