#include <doctest.h>

#include <cmath>

#include "beam/fusion.hpp"
#include "beam/rng.hpp"

using namespace beam;
using V = Var<double>;

TEST_CASE("decompose splits a latent into positional halves, losslessly") {
  auto z = V::leaf({4}, {1, 2, 3, 4});
  const auto d = decompose(z);
  CHECK(d.com.values() == std::vector<double>{1, 2});
  CHECK(d.sep.values() == std::vector<double>{3, 4});

  // concat(com, sep) reconstructs the latent for random z.
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> values(8);
    for (auto& v : values) v = rng.gaussian();
    auto latent = V::leaf({8}, values);
    const auto parts = decompose(latent);
    CHECK(concat<double>({parts.com, parts.sep}).values() == values);
  }

  CHECK_THROWS_AS(decompose(V::leaf({3}, {1, 2, 3})), ValidationError);
}

TEST_CASE("fusion loss hand values") {
  // Ideal decomposition: aligned Com halves, orthogonal Sep halves.
  auto tom = V::leaf({4}, {1, 0, 1, 0});
  auto em = V::leaf({4}, {1, 0, 0, 1});
  CHECK(fusion_loss(tom, em).item() == doctest::Approx(0.0).epsilon(1e-9));

  // Orthogonal Com, aligned Sep: loss = 1/(1+eps).
  tom = V::leaf({4}, {1, 0, 1, 0});
  em = V::leaf({4}, {0, 1, 1, 0});
  CHECK(std::abs(fusion_loss(tom, em).item() - 1.0 / (1.0 + kFusionEps)) < 1e-9);

  // Identical Com, anti-aligned Sep: |SimSep|=1, loss = 1/(2+eps).
  tom = V::leaf({4}, {1, 0, 1, 0});
  em = V::leaf({4}, {1, 0, -1, 0});
  CHECK(std::abs(fusion_loss(tom, em).item() - 1.0 / (2.0 + kFusionEps)) < 1e-9);
}

TEST_CASE("fuse hand values") {
  auto tom = V::leaf({4}, {3, 4, 1, 2});
  auto em = V::leaf({4}, {5, 6, 7, 8});
  CHECK(fuse(tom, em).values() == std::vector<double>{1, 2, 4, 5, 7, 8});

  // Symmetric case: fuse(z, z) = (Sep, Com, Sep).
  auto z = V::leaf({4}, {9, 8, 7, 6});
  CHECK(fuse(z, z).values() == std::vector<double>{7, 6, 9, 8, 7, 6});

  // Zero latents fuse to zero.
  auto zero = V::leaf({4}, {0, 0, 0, 0});
  CHECK(fuse(zero, zero).values() == std::vector<double>{0, 0, 0, 0, 0, 0});

  CHECK_THROWS_AS(fuse(tom, V::leaf({6}, std::vector<double>(6, 1.0))), ValidationError);
}

TEST_CASE("fusion loss is nonnegative and zero only for orthogonal Sep halves") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = rng.gaussian();
    for (auto& v : b) v = rng.gaussian();
    const double loss = fusion_loss(V::leaf({8}, a), V::leaf({8}, b)).item();
    CHECK(loss >= 0.0);
  }

  // Orthogonal Sep with anti-aligned Com still gives zero.
  auto tom = V::leaf({4}, {1, 0, 1, 0});
  auto em = V::leaf({4}, {-1, 0, 0, 1});
  CHECK(fusion_loss(tom, em).item() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fusion loss is invariant to positive rescaling of any half") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = rng.gaussian();
    for (auto& v : b) v = rng.gaussian();
    const double base = fusion_loss(V::leaf({8}, a), V::leaf({8}, b)).item();

    std::vector<double> a_scaled = a, b_scaled = b;
    const double alpha = rng.uniform(0.1, 10.0);
    const double beta = rng.uniform(0.1, 10.0);
    for (int i = 0; i < 4; ++i) a_scaled[i] *= alpha;      // Com half of tom
    for (int i = 4; i < 8; ++i) b_scaled[i] *= beta;       // Sep half of em
    const double scaled = fusion_loss(V::leaf({8}, a_scaled), V::leaf({8}, b_scaled)).item();
    CHECK(std::abs(scaled - base) < 1e-6);
  }
}

TEST_CASE("loss falls as Com similarity rises and rises with |Sep similarity|") {
  // Sep fixed at 45 degrees, Com swept from aligned to anti-aligned.
  double prev = -1.0;
  for (double theta : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    auto tom = V::leaf({4}, {1, 0, 1, 1});
    auto em = V::leaf({4}, {std::cos(theta), std::sin(theta), 1, 0});
    const double loss = fusion_loss(tom, em).item();
    CHECK(loss > prev);  // decreasing SimCom means strictly increasing loss
    prev = loss;
  }

  // Com fixed aligned, |SimSep| swept up.
  prev = -1.0;
  for (double phi : {M_PI / 2, 1.0, 0.5, 0.0}) {  // cos(phi) rises toward 1
    auto tom = V::leaf({4}, {1, 0, 1, 0});
    auto em = V::leaf({4}, {1, 0, std::cos(phi), std::sin(phi)});
    const double loss = fusion_loss(tom, em).item();
    CHECK(loss > prev);
    prev = loss;
  }
}

TEST_CASE("fusion loss and fuse are differentiable end to end") {
  Rng rng(17);
  std::vector<double> a(8), b(8);
  for (auto& v : a) v = rng.uniform(0.2, 1.0);
  for (auto& v : b) v = rng.uniform(0.2, 1.0);
  auto tom = V::leaf({8}, a);
  auto em = V::leaf({8}, b);
  auto loss = add(fusion_loss(tom, em), mean_over_axis(fuse(tom, em)));
  backward(loss);
  // Central differences on one representative coordinate of each input.
  const double h = 1e-6;
  for (int input = 0; input < 2; ++input) {
    for (int coord : {0, 5}) {
      auto eval = [&](double delta) {
        std::vector<double> av = a, bv = b;
        (input == 0 ? av : bv)[coord] += delta;
        auto t2 = V::leaf({8}, av);
        auto e2 = V::leaf({8}, bv);
        return add(fusion_loss(t2, e2), mean_over_axis(fuse(t2, e2))).item();
      };
      const double numeric = (eval(h) - eval(-h)) / (2 * h);
      const double analytic = (input == 0 ? tom : em).grad()[coord];
      CHECK(std::abs(numeric - analytic) < 1e-4 * std::max(1.0, std::abs(numeric)));
    }
  }
}
