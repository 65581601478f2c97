#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "helpers.hpp"
#include "tilekit/conv.hpp"
#include "tilekit/errors.hpp"
#include "tilekit/numeric.hpp"
#include "tilekit/winograd.hpp"

using namespace tilekit;

namespace {

// Dense row-major product helpers for checking the transform algebra.
std::vector<double> matmul(const std::vector<double>& a, std::size_t ar,
                           std::size_t ac, const std::vector<double>& b,
                           std::size_t bc) {
  std::vector<double> out(ar * bc, 0.0);
  for (std::size_t i = 0; i < ar; ++i)
    for (std::size_t j = 0; j < bc; ++j)
      for (std::size_t k = 0; k < ac; ++k)
        out[i * bc + j] += a[i * ac + k] * b[k * bc + j];
  return out;
}

// Matrix stores column-major; flatten to row-major for the helpers above.
std::vector<double> as_double(const Matrix& m) {
  std::vector<double> out;
  out.reserve(m.rows * m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out.push_back(m(i, j));
  return out;
}

// 1-D Winograd: out = A^T ((G g) .* (B^T d)) for a single tile column.
std::vector<double> winograd_1d(const WinogradPlan& plan,
                                const std::vector<double>& signal,
                                const std::vector<double>& taps) {
  const std::size_t t = plan.input_tile_rows();
  const std::vector<double> bt = as_double(plan.input_transform);
  const std::vector<double> g = as_double(plan.filter_transform);
  const std::vector<double> at = as_double(plan.output_transform);

  const std::vector<double> d = matmul(bt, t, t, signal, 1);
  const std::vector<double> u = matmul(g, t, plan.window_rows, taps, 1);
  std::vector<double> prod(t);
  for (std::size_t i = 0; i < t; ++i) prod[i] = d[i] * u[i];
  return matmul(at, plan.out_tile_rows, t, prod, 1);
}

}  // namespace

TEST_CASE("winograd plans expose the classic tile shapes") {
  const WinogradPlan f2 = winograd_plan(2, 2, 3, 3);
  CHECK(f2.input_tile_rows() == 4);
  CHECK(f2.input_tile_cols() == 4);
  CHECK(f2.input_transform.rows == 4);
  CHECK(f2.filter_transform.rows == 4);
  CHECK(f2.filter_transform.cols == 3);
  CHECK(f2.output_transform.rows == 2);
  CHECK(f2.output_transform.cols == 4);

  const WinogradPlan f4 = winograd_plan(4, 4, 3, 3);
  CHECK(f4.input_tile_rows() == 6);
  CHECK(f4.output_transform.rows == 4);

  CHECK_THROWS_AS(winograd_plan(3, 3, 3, 3), CapabilityError);
  CHECK_THROWS_AS(winograd_plan(2, 2, 5, 5), CapabilityError);
}

TEST_CASE("a central-tap filter passes the signal through") {
  // taps (0, 1, 0) make the 1-D convolution the identity on the middle
  // samples; both plans must reproduce it exactly up to rounding.
  const std::vector<double> taps = {0.0, 1.0, 0.0};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  for (std::size_t m : {std::size_t{2}, std::size_t{4}}) {
    const WinogradPlan plan = winograd_plan(m, m, 3, 3);
    std::vector<double> signal(plan.input_tile_rows());
    for (double& v : signal) v = dist(rng);
    const std::vector<double> out = winograd_1d(plan, signal, taps);
    REQUIRE(out.size() == m);
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(out[i] == Catch::Approx(signal[i + 1]).margin(1e-9));
    }
  }
}

TEST_CASE("1-D transform identity holds for random signal and taps") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  for (std::size_t m : {std::size_t{2}, std::size_t{4}}) {
    const WinogradPlan plan = winograd_plan(m, m, 3, 3);
    const std::size_t t = plan.input_tile_rows();
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> signal(t), taps(3);
      for (double& v : signal) v = dist(rng);
      for (double& v : taps) v = dist(rng);

      const std::vector<double> got = winograd_1d(plan, signal, taps);
      for (std::size_t i = 0; i < m; ++i) {
        double direct = 0.0;
        for (std::size_t j = 0; j < 3; ++j) direct += signal[i + j] * taps[j];
        REQUIRE(got[i] == Catch::Approx(direct).margin(1e-5));
      }
    }
  }
}

TEST_CASE("input transform of an all-ones tile is a single spike") {
  // B^T 1 1^T B has one nonzero entry because the B^T rows other than the
  // first sum to zero; the survivor lands at (1, 1) with value 4.
  const WinogradPlan plan = winograd_plan(2, 2, 3, 3);
  const std::vector<double> bt = as_double(plan.input_transform);
  const std::vector<double> ones(16, 1.0);
  std::vector<double> b(16);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) b[i * 4 + j] = bt[j * 4 + i];
  const std::vector<double> tmp = matmul(bt, 4, 4, ones, 4);
  const std::vector<double> v = matmul(tmp, 4, 4, b, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (i == 1 && j == 1) {
        CHECK(v[i * 4 + j] == Catch::Approx(4.0).margin(1e-12));
      } else {
        CHECK(v[i * 4 + j] == Catch::Approx(0.0).margin(1e-12));
      }
    }
  }
}

TEST_CASE("winograd convolution matches the oracle") {
  for (std::size_t m : {std::size_t{2}, std::size_t{4}}) {
    for (Padding padding : {Padding::Valid, Padding::Same}) {
      const ConvShape shape{2, 9, 8, 4, 3, 3, 3, 1, padding};
      const Tensor4 input = testutil::random_input(2, 9, 8, 4, 101 + m);
      const Tensor4 filter = testutil::random_filter(3, 3, 4, 3, 102);
      const Tensor4 expect = conv2d_naive(input, filter, shape);

      ConvAlgoParams params;
      params.algo = ConvAlgo::Winograd;
      params.tile_rows = m;
      params.tile_cols = m;
      const Tensor4 got = conv2d_winograd(input, filter, shape, params);
      INFO("m=" << m << " same=" << (padding == Padding::Same));
      REQUIRE(got.data.size() == expect.data.size());
      // Scale-normalized: the transform's absolute error follows the data
      // magnitude, so near-cancelled outputs must not dominate the metric.
      REQUIRE(max_scaled_error(got.data, expect.data) <= 1e-3);
    }
  }
}

TEST_CASE("winograd multiply counts match the closed form") {
  // 8x8 single-channel image, same padding: direct 3x3 needs 576 multiplies.
  const ConvShape shape{1, 8, 8, 1, 1, 3, 3, 1, Padding::Same};
  const Tensor4 input = testutil::random_input(1, 8, 8, 1, 111);
  const Tensor4 filter = testutil::random_filter(3, 3, 1, 1, 112);

  ConvAlgoParams f2;
  f2.algo = ConvAlgo::Winograd;
  f2.tile_rows = f2.tile_cols = 2;
  WinogradStats stats{};
  conv2d_winograd(input, filter, shape, f2, &stats);
  CHECK(stats.tiles == 16);
  CHECK(stats.batched_multiplies == 256);  // 16 per tile, 4/9 of direct

  ConvAlgoParams f4 = f2;
  f4.tile_rows = f4.tile_cols = 4;
  WinogradStats stats4{};
  conv2d_winograd(input, filter, shape, f4, &stats4);
  CHECK(stats4.tiles == 4);
  CHECK(stats4.batched_multiplies == 144);  // one quarter of direct
}

TEST_CASE("winograd rejects strides and windows it cannot plan") {
  const Tensor4 input = testutil::random_input(1, 8, 8, 2, 121);
  ConvAlgoParams params;
  params.algo = ConvAlgo::Winograd;
  params.tile_rows = params.tile_cols = 2;

  ConvShape strided{1, 8, 8, 2, 2, 3, 3, 2, Padding::Valid};
  const Tensor4 filter = testutil::random_filter(3, 3, 2, 2, 122);
  CHECK_THROWS_AS(conv2d_winograd(input, filter, strided, params),
                  CapabilityError);

  ConvShape wide{1, 8, 8, 2, 2, 5, 5, 1, Padding::Valid};
  const Tensor4 wide_filter = testutil::random_filter(5, 5, 2, 2, 123);
  CHECK_THROWS_AS(conv2d_winograd(input, wide_filter, wide, params),
                  CapabilityError);
}

TEST_CASE("the conv2d dispatcher routes every algorithm") {
  const ConvShape shape{1, 8, 8, 3, 2, 3, 3, 1, Padding::Same};
  const Tensor4 input = testutil::random_input(1, 8, 8, 3, 131);
  const Tensor4 filter = testutil::random_filter(3, 3, 3, 2, 132);
  const Tensor4 expect = conv2d_naive(input, filter, shape);

  struct Case {
    const char* name;
    double tol;
  };
  for (const Case& c : {Case{"naive", 0.0}, Case{"tiled_t2x2_v2x2", 1e-4},
                        Case{"im2col", 1e-5}, Case{"winograd_t2x2", 1e-3}}) {
    const Tensor4 got = conv2d(input, filter, shape, parse_conv_params(c.name));
    INFO(c.name);
    const double err = std::string(c.name) == "winograd_t2x2"
                           ? max_scaled_error(got.data, expect.data)
                           : max_rel_error(got.data, expect.data);
    REQUIRE(err <= std::max(c.tol, 0.0));
  }
}
