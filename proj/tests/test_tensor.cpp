#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "tilekit/errors.hpp"
#include "tilekit/tensor.hpp"

using namespace tilekit;

TEST_CASE("Matrix flat index is column-major") {
  Matrix m(3, 2, {1, 2, 3, 4, 5, 6});
  CHECK(m.index(0, 0) == 0);
  CHECK(m.index(2, 0) == 2);
  CHECK(m.index(0, 1) == 3);
  CHECK(m(1, 1) == 5.0f);
}

TEST_CASE("Matrix index map is a bijection on random shapes up to 64x64") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t rows = dim(rng), cols = dim(rng);
    Matrix m(rows, cols);
    std::set<std::size_t> seen;
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t idx = m.index(i, j);
        REQUIRE(idx < m.size());
        seen.insert(idx);
      }
    }
    CHECK(seen.size() == rows * cols);
  }
}

TEST_CASE("Matrix construction validates sizes") {
  CHECK_THROWS_AS(Matrix(0, 3), ShapeError);
  CHECK_THROWS_AS(Matrix(2, 2, {1.0f, 2.0f, 3.0f}), ShapeError);
}

TEST_CASE("Tensor4 flat index is a bijection for dims up to 8") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor4 t(Tensor4Layout::InputNhwc, dim(rng), dim(rng), dim(rng), dim(rng));
    std::set<std::size_t> seen;
    for (std::size_t a = 0; a < t.dim0; ++a)
      for (std::size_t b = 0; b < t.dim1; ++b)
        for (std::size_t c = 0; c < t.dim2; ++c)
          for (std::size_t d = 0; d < t.dim3; ++d) {
            const std::size_t idx = t.index(a, b, c, d);
            REQUIRE(idx < t.size());
            seen.insert(idx);
          }
    CHECK(seen.size() == t.size());
  }
}

TEST_CASE("Tensor4 keeps the last dimension contiguous") {
  Tensor4 t(Tensor4Layout::InputNhwc, 2, 3, 4, 5);
  CHECK(t.index(0, 0, 0, 1) == t.index(0, 0, 0, 0) + 1);
  CHECK(t.index(1, 2, 3, 4) == t.size() - 1);
}

TEST_CASE("Tensor4 named accessors follow the layout tag") {
  Tensor4 input(Tensor4Layout::InputNhwc, 2, 6, 7, 3);
  CHECK(input.batch() == 2);
  CHECK(input.height() == 6);
  CHECK(input.width() == 7);
  CHECK(input.channels() == 3);

  Tensor4 filter(Tensor4Layout::FilterHwck, 3, 5, 8, 16);
  CHECK(filter.window_rows() == 3);
  CHECK(filter.window_cols() == 5);
  CHECK(filter.channels() == 8);
  CHECK(filter.features() == 16);
}

TEST_CASE("Tensor4 construction validates sizes") {
  CHECK_THROWS_AS(Tensor4(Tensor4Layout::InputNhwc, 1, 0, 2, 2), ShapeError);
  CHECK_THROWS_AS(
      Tensor4(Tensor4Layout::InputNhwc, 1, 1, 1, 2, {1.0f}), ShapeError);
}
