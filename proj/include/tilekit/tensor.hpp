#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tilekit/errors.hpp"

namespace tilekit {

// Dense column-major matrix of 32-bit floats. Element (i, j) lives at
// data[i + j * rows].
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Matrix() = default;

  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {
    if (r == 0 || c == 0) {
      throw ShapeError("Matrix: dimensions must be positive, got " +
                       std::to_string(r) + "x" + std::to_string(c));
    }
  }

  Matrix(std::size_t r, std::size_t c, std::vector<float> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (r == 0 || c == 0) {
      throw ShapeError("Matrix: dimensions must be positive, got " +
                       std::to_string(r) + "x" + std::to_string(c));
    }
    if (data.size() != r * c) {
      throw ShapeError("Matrix: data length " + std::to_string(data.size()) +
                       " does not match " + std::to_string(r) + "x" +
                       std::to_string(c));
    }
  }

  std::size_t index(std::size_t i, std::size_t j) const { return i + j * rows; }

  float operator()(std::size_t i, std::size_t j) const { return data[index(i, j)]; }
  float& operator()(std::size_t i, std::size_t j) { return data[index(i, j)]; }

  std::size_t size() const { return data.size(); }
};

// Layout tag for 4-D tensors. Inputs are batched images with the channel
// innermost; filters hold their output feature innermost.
enum class Tensor4Layout {
  InputNhwc,   // [batch][height][width][channel]
  FilterHwck,  // [rows][cols][channel][feature]
};

// Dense 4-D tensor of 32-bit floats. The flat index is row-major over the
// four dimensions, so the last dimension is contiguous.
struct Tensor4 {
  Tensor4Layout layout = Tensor4Layout::InputNhwc;
  std::size_t dim0 = 0, dim1 = 0, dim2 = 0, dim3 = 0;
  std::vector<float> data;

  Tensor4() = default;

  Tensor4(Tensor4Layout tag, std::size_t d0, std::size_t d1, std::size_t d2,
          std::size_t d3)
      : layout(tag), dim0(d0), dim1(d1), dim2(d2), dim3(d3),
        data(d0 * d1 * d2 * d3, 0.0f) {
    if (d0 == 0 || d1 == 0 || d2 == 0 || d3 == 0) {
      throw ShapeError("Tensor4: dimensions must be positive");
    }
  }

  Tensor4(Tensor4Layout tag, std::size_t d0, std::size_t d1, std::size_t d2,
          std::size_t d3, std::vector<float> values)
      : layout(tag), dim0(d0), dim1(d1), dim2(d2), dim3(d3),
        data(std::move(values)) {
    if (d0 == 0 || d1 == 0 || d2 == 0 || d3 == 0) {
      throw ShapeError("Tensor4: dimensions must be positive");
    }
    if (data.size() != d0 * d1 * d2 * d3) {
      throw ShapeError("Tensor4: data length " + std::to_string(data.size()) +
                       " does not match dimensions");
    }
  }

  // Named views of the dimensions.
  std::size_t batch() const { return dim0; }     // InputNhwc
  std::size_t height() const { return dim1; }    // InputNhwc
  std::size_t width() const { return dim2; }     // InputNhwc
  std::size_t window_rows() const { return dim0; }  // FilterHwck
  std::size_t window_cols() const { return dim1; }  // FilterHwck
  std::size_t channels() const {
    return layout == Tensor4Layout::InputNhwc ? dim3 : dim2;
  }
  std::size_t features() const { return dim3; }  // FilterHwck

  std::size_t index(std::size_t a, std::size_t b, std::size_t c,
                    std::size_t d) const {
    return ((a * dim1 + b) * dim2 + c) * dim3 + d;
  }

  float at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data[index(a, b, c, d)];
  }
  float& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data[index(a, b, c, d)];
  }

  std::size_t size() const { return data.size(); }
};

}  // namespace tilekit
