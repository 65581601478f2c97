#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tilekit/tensor.hpp"

namespace testutil {

inline void fill(std::vector<float>& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& v : data) v = dist(rng);
}

inline tilekit::Matrix random_matrix(std::size_t rows, std::size_t cols,
                                     std::uint64_t seed) {
  tilekit::Matrix m(rows, cols);
  fill(m.data, seed);
  return m;
}

inline tilekit::Tensor4 random_input(std::size_t batch, std::size_t height,
                                     std::size_t width, std::size_t channels,
                                     std::uint64_t seed) {
  tilekit::Tensor4 t(tilekit::Tensor4Layout::InputNhwc, batch, height, width,
                     channels);
  fill(t.data, seed);
  return t;
}

inline tilekit::Tensor4 random_filter(std::size_t rows, std::size_t cols,
                                      std::size_t channels,
                                      std::size_t features,
                                      std::uint64_t seed) {
  tilekit::Tensor4 t(tilekit::Tensor4Layout::FilterHwck, rows, cols, channels,
                     features);
  fill(t.data, seed);
  return t;
}

}  // namespace testutil
