#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tilekit/config.hpp"
#include "tilekit/conv.hpp"
#include "tilekit/errors.hpp"
#include "tilekit/gemm.hpp"
#include "tilekit/tensor.hpp"

namespace tilekit {

// Cook-Toom transform set for one fast-convolution tile size. For an
// M x N output tile under an R x S window the input tile is
// (M+R-1) x (N+S-1); input_transform is B^T, filter_transform is G and
// output_transform is A^T of the usual minimal-filtering construction.
struct WinogradPlan {
  std::size_t out_tile_rows = 0;   // M
  std::size_t out_tile_cols = 0;   // N
  std::size_t window_rows = 0;     // R
  std::size_t window_cols = 0;     // S
  Matrix input_transform;          // (M+R-1) x (M+R-1)
  Matrix filter_transform;         // (M+R-1) x R
  Matrix output_transform;         // M x (M+R-1)

  std::size_t input_tile_rows() const { return out_tile_rows + window_rows - 1; }
  std::size_t input_tile_cols() const { return out_tile_cols + window_cols - 1; }
};

namespace detail {

inline Matrix matrix_from_rows(std::size_t rows, std::size_t cols,
                               const float* values) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m(i, j) = values[i * cols + j];
    }
  }
  return m;
}

}  // namespace detail

// Supported tile sizes: 2x2 and 4x4 output tiles under a 3x3 window.
inline WinogradPlan winograd_plan(std::size_t out_tile_rows,
                                  std::size_t out_tile_cols,
                                  std::size_t window_rows,
                                  std::size_t window_cols) {
  WinogradPlan plan;
  plan.out_tile_rows = out_tile_rows;
  plan.out_tile_cols = out_tile_cols;
  plan.window_rows = window_rows;
  plan.window_cols = window_cols;

  if (out_tile_rows == 2 && out_tile_cols == 2 && window_rows == 3 &&
      window_cols == 3) {
    static const float bt[16] = {
        1,  0, -1,  0,
        0,  1,  1,  0,
        0, -1,  1,  0,
        0,  1,  0, -1,
    };
    static const float g[12] = {
        1,     0,    0,
        0.5f,  0.5f, 0.5f,
        0.5f, -0.5f, 0.5f,
        0,     0,    1,
    };
    static const float at[8] = {
        1, 1,  1,  0,
        0, 1, -1, -1,
    };
    plan.input_transform = detail::matrix_from_rows(4, 4, bt);
    plan.filter_transform = detail::matrix_from_rows(4, 3, g);
    plan.output_transform = detail::matrix_from_rows(2, 4, at);
    return plan;
  }

  if (out_tile_rows == 4 && out_tile_cols == 4 && window_rows == 3 &&
      window_cols == 3) {
    static const float bt[36] = {
        4,  0, -5,  0, 1, 0,
        0, -4, -4,  1, 1, 0,
        0,  4, -4, -1, 1, 0,
        0, -2, -1,  2, 1, 0,
        0,  2, -1, -2, 1, 0,
        0,  4,  0, -5, 0, 1,
    };
    static const float g[18] = {
        1.0f / 4,   0,          0,
        -1.0f / 6,  -1.0f / 6,  -1.0f / 6,
        -1.0f / 6,  1.0f / 6,   -1.0f / 6,
        1.0f / 24,  1.0f / 12,  1.0f / 6,
        1.0f / 24,  -1.0f / 12, 1.0f / 6,
        0,          0,          1,
    };
    static const float at[24] = {
        1, 1,  1, 1,  1, 0,
        0, 1, -1, 2, -2, 0,
        0, 1,  1, 4,  4, 0,
        0, 1, -1, 8, -8, 1,
    };
    plan.input_transform = detail::matrix_from_rows(6, 6, bt);
    plan.filter_transform = detail::matrix_from_rows(6, 3, g);
    plan.output_transform = detail::matrix_from_rows(4, 6, at);
    return plan;
  }

  throw CapabilityError(
      "winograd_plan: no transform set for a " + std::to_string(out_tile_rows) +
      "x" + std::to_string(out_tile_cols) + " output tile under a " +
      std::to_string(window_rows) + "x" + std::to_string(window_cols) +
      " window (supported: 2x2 and 4x4 under 3x3)");
}

namespace detail {

// dst = T * src * T^T for a p x q transform applied to a q x q tile.
// src and dst are row-major; dst holds p x p values.
inline void transform_tile(const Matrix& t, const float* src, float* dst) {
  const std::size_t p = t.rows;
  const std::size_t q = t.cols;
  std::vector<float> tmp(p * q);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      float sum = 0.0f;
      for (std::size_t k = 0; k < q; ++k) {
        sum += t(i, k) * src[k * q + j];
      }
      tmp[i * q + j] = sum;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      float sum = 0.0f;
      for (std::size_t k = 0; k < q; ++k) {
        sum += tmp[i * q + k] * t(j, k);
      }
      dst[i * p + j] = sum;
    }
  }
}

}  // namespace detail

// Work accounting for one fast-convolution run.
struct WinogradStats {
  std::uint64_t batched_multiplies = 0;  // scalar multiplies in the GEMM stage
  std::size_t tiles = 0;                 // output tiles across the whole batch
};

// Fast convolution via the Cook-Toom construction, stride 1 only. The output
// plane is covered by M x N tiles; every input tile is transformed and its
// values scattered across (M+R-1)(N+S-1) matrices of shape
// (num_tiles * batch) x channels, the filters across matching
// channels x features matrices. One batched GEMM multiplies and reduces over
// channels in the transform domain, then each tile is gathered back and run
// through the inverse transform.
//
// Agrees with conv2d_naive to 1e-3 under max_scaled_error. The transforms
// redistribute magnitudes across the tile, so the absolute error of an
// output element follows the tile's data scale; elementwise relative error
// is the wrong metric where taps cancel to near zero.
inline Tensor4 conv2d_winograd(const Tensor4& input, const Tensor4& filter,
                               const ConvShape& shape,
                               const ConvAlgoParams& params,
                               WinogradStats* stats = nullptr) {
  detail::check_conv_operands(input, filter, shape);
  if (shape.stride != 1) {
    throw CapabilityError("conv2d_winograd: stride " +
                          std::to_string(shape.stride) + " not supported");
  }
  const WinogradPlan plan = winograd_plan(params.tile_rows, params.tile_cols,
                                          shape.window_rows, shape.window_cols);

  const std::size_t m = plan.out_tile_rows;
  const std::size_t n = plan.out_tile_cols;
  const std::size_t tr = plan.input_tile_rows();
  const std::size_t tc = plan.input_tile_cols();
  const std::size_t spots = tr * tc;

  const std::size_t out_r = shape.out_rows();
  const std::size_t out_c = shape.out_cols();
  const std::size_t tiles_r = (out_r + m - 1) / m;
  const std::size_t tiles_c = (out_c + n - 1) / n;
  const std::size_t num_tiles = tiles_r * tiles_c * shape.batch;
  const std::size_t chans = shape.channels;
  const std::size_t feats = shape.features;
  const std::ptrdiff_t pad_r = shape.pad_top();
  const std::ptrdiff_t pad_c = shape.pad_left();

  // Stage 1: transform every input tile and scatter. v holds spots matrices
  // of shape num_tiles x chans, column-major, packed one after another.
  std::vector<float> v(spots * num_tiles * chans);
  {
    std::vector<float> patch(tr * tc);
    std::vector<float> transformed(tr * tc);
    for (std::size_t b = 0; b < shape.batch; ++b) {
      for (std::size_t ti = 0; ti < tiles_r; ++ti) {
        for (std::size_t tj = 0; tj < tiles_c; ++tj) {
          const std::size_t tile =
              (b * tiles_r + ti) * tiles_c + tj;
          const std::ptrdiff_t row0 =
              static_cast<std::ptrdiff_t>(ti * m) - pad_r;
          const std::ptrdiff_t col0 =
              static_cast<std::ptrdiff_t>(tj * n) - pad_c;
          for (std::size_t c = 0; c < chans; ++c) {
            for (std::size_t i = 0; i < tr; ++i) {
              const std::ptrdiff_t ih = row0 + static_cast<std::ptrdiff_t>(i);
              for (std::size_t j = 0; j < tc; ++j) {
                const std::ptrdiff_t iw =
                    col0 + static_cast<std::ptrdiff_t>(j);
                const bool inside =
                    ih >= 0 && iw >= 0 &&
                    ih < static_cast<std::ptrdiff_t>(shape.in_rows) &&
                    iw < static_cast<std::ptrdiff_t>(shape.in_cols);
                patch[i * tc + j] =
                    inside ? input.at(b, static_cast<std::size_t>(ih),
                                      static_cast<std::size_t>(iw), c)
                           : 0.0f;
              }
            }
            detail::transform_tile(plan.input_transform, patch.data(),
                                   transformed.data());
            for (std::size_t s = 0; s < spots; ++s) {
              v[s * num_tiles * chans + tile + c * num_tiles] = transformed[s];
            }
          }
        }
      }
    }
  }

  // Stage 2: transform every filter and scatter. u holds spots matrices of
  // shape chans x feats, column-major.
  std::vector<float> u(spots * chans * feats);
  {
    std::vector<float> g(shape.window_rows * shape.window_cols);
    std::vector<float> transformed(tr * tc);
    for (std::size_t k = 0; k < feats; ++k) {
      for (std::size_t c = 0; c < chans; ++c) {
        for (std::size_t x = 0; x < shape.window_rows; ++x) {
          for (std::size_t y = 0; y < shape.window_cols; ++y) {
            g[x * shape.window_cols + y] = filter.at(x, y, c, k);
          }
        }
        detail::transform_tile(plan.filter_transform, g.data(),
                               transformed.data());
        for (std::size_t s = 0; s < spots; ++s) {
          u[s * chans * feats + c + k * chans] = transformed[s];
        }
      }
    }
  }

  // Stage 3: one GEMM per transform-domain spot reduces over channels.
  std::vector<float> prod(spots * num_tiles * feats);
  const std::uint64_t multiplies = gemm_batched_strided(
      v.data(), num_tiles * chans, u.data(), chans * feats, prod.data(),
      num_tiles * feats, spots, num_tiles, feats, chans);

  // Stage 4: gather each tile, apply the inverse transform and write the
  // M x N output block, clipped at the plane edges.
  Tensor4 out(Tensor4Layout::InputNhwc, shape.batch, out_r, out_c, feats);
  {
    std::vector<float> gathered(spots);
    std::vector<float> tile_out(m * n);
    for (std::size_t b = 0; b < shape.batch; ++b) {
      for (std::size_t ti = 0; ti < tiles_r; ++ti) {
        for (std::size_t tj = 0; tj < tiles_c; ++tj) {
          const std::size_t tile = (b * tiles_r + ti) * tiles_c + tj;
          for (std::size_t k = 0; k < feats; ++k) {
            for (std::size_t s = 0; s < spots; ++s) {
              gathered[s] = prod[s * num_tiles * feats + tile + k * num_tiles];
            }
            detail::transform_tile(plan.output_transform, gathered.data(),
                                   tile_out.data());
            const std::size_t rows_here = std::min(m, out_r - ti * m);
            const std::size_t cols_here = std::min(n, out_c - tj * n);
            for (std::size_t i = 0; i < rows_here; ++i) {
              for (std::size_t j = 0; j < cols_here; ++j) {
                out.at(b, ti * m + i, tj * n + j, k) = tile_out[i * n + j];
              }
            }
          }
        }
      }
    }
  }

  if (stats) {
    stats->batched_multiplies = multiplies;
    stats->tiles = num_tiles;
  }
  return out;
}

// Algorithm dispatch by parameter set.
inline Tensor4 conv2d(const Tensor4& input, const Tensor4& filter,
                      const ConvShape& shape, const ConvAlgoParams& params) {
  switch (params.algo) {
    case ConvAlgo::Naive: return conv2d_naive(input, filter, shape);
    case ConvAlgo::Tiled: return conv2d_tiled(input, filter, shape, params);
    case ConvAlgo::Im2col: return conv2d_im2col(input, filter, shape);
    case ConvAlgo::Winograd:
      return conv2d_winograd(input, filter, shape, params);
  }
  throw ContractError("conv2d: unknown algorithm");
}

}  // namespace tilekit
