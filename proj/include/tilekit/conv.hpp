#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tilekit/config.hpp"
#include "tilekit/detail/parallel.hpp"
#include "tilekit/device.hpp"
#include "tilekit/errors.hpp"
#include "tilekit/gemm.hpp"
#include "tilekit/tensor.hpp"

namespace tilekit {

// Multiply-add count of a direct convolution.
inline std::uint64_t conv_flops(const ConvShape& shape) {
  return 2ull * shape.batch * shape.out_rows() * shape.out_cols() *
         shape.features * shape.window_rows * shape.window_cols *
         shape.channels;
}

namespace detail {

inline void check_conv_operands(const Tensor4& input, const Tensor4& filter,
                                const ConvShape& shape) {
  if (input.layout != Tensor4Layout::InputNhwc) {
    throw ShapeError("conv2d: input tensor must use the NHWC layout");
  }
  if (filter.layout != Tensor4Layout::FilterHwck) {
    throw ShapeError("conv2d: filter tensor must use the HWCK layout");
  }
  if (input.dim0 != shape.batch || input.dim1 != shape.in_rows ||
      input.dim2 != shape.in_cols || input.dim3 != shape.channels) {
    throw ShapeError("conv2d: input is " + std::to_string(input.dim0) + "x" +
                     std::to_string(input.dim1) + "x" +
                     std::to_string(input.dim2) + "x" +
                     std::to_string(input.dim3) + ", expected " +
                     std::to_string(shape.batch) + "x" +
                     std::to_string(shape.in_rows) + "x" +
                     std::to_string(shape.in_cols) + "x" +
                     std::to_string(shape.channels));
  }
  if (filter.dim0 != shape.window_rows || filter.dim1 != shape.window_cols ||
      filter.dim2 != shape.channels || filter.dim3 != shape.features) {
    throw ShapeError("conv2d: filter is " + std::to_string(filter.dim0) + "x" +
                     std::to_string(filter.dim1) + "x" +
                     std::to_string(filter.dim2) + "x" +
                     std::to_string(filter.dim3) + ", expected " +
                     std::to_string(shape.window_rows) + "x" +
                     std::to_string(shape.window_cols) + "x" +
                     std::to_string(shape.channels) + "x" +
                     std::to_string(shape.features));
  }
  if (shape.stride == 0) {
    throw ShapeError("conv2d: stride must be >= 1");
  }
  if (shape.out_rows() == 0 || shape.out_cols() == 0) {
    throw ShapeError("conv2d: window " + std::to_string(shape.window_rows) +
                     "x" + std::to_string(shape.window_cols) +
                     " does not fit the " + std::to_string(shape.in_rows) +
                     "x" + std::to_string(shape.in_cols) + " input");
  }
}

}  // namespace detail

// Reference convolution: seven plain loops, one ordered sum per output
// element over ascending (x, y, c) window taps. Taps falling outside the
// input read as zero. The oracle the other convolution paths are compared
// against.
inline Tensor4 conv2d_naive(const Tensor4& input, const Tensor4& filter,
                            const ConvShape& shape) {
  detail::check_conv_operands(input, filter, shape);
  const std::size_t out_r = shape.out_rows();
  const std::size_t out_c = shape.out_cols();
  const std::ptrdiff_t pad_r = shape.pad_top();
  const std::ptrdiff_t pad_c = shape.pad_left();

  Tensor4 out(Tensor4Layout::InputNhwc, shape.batch, out_r, out_c,
              shape.features);
  for (std::size_t n = 0; n < shape.batch; ++n) {
    for (std::size_t oh = 0; oh < out_r; ++oh) {
      for (std::size_t ow = 0; ow < out_c; ++ow) {
        for (std::size_t k = 0; k < shape.features; ++k) {
          float sum = 0.0f;
          for (std::size_t x = 0; x < shape.window_rows; ++x) {
            const std::ptrdiff_t ih =
                static_cast<std::ptrdiff_t>(oh * shape.stride + x) - pad_r;
            for (std::size_t y = 0; y < shape.window_cols; ++y) {
              const std::ptrdiff_t iw =
                  static_cast<std::ptrdiff_t>(ow * shape.stride + y) - pad_c;
              if (ih < 0 || iw < 0 ||
                  ih >= static_cast<std::ptrdiff_t>(shape.in_rows) ||
                  iw >= static_cast<std::ptrdiff_t>(shape.in_cols)) {
                continue;
              }
              for (std::size_t c = 0; c < shape.channels; ++c) {
                sum += input.at(n, static_cast<std::size_t>(ih),
                                static_cast<std::size_t>(iw), c) *
                       filter.at(x, y, c, k);
              }
            }
          }
          out.at(n, oh, ow, k) = sum;
        }
      }
    }
  }
  return out;
}

// Input rows x cols touched by one tile_rows x tile_cols output tile.
struct TileFootprint {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t elems(std::size_t channels) const { return rows * cols * channels; }
};

inline TileFootprint tiled_input_footprint(const ConvAlgoParams& params,
                                           const ConvShape& shape) {
  TileFootprint f;
  f.rows = (params.tile_rows - 1) * shape.stride + shape.window_rows;
  f.cols = (params.tile_cols - 1) * shape.stride + shape.window_cols;
  return f;
}

// Register-tiled direct convolution. Each logical thread produces a
// tile_rows x tile_cols patch of output positions for feature_vector
// consecutive features, staging the input footprint of the tile once and
// walking the window taps in ascending (x, y, c) order; channels advance in
// channel_vector groups. Per output element the summation order matches the
// naive kernel.
inline Tensor4 conv2d_tiled(const Tensor4& input, const Tensor4& filter,
                            const ConvShape& shape,
                            const ConvAlgoParams& params) {
  detail::check_conv_operands(input, filter, shape);
  if (params.tile_rows == 0 || params.tile_cols == 0) {
    throw ConfigError("conv2d_tiled: tile dimensions must be >= 1");
  }
  if (!valid_vector_width(params.channel_vector) ||
      !valid_vector_width(params.feature_vector)) {
    throw ConfigError("conv2d_tiled: vector widths must be one of 1, 2, 4, 8");
  }
  if (shape.stride != 1 && shape.stride != 2) {
    throw CapabilityError("conv2d_tiled: stride " +
                          std::to_string(shape.stride) + " not supported");
  }

  const std::size_t out_r = shape.out_rows();
  const std::size_t out_c = shape.out_cols();
  const std::size_t chans = shape.channels;
  const std::ptrdiff_t pad_r = shape.pad_top();
  const std::ptrdiff_t pad_c = shape.pad_left();
  const TileFootprint foot = tiled_input_footprint(params, shape);

  const std::size_t tiles_r = (out_r + params.tile_rows - 1) / params.tile_rows;
  const std::size_t tiles_c = (out_c + params.tile_cols - 1) / params.tile_cols;

  Tensor4 out(Tensor4Layout::InputNhwc, shape.batch, out_r, out_c,
              shape.features);

  // One task per (image, tile row); tiles write disjoint output patches.
  detail::parallel_for(shape.batch * tiles_r, [&](std::size_t task) {
    const std::size_t n = task / tiles_r;
    const std::size_t tr = task % tiles_r;
    const std::size_t oh0 = tr * params.tile_rows;

    std::vector<float> patch(foot.elems(chans));
    std::vector<float> acc(params.tile_rows * params.tile_cols *
                           params.feature_vector);

    for (std::size_t tc = 0; tc < tiles_c; ++tc) {
      const std::size_t ow0 = tc * params.tile_cols;
      const std::size_t th = std::min(params.tile_rows, out_r - oh0);
      const std::size_t tw = std::min(params.tile_cols, out_c - ow0);

      // Stage the footprint, zero-filling taps outside the input.
      for (std::size_t fr = 0; fr < foot.rows; ++fr) {
        const std::ptrdiff_t ih =
            static_cast<std::ptrdiff_t>(oh0 * shape.stride + fr) - pad_r;
        for (std::size_t fc = 0; fc < foot.cols; ++fc) {
          const std::ptrdiff_t iw =
              static_cast<std::ptrdiff_t>(ow0 * shape.stride + fc) - pad_c;
          float* dst = patch.data() + (fr * foot.cols + fc) * chans;
          if (ih < 0 || iw < 0 ||
              ih >= static_cast<std::ptrdiff_t>(shape.in_rows) ||
              iw >= static_cast<std::ptrdiff_t>(shape.in_cols)) {
            std::fill(dst, dst + chans, 0.0f);
          } else {
            const float* src =
                input.data.data() +
                input.index(n, static_cast<std::size_t>(ih),
                            static_cast<std::size_t>(iw), 0);
            std::copy(src, src + chans, dst);
          }
        }
      }

      for (std::size_t k0 = 0; k0 < shape.features;
           k0 += params.feature_vector) {
        const std::size_t kf = std::min(params.feature_vector,
                                        shape.features - k0);
        std::fill(acc.begin(), acc.end(), 0.0f);

        for (std::size_t x = 0; x < shape.window_rows; ++x) {
          for (std::size_t y = 0; y < shape.window_cols; ++y) {
            for (std::size_t c0 = 0; c0 < chans; c0 += params.channel_vector) {
              const std::size_t cv = std::min(params.channel_vector, chans - c0);
              for (std::size_t c = c0; c < c0 + cv; ++c) {
                const float* flt =
                    filter.data.data() + filter.index(x, y, c, k0);
                for (std::size_t ti = 0; ti < th; ++ti) {
                  const float* row =
                      patch.data() +
                      ((ti * shape.stride + x) * foot.cols) * chans;
                  float* arow = acc.data() +
                                (ti * params.tile_cols) * params.feature_vector;
                  for (std::size_t tj = 0; tj < tw; ++tj) {
                    const float v = row[(tj * shape.stride + y) * chans + c];
                    float* alane = arow + tj * params.feature_vector;
                    for (std::size_t f = 0; f < kf; ++f) {
                      alane[f] += v * flt[f];
                    }
                  }
                }
              }
            }
          }
        }

        for (std::size_t ti = 0; ti < th; ++ti) {
          for (std::size_t tj = 0; tj < tw; ++tj) {
            const float* alane =
                acc.data() +
                (ti * params.tile_cols + tj) * params.feature_vector;
            float* dst = out.data.data() + out.index(n, oh0 + ti, ow0 + tj, k0);
            std::copy(alane, alane + kf, dst);
          }
        }
      }
    }
  });

  return out;
}

// Lower the input to a patch matrix of shape
// (out_rows * out_cols * batch) x (window_rows * window_cols * channels):
// row (n * out_rows + oh) * out_cols + ow holds the window taps of output
// position (n, oh, ow) in ascending (x, y, c) column order, matching the
// flattening of an HWCK filter. Out-of-range taps are zero.
inline Matrix im2col(const Tensor4& input, const ConvShape& shape) {
  if (input.layout != Tensor4Layout::InputNhwc) {
    throw ShapeError("im2col: input tensor must use the NHWC layout");
  }
  if (input.dim0 != shape.batch || input.dim1 != shape.in_rows ||
      input.dim2 != shape.in_cols || input.dim3 != shape.channels) {
    throw ShapeError("im2col: input does not match the stated shape");
  }
  const std::size_t out_r = shape.out_rows();
  const std::size_t out_c = shape.out_cols();
  const std::size_t rows = out_r * out_c * shape.batch;
  const std::size_t cols =
      shape.window_rows * shape.window_cols * shape.channels;
  const std::ptrdiff_t pad_r = shape.pad_top();
  const std::ptrdiff_t pad_c = shape.pad_left();

  Matrix patches(rows, cols);
  for (std::size_t n = 0; n < shape.batch; ++n) {
    for (std::size_t oh = 0; oh < out_r; ++oh) {
      for (std::size_t ow = 0; ow < out_c; ++ow) {
        const std::size_t row = (n * out_r + oh) * out_c + ow;
        for (std::size_t x = 0; x < shape.window_rows; ++x) {
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(oh * shape.stride + x) - pad_r;
          for (std::size_t y = 0; y < shape.window_cols; ++y) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * shape.stride + y) - pad_c;
            const bool inside =
                ih >= 0 && iw >= 0 &&
                ih < static_cast<std::ptrdiff_t>(shape.in_rows) &&
                iw < static_cast<std::ptrdiff_t>(shape.in_cols);
            for (std::size_t c = 0; c < shape.channels; ++c) {
              const std::size_t col =
                  (x * shape.window_cols + y) * shape.channels + c;
              patches(row, col) =
                  inside ? input.at(n, static_cast<std::size_t>(ih),
                                    static_cast<std::size_t>(iw), c)
                         : 0.0f;
            }
          }
        }
      }
    }
  }
  return patches;
}

// Repack an HWCK filter into the (window_rows * window_cols * channels) x
// features matrix the patch matrix multiplies against.
inline Matrix filter_matrix(const Tensor4& filter) {
  if (filter.layout != Tensor4Layout::FilterHwck) {
    throw ShapeError("filter_matrix: filter tensor must use the HWCK layout");
  }
  const std::size_t rows = filter.dim0 * filter.dim1 * filter.dim2;
  const std::size_t cols = filter.dim3;
  Matrix f(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < cols; ++k) {
      f(r, k) = filter.data[r * cols + k];
    }
  }
  return f;
}

// Convolution as one large GEMM over the im2col patch matrix.
inline Tensor4 conv2d_im2col(const Tensor4& input, const Tensor4& filter,
                             const ConvShape& shape, const GemmConfig& cfg,
                             const DeviceSpec& dev) {
  detail::check_conv_operands(input, filter, shape);
  const Matrix patches = im2col(input, shape);
  const Matrix f = filter_matrix(filter);

  GemmShape gs;
  gs.m = patches.rows;
  gs.n = shape.features;
  gs.k = patches.cols;
  gs.alpha = 1.0f;
  gs.beta = 0.0f;
  Matrix c(gs.m, gs.n);
  const Matrix product = gemm_tiled(patches, f, c, gs, cfg, dev);

  const std::size_t out_r = shape.out_rows();
  const std::size_t out_c = shape.out_cols();
  Tensor4 out(Tensor4Layout::InputNhwc, shape.batch, out_r, out_c,
              shape.features);
  for (std::size_t n = 0; n < shape.batch; ++n) {
    for (std::size_t oh = 0; oh < out_r; ++oh) {
      for (std::size_t ow = 0; ow < out_c; ++ow) {
        const std::size_t row = (n * out_r + oh) * out_c + ow;
        for (std::size_t k = 0; k < shape.features; ++k) {
          out.at(n, oh, ow, k) = product(row, k);
        }
      }
    }
  }
  return out;
}

inline Tensor4 conv2d_im2col(const Tensor4& input, const Tensor4& filter,
                             const ConvShape& shape) {
  DeviceSpec dev;
  dev.name = "generic";
  dev.cache_line_bytes = 64;
  dev.local_memory_bytes = 0;
  dev.compute_units = 1;
  return conv2d_im2col(input, filter, shape, parse_gemm_config("4x4_8x8_noloc"),
                       dev);
}

}  // namespace tilekit
