#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "tilekit/errors.hpp"

namespace tilekit {

// Transpose operator applied to a GEMM operand before the multiply.
enum class Op { Identity, Transpose };

inline char op_letter(Op op) { return op == Op::Transpose ? 't' : 'n'; }

// Problem shape for C = alpha * OP_a(A) * OP_b(B) + beta * C. The dimensions
// refer to the OP-applied operands: OP_a(A) is m x k, OP_b(B) is k x n and C
// is m x n.
struct GemmShape {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  float alpha = 1.0f;
  float beta = 0.0f;
  Op op_a = Op::Identity;
  Op op_b = Op::Identity;

  std::uint64_t flops() const {
    return 2ull * m * n * k;
  }

  std::string key() const {
    return "gemm_" + std::string(1, op_letter(op_a)) +
           std::string(1, op_letter(op_b)) + "_m" + std::to_string(m) + "_n" +
           std::to_string(n) + "_k" + std::to_string(k);
  }
};

// Blocked-GEMM kernel parameters. Each logical thread owns an h x w register
// tile of output accumulators and a work-group is r x c threads, so one
// work-group covers an (h*r) x (w*c) block of C.
struct GemmConfig {
  std::size_t reg_rows = 4;   // h
  std::size_t reg_cols = 4;   // w
  std::size_t wg_rows = 8;    // r
  std::size_t wg_cols = 8;    // c
  bool use_local_memory = false;
  bool double_buffer = false;
  std::size_t k_step = 1;     // k', depth consumed per register-stage step

  std::size_t register_tile() const { return reg_rows * reg_cols; }
  std::size_t workgroup_size() const { return wg_rows * wg_cols; }
  std::size_t block_rows() const { return reg_rows * wg_rows; }
  std::size_t block_cols() const { return reg_cols * wg_cols; }

  // Canonical name, e.g. "4x4_8x8_loc" or "8x4_8x16_loc_db".
  std::string name() const {
    std::string s = std::to_string(reg_rows) + "x" + std::to_string(reg_cols) +
                    "_" + std::to_string(wg_rows) + "x" +
                    std::to_string(wg_cols) +
                    (use_local_memory ? "_loc" : "_noloc");
    if (double_buffer) s += "_db";
    return s;
  }
};

namespace detail {

inline std::size_t parse_positive(const std::string& text, std::size_t& pos,
                                  const std::string& what) {
  std::size_t start = pos;
  std::uint64_t value = 0;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
    value = value * 10 + static_cast<std::uint64_t>(text[pos] - '0');
    ++pos;
  }
  if (pos == start || value == 0) {
    throw ParseError("config name \"" + text + "\": expected positive " +
                     what + " at offset " + std::to_string(start));
  }
  return static_cast<std::size_t>(value);
}

inline void expect_char(const std::string& text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw ParseError("config name \"" + text + "\": expected '" +
                     std::string(1, c) + "' at offset " + std::to_string(pos));
  }
  ++pos;
}

}  // namespace detail

// Parses the config name grammar {h}x{w}_{r}x{c}_{loc|noloc}[_db] with a
// lowercase 'x'. parse_gemm_config(cfg.name()) round-trips.
inline GemmConfig parse_gemm_config(const std::string& text) {
  GemmConfig cfg;
  std::size_t pos = 0;
  cfg.reg_rows = detail::parse_positive(text, pos, "register rows");
  detail::expect_char(text, pos, 'x');
  cfg.reg_cols = detail::parse_positive(text, pos, "register cols");
  detail::expect_char(text, pos, '_');
  cfg.wg_rows = detail::parse_positive(text, pos, "work-group rows");
  detail::expect_char(text, pos, 'x');
  cfg.wg_cols = detail::parse_positive(text, pos, "work-group cols");
  detail::expect_char(text, pos, '_');
  if (text.compare(pos, 5, "noloc") == 0) {
    cfg.use_local_memory = false;
    pos += 5;
  } else if (text.compare(pos, 3, "loc") == 0) {
    cfg.use_local_memory = true;
    pos += 3;
  } else {
    throw ParseError("config name \"" + text +
                     "\": expected \"loc\" or \"noloc\" at offset " +
                     std::to_string(pos));
  }
  if (pos < text.size()) {
    if (text.compare(pos, 3, "_db") == 0 && cfg.use_local_memory) {
      cfg.double_buffer = true;
      pos += 3;
    } else {
      throw ParseError("config name \"" + text + "\": trailing characters \"" +
                       text.substr(pos) + "\"");
    }
  }
  if (pos != text.size()) {
    throw ParseError("config name \"" + text + "\": trailing characters");
  }
  return cfg;
}

// Output padding policy for convolutions.
enum class Padding { Valid, Same };

// Problem shape for a 2-D convolution over NHWC inputs and HWCK filters.
struct ConvShape {
  std::size_t batch = 1;
  std::size_t in_rows = 0;     // H
  std::size_t in_cols = 0;     // W
  std::size_t channels = 0;    // C
  std::size_t features = 0;    // K
  std::size_t window_rows = 0; // R
  std::size_t window_cols = 0; // S
  std::size_t stride = 1;
  Padding padding = Padding::Same;

  // Valid: floor((H - R) / stride) + 1. Same: ceil(H / stride), zero-filled
  // taps, with the smaller half of the padding at the start.
  std::size_t out_rows() const {
    if (padding == Padding::Valid) {
      if (in_rows < window_rows) return 0;
      return (in_rows - window_rows) / stride + 1;
    }
    return (in_rows + stride - 1) / stride;
  }

  std::size_t out_cols() const {
    if (padding == Padding::Valid) {
      if (in_cols < window_cols) return 0;
      return (in_cols - window_cols) / stride + 1;
    }
    return (in_cols + stride - 1) / stride;
  }

  // Signed padding offsets applied to the window origin.
  std::ptrdiff_t pad_top() const {
    if (padding == Padding::Valid) return 0;
    std::size_t out = out_rows();
    std::size_t span = (out > 0 ? (out - 1) * stride : 0) + window_rows;
    std::size_t total = span > in_rows ? span - in_rows : 0;
    return static_cast<std::ptrdiff_t>(total / 2);
  }

  std::ptrdiff_t pad_left() const {
    if (padding == Padding::Valid) return 0;
    std::size_t out = out_cols();
    std::size_t span = (out > 0 ? (out - 1) * stride : 0) + window_cols;
    std::size_t total = span > in_cols ? span - in_cols : 0;
    return static_cast<std::ptrdiff_t>(total / 2);
  }

  std::size_t out_elements() const {
    return batch * out_rows() * out_cols() * features;
  }

  std::string key() const {
    return "conv_n" + std::to_string(batch) + "_" + std::to_string(in_rows) +
           "x" + std::to_string(in_cols) + "x" + std::to_string(channels) +
           "_k" + std::to_string(features) + "_f" +
           std::to_string(window_rows) + "x" + std::to_string(window_cols) +
           "_s" + std::to_string(stride) +
           (padding == Padding::Same ? "_same" : "_valid");
  }
};

// Convolution algorithm selector plus its tile and vector-width parameters.
enum class ConvAlgo { Naive, Tiled, Im2col, Winograd };

inline std::string conv_algo_name(ConvAlgo algo) {
  switch (algo) {
    case ConvAlgo::Naive: return "naive";
    case ConvAlgo::Tiled: return "tiled";
    case ConvAlgo::Im2col: return "im2col";
    case ConvAlgo::Winograd: return "winograd";
  }
  return "unknown";
}

inline ConvAlgo parse_conv_algo(const std::string& text) {
  if (text == "naive") return ConvAlgo::Naive;
  if (text == "tiled") return ConvAlgo::Tiled;
  if (text == "im2col") return ConvAlgo::Im2col;
  if (text == "winograd") return ConvAlgo::Winograd;
  throw ParseError("unknown convolution algorithm \"" + text + "\"");
}

struct ConvAlgoParams {
  ConvAlgo algo = ConvAlgo::Naive;
  std::size_t tile_rows = 1;       // output-tile rows per logical thread
  std::size_t tile_cols = 1;       // output-tile cols per logical thread
  std::size_t channel_vector = 1;  // power of two in {1,2,4,8}
  std::size_t feature_vector = 1;  // power of two in {1,2,4,8}

  // Canonical name: "naive", "im2col", "tiled_t4x5_v4x2", "winograd_t2x2".
  std::string name() const {
    switch (algo) {
      case ConvAlgo::Naive: return "naive";
      case ConvAlgo::Im2col: return "im2col";
      case ConvAlgo::Winograd:
        return "winograd_t" + std::to_string(tile_rows) + "x" +
               std::to_string(tile_cols);
      case ConvAlgo::Tiled:
        return "tiled_t" + std::to_string(tile_rows) + "x" +
               std::to_string(tile_cols) + "_v" +
               std::to_string(channel_vector) + "x" +
               std::to_string(feature_vector);
    }
    return "unknown";
  }
};

inline bool valid_vector_width(std::size_t v) {
  return v == 1 || v == 2 || v == 4 || v == 8;
}

inline ConvAlgoParams parse_conv_params(const std::string& text) {
  ConvAlgoParams p;
  if (text == "naive") {
    p.algo = ConvAlgo::Naive;
    return p;
  }
  if (text == "im2col") {
    p.algo = ConvAlgo::Im2col;
    return p;
  }
  if (text.rfind("winograd_t", 0) == 0) {
    p.algo = ConvAlgo::Winograd;
    std::size_t pos = 10;
    p.tile_rows = detail::parse_positive(text, pos, "tile rows");
    detail::expect_char(text, pos, 'x');
    p.tile_cols = detail::parse_positive(text, pos, "tile cols");
    if (pos != text.size()) {
      throw ParseError("conv params \"" + text + "\": trailing characters");
    }
    return p;
  }
  if (text.rfind("tiled_t", 0) == 0) {
    p.algo = ConvAlgo::Tiled;
    std::size_t pos = 7;
    p.tile_rows = detail::parse_positive(text, pos, "tile rows");
    detail::expect_char(text, pos, 'x');
    p.tile_cols = detail::parse_positive(text, pos, "tile cols");
    detail::expect_char(text, pos, '_');
    detail::expect_char(text, pos, 'v');
    p.channel_vector = detail::parse_positive(text, pos, "channel vector");
    detail::expect_char(text, pos, 'x');
    p.feature_vector = detail::parse_positive(text, pos, "feature vector");
    if (pos != text.size()) {
      throw ParseError("conv params \"" + text + "\": trailing characters");
    }
    if (!valid_vector_width(p.channel_vector) ||
        !valid_vector_width(p.feature_vector)) {
      throw ParseError("conv params \"" + text +
                       "\": vector widths must be one of 1, 2, 4, 8");
    }
    return p;
  }
  throw ParseError("conv params \"" + text + "\": unrecognized name");
}

}  // namespace tilekit
