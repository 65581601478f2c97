#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tilekit/config.hpp"
#include "tilekit/detail/parallel.hpp"
#include "tilekit/device.hpp"
#include "tilekit/errors.hpp"
#include "tilekit/tensor.hpp"

namespace tilekit {

// ---------------------------------------------------------------------------
// Reuse and traffic accounting for an m' x n' output block
// ---------------------------------------------------------------------------

// Data reuse of a register-blocked multiply step: consuming k' elements of
// depth loads m'k' + k'n' entries and performs 2 m'n'k' flops, so
//   reuse = 2 m'n'k' / (m'k' + k'n') = 2 m'n' / (m' + n'),
// which is independent of k'.
struct ReuseReport {
  double reuse = 0.0;
  std::uint64_t flops = 0;
  std::uint64_t elements_loaded = 0;
};

inline ReuseReport data_reuse(std::size_t block_rows, std::size_t block_cols,
                              std::size_t depth) {
  if (block_rows == 0 || block_cols == 0 || depth == 0) {
    throw ContractError("data_reuse: block dimensions must be >= 1");
  }
  ReuseReport report;
  report.flops = 2ull * block_rows * block_cols * depth;
  report.elements_loaded =
      static_cast<std::uint64_t>(block_rows) * depth +
      static_cast<std::uint64_t>(depth) * block_cols;
  report.reuse = static_cast<double>(report.flops) /
                 static_cast<double>(report.elements_loaded);
  return report;
}

// Whole-panel cost of one m' x n' output block: 2 K m'n' flops against
// m'n' + m'K + n'K elements loaded from global memory.
struct BlockTraffic {
  std::uint64_t flops = 0;
  std::uint64_t elements = 0;
};

inline BlockTraffic block_traffic(const GemmShape& shape, std::size_t block_rows,
                                  std::size_t block_cols) {
  BlockTraffic t;
  t.flops = 2ull * shape.k * block_rows * block_cols;
  t.elements = static_cast<std::uint64_t>(block_rows) * block_cols +
               static_cast<std::uint64_t>(block_rows) * shape.k +
               static_cast<std::uint64_t>(block_cols) * shape.k;
  return t;
}

// ---------------------------------------------------------------------------
// Local-memory sizing and config validation
// ---------------------------------------------------------------------------

// Number of data elements staged in local memory for a configuration: an
// h*r x X slab of A plus an X x w*c slab of B, where X is the number of
// elements that fit within one cache line. Doubled when double buffering.
inline std::size_t local_mem_elems(const GemmConfig& cfg, const DeviceSpec& dev) {
  if (!cfg.use_local_memory) {
    throw ContractError("local_mem_elems: config \"" + cfg.name() +
                        "\" does not use local memory");
  }
  const std::size_t x = dev.elems_per_cache_line();
  std::size_t elems = cfg.reg_rows * cfg.wg_rows * x + x * cfg.reg_cols * cfg.wg_cols;
  if (cfg.double_buffer) elems *= 2;
  return elems;
}

// Result of checking a config against the device budgets. Lists every
// violated budget, not just the first.
struct ConfigVerdict {
  bool ok = true;
  std::vector<std::string> violations;

  std::string summary() const {
    if (ok) return "valid";
    std::string s;
    for (const std::string& v : violations) {
      if (!s.empty()) s += "; ";
      s += v;
    }
    return s;
  }
};

// Accepts a config iff the work-group fits the device thread limit, the
// per-thread register estimate (h*w accumulators plus two staged cache-line
// fragments) fits the register budget and any requested local memory fits the
// device. Devices without local memory reject every _loc config.
inline ConfigVerdict validate_config(const GemmConfig& cfg, const DeviceSpec& dev,
                                     [[maybe_unused]] const GemmShape& shape) {
  ConfigVerdict verdict;
  auto fail = [&](const std::string& msg) {
    verdict.ok = false;
    verdict.violations.push_back(msg);
  };

  const std::size_t wg = cfg.workgroup_size();
  if (wg > dev.max_workgroup_size) {
    fail("work-group budget: " + std::to_string(cfg.wg_rows) + "x" +
         std::to_string(cfg.wg_cols) + " = " + std::to_string(wg) +
         " threads exceeds max_workgroup_size " +
         std::to_string(dev.max_workgroup_size));
  }

  const std::size_t x = dev.elems_per_cache_line();
  const std::size_t regs = cfg.register_tile() + 2 * x;
  if (regs > dev.register_budget) {
    fail("register budget: " + std::to_string(cfg.register_tile()) + " + 2*" +
         std::to_string(x) + " = " + std::to_string(regs) +
         " registers exceeds register_budget " +
         std::to_string(dev.register_budget));
  }

  if (cfg.double_buffer && !cfg.use_local_memory) {
    fail("config invariant: double_buffer requires use_local_memory");
  }

  if (cfg.use_local_memory) {
    if (dev.local_memory_bytes == 0) {
      fail("local-memory budget: device \"" + dev.name +
           "\" has no local memory");
    } else {
      const std::size_t bytes = 4 * local_mem_elems(cfg, dev);
      if (bytes > dev.local_memory_bytes) {
        fail("local-memory budget: " + std::to_string(bytes) +
             " bytes exceeds local_memory_bytes " +
             std::to_string(dev.local_memory_bytes));
      }
    }
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

namespace detail {

// Read-only view of a GEMM operand with the transpose op folded into the
// index map. Logical element (r, c) of OP(M).
struct OperandView {
  const float* data = nullptr;
  std::size_t ld = 0;
  bool transposed = false;

  float at(std::size_t r, std::size_t c) const {
    return transposed ? data[c + r * ld] : data[r + c * ld];
  }
};

inline void check_gemm_operands(const Matrix& a, const Matrix& b, const Matrix& c,
                                const GemmShape& shape) {
  const std::size_t a_rows = shape.op_a == Op::Identity ? shape.m : shape.k;
  const std::size_t a_cols = shape.op_a == Op::Identity ? shape.k : shape.m;
  const std::size_t b_rows = shape.op_b == Op::Identity ? shape.k : shape.n;
  const std::size_t b_cols = shape.op_b == Op::Identity ? shape.n : shape.k;
  if (a.rows != a_rows || a.cols != a_cols) {
    throw ShapeError("gemm: operand A is " + std::to_string(a.rows) + "x" +
                     std::to_string(a.cols) + ", expected " +
                     std::to_string(a_rows) + "x" + std::to_string(a_cols));
  }
  if (b.rows != b_rows || b.cols != b_cols) {
    throw ShapeError("gemm: operand B is " + std::to_string(b.rows) + "x" +
                     std::to_string(b.cols) + ", expected " +
                     std::to_string(b_rows) + "x" + std::to_string(b_cols));
  }
  if (c.rows != shape.m || c.cols != shape.n) {
    throw ShapeError("gemm: operand C is " + std::to_string(c.rows) + "x" +
                     std::to_string(c.cols) + ", expected " +
                     std::to_string(shape.m) + "x" + std::to_string(shape.n));
  }
}

}  // namespace detail

// Reference kernel: one ordered dot product per output element (ascending k),
// then C(i,j) = alpha * r + beta * C(i,j). The oracle all other GEMM paths
// are compared against.
inline Matrix gemm_naive(const Matrix& a, const Matrix& b, const Matrix& c,
                         const GemmShape& shape) {
  detail::check_gemm_operands(a, b, c, shape);
  detail::OperandView va{a.data.data(), a.rows, shape.op_a == Op::Transpose};
  detail::OperandView vb{b.data.data(), b.rows, shape.op_b == Op::Transpose};

  Matrix out = c;
  for (std::size_t j = 0; j < shape.n; ++j) {
    for (std::size_t i = 0; i < shape.m; ++i) {
      float r = 0.0f;
      for (std::size_t kk = 0; kk < shape.k; ++kk) {
        r += va.at(i, kk) * vb.at(kk, j);
      }
      float& dst = out(i, j);
      dst = shape.beta == 0.0f ? shape.alpha * r
                               : shape.alpha * r + shape.beta * dst;
    }
  }
  return out;
}

namespace detail {

// Register-stage microkernel: h x w accumulators held in a fixed-size local
// array, consuming one staged slab. A fragments are contiguous per depth step
// (bufA[kk*BM + i]), B fragments likewise (bufB[kk*BN + j]).
template <std::size_t H, std::size_t W>
inline void microkernel_fixed(const float* buf_a, const float* buf_b,
                              std::size_t bm, std::size_t bn, std::size_t row,
                              std::size_t col, std::size_t depth, float* acc) {
  float local[H * W];
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      local[i * W + j] = acc[(row + i) * bn + col + j];
    }
  }
  for (std::size_t kk = 0; kk < depth; ++kk) {
    const float* a = buf_a + kk * bm + row;
    const float* b = buf_b + kk * bn + col;
    for (std::size_t i = 0; i < H; ++i) {
      const float ai = a[i];
      for (std::size_t j = 0; j < W; ++j) {
        local[i * W + j] += ai * b[j];
      }
    }
  }
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      acc[(row + i) * bn + col + j] = local[i * W + j];
    }
  }
}

inline void microkernel_generic(const float* buf_a, const float* buf_b,
                                std::size_t bm, std::size_t bn, std::size_t row,
                                std::size_t col, std::size_t h, std::size_t w,
                                std::size_t depth, std::size_t k_step,
                                float* acc) {
  for (std::size_t k0 = 0; k0 < depth; k0 += k_step) {
    const std::size_t kend = std::min(k0 + k_step, depth);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        float r = acc[(row + i) * bn + col + j];
        for (std::size_t kk = k0; kk < kend; ++kk) {
          r += buf_a[kk * bm + row + i] * buf_b[kk * bn + col + j];
        }
        acc[(row + i) * bn + col + j] = r;
      }
    }
  }
}

inline void run_microkernel(const float* buf_a, const float* buf_b,
                            std::size_t bm, std::size_t bn, std::size_t row,
                            std::size_t col, std::size_t h, std::size_t w,
                            std::size_t depth, std::size_t k_step, float* acc) {
  if (k_step == 1) {
    switch (h * 16 + w) {
      case 1 * 16 + 1: return microkernel_fixed<1, 1>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 1 * 16 + 2: return microkernel_fixed<1, 2>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 1 * 16 + 4: return microkernel_fixed<1, 4>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 1 * 16 + 8: return microkernel_fixed<1, 8>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 2 * 16 + 1: return microkernel_fixed<2, 1>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 2 * 16 + 2: return microkernel_fixed<2, 2>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 2 * 16 + 4: return microkernel_fixed<2, 4>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 2 * 16 + 8: return microkernel_fixed<2, 8>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 4 * 16 + 1: return microkernel_fixed<4, 1>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 4 * 16 + 2: return microkernel_fixed<4, 2>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 4 * 16 + 4: return microkernel_fixed<4, 4>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 4 * 16 + 8: return microkernel_fixed<4, 8>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 8 * 16 + 1: return microkernel_fixed<8, 1>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 8 * 16 + 2: return microkernel_fixed<8, 2>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 8 * 16 + 4: return microkernel_fixed<8, 4>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      case 8 * 16 + 8: return microkernel_fixed<8, 8>(buf_a, buf_b, bm, bn, row, col, depth, acc);
      default: break;
    }
  }
  microkernel_generic(buf_a, buf_b, bm, bn, row, col, h, w, depth, k_step, acc);
}

}  // namespace detail

// Blocked GEMM. C is partitioned into (h*r) x (w*c) blocks, one per
// work-group; within a block each logical thread owns an h x w register tile
// of accumulators. The k dimension is consumed in slabs of X elements (one
// cache line). With use_local_memory the A and B slabs are staged through an
// explicit buffer of exactly local_mem_elems(cfg, dev) elements, filled in
// linear buffer order so that consecutive logical threads touch consecutive
// elements; with double_buffer two staging buffers alternate and slab t+1 is
// filled before slab t is consumed. Without local memory the microkernel
// reads the operands directly with bounds checks at the edges.
//
// Accumulation order per output element is ascending k, so results are
// bit-identical for any worker-thread count.
inline Matrix gemm_tiled(const Matrix& a, const Matrix& b, const Matrix& c,
                         const GemmShape& shape, const GemmConfig& cfg,
                         const DeviceSpec& dev) {
  detail::check_gemm_operands(a, b, c, shape);
  const ConfigVerdict verdict = validate_config(cfg, dev, shape);
  if (!verdict.ok) {
    throw ConfigError("gemm_tiled: config \"" + cfg.name() +
                      "\" rejected: " + verdict.summary());
  }
  if (cfg.k_step == 0) throw ConfigError("gemm_tiled: k_step must be positive");

  const detail::OperandView va{a.data.data(), a.rows, shape.op_a == Op::Transpose};
  const detail::OperandView vb{b.data.data(), b.rows, shape.op_b == Op::Transpose};

  const std::size_t x = dev.elems_per_cache_line();
  const std::size_t bm = cfg.block_rows();
  const std::size_t bn = cfg.block_cols();
  const std::size_t block_rows = (shape.m + bm - 1) / bm;
  const std::size_t block_cols = (shape.n + bn - 1) / bn;
  const std::size_t num_slabs = (shape.k + x - 1) / x;

  Matrix out = c;
  float* out_data = out.data.data();

  // One work-group per output block; block rows run in parallel. Each task
  // owns its staging buffer and accumulator block, and blocks write disjoint
  // regions of C.
  detail::parallel_for(block_rows, [&](std::size_t brow) {
    const std::size_t row0 = brow * bm;
    std::vector<float> acc(bm * bn);
    std::vector<float> scratch;
    if (cfg.use_local_memory) {
      scratch.resize(local_mem_elems(cfg, dev));
    }
    const std::size_t a_slab = bm * x;
    const std::size_t b_slab = x * bn;

    for (std::size_t bcol = 0; bcol < block_cols; ++bcol) {
      const std::size_t col0 = bcol * bn;
      std::fill(acc.begin(), acc.end(), 0.0f);

      const std::size_t rows_here = std::min(bm, shape.m - row0);
      const std::size_t cols_here = std::min(bn, shape.n - col0);

      if (cfg.use_local_memory) {
        // Stage slab s into the given buffer halves. Buffer index order is
        // the coalesced schedule: consecutive indices belong to consecutive
        // logical threads. Out-of-range rows/cols stage as zero.
        auto stage = [&](std::size_t s, float* buf_a, float* buf_b) {
          const std::size_t k0 = s * x;
          const std::size_t depth = std::min(x, shape.k - k0);
          for (std::size_t idx = 0; idx < a_slab; ++idx) {
            const std::size_t kk = idx / bm;
            const std::size_t i = idx % bm;
            buf_a[idx] = (kk < depth && row0 + i < shape.m)
                             ? va.at(row0 + i, k0 + kk)
                             : 0.0f;
          }
          for (std::size_t idx = 0; idx < b_slab; ++idx) {
            const std::size_t kk = idx / bn;
            const std::size_t j = idx % bn;
            buf_b[idx] = (kk < depth && col0 + j < shape.n)
                             ? vb.at(k0 + kk, col0 + j)
                             : 0.0f;
          }
        };
        auto compute = [&](std::size_t s, const float* buf_a, const float* buf_b) {
          const std::size_t depth = std::min(x, shape.k - s * x);
          for (std::size_t tr = 0; tr < cfg.wg_rows; ++tr) {
            for (std::size_t tc = 0; tc < cfg.wg_cols; ++tc) {
              detail::run_microkernel(buf_a, buf_b, bm, bn, tr * cfg.reg_rows,
                                      tc * cfg.reg_cols, cfg.reg_rows,
                                      cfg.reg_cols, depth, cfg.k_step,
                                      acc.data());
            }
          }
        };

        if (cfg.double_buffer) {
          float* buf[2][2] = {
              {scratch.data(), scratch.data() + a_slab},
              {scratch.data() + a_slab + b_slab,
               scratch.data() + 2 * a_slab + b_slab},
          };
          stage(0, buf[0][0], buf[0][1]);
          for (std::size_t s = 0; s < num_slabs; ++s) {
            const std::size_t cur = s % 2;
            if (s + 1 < num_slabs) {
              stage(s + 1, buf[1 - cur][0], buf[1 - cur][1]);
            }
            compute(s, buf[cur][0], buf[cur][1]);
          }
        } else {
          float* buf_a = scratch.data();
          float* buf_b = scratch.data() + a_slab;
          for (std::size_t s = 0; s < num_slabs; ++s) {
            stage(s, buf_a, buf_b);
            compute(s, buf_a, buf_b);
          }
        }
      } else {
        // Direct path: same slab structure and accumulation order, operands
        // read from global memory with bounds checks on partial blocks.
        const bool full = rows_here == bm && cols_here == bn;
        for (std::size_t s = 0; s < num_slabs; ++s) {
          const std::size_t k0 = s * x;
          const std::size_t depth = std::min(x, shape.k - k0);
          for (std::size_t kc = 0; kc < depth; kc += cfg.k_step) {
            const std::size_t kend = std::min(kc + cfg.k_step, depth);
            const std::size_t ilim = full ? bm : rows_here;
            const std::size_t jlim = full ? bn : cols_here;
            for (std::size_t i = 0; i < ilim; ++i) {
              for (std::size_t kk = kc; kk < kend; ++kk) {
                const float ai = va.at(row0 + i, k0 + kk);
                float* acc_row = acc.data() + i * bn;
                for (std::size_t j = 0; j < jlim; ++j) {
                  acc_row[j] += ai * vb.at(k0 + kk, col0 + j);
                }
              }
            }
          }
        }
      }

      // Write back the block, clipped to the matrix extent.
      for (std::size_t j = 0; j < cols_here; ++j) {
        for (std::size_t i = 0; i < rows_here; ++i) {
          const float prod = acc[i * bn + j];
          float& dst = out_data[(row0 + i) + (col0 + j) * shape.m];
          dst = shape.beta == 0.0f ? shape.alpha * prod
                                   : shape.alpha * prod + shape.beta * dst;
        }
      }
    }
  });

  return out;
}

// Strided-batch GEMM over packed column-major matrices: for each g in
// [0, batch), C_g = A_g * B_g with C_g zeroed first. This is the elementwise
// multiply stage of the fast convolution path. Returns the number of scalar
// multiplies actually executed, accumulated from the loop extents that ran.
inline std::uint64_t gemm_batched_strided(const float* a, std::size_t stride_a,
                                          const float* b, std::size_t stride_b,
                                          float* c, std::size_t stride_c,
                                          std::size_t batch, std::size_t m,
                                          std::size_t n, std::size_t k) {
  std::vector<std::uint64_t> counts(batch, 0);
  detail::parallel_for(batch, [&](std::size_t g) {
    const float* ag = a + g * stride_a;
    const float* bg = b + g * stride_b;
    float* cg = c + g * stride_c;
    std::fill(cg, cg + m * n, 0.0f);
    std::uint64_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        const float bj = bg[kk + j * k];
        float* col = cg + j * m;
        const float* acol = ag + kk * m;
        for (std::size_t i = 0; i < m; ++i) {
          col[i] += acol[i] * bj;
        }
        count += m;
      }
    }
    counts[g] = count;
  });
  std::uint64_t total = 0;
  for (std::uint64_t v : counts) total += v;
  return total;
}

}  // namespace tilekit
