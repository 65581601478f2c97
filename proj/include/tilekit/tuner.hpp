#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tilekit/config.hpp"
#include "tilekit/conv.hpp"
#include "tilekit/device.hpp"
#include "tilekit/errors.hpp"
#include "tilekit/gemm.hpp"
#include "tilekit/numeric.hpp"
#include "tilekit/tensor.hpp"
#include "tilekit/winograd.hpp"

namespace tilekit {

// ---------------------------------------------------------------------------
// Problems and parameter spaces
// ---------------------------------------------------------------------------

// A tunable workload: one GEMM or one convolution instance.
struct Problem {
  enum class Kind { Gemm, Conv };

  Kind kind = Kind::Gemm;
  GemmShape gemm;
  ConvShape conv;

  static Problem of(const GemmShape& shape) {
    Problem p;
    p.kind = Kind::Gemm;
    p.gemm = shape;
    return p;
  }
  static Problem of(const ConvShape& shape) {
    Problem p;
    p.kind = Kind::Conv;
    p.conv = shape;
    return p;
  }

  std::string key() const {
    return kind == Kind::Gemm ? gemm.key() : conv.key();
  }
  std::uint64_t flops() const {
    return kind == Kind::Gemm ? gemm.flops() : conv_flops(conv);
  }
};

// Candidate sets the tuner enumerates over. Defaults cover the full kernel
// family; restrict the vectors to narrow a search.
struct ParamSpace {
  // GEMM axes.
  std::vector<std::size_t> reg_rows{1, 2, 4, 8};
  std::vector<std::size_t> reg_cols{1, 2, 4, 8};
  std::vector<std::size_t> wg_rows{4, 8, 16};
  std::vector<std::size_t> wg_cols{4, 8, 16};
  std::vector<bool> use_local{false, true};
  std::vector<bool> double_buffer{false, true};

  // Convolution axes.
  std::vector<std::size_t> tile_rows{1, 2, 3, 4, 5};
  std::vector<std::size_t> tile_cols{1, 2, 3, 4, 5};
  std::vector<std::size_t> channel_vectors{1, 2, 4, 8};
  std::vector<std::size_t> feature_vectors{1, 2, 4, 8};
  std::vector<ConvAlgo> algos{ConvAlgo::Naive, ConvAlgo::Tiled,
                              ConvAlgo::Im2col, ConvAlgo::Winograd};
};

// The stock GEMM candidate set: the seven configurations the kernels ship
// tuned defaults for.
inline std::vector<GemmConfig> stock_gemm_configs() {
  static const char* names[] = {
      "4x4_8x8_loc",   "4x4_16x16_loc",  "8x4_8x16_loc",  "8x2_4x16_loc",
      "8x4_8x16_noloc", "8x4_4x8_noloc", "4x4_8x8_noloc",
  };
  std::vector<GemmConfig> out;
  for (const char* n : names) out.push_back(parse_gemm_config(n));
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

namespace detail {

// Reduce a list of per-config rejection reasons to the constraint that did
// the most filtering.
inline std::string binding_constraint(const std::vector<std::string>& rejected) {
  if (rejected.empty()) return "no constraint";
  std::map<std::string, std::size_t> tally;
  for (const std::string& r : rejected) {
    const std::size_t colon = r.find(": ");
    const std::size_t start = r.find("] ");
    const std::size_t from = start == std::string::npos ? 0 : start + 2;
    std::string kind = colon == std::string::npos ? r : r.substr(from, colon - from);
    ++tally[kind];
  }
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return "binding constraint: " + best->first + " (rejected " +
         std::to_string(best->second) + " of " +
         std::to_string(rejected.size()) + " candidates)";
}

}  // namespace detail

// Cartesian product of the GEMM axes filtered by validate_config, in
// lexicographic name order. Rejected candidates are reported through
// `rejected` (one "[name] reason" entry each) when the pointer is given.
inline std::vector<GemmConfig> enumerate_gemm_configs(
    const ParamSpace& space, const DeviceSpec& dev, const GemmShape& shape,
    std::vector<std::string>* rejected = nullptr) {
  std::vector<GemmConfig> out;
  for (std::size_t h : space.reg_rows) {
    for (std::size_t w : space.reg_cols) {
      for (std::size_t r : space.wg_rows) {
        for (std::size_t c : space.wg_cols) {
          for (bool loc : space.use_local) {
            for (bool db : space.double_buffer) {
              if (db && !loc) continue;  // grammar has no noloc_db form
              GemmConfig cfg;
              cfg.reg_rows = h;
              cfg.reg_cols = w;
              cfg.wg_rows = r;
              cfg.wg_cols = c;
              cfg.use_local_memory = loc;
              cfg.double_buffer = db;
              const ConfigVerdict verdict = validate_config(cfg, dev, shape);
              if (verdict.ok) {
                out.push_back(cfg);
              } else if (rejected) {
                rejected->push_back("[" + cfg.name() + "] " + verdict.summary());
              }
            }
          }
        }
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const GemmConfig& a, const GemmConfig& b) {
              return a.name() < b.name();
            });
  return out;
}

// Convolution candidates applicable to the shape, in lexicographic name
// order. Tiled entries span the tile and vector axes; Winograd entries are
// emitted for the square tile sizes with a transform plan when the window
// and stride admit one.
inline std::vector<ConvAlgoParams> enumerate_conv_configs(
    const ParamSpace& space, const ConvShape& shape,
    std::vector<std::string>* rejected = nullptr) {
  std::vector<ConvAlgoParams> out;
  auto note = [&](const ConvAlgoParams& p, const std::string& reason) {
    if (rejected) rejected->push_back("[" + p.name() + "] " + reason);
  };

  for (ConvAlgo algo : space.algos) {
    switch (algo) {
      case ConvAlgo::Naive:
      case ConvAlgo::Im2col: {
        ConvAlgoParams p;
        p.algo = algo;
        out.push_back(p);
        break;
      }
      case ConvAlgo::Tiled: {
        for (std::size_t tr : space.tile_rows) {
          for (std::size_t tc : space.tile_cols) {
            for (std::size_t cv : space.channel_vectors) {
              for (std::size_t fv : space.feature_vectors) {
                ConvAlgoParams p;
                p.algo = algo;
                p.tile_rows = tr;
                p.tile_cols = tc;
                p.channel_vector = cv;
                p.feature_vector = fv;
                if (!valid_vector_width(cv) || !valid_vector_width(fv)) {
                  note(p, "vector constraint: widths must be in {1,2,4,8}");
                  continue;
                }
                if (tr == 0 || tc == 0) {
                  note(p, "tile constraint: tile dims must be >= 1");
                  continue;
                }
                if (shape.stride != 1 && shape.stride != 2) {
                  note(p, "stride constraint: tiled kernel handles strides 1 and 2");
                  continue;
                }
                out.push_back(p);
              }
            }
          }
        }
        break;
      }
      case ConvAlgo::Winograd: {
        for (std::size_t t : {std::size_t{2}, std::size_t{4}}) {
          ConvAlgoParams p;
          p.algo = algo;
          p.tile_rows = t;
          p.tile_cols = t;
          if (std::find(space.tile_rows.begin(), space.tile_rows.end(), t) ==
                  space.tile_rows.end() ||
              std::find(space.tile_cols.begin(), space.tile_cols.end(), t) ==
                  space.tile_cols.end()) {
            continue;
          }
          if (shape.stride != 1) {
            note(p, "stride constraint: fast convolution requires stride 1");
            continue;
          }
          if (shape.window_rows != 3 || shape.window_cols != 3) {
            note(p, "window constraint: no transform plan for " +
                        std::to_string(shape.window_rows) + "x" +
                        std::to_string(shape.window_cols) + " windows");
            continue;
          }
          out.push_back(p);
        }
        break;
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ConvAlgoParams& a, const ConvAlgoParams& b) {
              return a.name() < b.name();
            });
  return out;
}

// ---------------------------------------------------------------------------
// Benchmarking
// ---------------------------------------------------------------------------

// One benchmark outcome. These are the rows of the tuning DB.
struct TuningRecord {
  std::string problem;
  std::string config;
  std::string device;
  int samples = 0;
  std::int64_t median_ns = 0;
  std::int64_t min_ns = 0;
  std::int64_t mean_ns = 0;
  double gflops = 0.0;
  bool valid = true;

  bool operator==(const TuningRecord&) const = default;
};

struct BenchOptions {
  int warmup = 5;
  int samples = 20;
  std::uint64_t seed = 0;

  // Testing seams: time_one replaces the wall clock (it receives the kernel
  // invocation and returns elapsed nanoseconds); verify_override replaces
  // the oracle comparison.
  std::function<std::int64_t(const std::function<void()>&)> time_one;
  std::function<bool()> verify_override;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline void fill_random(std::vector<float>& data, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& v : data) v = dist(rng);
}

inline std::int64_t wall_time_one(const std::function<void()>& run) {
  const auto t0 = std::chrono::steady_clock::now();
  run();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
}

inline void check_bench_options(const BenchOptions& opts) {
  if (opts.samples < 3) {
    throw ContractError("benchmark_config: samples must be >= 3");
  }
  if (opts.warmup < 1) {
    throw ContractError("benchmark_config: warmup must be >= 1");
  }
}

// Median/min/mean of the recorded nanosecond samples; even-length median is
// the rounded-down midpoint of the two central values.
inline void summarize_times(std::vector<std::int64_t> times, TuningRecord& rec) {
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  rec.min_ns = times.front();
  rec.median_ns = n % 2 == 1 ? times[n / 2]
                             : (times[n / 2 - 1] + times[n / 2]) / 2;
  std::int64_t sum = 0;
  for (std::int64_t t : times) sum += t;
  rec.mean_ns = sum / static_cast<std::int64_t>(n);
}

inline GemmShape gemm_proxy_shape(const GemmShape& shape) {
  GemmShape proxy = shape;
  proxy.m = std::min<std::size_t>(proxy.m, 128);
  proxy.n = std::min<std::size_t>(proxy.n, 128);
  proxy.k = std::min<std::size_t>(proxy.k, 128);
  return proxy;
}

inline ConvShape conv_proxy_shape(const ConvShape& shape) {
  ConvShape proxy = shape;
  proxy.batch = std::min<std::size_t>(proxy.batch, 2);
  proxy.in_rows = std::max(proxy.window_rows,
                           std::min<std::size_t>(proxy.in_rows, 24));
  proxy.in_cols = std::max(proxy.window_cols,
                           std::min<std::size_t>(proxy.in_cols, 24));
  proxy.channels = std::min<std::size_t>(proxy.channels, 16);
  proxy.features = std::min<std::size_t>(proxy.features, 16);
  return proxy;
}

}  // namespace detail

// Benchmark one GEMM config: warmup runs unrecorded, then `samples` timed
// runs on inputs seeded from the problem key. The output is checked against
// gemm_naive once, on a proxy shape capped at 128 per dimension; a mismatch
// marks the record invalid rather than raising.
inline TuningRecord benchmark_config(const Problem& problem,
                                     const GemmConfig& cfg,
                                     const DeviceSpec& dev,
                                     const BenchOptions& opts = {}) {
  if (problem.kind != Problem::Kind::Gemm) {
    throw ContractError("benchmark_config: GEMM config given a non-GEMM problem");
  }
  detail::check_bench_options(opts);
  const GemmShape& shape = problem.gemm;
  const std::uint64_t seed = detail::fnv1a(problem.key()) ^ opts.seed;

  const std::size_t a_rows = shape.op_a == Op::Identity ? shape.m : shape.k;
  const std::size_t a_cols = shape.op_a == Op::Identity ? shape.k : shape.m;
  const std::size_t b_rows = shape.op_b == Op::Identity ? shape.k : shape.n;
  const std::size_t b_cols = shape.op_b == Op::Identity ? shape.n : shape.k;
  Matrix a(a_rows, a_cols), b(b_rows, b_cols), c(shape.m, shape.n);
  detail::fill_random(a.data, seed);
  detail::fill_random(b.data, seed + 1);
  detail::fill_random(c.data, seed + 2);

  TuningRecord rec;
  rec.problem = problem.key();
  rec.config = cfg.name();
  rec.device = dev.name;
  rec.samples = opts.samples;

  auto run = [&] { gemm_tiled(a, b, c, shape, cfg, dev); };
  std::function<std::int64_t(const std::function<void()>&)> time_one =
      opts.time_one ? opts.time_one : detail::wall_time_one;
  for (int i = 0; i < opts.warmup; ++i) run();
  std::vector<std::int64_t> times(static_cast<std::size_t>(opts.samples));
  for (auto& t : times) t = time_one(run);
  detail::summarize_times(std::move(times), rec);
  rec.gflops = static_cast<double>(problem.flops()) /
               static_cast<double>(rec.median_ns);

  if (opts.verify_override) {
    rec.valid = opts.verify_override();
  } else {
    const GemmShape proxy = detail::gemm_proxy_shape(shape);
    Matrix pa(shape.op_a == Op::Identity ? proxy.m : proxy.k,
              shape.op_a == Op::Identity ? proxy.k : proxy.m);
    Matrix pb(shape.op_b == Op::Identity ? proxy.k : proxy.n,
              shape.op_b == Op::Identity ? proxy.n : proxy.k);
    Matrix pc(proxy.m, proxy.n);
    detail::fill_random(pa.data, seed + 3);
    detail::fill_random(pb.data, seed + 4);
    detail::fill_random(pc.data, seed + 5);
    const Matrix want = gemm_naive(pa, pb, pc, proxy);
    const Matrix got = gemm_tiled(pa, pb, pc, proxy, cfg, dev);
    rec.valid = max_rel_error(got.data, want.data) <= 1e-4;
  }
  return rec;
}

// Benchmark one convolution algorithm. Oracle check runs conv2d_naive on a
// proxy shape with capped extents; tolerance depends on the algorithm.
inline TuningRecord benchmark_config(const Problem& problem,
                                     const ConvAlgoParams& params,
                                     const DeviceSpec& dev,
                                     const BenchOptions& opts = {}) {
  if (problem.kind != Problem::Kind::Conv) {
    throw ContractError("benchmark_config: conv params given a non-conv problem");
  }
  detail::check_bench_options(opts);
  const ConvShape& shape = problem.conv;
  const std::uint64_t seed = detail::fnv1a(problem.key()) ^ opts.seed;

  Tensor4 input(Tensor4Layout::InputNhwc, shape.batch, shape.in_rows,
                shape.in_cols, shape.channels);
  Tensor4 filter(Tensor4Layout::FilterHwck, shape.window_rows,
                 shape.window_cols, shape.channels, shape.features);
  detail::fill_random(input.data, seed);
  detail::fill_random(filter.data, seed + 1);

  TuningRecord rec;
  rec.problem = problem.key();
  rec.config = params.name();
  rec.device = dev.name;
  rec.samples = opts.samples;

  auto run = [&] { conv2d(input, filter, shape, params); };
  std::function<std::int64_t(const std::function<void()>&)> time_one =
      opts.time_one ? opts.time_one : detail::wall_time_one;
  for (int i = 0; i < opts.warmup; ++i) run();
  std::vector<std::int64_t> times(static_cast<std::size_t>(opts.samples));
  for (auto& t : times) t = time_one(run);
  detail::summarize_times(std::move(times), rec);
  rec.gflops = static_cast<double>(problem.flops()) /
               static_cast<double>(rec.median_ns);

  if (opts.verify_override) {
    rec.valid = opts.verify_override();
  } else {
    const ConvShape proxy = detail::conv_proxy_shape(shape);
    Tensor4 pin(Tensor4Layout::InputNhwc, proxy.batch, proxy.in_rows,
                proxy.in_cols, proxy.channels);
    Tensor4 pf(Tensor4Layout::FilterHwck, proxy.window_rows, proxy.window_cols,
               proxy.channels, proxy.features);
    detail::fill_random(pin.data, seed + 2);
    detail::fill_random(pf.data, seed + 3);
    const Tensor4 want = conv2d_naive(pin, pf, proxy);
    const Tensor4 got = conv2d(pin, pf, proxy, params);
    if (params.algo == ConvAlgo::Winograd) {
      rec.valid = max_scaled_error(got.data, want.data) <= 1e-3;
    } else {
      const double tol = params.algo == ConvAlgo::Im2col ? 1e-5 : 1e-4;
      rec.valid = max_rel_error(got.data, want.data) <= tol;
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Selection and tuning
// ---------------------------------------------------------------------------

namespace detail {

// Ranking keys recoverable from a config name alone, so that selection stays
// a pure function of a record set. Register estimate is h*w for GEMM names
// and tile area times the vector widths for tiled-conv names; the local
// memory rank orders _loc configs by their staged footprint per cache line.
struct SelectionRank {
  std::size_t registers = 1;
  std::size_t local_mem = 0;
};

inline SelectionRank selection_rank(const std::string& config_name) {
  SelectionRank rank;
  try {
    const GemmConfig cfg = parse_gemm_config(config_name);
    rank.registers = cfg.register_tile();
    if (cfg.use_local_memory) {
      rank.local_mem = (cfg.double_buffer ? 2 : 1) *
                       (cfg.reg_rows * cfg.wg_rows + cfg.reg_cols * cfg.wg_cols);
    }
    return rank;
  } catch (const ParseError&) {
  }
  try {
    const ConvAlgoParams p = parse_conv_params(config_name);
    rank.registers = p.tile_rows * p.tile_cols * p.channel_vector *
                     p.feature_vector;
    return rank;
  } catch (const ParseError&) {
  }
  return rank;
}

}  // namespace detail

// The winner of a record set: lowest median_ns among valid records, ties
// broken by fewer registers, then smaller local memory, then name. Pure
// function of the records, so a saved DB replays to the same choice.
inline std::optional<TuningRecord> select_best(
    const std::vector<TuningRecord>& records) {
  const TuningRecord* best = nullptr;
  detail::SelectionRank best_rank;
  for (const TuningRecord& rec : records) {
    if (!rec.valid) continue;
    const detail::SelectionRank rank = detail::selection_rank(rec.config);
    if (!best) {
      best = &rec;
      best_rank = rank;
      continue;
    }
    const auto lhs = std::make_tuple(rec.median_ns, rank.registers,
                                     rank.local_mem, rec.config);
    const auto rhs = std::make_tuple(best->median_ns, best_rank.registers,
                                     best_rank.local_mem, best->config);
    if (lhs < rhs) {
      best = &rec;
      best_rank = rank;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

struct TuneResult {
  TuningRecord best;
  std::vector<TuningRecord> records;
};

namespace detail {

inline TuneResult finish_tune(std::vector<TuningRecord> records) {
  const std::optional<TuningRecord> best = select_best(records);
  if (!best) {
    std::string detail;
    for (const TuningRecord& rec : records) {
      if (!detail.empty()) detail += "; ";
      detail += "[" + rec.config + "] oracle mismatch";
    }
    throw TuningError("tune: no config passed verification (" + detail + ")");
  }
  TuneResult result;
  result.best = *best;
  result.records = std::move(records);
  return result;
}

}  // namespace detail

// Benchmark an explicit GEMM candidate list and pick the winner.
inline TuneResult tune(const Problem& problem,
                       const std::vector<GemmConfig>& candidates,
                       const DeviceSpec& dev, const BenchOptions& opts = {}) {
  std::vector<TuningRecord> records;
  std::vector<std::string> rejected;
  for (const GemmConfig& cfg : candidates) {
    const ConfigVerdict verdict = validate_config(cfg, dev, problem.gemm);
    if (!verdict.ok) {
      rejected.push_back("[" + cfg.name() + "] " + verdict.summary());
      continue;
    }
    records.push_back(benchmark_config(problem, cfg, dev, opts));
  }
  if (records.empty()) {
    throw TuningError("tune: no feasible config for device \"" + dev.name +
                      "\"; " + detail::binding_constraint(rejected));
  }
  return detail::finish_tune(std::move(records));
}

// Enumerate the space for the problem, benchmark every candidate and pick
// the winner. All configs infeasible is a tuning error carrying the binding
// constraint; all configs failing verification is a tuning error listing the
// per-config outcomes.
inline TuneResult tune(const Problem& problem, const ParamSpace& space,
                       const DeviceSpec& dev, const BenchOptions& opts = {}) {
  std::vector<std::string> rejected;
  std::vector<TuningRecord> records;
  if (problem.kind == Problem::Kind::Gemm) {
    const std::vector<GemmConfig> configs =
        enumerate_gemm_configs(space, dev, problem.gemm, &rejected);
    if (configs.empty()) {
      throw TuningError("tune: empty GEMM config space for device \"" +
                        dev.name + "\"; " +
                        detail::binding_constraint(rejected));
    }
    for (const GemmConfig& cfg : configs) {
      records.push_back(benchmark_config(problem, cfg, dev, opts));
    }
  } else {
    const std::vector<ConvAlgoParams> configs =
        enumerate_conv_configs(space, problem.conv, &rejected);
    if (configs.empty()) {
      throw TuningError("tune: empty conv config space; " +
                        detail::binding_constraint(rejected));
    }
    for (const ConvAlgoParams& p : configs) {
      records.push_back(benchmark_config(problem, p, dev, opts));
    }
  }
  return detail::finish_tune(std::move(records));
}

// ---------------------------------------------------------------------------
// Tuning DB: newline-delimited JSON, one record per line
// ---------------------------------------------------------------------------

inline void save_db(const std::vector<TuningRecord>& records,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("save_db: cannot open " + path + " for writing");
  for (const TuningRecord& rec : records) {
    nlohmann::json j;
    j["problem"] = rec.problem;
    j["config"] = rec.config;
    j["device"] = rec.device;
    j["samples"] = rec.samples;
    j["median_ns"] = rec.median_ns;
    j["min_ns"] = rec.min_ns;
    j["mean_ns"] = rec.mean_ns;
    j["gflops"] = rec.gflops;
    j["valid"] = rec.valid;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("save_db: write to " + path + " failed");
}

// Loads a record-per-line DB. Blank lines are skipped; a malformed line is a
// parse error naming the line; a repeated (problem, config, device) key keeps
// the later record and warns on stderr.
inline std::vector<TuningRecord> load_db(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_db: cannot open " + path);
  std::vector<TuningRecord> records;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    TuningRecord rec;
    try {
      j = nlohmann::json::parse(line);
      rec.problem = j.at("problem").get<std::string>();
      rec.config = j.at("config").get<std::string>();
      rec.device = j.at("device").get<std::string>();
      rec.samples = j.at("samples").get<int>();
      rec.median_ns = j.at("median_ns").get<std::int64_t>();
      rec.min_ns = j.at("min_ns").get<std::int64_t>();
      rec.mean_ns = j.at("mean_ns").get<std::int64_t>();
      rec.gflops = j.at("gflops").get<double>();
      rec.valid = j.at("valid").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": malformed tuning record: " + e.what());
    }
    const auto key = std::make_tuple(rec.problem, rec.config, rec.device);
    const auto it = seen.find(key);
    if (it != seen.end()) {
      std::cerr << "load_db: " << path << ":" << lineno
                << ": duplicate record for (" << rec.problem << ", "
                << rec.config << ", " << rec.device
                << "); keeping the later one\n";
      records[it->second] = rec;
    } else {
      seen.emplace(key, records.size());
      records.push_back(rec);
    }
  }
  return records;
}

// Best stored record for a (problem, device) pair, if any.
inline std::optional<TuningRecord> lookup_best(
    const std::vector<TuningRecord>& records, const std::string& problem_key,
    const std::string& device_name) {
  std::vector<TuningRecord> matching;
  for (const TuningRecord& rec : records) {
    if (rec.problem == problem_key && rec.device == device_name) {
      matching.push_back(rec);
    }
  }
  return select_best(matching);
}

}  // namespace tilekit
