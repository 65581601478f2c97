// tilekit command-line driver: verify, tune, bench, roofline, layers.
//
// Exit codes: 0 success, 1 verification/tolerance failure, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tilekit/tilekit.hpp"

namespace {

using namespace tilekit;

constexpr int kExitOk = 0;
constexpr int kExitToleranceFailure = 1;
constexpr int kExitUsage = 2;

std::string default_db_path() {
  if (const char* env = std::getenv("TILEKIT_DB")) return env;
  return "tilekit_tune.ndjson";
}

// --device accepts a built-in name (or unique fragment) or a .toml file.
DeviceSpec resolve_device(const std::string& text) {
  if (text.size() > 5 && text.substr(text.size() - 5) == ".toml") {
    return load_device_toml(text);
  }
  return find_device(text);
}

struct GemmFlags {
  std::size_t m = 512, n = 512, k = 512;
  std::string op_a = "n", op_b = "n";
  float alpha = 1.0f, beta = 0.0f;

  GemmShape shape() const {
    GemmShape s;
    s.m = m;
    s.n = n;
    s.k = k;
    s.alpha = alpha;
    s.beta = beta;
    s.op_a = op_a == "t" ? Op::Transpose : Op::Identity;
    s.op_b = op_b == "t" ? Op::Transpose : Op::Identity;
    return s;
  }
};

struct ConvFlags {
  std::size_t batch = 1, height = 32, width = 32, channels = 16, features = 16;
  std::size_t window = 3, stride = 1;
  std::string padding = "same";

  ConvShape shape() const {
    ConvShape s;
    s.batch = batch;
    s.in_rows = height;
    s.in_cols = width;
    s.channels = channels;
    s.features = features;
    s.window_rows = window;
    s.window_cols = window;
    s.stride = stride;
    s.padding = padding == "valid" ? Padding::Valid : Padding::Same;
    return s;
  }
};

void add_gemm_flags(CLI::App* cmd, GemmFlags& g) {
  cmd->add_option("--m", g.m, "GEMM rows of C");
  cmd->add_option("--n", g.n, "GEMM cols of C");
  cmd->add_option("--k", g.k, "GEMM inner dimension");
  cmd->add_option("--op-a", g.op_a, "A operand op: n or t")
      ->check(CLI::IsMember({"n", "t"}));
  cmd->add_option("--op-b", g.op_b, "B operand op: n or t")
      ->check(CLI::IsMember({"n", "t"}));
  cmd->add_option("--alpha", g.alpha, "GEMM alpha");
  cmd->add_option("--beta", g.beta, "GEMM beta");
}

void add_conv_flags(CLI::App* cmd, ConvFlags& c) {
  cmd->add_option("--batch", c.batch, "batch size");
  cmd->add_option("--height", c.height, "input rows");
  cmd->add_option("--width", c.width, "input cols");
  cmd->add_option("--channels", c.channels, "input channels");
  cmd->add_option("--features", c.features, "output features");
  cmd->add_option("--window", c.window, "square window size");
  cmd->add_option("--stride", c.stride, "stride");
  cmd->add_option("--padding", c.padding, "padding: same or valid")
      ->check(CLI::IsMember({"same", "valid"}));
}

void print_record(const TuningRecord& rec) {
  std::printf("%-34s %-22s median %10lld ns  min %10lld ns  %8.3f Gflop/s  %s\n",
              rec.problem.c_str(), rec.config.c_str(),
              static_cast<long long>(rec.median_ns),
              static_cast<long long>(rec.min_ns), rec.gflops,
              rec.valid ? "ok" : "ORACLE MISMATCH");
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int run_verify(const std::string& op, std::size_t max_dim,
               const std::string& device, std::uint64_t seed) {
  const DeviceSpec dev = resolve_device(device);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  bool all_ok = true;

  if (op == "gemm" || op == "all") {
    std::vector<std::size_t> dims{16, 33, 64};
    if (max_dim > 64) dims.push_back(max_dim);
    while (!dims.empty() && dims.back() > max_dim) dims.pop_back();
    if (dims.empty()) dims.push_back(max_dim);

    double worst = 0.0;
    std::size_t cases = 0;
    for (const GemmConfig& cfg : stock_gemm_configs()) {
      if (!validate_config(cfg, dev, GemmShape{}).ok) continue;
      for (std::size_t d : dims) {
        for (Op oa : {Op::Identity, Op::Transpose}) {
          for (Op ob : {Op::Identity, Op::Transpose}) {
            for (auto [alpha, beta] : {std::pair{1.0f, 0.0f},
                                       std::pair{0.5f, -1.0f}}) {
              GemmShape s;
              s.m = d;
              s.n = d;
              s.k = d;
              s.alpha = alpha;
              s.beta = beta;
              s.op_a = oa;
              s.op_b = ob;
              Matrix a(oa == Op::Identity ? s.m : s.k,
                       oa == Op::Identity ? s.k : s.m);
              Matrix b(ob == Op::Identity ? s.k : s.n,
                       ob == Op::Identity ? s.n : s.k);
              Matrix c(s.m, s.n);
              for (auto& v : a.data) v = dist(rng);
              for (auto& v : b.data) v = dist(rng);
              for (auto& v : c.data) v = dist(rng);
              const Matrix want = gemm_naive(a, b, c, s);
              const Matrix got = gemm_tiled(a, b, c, s, cfg, dev);
              worst = std::max(worst, max_rel_error(got.data, want.data));
              ++cases;
            }
          }
        }
      }
    }
    const bool ok = worst <= 1e-4;
    std::printf("verify gemm:     %4zu cases  max rel err %.3e  tol 1e-4   %s\n",
                cases, worst, ok ? "PASS" : "FAIL");
    all_ok = all_ok && ok;
  }

  if (op == "conv" || op == "all") {
    struct AlgoSuite {
      ConvAlgoParams params;
      double tol;
      double worst = 0.0;
      std::size_t cases = 0;
    };
    std::vector<AlgoSuite> suites;
    {
      AlgoSuite tiled;
      tiled.params.algo = ConvAlgo::Tiled;
      tiled.params.tile_rows = 4;
      tiled.params.tile_cols = 5;
      tiled.params.channel_vector = 4;
      tiled.params.feature_vector = 2;
      tiled.tol = 1e-4;
      suites.push_back(tiled);
      AlgoSuite i2c;
      i2c.params.algo = ConvAlgo::Im2col;
      i2c.tol = 1e-5;
      suites.push_back(i2c);
      AlgoSuite wino;
      wino.params.algo = ConvAlgo::Winograd;
      wino.params.tile_rows = 2;
      wino.params.tile_cols = 2;
      wino.tol = 1e-3;
      suites.push_back(wino);
    }

    const std::size_t spatial[] = {4, 7, 9, 12};
    const std::size_t depths[] = {1, 3, 8};
    std::uniform_int_distribution<std::size_t> pick4(0, 3);
    std::uniform_int_distribution<std::size_t> pick3(0, 2);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < 36; ++i) {
      ConvShape s;
      s.in_rows = spatial[pick4(rng)];
      s.in_cols = spatial[pick4(rng)];
      s.channels = depths[pick3(rng)];
      s.features = depths[pick3(rng)];
      s.batch = 1 + coin(rng);
      s.window_rows = s.window_cols = coin(rng) ? 3 : 1;
      s.stride = 1 + coin(rng);
      s.padding = coin(rng) ? Padding::Same : Padding::Valid;
      if (s.out_rows() == 0 || s.out_cols() == 0) continue;

      Tensor4 input(Tensor4Layout::InputNhwc, s.batch, s.in_rows, s.in_cols,
                    s.channels);
      Tensor4 filter(Tensor4Layout::FilterHwck, s.window_rows, s.window_cols,
                     s.channels, s.features);
      for (auto& v : input.data) v = dist(rng);
      for (auto& v : filter.data) v = dist(rng);
      const Tensor4 want = conv2d_naive(input, filter, s);
      for (AlgoSuite& suite : suites) {
        if (suite.params.algo == ConvAlgo::Winograd &&
            (s.stride != 1 || s.window_rows != 3)) {
          continue;
        }
        const Tensor4 got = conv2d(input, filter, s, suite.params);
        // Winograd's tolerance is scale-normalized: its absolute error
        // tracks the data magnitude, not each element's own value.
        const double err = suite.params.algo == ConvAlgo::Winograd
                               ? max_scaled_error(got.data, want.data)
                               : max_rel_error(got.data, want.data);
        suite.worst = std::max(suite.worst, err);
        ++suite.cases;
      }
    }
    for (const AlgoSuite& suite : suites) {
      const bool ok = suite.worst <= suite.tol;
      const char* metric = suite.params.algo == ConvAlgo::Winograd
                               ? "max scaled err"
                               : "max rel err   ";
      std::printf("verify conv %-8s %4zu cases  %s %.3e  tol %.0e  %s\n",
                  conv_algo_name(suite.params.algo).c_str(), suite.cases,
                  metric, suite.worst, suite.tol, ok ? "PASS" : "FAIL");
      all_ok = all_ok && ok;
    }
  }

  return all_ok ? kExitOk : kExitToleranceFailure;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

int run_tune(const std::string& op, const GemmFlags& gemm_flags,
             const ConvFlags& conv_flags, const std::string& device,
             const std::string& db_path, const std::string& space_kind,
             const BenchOptions& opts) {
  const DeviceSpec dev = resolve_device(device);
  TuneResult result;
  if (op == "gemm") {
    const Problem problem = Problem::of(gemm_flags.shape());
    if (space_kind == "stock") {
      result = tune(problem, stock_gemm_configs(), dev, opts);
    } else {
      result = tune(problem, ParamSpace{}, dev, opts);
    }
  } else {
    const Problem problem = Problem::of(conv_flags.shape());
    result = tune(problem, ParamSpace{}, dev, opts);
  }

  std::vector<TuningRecord> db;
  {
    std::ifstream probe(db_path);
    if (probe.good()) db = load_db(db_path);
  }
  for (const TuningRecord& rec : result.records) {
    bool replaced = false;
    for (TuningRecord& old : db) {
      if (old.problem == rec.problem && old.config == rec.config &&
          old.device == rec.device) {
        old = rec;
        replaced = true;
        break;
      }
    }
    if (!replaced) db.push_back(rec);
  }
  save_db(db, db_path);

  for (const TuningRecord& rec : result.records) print_record(rec);
  std::printf("best: %s (%s, %.3f Gflop/s) -> %s\n", result.best.config.c_str(),
              result.best.problem.c_str(), result.best.gflops, db_path.c_str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int run_bench(const std::string& op, const GemmFlags& gemm_flags,
              const ConvFlags& conv_flags, const std::string& config,
              const std::string& device, const BenchOptions& opts) {
  const DeviceSpec dev = resolve_device(device);
  TuningRecord rec;
  if (op == "gemm") {
    rec = benchmark_config(Problem::of(gemm_flags.shape()),
                           parse_gemm_config(config), dev, opts);
  } else {
    rec = benchmark_config(Problem::of(conv_flags.shape()),
                           parse_conv_params(config), dev, opts);
  }
  print_record(rec);
  return rec.valid ? kExitOk : kExitToleranceFailure;
}

// ---------------------------------------------------------------------------
// roofline
// ---------------------------------------------------------------------------

int run_roofline(const GemmFlags& gemm_flags, std::vector<std::string> configs,
                 const std::string& device, std::size_t max_dim,
                 const std::string& format, const std::string& out_path,
                 const BenchOptions& opts) {
  const DeviceSpec dev = resolve_device(device);
  if (configs.empty()) configs.push_back("4x4_8x8_noloc");
  std::vector<GemmConfig> parsed;
  for (const std::string& c : configs) parsed.push_back(parse_gemm_config(c));

  std::vector<std::array<std::size_t, 3>> grid;
  for (const auto& dims : default_sweep_grid()) {
    if (dims[0] <= max_dim && dims[1] <= max_dim && dims[2] <= max_dim) {
      grid.push_back(dims);
    }
  }
  GemmShape tmpl = gemm_flags.shape();
  const std::vector<RooflinePoint> points = sweep(tmpl, grid, parsed, dev, opts);

  std::size_t failed = 0;
  for (const RooflinePoint& pt : points) {
    if (!pt.ok) {
      ++failed;
      std::fprintf(stderr, "roofline: point %s/%s failed: %s\n",
                   pt.problem.c_str(), pt.config.c_str(), pt.error.c_str());
    }
  }
  const ReportFormat fmt = parse_report_format(format);
  if (out_path.empty()) {
    std::fputs(render_report(points, fmt).c_str(), stdout);
  } else {
    emit_report(points, fmt, out_path);
    std::printf("wrote %zu points to %s (%zu failed)\n", points.size() - failed,
                out_path.c_str(), failed);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

int run_layers(const std::string& file, std::size_t batch,
               const std::vector<std::string>& algos, const std::string& device,
               const std::string& format, const std::string& out_path,
               const BenchOptions& opts) {
  const DeviceSpec dev = resolve_device(device);
  const std::vector<LayerRow> rows = load_layer_rows(file);

  struct LayerResult {
    std::string layer;
    std::string algo;
    TuningRecord rec;
  };
  std::vector<LayerResult> results;

  for (const LayerRow& row : rows) {
    const ConvShape shape = row.to_shape(batch);
    const Problem problem = Problem::of(shape);
    for (const std::string& name : algos) {
      ConvAlgoParams params;
      params.algo = parse_conv_algo(name);
      switch (params.algo) {
        case ConvAlgo::Tiled:
          params.tile_rows = 4;
          params.tile_cols = 5;
          params.channel_vector = 4;
          params.feature_vector = 2;
          break;
        case ConvAlgo::Winograd:
          params.tile_rows = 2;
          params.tile_cols = 2;
          if (shape.stride != 1 || shape.window_rows != 3 ||
              shape.window_cols != 3) {
            continue;  // no transform plan for this layer
          }
          break;
        default:
          break;
      }
      LayerResult r;
      r.layer = row.layer;
      r.algo = params.name();
      r.rec = benchmark_config(problem, params, dev, opts);
      results.push_back(std::move(r));
    }
  }

  std::string text;
  if (parse_report_format(format) == ReportFormat::Csv) {
    text = "layer,algo,problem,median_ns,gflops\n";
    char buf[64];
    for (const LayerResult& r : results) {
      std::snprintf(buf, sizeof buf, "%lld,%.9g",
                    static_cast<long long>(r.rec.median_ns), r.rec.gflops);
      text += r.layer + "," + r.algo + "," + r.rec.problem + "," + buf + "\n";
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const LayerResult& r : results) {
      nlohmann::json j;
      j["layer"] = r.layer;
      j["algo"] = r.algo;
      j["problem"] = r.rec.problem;
      j["median_ns"] = r.rec.median_ns;
      j["gflops"] = r.rec.gflops;
      arr.push_back(std::move(j));
    }
    text = arr.dump(2) + "\n";
  }
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("layers: cannot open " + out_path + " for writing");
    out << text;
    std::printf("wrote %zu rows to %s\n", results.size(), out_path.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tilekit: parametrized tiled GEMM and convolution kernels"};
  app.require_subcommand(1);

  GemmFlags gemm_flags;
  ConvFlags conv_flags;
  std::string op = "gemm";
  std::string device = "host-cpu";
  std::string config;
  std::string db_path = default_db_path();
  std::string file;
  std::string format = "csv";
  std::string out_path;
  std::string space_kind = "stock";
  std::vector<std::string> configs;
  std::vector<std::string> algos{"naive", "tiled", "im2col", "winograd"};
  std::size_t max_dim = 128;
  BenchOptions opts;
  opts.warmup = 1;
  opts.samples = 5;

  auto add_bench_flags = [&](CLI::App* cmd) {
    cmd->add_option("--device", device, "device name or spec .toml");
    cmd->add_option("--warmup", opts.warmup, "unrecorded warmup runs");
    cmd->add_option("--samples", opts.samples, "timed runs per config");
    cmd->add_option("--seed", opts.seed, "input-generation seed");
  };

  CLI::App* verify = app.add_subcommand(
      "verify", "check kernels against the naive oracles");
  verify->add_option("--op", op, "gemm, conv or all")
      ->check(CLI::IsMember({"gemm", "conv", "all"}));
  verify->add_option("--max-dim", max_dim, "largest GEMM dimension verified");
  verify->add_option("--device", device, "device name or spec .toml");
  verify->add_option("--seed", opts.seed, "input-generation seed");

  CLI::App* tune_cmd = app.add_subcommand(
      "tune", "benchmark the config space and record winners");
  tune_cmd->add_option("--op", op, "gemm or conv")
      ->check(CLI::IsMember({"gemm", "conv"}));
  add_gemm_flags(tune_cmd, gemm_flags);
  add_conv_flags(tune_cmd, conv_flags);
  tune_cmd->add_option("--db", db_path, "tuning DB path (NDJSON)");
  tune_cmd->add_option("--space", space_kind,
                       "gemm candidate set: stock (7 configs) or full grid")
      ->check(CLI::IsMember({"stock", "full"}));
  add_bench_flags(tune_cmd);

  CLI::App* bench = app.add_subcommand(
      "bench", "run one problem under one config");
  bench->add_option("--op", op, "gemm or conv")
      ->check(CLI::IsMember({"gemm", "conv"}));
  add_gemm_flags(bench, gemm_flags);
  add_conv_flags(bench, conv_flags);
  bench->add_option("--config", config,
                    "kernel config (GEMM grammar or conv algo name)")
      ->required();
  add_bench_flags(bench);

  CLI::App* roofline = app.add_subcommand(
      "roofline", "sweep the GEMM grid and report oi vs gflops");
  add_gemm_flags(roofline, gemm_flags);
  roofline->add_option("--configs", configs, "GEMM configs to sweep");
  roofline->add_option("--max-dim", max_dim,
                       "cap the sweep grid at this dimension");
  roofline->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  roofline->add_option("--out", out_path, "report path (default stdout)");
  add_bench_flags(roofline);

  CLI::App* layers = app.add_subcommand(
      "layers", "benchmark every layer of a network table");
  layers->add_option("--file", file, "layer table CSV")->required();
  layers->add_option("--batch", conv_flags.batch, "batch size");
  layers->add_option("--algos", algos, "algorithms to run")->delimiter(',');
  layers->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  layers->add_option("--out", out_path, "report path (default stdout)");
  add_bench_flags(layers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (verify->parsed()) {
      return run_verify(verify->count("--op") ? op : "all", max_dim, device,
                        opts.seed);
    }
    if (tune_cmd->parsed()) {
      return run_tune(op, gemm_flags, conv_flags, device, db_path, space_kind,
                      opts);
    }
    if (bench->parsed()) {
      return run_bench(op, gemm_flags, conv_flags, config, device, opts);
    }
    if (roofline->parsed()) {
      if (!roofline->count("--max-dim")) max_dim = 1024;
      return run_roofline(gemm_flags, configs, device, max_dim, format,
                          out_path, opts);
    }
    if (layers->parsed()) {
      return run_layers(file, conv_flags.batch, algos, device, format,
                        out_path, opts);
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const CapabilityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitToleranceFailure;
  }
  return kExitUsage;
}
