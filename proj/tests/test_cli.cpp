#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "tilekit/analysis.hpp"
#include "tilekit/tuner.hpp"

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

// Run the CLI under /bin/sh, capturing stdout; stderr passes through.
RunResult run_cli(const std::string& args, const std::string& env = "") {
  const char* bin = std::getenv("TILEKIT_BIN");
  REQUIRE(bin != nullptr);
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" +
                          std::string(bin) + "\" " + args;
  RunResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) result.out += buf;
  const int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name) : path("tilekit_cli_" + name) {}
  ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("verify passes on the host at desk scale") {
  const RunResult gemm = run_cli("verify --op gemm --max-dim 64 --seed 7");
  INFO(gemm.out);
  CHECK(gemm.code == 0);
  CHECK_THAT(gemm.out, Catch::Matchers::ContainsSubstring("verify gemm"));
  CHECK_THAT(gemm.out, Catch::Matchers::ContainsSubstring("PASS"));
  CHECK_THAT(gemm.out, !Catch::Matchers::ContainsSubstring("FAIL"));

  const RunResult conv = run_cli("verify --op conv --seed 11");
  INFO(conv.out);
  CHECK(conv.code == 0);
  CHECK_THAT(conv.out, Catch::Matchers::ContainsSubstring("verify conv tiled"));
  CHECK_THAT(conv.out, Catch::Matchers::ContainsSubstring("verify conv im2col"));
  CHECK_THAT(conv.out,
             Catch::Matchers::ContainsSubstring("verify conv winograd"));
  CHECK_THAT(conv.out, !Catch::Matchers::ContainsSubstring("FAIL"));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("verify --bogus-flag 2>/dev/null").code == 2);
  CHECK(run_cli("no-such-subcommand 2>/dev/null").code == 2);
  CHECK(run_cli("2>/dev/null").code == 2);
  CHECK(run_cli("bench --op gemm 2>/dev/null").code == 2);  // --config required
  CHECK(run_cli("verify --device no-such-device 2>/dev/null").code == 2);
  CHECK(run_cli("--help >/dev/null").code == 0);
}

TEST_CASE("bench runs one config and prints a record") {
  const RunResult r = run_cli(
      "bench --op gemm --m 48 --n 48 --k 48 --config 4x4_8x8_noloc "
      "--warmup 1 --samples 3");
  INFO(r.out);
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("gemm_nn_m48_n48_k48"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("4x4_8x8_noloc"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("ok"));

  CHECK(run_cli("bench --op gemm --config not_a_config 2>/dev/null").code == 2);

  // A local-memory config cannot run on a device with no local memory.
  const RunResult mali = run_cli(
      "bench --op gemm --m 32 --n 32 --k 32 --config 4x4_8x8_loc "
      "--device mali 2>/dev/null");
  CHECK(mali.code == 2);
}

TEST_CASE("bench covers convolution algorithms") {
  const RunResult r = run_cli(
      "bench --op conv --height 12 --width 12 --channels 4 --features 4 "
      "--config winograd_t2x2 --warmup 1 --samples 3");
  INFO(r.out);
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("winograd_t2x2"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("ok"));
}

TEST_CASE("tune writes and merges the database") {
  TempPath db("tune.ndjson");
  const std::string base =
      "tune --op gemm --m 48 --n 48 --k 48 --warmup 1 --samples 3 --db " +
      db.path;
  const RunResult first = run_cli(base);
  INFO(first.out);
  CHECK(first.code == 0);
  CHECK_THAT(first.out, Catch::Matchers::ContainsSubstring("best:"));

  const auto records = tilekit::load_db(db.path);
  CHECK(records.size() == 7);  // the stock candidate set on the host
  for (const auto& rec : records) {
    CHECK(rec.problem == "gemm_nn_m48_n48_k48");
    CHECK(rec.valid);
  }

  // Re-tuning the same problem replaces records instead of duplicating them.
  const RunResult second = run_cli(base);
  CHECK(second.code == 0);
  CHECK(tilekit::load_db(db.path).size() == 7);

  // A different problem appends.
  const RunResult third = run_cli(
      "tune --op gemm --m 32 --n 32 --k 32 --warmup 1 --samples 3 --db " +
      db.path);
  CHECK(third.code == 0);
  CHECK(tilekit::load_db(db.path).size() == 14);
}

TEST_CASE("tune honors the TILEKIT_DB environment variable") {
  TempPath db("tune_env.ndjson");
  const RunResult r = run_cli(
      "tune --op gemm --m 32 --n 32 --k 32 --warmup 1 --samples 3",
      "TILEKIT_DB=" + db.path);
  INFO(r.out);
  CHECK(r.code == 0);
  CHECK_FALSE(tilekit::load_db(db.path).empty());
}

TEST_CASE("tune explores the conv space") {
  TempPath db("tune_conv.ndjson");
  const RunResult r = run_cli(
      "tune --op conv --height 8 --width 8 --channels 4 --features 4 "
      "--warmup 1 --samples 3 --db " + db.path);
  INFO(r.out);
  CHECK(r.code == 0);
  const auto records = tilekit::load_db(db.path);
  // naive + im2col + 2 winograd + 5*5*4*4 tiled.
  CHECK(records.size() == 404);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("best:"));
}

TEST_CASE("roofline reports the swept grid") {
  TempPath out("roofline.csv");
  const RunResult r = run_cli(
      "roofline --max-dim 128 --beta 1 --configs 4x4_8x8_noloc "
      "--warmup 1 --samples 3 --out " + out.path);
  INFO(r.out);
  CHECK(r.code == 0);

  std::ifstream in(out.path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto points = tilekit::parse_report(text, tilekit::ReportFormat::Csv);
  REQUIRE(points.size() == 8);  // {64,128}^3
  for (const auto& pt : points) {
    CHECK(pt.oi > 0.0);
    CHECK(pt.gflops > 0.0);
  }

  // Without --out the report lands on stdout.
  const RunResult direct =
      run_cli("roofline --max-dim 64 --warmup 1 --samples 3");
  CHECK(direct.code == 0);
  CHECK_THAT(direct.out, Catch::Matchers::ContainsSubstring(
                             "problem,config,oi_flops_per_byte,gflops"));
}

TEST_CASE("layers benchmarks a table across algorithms") {
  TempPath table("layers.csv");
  {
    std::ofstream out(table.path);
    out << "Layer,Window,Stride,Input,Output\n"
        << "tiny_a,3,1,12x12x4,12x12x8\n"
        << "tiny_b,3,2,12x12x4,6x6x8\n"
        << "tiny_c,1,1,12x12x8,12x12x4\n";
  }
  const RunResult r = run_cli("layers --file " + table.path +
                              " --warmup 1 --samples 3");
  INFO(r.out);
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring(
                        "layer,algo,problem,median_ns,gflops"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("tiny_a,naive"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("tiny_a,winograd_t2x2"));
  // Winograd skips the strided and 1x1 layers.
  CHECK_THAT(r.out, !Catch::Matchers::ContainsSubstring("tiny_b,winograd"));
  CHECK_THAT(r.out, !Catch::Matchers::ContainsSubstring("tiny_c,winograd"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("tiny_b,tiled_t4x5_v4x2"));

  const RunResult filtered = run_cli(
      "layers --file " + table.path +
      " --algos naive,im2col --warmup 1 --samples 3 --format json");
  CHECK(filtered.code == 0);
  CHECK_THAT(filtered.out, Catch::Matchers::ContainsSubstring("\"algo\": \"naive\""));
  CHECK_THAT(filtered.out, !Catch::Matchers::ContainsSubstring("tiled"));

  CHECK(run_cli("layers --file no_such_table.csv 2>/dev/null").code == 2);
}

TEST_CASE("device specs load from TOML through the CLI") {
  TempPath toml("device.toml");
  {
    std::ofstream out(toml.path);
    out << "name = \"bench-target\"\n"
        << "cache_line_bytes = 64\n"
        << "local_memory_bytes = 32768\n"
        << "compute_units = 4\n";
  }
  const RunResult r = run_cli(
      "bench --op gemm --m 32 --n 32 --k 32 --config 4x4_8x8_loc "
      "--warmup 1 --samples 3 --device " + toml.path);
  INFO(r.out);
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("ok"));
}
