#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "tilekit/device.hpp"
#include "tilekit/errors.hpp"

using namespace tilekit;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& contents)
      : path("tilekit_test_" + name) {
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("builtin devices cover the reference table plus the host") {
  const auto devices = builtin_devices();
  REQUIRE(devices.size() == 7);

  const DeviceSpec nano = find_device("AMD R9 Nano");
  CHECK(nano.cache_line_bytes == 128);
  CHECK(nano.local_memory_bytes == 32768);
  CHECK(nano.compute_units == 64);
  CHECK(nano.register_budget == 256);
  CHECK(nano.max_workgroup_size == 256);

  const DeviceSpec mali = find_device("ARM Mali G71 GPU");
  CHECK(mali.local_memory_bytes == 0);
  CHECK(mali.compute_units == 8);

  const DeviceSpec v3h = find_device("Renesas V3H");
  CHECK(v3h.cache_line_bytes == 128);
  CHECK(v3h.compute_units == 5);
  CHECK(v3h.local_memory_bytes == 409 * 1024);

  const DeviceSpec v3m = find_device("Renesas V3M");
  CHECK(v3m.local_memory_bytes == 447 * 1024);
  CHECK(v3m.compute_units == 2);

  const DeviceSpec cpu = find_device("Intel Core i7-6700K CPU");
  CHECK(cpu.cache_line_bytes == 64);
  CHECK(cpu.local_memory_bytes == 0);
  CHECK(cpu.compute_units == 8);

  const DeviceSpec gpu = find_device("Intel Core i7-6700K GPU");
  CHECK(gpu.local_memory_bytes == 64 * 1024);
  CHECK(gpu.compute_units == 24);
}

TEST_CASE("every builtin device satisfies its own invariants") {
  for (const DeviceSpec& dev : builtin_devices()) {
    CHECK_NOTHROW(dev.check());
    CHECK((dev.cache_line_bytes & (dev.cache_line_bytes - 1)) == 0);
  }
}

TEST_CASE("host device probes plausible values") {
  const DeviceSpec host = host_device();
  CHECK(host.name == "host-cpu");
  CHECK(host.cache_line_bytes >= 32);
  CHECK(host.compute_units >= 1);
}

TEST_CASE("find_device matches case-insensitive substrings") {
  CHECK(find_device("mali").name == "ARM Mali G71 GPU");
  CHECK(find_device("r9 nano").name == "AMD R9 Nano");
  CHECK(find_device("V3H").name == "Renesas V3H");
  CHECK(find_device("host-cpu").name == "host-cpu");
}

TEST_CASE("find_device reports ambiguity and unknown names") {
  CHECK_THROWS_MATCHES(find_device("renesas"), ParseError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("ambiguous")));
  CHECK_THROWS_MATCHES(find_device("not-a-device"), ParseError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("known devices")));
  CHECK_THROWS_AS(find_device("  "), ParseError);
}

TEST_CASE("device TOML files load with defaults applied") {
  TempFile file("device_ok.toml",
                "# embedded accelerator\n"
                "name = \"toy-dsp\"\n"
                "cache_line_bytes = 128\n"
                "local_memory_bytes = 65536  # 64 KiB\n"
                "compute_units = 4\n");
  const DeviceSpec dev = load_device_toml(file.path);
  CHECK(dev.name == "toy-dsp");
  CHECK(dev.cache_line_bytes == 128);
  CHECK(dev.local_memory_bytes == 65536);
  CHECK(dev.compute_units == 4);
  CHECK(dev.register_budget == 256);
  CHECK(dev.max_workgroup_size == 256);
}

TEST_CASE("device TOML files can override the budget defaults") {
  TempFile file("device_budget.toml",
                "name = \"tight\"\n"
                "cache_line_bytes = 64\n"
                "local_memory_bytes = 0\n"
                "compute_units = 1\n"
                "register_budget = 32\n"
                "max_workgroup_size = 64\n");
  const DeviceSpec dev = load_device_toml(file.path);
  CHECK(dev.register_budget == 32);
  CHECK(dev.max_workgroup_size == 64);
}

TEST_CASE("device TOML errors carry the line number") {
  TempFile file("device_bad.toml",
                "name = \"broken\"\n"
                "cache_line_bytes = maybe\n");
  CHECK_THROWS_MATCHES(load_device_toml(file.path), ParseError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring(":2:")));
}

TEST_CASE("device TOML requires the core keys") {
  TempFile file("device_missing.toml",
                "name = \"partial\"\n"
                "cache_line_bytes = 64\n");
  CHECK_THROWS_MATCHES(
      load_device_toml(file.path), ParseError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("missing required key")));
  CHECK_THROWS_AS(load_device_toml("no_such_file.toml"), IoError);
}

TEST_CASE("device check rejects non-power-of-two cache lines") {
  DeviceSpec dev;
  dev.name = "odd";
  dev.cache_line_bytes = 96;
  CHECK_THROWS_AS(dev.check(), ParseError);
}
