#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

#include "tilekit/errors.hpp"

namespace tilekit {

// Resource description of a target device. local_memory_bytes == 0 encodes a
// device with no dedicated local memory (such devices rely on their cache, so
// kernels must not request an explicit staging buffer on them).
struct DeviceSpec {
  std::string name;
  std::size_t cache_line_bytes = 64;
  std::size_t local_memory_bytes = 0;
  std::size_t compute_units = 1;
  std::size_t register_budget = 256;     // scalar registers per thread before spill
  std::size_t max_workgroup_size = 256;  // threads

  // Number of 4-byte elements that fit within one cache line (X).
  std::size_t elems_per_cache_line() const { return cache_line_bytes / 4; }

  void check() const {
    if (name.empty()) throw ParseError("device: name must be non-empty");
    if (cache_line_bytes == 0 ||
        (cache_line_bytes & (cache_line_bytes - 1)) != 0) {
      throw ParseError("device \"" + name +
                       "\": cache_line_bytes must be a power of two, got " +
                       std::to_string(cache_line_bytes));
    }
    if (compute_units == 0) {
      throw ParseError("device \"" + name + "\": compute_units must be positive");
    }
    if (register_budget == 0) {
      throw ParseError("device \"" + name + "\": register_budget must be positive");
    }
    if (max_workgroup_size == 0) {
      throw ParseError("device \"" + name +
                       "\": max_workgroup_size must be positive");
    }
  }
};

namespace detail {

inline std::size_t probe_cache_line_bytes() {
#if defined(_SC_LEVEL1_DCACHE_LINESIZE)
  long v = sysconf(_SC_LEVEL1_DCACHE_LINESIZE);
  if (v > 0 && (v & (v - 1)) == 0) return static_cast<std::size_t>(v);
#endif
  return 64;
}

inline std::size_t probe_l1d_bytes() {
#if defined(_SC_LEVEL1_DCACHE_SIZE)
  long v = sysconf(_SC_LEVEL1_DCACHE_SIZE);
  if (v > 0) return static_cast<std::size_t>(v);
#endif
  return 32768;
}

}  // namespace detail

// Describes the build machine. The cache line and L1 data cache size are
// probed from the OS when possible; the L1d size stands in for local memory
// since the staging buffer acts as a cache-blocking buffer on a CPU.
inline DeviceSpec host_device() {
  DeviceSpec dev;
  dev.name = "host-cpu";
  dev.cache_line_bytes = detail::probe_cache_line_bytes();
  dev.local_memory_bytes = detail::probe_l1d_bytes();
  unsigned hw = std::thread::hardware_concurrency();
  dev.compute_units = hw > 0 ? hw : 1;
  dev.register_budget = 256;
  dev.max_workgroup_size = 256;
  return dev;
}

// Known devices. Register budget and work-group limit use the model defaults
// (256 registers per thread before spill, 256 threads) since vendors do not
// publish a common figure; the host-cpu entry is probed at runtime.
inline std::vector<DeviceSpec> builtin_devices() {
  std::vector<DeviceSpec> devices = {
      {"Intel Core i7-6700K CPU", 64, 0, 8, 256, 256},
      {"Intel Core i7-6700K GPU", 64, 64 * 1024, 24, 256, 256},
      {"ARM Mali G71 GPU", 64, 0, 8, 256, 256},
      {"Renesas V3M", 128, 447 * 1024, 2, 256, 256},
      {"Renesas V3H", 128, 409 * 1024, 5, 256, 256},
      {"AMD R9 Nano", 128, 32 * 1024, 64, 256, 256},
  };
  devices.push_back(host_device());
  return devices;
}

// Finds a built-in device by name. Lookup ignores case and separator
// characters, and a unique substring is enough, so "amd-r9-nano" and
// "i7-6700K GPU" both resolve.
inline DeviceSpec find_device(const std::string& name) {
  auto canon = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == ' ' || c == '-' || c == '_') continue;
      out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    }
    return out;
  };
  const std::string want = canon(name);
  if (want.empty()) throw ParseError("empty device name");
  const std::vector<DeviceSpec> devices = builtin_devices();
  std::vector<const DeviceSpec*> matches;
  for (const DeviceSpec& dev : devices) {
    const std::string have = canon(dev.name);
    if (have == want) return dev;
    if (have.find(want) != std::string::npos) matches.push_back(&dev);
  }
  if (matches.size() == 1) return *matches.front();
  std::string known;
  for (const DeviceSpec& dev : devices) {
    if (!known.empty()) known += ", ";
    known += "\"" + dev.name + "\"";
  }
  if (matches.size() > 1) {
    throw ParseError("ambiguous device \"" + name + "\"; known devices: " + known);
  }
  throw ParseError("unknown device \"" + name + "\"; known devices: " + known);
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Loads a device spec from a TOML file of `key = value` pairs whose keys
// match the DeviceSpec field names. Strings are double-quoted; comments start
// with '#'. Only the flat subset of TOML needed for this schema is accepted.
inline DeviceSpec load_device_toml(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open device file \"" + path + "\"");

  DeviceSpec dev;
  bool saw_name = false, saw_cache = false, saw_local = false, saw_cu = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected `key = value`");
    }
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    std::size_t hash = value.find('#');
    if (hash != std::string::npos && value.find('"') == std::string::npos) {
      value = detail::trim(value.substr(0, hash));
    }
    auto as_uint = [&](const std::string& v) -> std::size_t {
      try {
        std::size_t consumed = 0;
        long long parsed = std::stoll(v, &consumed);
        if (consumed != v.size() || parsed < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(parsed);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": expected a non-negative integer for " + key +
                         ", got \"" + v + "\"");
      }
    };
    if (key == "name") {
      if (value.size() < 2 || value.front() != '"' || value.back() != '"') {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": name must be a double-quoted string");
      }
      dev.name = value.substr(1, value.size() - 2);
      saw_name = true;
    } else if (key == "cache_line_bytes") {
      dev.cache_line_bytes = as_uint(value);
      saw_cache = true;
    } else if (key == "local_memory_bytes") {
      dev.local_memory_bytes = as_uint(value);
      saw_local = true;
    } else if (key == "compute_units") {
      dev.compute_units = as_uint(value);
      saw_cu = true;
    } else if (key == "register_budget") {
      dev.register_budget = as_uint(value);
    } else if (key == "max_workgroup_size") {
      dev.max_workgroup_size = as_uint(value);
    } else {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": unknown key \"" + key + "\"");
    }
  }
  if (!saw_name || !saw_cache || !saw_local || !saw_cu) {
    throw ParseError(path + ": missing required key(s): need name, "
                     "cache_line_bytes, local_memory_bytes, compute_units");
  }
  dev.check();
  return dev;
}

}  // namespace tilekit
