#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tilekit/config.hpp"
#include "tilekit/conv.hpp"
#include "tilekit/device.hpp"
#include "tilekit/errors.hpp"
#include "tilekit/tuner.hpp"

namespace tilekit {

// ---------------------------------------------------------------------------
// Operational intensity
// ---------------------------------------------------------------------------

// Flops per byte of compulsory traffic for a GEMM: A and B are read once,
// C is written once and also read once when beta != 0.
inline double gemm_oi(const GemmShape& shape) {
  const double flops = 2.0 * static_cast<double>(shape.m) *
                       static_cast<double>(shape.n) *
                       static_cast<double>(shape.k);
  const double c_passes = shape.beta != 0.0f ? 2.0 : 1.0;
  const double bytes =
      4.0 * (static_cast<double>(shape.m) * static_cast<double>(shape.k) +
             static_cast<double>(shape.k) * static_cast<double>(shape.n) +
             static_cast<double>(shape.m) * static_cast<double>(shape.n) *
                 c_passes);
  return flops / bytes;
}

// Same compulsory-traffic model for a convolution: input, filter and output
// elements each counted once.
inline double conv_oi(const ConvShape& shape) {
  const double input = static_cast<double>(shape.batch) * shape.in_rows *
                       shape.in_cols * shape.channels;
  const double filter = static_cast<double>(shape.window_rows) *
                        shape.window_cols * shape.channels * shape.features;
  const double output = static_cast<double>(shape.batch) * shape.out_rows() *
                        shape.out_cols() * shape.features;
  return static_cast<double>(conv_flops(shape)) / (4.0 * (input + filter + output));
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct RooflinePoint {
  std::string problem;
  std::string config;
  double oi = 0.0;
  double gflops = 0.0;
  bool ok = true;        // false when the benchmark for this point failed
  std::string error;     // failure reason when !ok
};

// The power-of-2 measurement grid: every (m, n, k) with each dimension in
// {64, 128, 256, 512, 1024}, 125 points.
inline std::vector<std::array<std::size_t, 3>> default_sweep_grid() {
  static const std::size_t dims[] = {64, 128, 256, 512, 1024};
  std::vector<std::array<std::size_t, 3>> grid;
  grid.reserve(125);
  for (std::size_t m : dims) {
    for (std::size_t n : dims) {
      for (std::size_t k : dims) {
        grid.push_back({m, n, k});
      }
    }
  }
  return grid;
}

// Benchmark every (size, config) pair and pair the measured gflops with the
// model operational intensity. A failure at one point flags that point and
// the sweep continues.
inline std::vector<RooflinePoint> sweep(
    const GemmShape& tmpl, const std::vector<std::array<std::size_t, 3>>& sizes,
    const std::vector<GemmConfig>& configs, const DeviceSpec& dev,
    const BenchOptions& opts = {}) {
  if (sizes.empty()) throw ContractError("sweep: empty size list");
  std::vector<RooflinePoint> points;
  points.reserve(sizes.size() * configs.size());
  for (const auto& dims : sizes) {
    GemmShape shape = tmpl;
    shape.m = dims[0];
    shape.n = dims[1];
    shape.k = dims[2];
    for (const GemmConfig& cfg : configs) {
      RooflinePoint pt;
      pt.problem = shape.key();
      pt.config = cfg.name();
      pt.oi = gemm_oi(shape);
      try {
        const TuningRecord rec =
            benchmark_config(Problem::of(shape), cfg, dev, opts);
        pt.gflops = rec.gflops;
        if (!rec.valid) {
          pt.ok = false;
          pt.error = "oracle mismatch";
        }
      } catch (const std::exception& e) {
        pt.ok = false;
        pt.error = e.what();
      }
      points.push_back(std::move(pt));
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class ReportFormat { Csv, Json };

inline ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  throw ParseError("unknown report format \"" + text + "\" (csv or json)");
}

namespace detail {

inline std::string format_sig(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::vector<RooflinePoint> sorted_ok_points(
    std::vector<RooflinePoint> points) {
  points.erase(std::remove_if(points.begin(), points.end(),
                              [](const RooflinePoint& p) { return !p.ok; }),
               points.end());
  std::stable_sort(points.begin(), points.end(),
                   [](const RooflinePoint& a, const RooflinePoint& b) {
                     return std::tie(a.problem, a.config) <
                            std::tie(b.problem, b.config);
                   });
  return points;
}

}  // namespace detail

// Render the report to text: CSV with the fixed header, or a JSON array of
// point objects. Failed points are omitted; rows are sorted by problem key
// then config so output is byte-stable.
inline std::string render_report(const std::vector<RooflinePoint>& points,
                                 ReportFormat format) {
  const std::vector<RooflinePoint> rows = detail::sorted_ok_points(points);
  if (format == ReportFormat::Csv) {
    std::string out = "problem,config,oi_flops_per_byte,gflops\n";
    for (const RooflinePoint& p : rows) {
      out += p.problem + "," + p.config + "," + detail::format_sig(p.oi) +
             "," + detail::format_sig(p.gflops) + "\n";
    }
    return out;
  }
  nlohmann::json arr = nlohmann::json::array();
  for (const RooflinePoint& p : rows) {
    nlohmann::json j;
    j["problem"] = p.problem;
    j["config"] = p.config;
    j["oi_flops_per_byte"] = p.oi;
    j["gflops"] = p.gflops;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

inline void emit_report(const std::vector<RooflinePoint>& points,
                        ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("emit_report: cannot open " + path + " for writing");
  out << render_report(points, format);
  if (!out) throw IoError("emit_report: write to " + path + " failed");
}

// Parse a report back into points (all marked ok). The inverse of
// render_report up to float formatting.
inline std::vector<RooflinePoint> parse_report(const std::string& text,
                                               ReportFormat format) {
  std::vector<RooflinePoint> points;
  if (format == ReportFormat::Csv) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (lineno == 1) {
        if (line != "problem,config,oi_flops_per_byte,gflops") {
          throw ParseError("report line 1: unexpected CSV header \"" + line +
                           "\"");
        }
        continue;
      }
      std::array<std::string, 4> fields;
      std::size_t start = 0;
      for (std::size_t f = 0; f < 4; ++f) {
        const std::size_t comma = line.find(',', start);
        const bool last = f == 3;
        if (!last && comma == std::string::npos) {
          throw ParseError("report line " + std::to_string(lineno) +
                           ": expected 4 comma-separated fields");
        }
        fields[f] = last ? line.substr(start) : line.substr(start, comma - start);
        start = comma + 1;
      }
      if (fields[3].find(',') != std::string::npos) {
        throw ParseError("report line " + std::to_string(lineno) +
                         ": expected 4 comma-separated fields");
      }
      RooflinePoint p;
      p.problem = fields[0];
      p.config = fields[1];
      try {
        p.oi = std::stod(fields[2]);
        p.gflops = std::stod(fields[3]);
      } catch (const std::exception&) {
        throw ParseError("report line " + std::to_string(lineno) +
                         ": malformed number");
      }
      points.push_back(std::move(p));
    }
    return points;
  }
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
  if (!arr.is_array()) throw ParseError("report JSON: expected an array");
  for (const nlohmann::json& j : arr) {
    RooflinePoint p;
    try {
      p.problem = j.at("problem").get<std::string>();
      p.config = j.at("config").get<std::string>();
      p.oi = j.at("oi_flops_per_byte").get<double>();
      p.gflops = j.at("gflops").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("report JSON: ") + e.what());
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace tilekit
