#pragma once

#include <array>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tilekit/config.hpp"
#include "tilekit/device.hpp"
#include "tilekit/errors.hpp"

namespace tilekit {

// One row of a network layer table: square window and stride, dims written
// as HxWxC (input) and HxWxK (output).
struct LayerRow {
  std::string layer;
  std::size_t window = 0;
  std::size_t stride = 0;
  std::array<std::size_t, 3> input{};   // H, W, C
  std::array<std::size_t, 3> output{};  // H, W, K

  // Padding is inferred: Same when the output spatial dims equal the
  // stride-divided (rounded up) input dims, Valid otherwise.
  ConvShape to_shape(std::size_t batch = 1) const {
    ConvShape s;
    s.batch = batch;
    s.in_rows = input[0];
    s.in_cols = input[1];
    s.channels = input[2];
    s.features = output[2];
    s.window_rows = window;
    s.window_cols = window;
    s.stride = stride;
    const std::size_t same_r = (input[0] + stride - 1) / stride;
    const std::size_t same_c = (input[1] + stride - 1) / stride;
    s.padding = (output[0] == same_r && output[1] == same_c) ? Padding::Same
                                                             : Padding::Valid;
    return s;
  }
};

namespace detail {

inline std::size_t parse_count(const std::string& text, const std::string& where) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw ParseError(where + ": expected a positive integer, got \"" + text +
                     "\"");
  }
  if (pos != text.size() || v == 0) {
    throw ParseError(where + ": expected a positive integer, got \"" + text +
                     "\"");
  }
  return static_cast<std::size_t>(v);
}

inline std::array<std::size_t, 3> parse_dims(const std::string& text,
                                             const std::string& where) {
  std::array<std::size_t, 3> dims{};
  std::size_t start = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t x = text.find('x', start);
    const bool last = i == 2;
    if (!last && x == std::string::npos) {
      throw ParseError(where + ": expected HxWxC dims, got \"" + text + "\"");
    }
    const std::string part =
        last ? text.substr(start) : text.substr(start, x - start);
    if (part.find('x') != std::string::npos) {
      throw ParseError(where + ": expected HxWxC dims, got \"" + text + "\"");
    }
    dims[i] = parse_count(part, where);
    start = x + 1;
  }
  return dims;
}

}  // namespace detail

// Parse a layer table: CSV with header `Layer,Window,Stride,Input,Output`,
// `#` comment lines and blank lines skipped. Every row is checked for
// consistency: the stated output dims must be reproduced by the inferred
// ConvShape.
inline std::vector<LayerRow> load_layer_rows(std::istream& in,
                                             const std::string& origin) {
  static const char* kColumns[] = {"Layer", "Window", "Stride", "Input",
                                   "Output"};
  std::vector<LayerRow> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = detail::trim(line);
    if (text.empty() || text[0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(lineno);

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = text.find(',', start);
      fields.push_back(detail::trim(
          comma == std::string::npos ? text.substr(start)
                                     : text.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }

    if (!header_seen) {
      for (std::size_t i = 0; i < 5; ++i) {
        if (i >= fields.size() || fields[i] != kColumns[i]) {
          throw ParseError(where + ": missing column " +
                           std::string(kColumns[i]) + " in header");
        }
      }
      header_seen = true;
      continue;
    }

    if (fields.size() != 5) {
      throw ParseError(where + ": expected 5 columns, got " +
                       std::to_string(fields.size()));
    }
    LayerRow row;
    row.layer = fields[0];
    if (row.layer.empty()) {
      throw ParseError(where + ": column Layer is empty");
    }
    row.window = detail::parse_count(fields[1], where + ": column Window");
    row.stride = detail::parse_count(fields[2], where + ": column Stride");
    row.input = detail::parse_dims(fields[3], where + ": column Input");
    row.output = detail::parse_dims(fields[4], where + ": column Output");

    const ConvShape shape = row.to_shape();
    if (shape.out_rows() != row.output[0] || shape.out_cols() != row.output[1]) {
      throw ParseError(where + ": stated output " +
                       std::to_string(row.output[0]) + "x" +
                       std::to_string(row.output[1]) +
                       " matches neither same nor valid padding for a " +
                       std::to_string(row.window) + "x" +
                       std::to_string(row.window) + " window at stride " +
                       std::to_string(row.stride));
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) {
    throw ParseError(origin + ": missing column Layer in header");
  }
  return rows;
}

inline std::vector<LayerRow> load_layer_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_layer_rows: cannot open " + path);
  return load_layer_rows(in, path);
}

inline std::vector<ConvShape> load_layers(const std::string& path,
                                          std::size_t batch = 1) {
  std::vector<ConvShape> shapes;
  for (const LayerRow& row : load_layer_rows(path)) {
    shapes.push_back(row.to_shape(batch));
  }
  return shapes;
}

// Inverse of load_layer_rows over well-formed rows.
inline std::string serialize_layer_rows(const std::vector<LayerRow>& rows) {
  std::string out = "Layer,Window,Stride,Input,Output\n";
  for (const LayerRow& row : rows) {
    out += row.layer + "," + std::to_string(row.window) + "," +
           std::to_string(row.stride) + "," + std::to_string(row.input[0]) +
           "x" + std::to_string(row.input[1]) + "x" +
           std::to_string(row.input[2]) + "," + std::to_string(row.output[0]) +
           "x" + std::to_string(row.output[1]) + "x" +
           std::to_string(row.output[2]) + "\n";
  }
  return out;
}

}  // namespace tilekit
