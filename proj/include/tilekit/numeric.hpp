#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tilekit/errors.hpp"

namespace tilekit {

// Relative error |a - b| / max(|ref|, floor) with an absolute floor so that
// near-zero reference values do not blow the ratio up.
inline double rel_error(float value, float reference, double floor = 1e-6) {
  double denom = std::fabs(static_cast<double>(reference));
  if (denom < floor) denom = floor;
  return std::fabs(static_cast<double>(value) - static_cast<double>(reference)) / denom;
}

inline double max_rel_error(const std::vector<float>& values,
                            const std::vector<float>& reference,
                            double floor = 1e-6) {
  if (values.size() != reference.size()) {
    throw ShapeError("max_rel_error: size mismatch between values and reference");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double e = rel_error(values[i], reference[i], floor);
    if (e > worst) worst = e;
  }
  return worst;
}

// Worst error normalized by the reference's largest magnitude. Transform
// kernels (Winograd) carry absolute error proportional to the data scale,
// not to each element's own magnitude, so elementwise relative error is
// meaningless wherever taps cancel to near zero; this is the metric their
// tolerance applies to.
inline double max_scaled_error(const std::vector<float>& values,
                               const std::vector<float>& reference,
                               double floor = 1e-6) {
  if (values.size() != reference.size()) {
    throw ShapeError("max_scaled_error: size mismatch between values and reference");
  }
  double scale = floor;
  for (float v : reference) {
    scale = std::max(scale, std::fabs(static_cast<double>(v)));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double diff = std::fabs(static_cast<double>(values[i]) -
                                  static_cast<double>(reference[i]));
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

}  // namespace tilekit
