#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vpr/placerec.hpp"

namespace vpr {

/// Minimal SVG charts with fixed-precision coordinates, so equal inputs
/// give byte-identical files.

struct NamedCurve {
  std::string label;
  PRCurve curve;
};

/// Precision (y) against recall (x) in the unit square, one polyline per curve.
std::string svg_pr_chart(const std::vector<NamedCurve>& curves, const std::string& title);

/// One bar per (label, value), values in [0,1].
std::string svg_bar_chart(const std::vector<std::pair<std::string, double>>& bars, const std::string& title);

}  // namespace vpr
