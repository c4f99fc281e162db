#include "vpr/plot.hpp"

#include <algorithm>
#include <cstdio>

namespace vpr {
namespace {

constexpr double kWidth = 480, kHeight = 360;
constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double px(double v) { return kLeft + std::clamp(v, 0.0, 1.0) * (kWidth - kLeft - kRight); }
double py(double v) { return kHeight - kBottom - std::clamp(v, 0.0, 1.0) * (kHeight - kTop - kBottom); }

std::string frame(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::string s = fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                      "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\" font-size=\"12\">\n",
                      kWidth, kHeight, kWidth, kHeight);
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += fmt("<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">", kWidth / 2) + escape(title) +
       "</text>\n";
  s += fmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", px(0), py(0), px(1), py(0));
  s += fmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", px(0), py(0), px(0), py(1));
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    s += fmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n", px(0), py(v), px(1), py(v));
    s += fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.1f</text>\n", px(0) - 6, py(v) + 4, v);
  }
  s += fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", (px(0) + px(1)) / 2, kHeight - 12) +
       escape(xlabel) + "</text>\n";
  s += fmt("<text x=\"16\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">",
           (py(0) + py(1)) / 2, (py(0) + py(1)) / 2) +
       escape(ylabel) + "</text>\n";
  return s;
}

}  // namespace

std::string svg_pr_chart(const std::vector<NamedCurve>& curves, const std::string& title) {
  std::string s = frame(title, "recall", "precision");
  for (int i = 0; i <= 5; ++i) {
    s += fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.1f</text>\n", px(i / 5.0), py(0) + 16, i / 5.0);
  }
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& pts = curves[c].curve.points;
    const char* colour = kPalette[c % std::size(kPalette)];
    std::string poly;
    if (!pts.empty()) poly += fmt("%.2f,%.2f", px(0), py(pts.front().precision));
    for (const PRPoint& p : pts) poly += fmt(" %.2f,%.2f", px(p.recall), py(p.precision));
    s += std::string("<polyline fill=\"none\" stroke=\"") + colour + "\" stroke-width=\"2\" points=\"" + poly +
         "\"/>\n";
    const double ly = kTop + 8 + 16.0 * static_cast<double>(c);
    s += fmt("<rect x=\"%.1f\" y=\"%.1f\" width=\"12\" height=\"4\" ", px(0.6), ly - 4) + "fill=\"" + colour +
         "\"/>\n";
    s += fmt("<text x=\"%.1f\" y=\"%.1f\">", px(0.6) + 16, ly) + escape(curves[c].label) +
         fmt(" (auc %.3f)", curves[c].curve.auc) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string svg_bar_chart(const std::vector<std::pair<std::string, double>>& bars, const std::string& title) {
  std::string s = frame(title, "encoder", "AUC");
  const double slot = (px(1) - px(0)) / static_cast<double>(std::max<std::size_t>(bars.size(), 1));
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double x = px(0) + slot * static_cast<double>(i) + slot * 0.15;
    const double top = py(bars[i].second);
    s += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" ", x, top, slot * 0.7, py(0) - top) +
         "fill=\"" + kPalette[i % std::size(kPalette)] + "\"/>\n";
    s += fmt("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%.3f</text>\n", x + slot * 0.35, top - 4,
             bars[i].second);
    s += fmt("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">", x + slot * 0.35, py(0) + 16) +
         escape(bars[i].first) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace vpr
