#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace vpr::oracle {

Tensor3 oracle_conv(const Tensor3& input, const ConvKernelBank& bank, std::size_t stride, std::size_t pad) {
  if (input.channels() != bank.in_channels) throw ShapeError("oracle_conv: channel mismatch");
  const long k = static_cast<long>(bank.kernel_size);
  const long h = static_cast<long>(input.height()), w = static_cast<long>(input.width());
  const long p = static_cast<long>(pad), s = static_cast<long>(stride);
  long oh = 0, ow = 0;
  while ((oh * s) + k <= h + 2 * p) ++oh;
  while ((ow * s) + k <= w + 2 * p) ++ow;
  if (oh == 0 || ow == 0) throw ShapeError("oracle_conv: kernel larger than padded input");
  Tensor3 out(bank.out_channels, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow));
  for (std::size_t o = 0; o < bank.out_channels; ++o) {
    for (long y = 0; y < oh; ++y) {
      for (long x = 0; x < ow; ++x) {
        double sum = bank.biases[o];
        for (std::size_t i = 0; i < bank.in_channels; ++i) {
          for (long ky = 0; ky < k; ++ky) {
            for (long kx = 0; kx < k; ++kx) {
              const long iy = y * s + ky - p, ix = x * s + kx - p;
              if (iy < 0 || ix < 0 || iy >= h || ix >= w) continue;
              sum += static_cast<double>(bank.weight(o, i, static_cast<std::size_t>(ky), static_cast<std::size_t>(kx))) *
                     input.at(i, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(o, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = static_cast<float>(sum);
      }
    }
  }
  return out;
}

PRCurve oracle_pr(const ConfusionMatrix& m, const GroundTruth& gt) {
  PRCurve curve;
  std::set<double> thresholds;
  std::size_t positives = 0;
  for (std::size_t q = 0; q < m.queries(); ++q) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < m.references(); ++r) {
      if (m.at(q, r) < m.at(q, best)) best = r;
    }
    bool correct = false;
    if (q < gt.match.size() && gt.match[q]) {
      ++positives;
      const long diff = static_cast<long>(best) - static_cast<long>(*gt.match[q]);
      correct = static_cast<std::size_t>(diff < 0 ? -diff : diff) <= gt.tolerance_frames;
    }
    curve.best.push_back({best, static_cast<double>(m.at(q, best)), correct});
    thresholds.insert(static_cast<double>(m.at(q, best)));
  }
  for (double t : thresholds) {
    std::size_t tp = 0, retrieved = 0;
    for (const BestMatch& b : curve.best) {
      if (b.distance <= t) {
        ++retrieved;
        tp += b.correct ? 1 : 0;
      }
    }
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                            static_cast<double>(tp) / static_cast<double>(retrieved), t});
  }
  double area = 0;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const PRPoint& cur = curve.points[i];
    const PRPoint& prev = i == 0 ? PRPoint{0, cur.precision, 0} : curve.points[i - 1];
    area += (cur.recall - prev.recall) * (cur.precision + prev.precision) / 2.0;
  }
  curve.auc = area;
  return curve;
}

Descriptor oracle_msp(const Tensor3& maps, std::span<const std::size_t> scales) {
  Descriptor d;
  const std::size_t h = maps.height(), w = maps.width();
  auto cell_of = [](std::size_t pos, std::size_t extent, std::size_t s) {
    std::size_t cell = 0;
    for (std::size_t i = 0; i < s; ++i) {
      if (i * extent < (pos + 1) * s) cell = i;
    }
    return cell;
  };
  for (std::size_t c = 0; c < maps.channels(); ++c) {
    for (std::size_t s : scales) {
      std::vector<float> cells(s * s, -std::numeric_limits<float>::infinity());
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          float& slot = cells[cell_of(y, h, s) * s + cell_of(x, w, s)];
          slot = std::max(slot, maps.at(c, y, x));
        }
      }
      for (float v : cells) d.values.push_back(v == -std::numeric_limits<float>::infinity() ? 0.0f : v);
    }
  }
  return d;
}

std::vector<double> oracle_numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-12) return 0;
  return std::abs(analytic - numeric) / scale;
}

}  // namespace vpr::oracle
