#include "vpr/placerec.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace vpr {

std::string_view metric_name(Metric m) noexcept {
  return m == Metric::kCosine ? "cosine" : "euclidean";
}

Metric parse_metric(std::string_view name) {
  if (name == "cosine") return Metric::kCosine;
  if (name == "euclidean") return Metric::kEuclidean;
  throw ArgumentError("unknown metric '" + std::string(name) + "' (expected cosine or euclidean)");
}

double distance(std::span<const float> a, std::span<const float> b, Metric metric) {
  if (a.size() != b.size()) {
    throw ShapeError("descriptor dims differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (metric == Metric::kEuclidean) {
    double sq = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - b[i];
      sq += d * d;
    }
    return std::sqrt(sq);
  }
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 1.0;
  // Clamp away rounding below zero so matrix entries stay non-negative.
  return std::max(0.0, 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb)));
}

double distance(const Descriptor& a, const Descriptor& b, Metric metric) {
  return distance(a.values, b.values, metric);
}

ConfusionMatrix::ConfusionMatrix(std::size_t queries, std::size_t references)
    : queries_(queries), references_(references), values_(queries * references, 0.0f) {}

ConfusionMatrix::ConfusionMatrix(std::size_t queries, std::size_t references, std::vector<float> values)
    : queries_(queries), references_(references), values_(std::move(values)) {
  if (values_.size() != queries * references) {
    throw ShapeError("confusion matrix data length " + std::to_string(values_.size()) + " does not match " +
                     std::to_string(queries) + "x" + std::to_string(references));
  }
}

ConfusionMatrix build_confusion(std::span<const Descriptor> queries, std::span<const Descriptor> references,
                                Metric metric) {
  if (queries.empty() || references.empty()) throw ArgumentError("cannot match an empty traverse");
  ConfusionMatrix m(queries.size(), references.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t r = 0; r < references.size(); ++r) {
      m.at(q, r) = static_cast<float>(distance(queries[q], references[r], metric));
    }
  }
  return m;
}

void write_confusion(std::ostream& out, const ConfusionMatrix& m) {
  char buf[32];
  for (std::size_t q = 0; q < m.queries(); ++q) {
    for (std::size_t r = 0; r < m.references(); ++r) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(m.at(q, r)));
      if (r) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

ConfusionMatrix read_confusion(std::istream& in) {
  std::vector<float> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::size_t n = 0;
    std::string token;
    while (ss >> token) {
      try {
        std::size_t used = 0;
        const float v = std::stof(token, &used);
        if (used != token.size() || !std::isfinite(v) || v < 0.0f) throw std::invalid_argument(token);
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("confusion matrix line " + std::to_string(line_no) + ": bad distance '" + token + "'");
      }
      ++n;
    }
    if (n == 0) continue;
    if (rows == 0) cols = n;
    if (n != cols) {
      throw ParseError("confusion matrix line " + std::to_string(line_no) + " has " + std::to_string(n) +
                       " entries, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("confusion matrix is empty");
  return ConfusionMatrix(rows, cols, std::move(values));
}

std::size_t GroundTruth::with_truth() const noexcept {
  return static_cast<std::size_t>(std::count_if(match.begin(), match.end(), [](const auto& m) { return m.has_value(); }));
}

bool GroundTruth::is_correct(std::size_t query, std::size_t reference) const noexcept {
  if (query >= match.size() || !match[query]) return false;
  const std::size_t truth = *match[query];
  const std::size_t gap = truth > reference ? truth - reference : reference - truth;
  return gap <= tolerance_frames;
}

GroundTruth identity_ground_truth(std::size_t queries, std::size_t tolerance) {
  GroundTruth gt;
  gt.tolerance_frames = tolerance;
  for (std::size_t q = 0; q < queries; ++q) gt.match.emplace_back(q);
  return gt;
}

std::vector<BestMatch> best_matches(const ConfusionMatrix& m, const GroundTruth& gt) {
  std::vector<BestMatch> best(m.queries());
  for (std::size_t q = 0; q < m.queries(); ++q) {
    const auto row = m.row(q);
    const std::size_t r = static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin());
    best[q] = {r, static_cast<double>(row[r]), gt.is_correct(q, r)};
  }
  return best;
}

PRCurve evaluate_pr(const ConfusionMatrix& m, const GroundTruth& gt) {
  if (m.queries() == 0 || m.references() == 0) throw ArgumentError("confusion matrix is empty");
  if (gt.match.size() > m.queries()) {
    throw ShapeError("ground truth covers " + std::to_string(gt.match.size()) + " queries, matrix has " +
                     std::to_string(m.queries()));
  }
  for (std::size_t q = 0; q < gt.match.size(); ++q) {
    if (gt.match[q] && *gt.match[q] >= m.references()) {
      throw ShapeError("ground truth for query " + std::to_string(q) + " names reference " +
                       std::to_string(*gt.match[q]) + " of " + std::to_string(m.references()));
    }
  }
  const std::size_t positives = gt.with_truth();
  if (positives == 0) throw ArgumentError("no query has a ground-truth match");

  PRCurve curve;
  curve.best = best_matches(m, gt);
  std::vector<std::size_t> order(m.queries());
  for (std::size_t q = 0; q < order.size(); ++q) order[q] = q;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return curve.best[a].distance < curve.best[b].distance; });

  // Walk queries by increasing best distance; emit a point after each group of equal distances.
  std::size_t tp = 0, retrieved = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const BestMatch& b = curve.best[order[i]];
    ++retrieved;
    if (b.correct) ++tp;
    const bool group_end = i + 1 == order.size() || curve.best[order[i + 1]].distance != b.distance;
    if (!group_end) continue;
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                            static_cast<double>(tp) / static_cast<double>(retrieved), b.distance});
  }
  curve.auc = auc(curve.points);
  return curve;
}

double auc(std::span<const PRPoint> points) {
  if (points.empty()) throw ArgumentError("auc of an empty curve");
  double area = 0;
  double prev_r = 0, prev_p = points.front().precision;
  for (const PRPoint& p : points) {
    if (p.recall < prev_r) throw ArgumentError("auc needs points sorted by recall");
    area += (p.recall - prev_r) * (p.precision + prev_p) / 2.0;
    prev_r = p.recall;
    prev_p = p.precision;
  }
  return area;
}

void write_pr_table(std::ostream& out, const PRCurve& curve) {
  char buf[64];
  out << "# recall precision\n";
  for (const PRPoint& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g\n", p.recall, p.precision);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "# auc = %.9g\n", curve.auc);
  out << buf;
}

}  // namespace vpr
