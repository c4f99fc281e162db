#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vpr/encoding.hpp"

namespace vpr {

enum class Metric { kCosine, kEuclidean };

std::string_view metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view name);  // throws ArgumentError

/// Cosine: 1 - a.b / (|a| |b|), or 1 when either norm is zero. Euclidean: |a - b|.
/// Accumulates in double.
double distance(std::span<const float> a, std::span<const float> b, Metric metric);
double distance(const Descriptor& a, const Descriptor& b, Metric metric);

/// Query-by-reference distance table. `at(q, r)` is query q's distance to
/// reference r, and `row(q)` holds all of query q's distances.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(std::size_t queries, std::size_t references);
  ConfusionMatrix(std::size_t queries, std::size_t references, std::vector<float> values);

  std::size_t queries() const noexcept { return queries_; }
  std::size_t references() const noexcept { return references_; }

  float& at(std::size_t q, std::size_t r) { return values_[q * references_ + r]; }
  float at(std::size_t q, std::size_t r) const { return values_[q * references_ + r]; }
  std::span<const float> row(std::size_t q) const {
    return std::span<const float>(values_).subspan(q * references_, references_);
  }
  std::span<const float> values() const noexcept { return values_; }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t queries_ = 0;
  std::size_t references_ = 0;
  std::vector<float> values_;
};

ConfusionMatrix build_confusion(std::span<const Descriptor> queries, std::span<const Descriptor> references,
                                Metric metric);

/// One text line per query, space-separated distances (%.9g).
void write_confusion(std::ostream& out, const ConfusionMatrix& m);
ConfusionMatrix read_confusion(std::istream& in);  // throws ParseError

struct GroundTruth {
  std::vector<std::optional<std::size_t>> match;  // per query; nullopt = no correct reference
  std::size_t tolerance_frames = 0;

  std::size_t with_truth() const noexcept;
  bool is_correct(std::size_t query, std::size_t reference) const noexcept;
};

/// Query i matches reference i for every query.
GroundTruth identity_ground_truth(std::size_t queries, std::size_t tolerance = 0);

struct PRPoint {
  double recall = 0;
  double precision = 0;
  double threshold = 0;

  bool operator==(const PRPoint&) const = default;
};

struct BestMatch {
  std::size_t reference = 0;
  double distance = 0;
  bool correct = false;

  bool operator==(const BestMatch&) const = default;
};

struct PRCurve {
  std::vector<PRPoint> points;  // increasing threshold, non-decreasing recall
  double auc = 0;
  std::vector<BestMatch> best;  // per query

  bool operator==(const PRCurve&) const = default;
};

/// Nearest reference per query, ties to the smallest index.
std::vector<BestMatch> best_matches(const ConfusionMatrix& m, const GroundTruth& gt);

/// Sweeps a threshold over the sorted distinct best-match distances; a query
/// is retrieved when its best distance is <= the threshold and is a true
/// positive when its best reference lies within tolerance of its truth.
/// Recall is over queries that have ground truth.
PRCurve evaluate_pr(const ConfusionMatrix& m, const GroundTruth& gt);

/// Trapezoid rule over recall, starting from an implicit (0, first precision).
double auc(std::span<const PRPoint> points);

/// Two columns "recall precision" and a trailing "# auc = <value>" line.
void write_pr_table(std::ostream& out, const PRCurve& curve);

}  // namespace vpr
