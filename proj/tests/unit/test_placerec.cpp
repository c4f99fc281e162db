#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "vpr/placerec.hpp"

using namespace vpr;

namespace {

ConfusionMatrix random_matrix(std::size_t q, std::size_t r, std::mt19937_64& rng) {
  std::vector<float> v(q * r);
  for (float& x : v) x = static_cast<float>(rng() % 64) / 16.0f;
  return ConfusionMatrix(q, r, std::move(v));
}

GroundTruth random_truth(std::size_t q, std::size_t r, std::mt19937_64& rng) {
  GroundTruth gt;
  for (std::size_t i = 0; i < q; ++i) {
    gt.match.push_back(rng() % 5 == 0 ? std::nullopt : std::optional<std::size_t>(rng() % r));
  }
  gt.match[0] = 0;
  return gt;
}

}  // namespace

TEST_CASE("distance") {
  const std::vector<float> a{1, 2, 3}, o1{1, 0, 0}, o2{0, 1, 0}, z{0, 0};
  CHECK(distance(a, a, Metric::kCosine) == doctest::Approx(0.0));
  CHECK(distance(o1, o2, Metric::kCosine) == 1.0);
  CHECK(distance(std::vector<float>{3, 4}, z, Metric::kEuclidean) == 5.0);
  CHECK(distance(std::vector<float>{3, 4}, z, Metric::kCosine) == 1.0);
  CHECK_THROWS_AS(distance(a, z, Metric::kCosine), ShapeError);
  CHECK(parse_metric("euclidean") == Metric::kEuclidean);
  CHECK(metric_name(Metric::kCosine) == "cosine");
  CHECK_THROWS_AS(parse_metric("manhattan"), ArgumentError);

  // On unit vectors cosine distance is half the squared euclidean distance.
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    auto x = test::random_vector(16, rng), y = test::random_vector(16, rng);
    std::vector<float> xn = x, yn = y;
    l2_normalize(xn);
    l2_normalize(yn);
    const double e = distance(xn, yn, Metric::kEuclidean);
    CHECK(distance(xn, yn, Metric::kCosine) == doctest::Approx(e * e / 2).epsilon(1e-6));
  }
}

TEST_CASE("build_confusion") {
  std::mt19937_64 rng(2);
  std::vector<Descriptor> q(2), r(3);
  for (auto& d : q) d.values = test::random_vector(8, rng);
  for (auto& d : r) d.values = test::random_vector(8, rng);
  const ConfusionMatrix m = build_confusion(q, r, Metric::kCosine);
  CHECK(m.queries() == 2);
  CHECK(m.references() == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(m.at(i, j) == static_cast<float>(distance(q[i], r[j], Metric::kCosine)));
    }
  }
  const ConfusionMatrix self = build_confusion(r, r, Metric::kCosine);
  for (std::size_t i = 0; i < 3; ++i) CHECK(self.at(i, i) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK_THROWS_AS(build_confusion({}, r, Metric::kCosine), ArgumentError);

  std::stringstream io;
  write_confusion(io, m);
  CHECK(read_confusion(io) == m);
  std::istringstream ragged("0.1 0.2\n0.3\n");
  CHECK_THROWS_AS(read_confusion(ragged), ParseError);
  std::istringstream negative("0.1 -0.2\n");
  CHECK_THROWS_AS(read_confusion(negative), ParseError);
}

TEST_CASE("evaluate_pr hand cases") {
  SUBCASE("perfect matcher") {
    ConfusionMatrix m(4, 4, std::vector<float>(16, 1.0f));
    for (std::size_t i = 0; i < 4; ++i) m.at(i, i) = 0.1f * static_cast<float>(i);
    const PRCurve c = evaluate_pr(m, identity_ground_truth(4));
    for (const auto& p : c.points) CHECK(p.precision == 1.0);
    CHECK(c.points.back().recall == 1.0);
    CHECK(c.auc == 1.0);
  }

  SUBCASE("every retrieval wrong") {
    const ConfusionMatrix m(2, 2, {0.1f, 0.9f, 0.9f, 0.2f});
    GroundTruth gt;
    gt.match = {1, 0};
    const PRCurve c = evaluate_pr(m, gt);
    CHECK(c.points.size() == 2);
    CHECK(c.auc == 0.0);
    CHECK(oracle::oracle_pr(m, gt).auc == 0.0);
  }

  SUBCASE("tolerance saturates") {
    std::mt19937_64 rng(3);
    const ConfusionMatrix m = random_matrix(6, 6, rng);
    GroundTruth gt = identity_ground_truth(6, 5);
    CHECK(evaluate_pr(m, gt).auc == 1.0);
  }

  SUBCASE("ties go to the smallest reference") {
    const ConfusionMatrix m(1, 3, {0.5f, 0.2f, 0.2f});
    GroundTruth gt;
    gt.match = {2};
    const PRCurve c = evaluate_pr(m, gt);
    CHECK(c.best[0].reference == 1);
    CHECK_FALSE(c.best[0].correct);
  }

  SUBCASE("queries without truth are retrieved but not counted in recall") {
    const ConfusionMatrix m(3, 3, {0.1f, 1, 1, 1, 0.2f, 1, 1, 1, 0.3f});
    GroundTruth gt;
    gt.match = {0, std::nullopt, 2};
    const PRCurve c = evaluate_pr(m, gt);
    REQUIRE(c.points.size() == 3);
    CHECK(c.points[1].precision == 0.5);
    CHECK(c.points[2].recall == 1.0);
    CHECK(c == oracle::oracle_pr(m, gt));
  }

  CHECK_THROWS_AS(evaluate_pr(ConfusionMatrix(1, 2, {0.1f, 0.2f}), GroundTruth{{std::nullopt}, 0}), ArgumentError);
  CHECK_THROWS_AS(evaluate_pr(ConfusionMatrix(1, 2, {0.1f, 0.2f}), GroundTruth{{5}, 0}), ShapeError);
}

TEST_CASE("auc") {
  CHECK(auc(std::vector<PRPoint>{{1, 1, 0}}) == 1.0);
  CHECK(auc(std::vector<PRPoint>{{0, 1, 0}, {1, 0, 1}}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<PRPoint>{}), ArgumentError);
  CHECK_THROWS_AS(auc(std::vector<PRPoint>{{0.5, 1, 0}, {0.2, 1, 1}}), ArgumentError);

  // Riemann refinement of the piecewise-linear curve.
  const std::vector<PRPoint> pts{{0.2, 1, 0}, {0.5, 0.6, 1}, {0.5, 0.4, 2}, {0.9, 0.7, 3}, {1.0, 0.5, 4}};
  const std::size_t steps = 1000000;
  double riemann = 0;
  auto precision_at = [&](double r) {
    PRPoint prev{0, pts[0].precision, 0};
    for (const auto& p : pts) {
      if (r <= p.recall && p.recall > prev.recall) {
        return prev.precision + (p.precision - prev.precision) * (r - prev.recall) / (p.recall - prev.recall);
      }
      prev = p;
    }
    return prev.precision;
  };
  for (std::size_t i = 0; i < steps; ++i) riemann += precision_at((i + 0.5) / steps) / steps;
  CHECK(std::abs(auc(pts) - riemann) <= 1e-9);
}

TEST_CASE("evaluate_pr properties") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const ConfusionMatrix m = random_matrix(20, 20, rng);
    GroundTruth gt = random_truth(20, 20, rng);
    const PRCurve c = evaluate_pr(m, gt);
    REQUIRE(c == oracle::oracle_pr(m, gt));
    CHECK(c.auc >= 0);
    CHECK(c.auc <= 1);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      CHECK(c.points[i].recall >= c.points[i - 1].recall);
      CHECK(c.points[i].threshold > c.points[i - 1].threshold);
    }

    // Affine changes of the distances keep the point set.
    std::vector<float> shifted(m.values().begin(), m.values().end());
    for (float& v : shifted) v = v * 2.0f + 3.0f;
    const PRCurve cs = evaluate_pr(ConfusionMatrix(20, 20, shifted), gt);
    REQUIRE(cs.points.size() == c.points.size());
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      CHECK(cs.points[i].recall == c.points[i].recall);
      CHECK(cs.points[i].precision == c.points[i].precision);
    }
    CHECK(cs.auc == c.auc);

    // Larger tolerance never hurts.
    double prev = c.auc;
    for (std::size_t tol = 1; tol <= 3; ++tol) {
      gt.tolerance_frames = tol;
      const double a = evaluate_pr(m, gt).auc;
      CHECK(a >= prev);
      prev = a;
    }
  }
}

TEST_CASE("PR table export") {
  const ConfusionMatrix m(2, 2, {0.1f, 0.9f, 0.9f, 0.2f});
  const PRCurve c = evaluate_pr(m, identity_ground_truth(2));
  std::ostringstream out;
  write_pr_table(out, c);
  const std::string s = out.str();
  CHECK(s.find("recall precision") != std::string::npos);
  CHECK(s.find("# auc = 1") != std::string::npos);
}
