#include <doctest.h>

#include <cmath>

#include "mmtomo/rng.hpp"
#include "mmtomo/validation.hpp"
#include "oracles.hpp"

using namespace mmt;
using namespace mmt::val;

namespace {

/// Synthetic urban-ish cloud: ground plane plus a few elevated blocks.
/// Positions are jittered off the raster lattice the way surveyed point
/// clouds are; exact lattices make pure translations ambiguous modulo one
/// lattice step.
std::vector<Point3> synthetic_cloud() {
  std::vector<Point3> pts;
  Rng rng(3);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      double z = 0.0;
      if (x >= 6 && x < 14 && y >= 8 && y < 16) z = 18.0;
      if (x >= 22 && x < 32 && y >= 20 && y < 30) z = 31.0;
      if (x >= 10 && x < 16 && y >= 26 && y < 34) z = 9.0;
      pts.push_back({x * 1.5 + rng.uniform(-0.5, 0.5),
                     y * 2.0 + rng.uniform(-0.5, 0.5),
                     z + rng.uniform(-0.05, 0.05)});
    }
  return pts;
}

std::vector<Point3> shifted(const std::vector<Point3>& pts, double dx, double dy,
                            double dz) {
  std::vector<Point3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p.x + dx, p.y + dy, p.z + dz});
  return out;
}

fusion::ObjectHeight estimate(int id, double h) {
  fusion::ObjectHeight e;
  e.object_id = id;
  e.height = h;
  e.sample_count = 10;
  return e;
}

}  // namespace

TEST_CASE("coregistering a cloud with itself gives the zero shift") {
  auto cloud = synthetic_cloud();
  Shift3 s = coregister(cloud, cloud);
  CHECK(std::abs(s.dx) < 1e-6);
  CHECK(std::abs(s.dy) < 1e-6);
  CHECK(std::abs(s.dz) < 1e-6);
}

TEST_CASE("coregistration recovers a synthetic rigid shift") {
  auto cloud = synthetic_cloud();
  auto reference = shifted(cloud, 3.0, -2.0, 1.0);
  Shift3 s = coregister(cloud, reference);
  CHECK(std::abs(s.dx - 3.0) < 0.1);
  CHECK(std::abs(s.dy + 2.0) < 0.1);
  CHECK(std::abs(s.dz - 1.0) < 0.1);

  // idempotence: after applying the shift, the residual shift is tiny
  auto aligned = shifted(cloud, s.dx, s.dy, s.dz);
  Shift3 again = coregister(aligned, reference);
  CHECK(std::abs(again.dx) < 0.05);
  CHECK(std::abs(again.dy) < 0.05);
  CHECK(std::abs(again.dz) < 0.05);
}

TEST_CASE("coregistration tolerates 10 percent outliers") {
  auto cloud = synthetic_cloud();
  auto reference = shifted(cloud, 3.0, -2.0, 1.0);
  Rng rng(7);
  auto contaminated = cloud;
  std::size_t n_out = cloud.size() / 10;
  for (std::size_t i = 0; i < n_out; ++i) {
    std::size_t idx = i * 10;
    contaminated[idx].z += rng.uniform(10.0, 40.0);
    contaminated[idx].x += rng.uniform(-20.0, 20.0);
  }
  Shift3 s = coregister(contaminated, reference);
  CHECK(std::abs(s.dx - 3.0) < 0.3);
  CHECK(std::abs(s.dy + 2.0) < 0.3);
  CHECK(std::abs(s.dz - 1.0) < 0.3);
}

TEST_CASE("coregistration input validation and failure") {
  std::vector<Point3> tiny(5, Point3{0, 0, 0});
  CHECK_THROWS_AS(coregister(tiny, tiny), Error);

  auto cloud = synthetic_cloud();
  auto far = shifted(cloud, 5000.0, 5000.0, 0.0);  // beyond any bounded search
  CHECK_THROWS_AS(coregister(cloud, far), Error);
}

TEST_CASE("compare_heights: identical estimates give a perfect report") {
  ReferenceModel ref;
  std::vector<fusion::ObjectHeight> est;
  for (int id = 1; id <= 8; ++id) {
    ref.object_heights[id] = 10.0 + id;
    est.push_back(estimate(id, 10.0 + id));
  }
  ComparisonReport report = compare_heights(est, ref, 15.0);
  CHECK(report.compared == 8);
  CHECK(report.retained == 8);
  CHECK(report.within_1m_fraction == doctest::Approx(1.0));
  CHECK(report.within_2m_fraction == doctest::Approx(1.0));
  CHECK(report.std_retained == doctest::Approx(0.0));
  int mass = 0;
  for (int c : report.histogram) mass += c;
  CHECK(mass == report.retained);
}

TEST_CASE("compare_heights: tiny hand-checked case") {
  ReferenceModel ref;
  ref.object_heights[1] = 10.0;
  ref.object_heights[2] = 10.0;
  ref.object_heights[3] = 10.0;
  std::vector<fusion::ObjectHeight> est{estimate(1, 10.5), estimate(2, 11.5),
                                        estimate(3, 30.0)};
  ComparisonReport report = compare_heights(est, ref, 15.0);
  CHECK(report.compared == 3);
  CHECK(report.within_1m_fraction == doctest::Approx(1.0 / 3.0));
  CHECK(report.within_2m_fraction == doctest::Approx(2.0 / 3.0));
  CHECK(report.retained == 2);
  CHECK(report.dropped == 1);
  // sample std of {0.5, 1.5}, cross-checked against the oracle helper
  CHECK(report.std_retained == doctest::Approx(0.7071067811865475).epsilon(1e-12));
  CHECK(report.std_retained ==
        doctest::Approx(oracles::sample_std({0.5, 1.5})).epsilon(1e-12));
  int mass = 0;
  for (int c : report.histogram) mass += c;
  CHECK(mass == 2);
}

TEST_CASE("compare_heights is invariant to common scaling with zero diffs") {
  ReferenceModel ref1, ref2;
  std::vector<fusion::ObjectHeight> est1, est2;
  for (int id = 1; id <= 5; ++id) {
    double h = 7.0 * id;
    ref1.object_heights[id] = h;
    ref2.object_heights[id] = 2.0 * h;
    est1.push_back(estimate(id, h));
    est2.push_back(estimate(id, 2.0 * h));
  }
  ComparisonReport a = compare_heights(est1, ref1, 15.0);
  ComparisonReport b = compare_heights(est2, ref2, 15.0);
  CHECK(a.within_1m_fraction == b.within_1m_fraction);
  CHECK(a.std_retained == b.std_retained);
  CHECK(a.histogram == b.histogram);
}

TEST_CASE("compare_heights rejects an empty join and counts no-estimates") {
  ReferenceModel ref;
  ref.object_heights[99] = 5.0;
  std::vector<fusion::ObjectHeight> est{estimate(1, 5.0)};
  CHECK_THROWS_AS(compare_heights(est, ref, 15.0), Error);

  ref.object_heights[1] = 5.0;
  fusion::ObjectHeight none;
  none.object_id = 99;
  none.estimated = false;
  est.push_back(none);
  ComparisonReport report = compare_heights(est, ref, 15.0);
  CHECK(report.compared == 1);
  CHECK(report.unestimated == 1);
}

TEST_CASE("report totals and fraction ranges hold on random data") {
  Rng rng(31);
  ReferenceModel ref;
  std::vector<fusion::ObjectHeight> est;
  for (int id = 1; id <= 60; ++id) {
    ref.object_heights[id] = rng.uniform(5.0, 50.0);
    est.push_back(estimate(id, ref.object_heights[id] + rng.uniform(-25.0, 25.0)));
  }
  ComparisonReport report = compare_heights(est, ref, 15.0);
  CHECK(report.retained + report.dropped == report.compared);
  CHECK(report.within_1m_fraction >= 0.0);
  CHECK(report.within_1m_fraction <= 1.0);
  CHECK(report.within_2m_fraction >= report.within_1m_fraction);
  int mass = 0;
  for (int c : report.histogram) mass += c;
  CHECK(mass == report.retained);
}

TEST_CASE("rasterize_reference fuses points per footprint") {
  Image<int> footprints(20, 20, 0);
  for (int y = 4; y < 10; ++y)
    for (int x = 4; x < 10; ++x) footprints.at(x, y) = 7;
  std::vector<Point3> points;
  for (int y = 4; y < 10; ++y)
    for (int x = 4; x < 10; ++x)
      points.push_back({x * 1.2 + 0.3, y * 3.3 + 0.4, 12.0});
  points.push_back({5 * 1.2, 5 * 3.3, 200.0});  // one outlier inside
  fusion::RobustLossSpec loss;
  loss.scale = 1.0;
  ReferenceModel model = rasterize_reference(points, footprints, 1.2, 3.3, loss);
  REQUIRE(model.object_heights.count(7) == 1);
  CHECK(model.object_heights[7] == doctest::Approx(12.0).epsilon(0.02));
}
