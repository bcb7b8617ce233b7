#include <doctest.h>

#include <cmath>

#include "mmtomo/geometry.hpp"
#include "mmtomo/rng.hpp"
#include "oracles.hpp"

using namespace mmt;
using geometry::Acquisition;
using geometry::AcquisitionGeometry;
using geometry::ElevationGrid;

namespace {

AcquisitionGeometry simple_geometry(double wavelength = 0.031,
                                    double slant_range = 600000.0) {
  return AcquisitionGeometry(wavelength, slant_range,
                             {{-200.0, -300.0},
                              {-100.0, -120.0},
                              {0.0, 60.0},
                              {100.0, 180.0},
                              {200.0, 300.0}});
}

}  // namespace

TEST_CASE("elevation wavenumber matches the closed form") {
  auto geom = simple_geometry();
  CHECK(geometry::elevation_wavenumber(geom, 0.0) == 0.0);
  // -4*pi*100 / (0.031 * 600000), evaluated in arbitrary precision.
  CHECK(geometry::elevation_wavenumber(geom, 100.0) ==
        doctest::Approx(-0.06756113233526437).epsilon(1e-14));
}

TEST_CASE("elevation wavenumber is linear in position") {
  auto geom = simple_geometry();
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    double b = rng.uniform(-1000.0, 1000.0);
    CHECK(geometry::elevation_wavenumber(geom, 2.0 * b) ==
          doctest::Approx(2.0 * geometry::elevation_wavenumber(geom, b))
              .epsilon(1e-14));
  }
}

TEST_CASE("geometry constructor rejects invalid input") {
  CHECK_THROWS_AS(AcquisitionGeometry(0.0, 1.0, {{0.0, 1.0}}), Error);
  CHECK_THROWS_AS(AcquisitionGeometry(0.031, -1.0, {{0.0, 1.0}}), Error);
  CHECK_THROWS_AS(AcquisitionGeometry(0.031, 600000.0, {}), Error);
  // all baselines identical -> rank-deficient by construction
  CHECK_THROWS_AS(
      AcquisitionGeometry(0.031, 600000.0, {{0.0, 100.0}, {50.0, 100.0}}), Error);
  // single acquisition is fine
  CHECK_NOTHROW(AcquisitionGeometry(0.031, 600000.0, {{0.0, 100.0}}));
}

TEST_CASE("elevation grid validates spacing") {
  CHECK_THROWS_AS(ElevationGrid({1.0, 0.5}), Error);
  CHECK_THROWS_AS(ElevationGrid({0.0, 1.0, 2.5}), Error);
  auto grid = ElevationGrid::regular(-5.0, 0.5, 41);
  CHECK(grid.size() == 41);
  CHECK(grid.spacing() == doctest::Approx(0.5));
  CHECK(grid.front() == doctest::Approx(-5.0));
  CHECK(grid.back() == doctest::Approx(15.0));
}

TEST_CASE("sensing matrix entries and small closed-form case") {
  // dk = {0, pi} over s = {0, 1}: rows [1, 1] and [1, -1].
  // dk = -4 pi db / (lambda r): db = -lambda r / 4 gives dk = pi.
  double wavelength = 0.031, slant_range = 600000.0;
  double db_pi = -wavelength * slant_range / 4.0;
  AcquisitionGeometry geom(wavelength, slant_range, {{0.0, 0.0}, {0.0, db_pi}});
  auto grid = ElevationGrid::regular(0.0, 1.0, 2);
  auto R = geometry::build_sensing_matrix(geom, grid);
  CHECK(R.rows() == 2);
  CHECK(R.cols() == 2);
  CHECK(R.entries()(0, 0).real() == doctest::Approx(1.0));
  CHECK(R.entries()(0, 1).real() == doctest::Approx(1.0));
  CHECK(R.entries()(1, 0).real() == doctest::Approx(1.0));
  CHECK(R.entries()(1, 1).real() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(R.entries()(1, 1).imag()) < 1e-12);
}

TEST_CASE("zero baseline gives an all-ones row") {
  // single acquisition with delta_b = 0: dk = 0, so R is a row of ones
  AcquisitionGeometry geom(0.031, 600000.0, {{25.0, 0.0}});
  auto grid = ElevationGrid::regular(-10.0, 2.0, 11);
  auto R = geometry::build_sensing_matrix(geom, grid);
  REQUIRE(R.rows() == 1);
  for (int c = 0; c < R.cols(); ++c) {
    CHECK(R.entries()(0, c).real() == 1.0);
    CHECK(R.entries()(0, c).imag() == 0.0);
  }
}

TEST_CASE("sensing matrix has unit-magnitude entries over random geometries") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Acquisition> acqs;
    int n = rng.uniform_int(2, 8);
    for (int i = 0; i < n; ++i)
      acqs.push_back({rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)});
    acqs[0].delta_b += 1.0;  // ensure not all identical
    AcquisitionGeometry geom(rng.uniform(0.01, 0.1), rng.uniform(5e5, 8e5), acqs);
    auto grid = ElevationGrid::regular(-20.0, 1.3, rng.uniform_int(4, 40));
    auto R = geometry::build_sensing_matrix(geom, grid);
    for (int r = 0; r < R.rows(); ++r)
      for (int c = 0; c < R.cols(); ++c)
        CHECK(std::abs(std::abs(R.entries()(r, c)) - 1.0) < 1e-12);
  }
}

TEST_CASE("gram matrix diagonal equals N with exactly real entries") {
  auto geom = simple_geometry();
  auto grid = ElevationGrid::regular(-30.0, 2.0, 40);
  auto R = geometry::build_sensing_matrix(geom, grid);
  Eigen::MatrixXcd gram = R.entries().adjoint() * R.entries();
  for (int c = 0; c < gram.cols(); ++c) {
    CHECK(gram(c, c).imag() == 0.0);
    CHECK(gram(c, c).real() == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("grid shift produces a per-row phase factor") {
  auto geom = simple_geometry();
  auto grid = ElevationGrid::regular(-10.0, 1.0, 21);
  const double shift = 7.25;
  std::vector<double> shifted(grid.samples());
  for (double& s : shifted) s += shift;
  auto R0 = geometry::build_sensing_matrix(geom, grid);
  auto R1 = geometry::build_sensing_matrix(geom, geometry::ElevationGrid(shifted));
  for (int r = 0; r < R0.rows(); ++r) {
    double dk = geometry::elevation_wavenumber(geom, geom.acquisitions()[r].delta_b);
    cplx factor = std::exp(cplx(0.0, -dk * shift));
    for (int c = 0; c < R0.cols(); ++c)
      CHECK(std::abs(R1.entries()(r, c) - factor * R0.entries()(r, c)) < 1e-12);
  }
}

TEST_CASE("sizing cap rejects oversized matrices") {
  auto geom = simple_geometry();
  auto grid = ElevationGrid::regular(0.0, 0.001, 1000);
  CHECK_THROWS_AS(geometry::build_sensing_matrix(geom, grid, 1000), Error);
}

TEST_CASE("rayleigh resolution") {
  // lambda=0.031, r=600000, span=200 -> 46.5 m
  AcquisitionGeometry geom(0.031, 600000.0, {{0.0, -100.0}, {0.0, 100.0}});
  CHECK(geometry::rayleigh_resolution(geom) == doctest::Approx(46.5).epsilon(1e-12));

  // doubling the span halves the result
  AcquisitionGeometry wide(0.031, 600000.0, {{0.0, -200.0}, {0.0, 200.0}});
  CHECK(geometry::rayleigh_resolution(wide) ==
        doctest::Approx(0.5 * geometry::rayleigh_resolution(geom)));

  // span depends only on the extremes
  AcquisitionGeometry five(0.031, 600000.0,
                           {{0.0, -100.0}, {1.0, -50.0}, {2.0, 0.0},
                            {3.0, 50.0}, {4.0, 100.0}});
  CHECK(geometry::rayleigh_resolution(five) ==
        doctest::Approx(geometry::rayleigh_resolution(geom)));

  CHECK_THROWS_AS(
      geometry::rayleigh_resolution(AcquisitionGeometry(0.031, 6e5, {{0.0, 5.0}})),
      Error);
}

TEST_CASE("geometry hash binds geometry and grid content") {
  auto geom = simple_geometry();
  auto grid = ElevationGrid::regular(-10.0, 1.0, 21);
  auto h0 = geometry::geometry_content_hash(geom, grid);
  CHECK(h0 == geometry::geometry_content_hash(geom, grid));
  auto grid2 = ElevationGrid::regular(-10.0, 1.0, 22);
  CHECK(h0 != geometry::geometry_content_hash(geom, grid2));
  auto geom2 = simple_geometry(0.032);
  CHECK(h0 != geometry::geometry_content_hash(geom2, grid));
}

TEST_CASE("steering vector matches matrix columns on grid nodes") {
  auto geom = simple_geometry();
  auto grid = ElevationGrid::regular(-10.0, 2.5, 9);
  auto R = geometry::build_sensing_matrix(geom, grid);
  for (int c = 0; c < grid.size(); ++c) {
    Eigen::VectorXcd r = R.steering(grid.sample(c));
    for (int n = 0; n < R.rows(); ++n)
      CHECK(std::abs(r(n) - R.entries()(n, c)) < 1e-12);
  }
}
