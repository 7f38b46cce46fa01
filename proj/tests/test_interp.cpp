#include <doctest.h>

#include <cmath>

#include "spatmht/errors.hpp"
#include "spatmht/interp.hpp"
#include "spatmht/rng.hpp"

using namespace spatmht;

namespace {

Eigen::MatrixXd random_coords(int n, double lo, double hi, Rng& rng) {
  Eigen::MatrixXd c(n, 2);
  for (int i = 0; i < n; ++i) {
    c(i, 0) = lo + (hi - lo) * rng.uniform();
    c(i, 1) = lo + (hi - lo) * rng.uniform();
  }
  return c;
}

}  // namespace

TEST_CASE("constant values give a constant interpolant") {
  Rng rng(1);
  const auto coords = random_coords(12, 0.0, 10.0, rng);
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(12, 0.4);
  const auto model = tps_fit(coords, v);
  CHECK(model.alpha.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(model.a0 == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(std::abs(model.ax) < 1e-10);
  CHECK(std::abs(model.ay) < 1e-10);
  CHECK(tps_eval(model, 3.7, 8.1) == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("affine values are reproduced exactly") {
  Rng rng(2);
  const auto coords = random_coords(20, -5.0, 5.0, rng);
  Eigen::VectorXd v(20);
  for (int i = 0; i < 20; ++i) v(i) = 0.2 + 0.1 * coords(i, 0);
  const auto model = tps_fit(coords, v);
  CHECK(model.alpha.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(model.a0 == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(model.ax == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(std::abs(model.ay) < 1e-8);
  for (int trial = 0; trial < 10; ++trial) {
    const double x = -10.0 + 20.0 * rng.uniform(), y = -10.0 + 20.0 * rng.uniform();
    CHECK(tps_eval(model, x, y) == doctest::Approx(0.2 + 0.1 * x).epsilon(1e-8));
  }
}

TEST_CASE("interpolation is exact at every center") {
  Rng rng(3);
  const auto coords = random_coords(40, 0.0, 30.0, rng);
  Eigen::VectorXd v(40);
  for (int i = 0; i < 40; ++i) v(i) = rng.uniform();
  const auto model = tps_fit(coords, v);
  for (int i = 0; i < 40; ++i) {
    CHECK(std::abs(tps_eval(model, coords(i, 0), coords(i, 1)) - v(i)) < 1e-8);
  }
}

TEST_CASE("rbf weights are orthogonal to the affine space") {
  Rng rng(4);
  const auto coords = random_coords(25, 0.0, 12.0, rng);
  Eigen::VectorXd v(25);
  for (int i = 0; i < 25; ++i) v(i) = rng.uniform();
  const auto model = tps_fit(coords, v);
  double s0 = 0.0, sx = 0.0, sy = 0.0;
  for (int i = 0; i < 25; ++i) {
    s0 += model.alpha(i);
    sx += model.alpha(i) * coords(i, 0);
    sy += model.alpha(i) * coords(i, 1);
  }
  CHECK(std::abs(s0) < 1e-8);
  CHECK(std::abs(sx) < 1e-8);
  CHECK(std::abs(sy) < 1e-8);
}

TEST_CASE("translation invariance") {
  Rng rng(5);
  const auto coords = random_coords(18, 0.0, 9.0, rng);
  Eigen::VectorXd v(18);
  for (int i = 0; i < 18; ++i) v(i) = rng.uniform();
  const auto m1 = tps_fit(coords, v);
  Eigen::MatrixXd shifted = coords;
  shifted.col(0).array() += 113.0;
  shifted.col(1).array() -= 57.0;
  const auto m2 = tps_fit(shifted, v);
  for (int trial = 0; trial < 12; ++trial) {
    const double x = 9.0 * rng.uniform(), y = 9.0 * rng.uniform();
    CHECK(tps_eval(m1, x, y) ==
          doctest::Approx(tps_eval(m2, x + 113.0, y - 57.0)).epsilon(1e-7));
  }
}

TEST_CASE("the radial basis vanishes at r = 0 and r = 1") {
  CHECK(tps_basis(0.0) == 0.0);
  CHECK(tps_basis(1e-13) == 0.0);
  CHECK(tps_basis(1.0) == 0.0);  // 1^2 ln 1
  CHECK(tps_basis(2.0) == doctest::Approx(4.0 * std::log(2.0)));
}

TEST_CASE("duplicate centers are rejected") {
  Eigen::MatrixXd coords(4, 2);
  coords << 0, 0, 1, 0, 0, 1, 1.0, 0.0;
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(tps_fit(coords, v), invalid_argument);
}

TEST_CASE("collinear centers are a degenerate geometry") {
  Eigen::MatrixXd coords(4, 2);
  coords << 0, 0, 1, 1, 2, 2, 3, 3;
  Eigen::VectorXd v(4);
  v << 0.1, 0.2, 0.3, 0.4;
  CHECK_THROWS_AS(tps_fit(coords, v), degenerate_geometry);
}

TEST_CASE("too few centers are rejected") {
  Eigen::MatrixXd coords(2, 2);
  coords << 0, 0, 1, 1;
  Eigen::VectorXd v(2);
  v << 0.1, 0.2;
  CHECK_THROWS_AS(tps_fit(coords, v), invalid_argument);
}

TEST_CASE("field interpolation keeps sensors and clamps the rest") {
  const auto grid = make_grid(12, 12);
  const auto layout = random_layout(grid, 20, 64, Rng(6));
  std::vector<double> lf(20);
  Rng rng(7);
  for (auto& v : lf) v = rng.uniform();
  const auto field = interpolate_lfdr_field(layout, lf, grid);
  REQUIRE(static_cast<int>(field.values.size()) == grid.size());
  for (double v : field.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (int s = 0; s < layout.count(); ++s) {
    CHECK(field.values[layout.sensor_index[s]] == doctest::Approx(lf[s]).epsilon(1e-12));
  }
}

TEST_CASE("constant sensor lfdrs of one give the all-ones field") {
  const auto grid = make_grid(10, 8);
  const auto layout = random_layout(grid, 12, 64, Rng(8));
  const std::vector<double> lf(12, 1.0);
  const auto field = interpolate_lfdr_field(layout, lf, grid);
  for (double v : field.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("full sensor coverage passes the lfdrs through") {
  const auto grid = make_grid(6, 5);
  const auto layout = all_points_layout(grid, 64);
  std::vector<double> lf(30);
  Rng rng(9);
  for (auto& v : lf) v = rng.uniform();
  const auto field = interpolate_lfdr_field(layout, lf, grid);
  CHECK(field.values == lf);
  CHECK(field.clamp_count == 0);
}

TEST_CASE("field interpolation validates its inputs") {
  const auto grid = make_grid(8, 8);
  const auto layout = random_layout(grid, 10, 64, Rng(10));
  CHECK_THROWS_AS(interpolate_lfdr_field(layout, std::vector<double>(9, 0.5), grid),
                  invalid_argument);
  CHECK_THROWS_AS(interpolate_lfdr_field(layout, std::vector<double>(10, 1.5), grid),
                  invalid_argument);
}
