#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spatmht/errors.hpp"
#include "spatmht/fieldsim.hpp"

using namespace spatmht;

namespace {

double mean_of(const Eigen::VectorXd& v) { return v.mean(); }

// lag-k autocorrelation of the dB-domain shadow values along grid rows
double row_autocorr(const Eigen::VectorXd& db, const SpatialGrid& grid, int lag) {
  double m = db.mean();
  double num = 0.0, den = 0.0;
  int n = 0;
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x + lag < grid.width; ++x) {
      const double a = db(grid.index_of(x, y)) - m;
      const double b = db(grid.index_of(x + lag, y)) - m;
      num += a * b;
      ++n;
    }
  }
  for (int i = 0; i < db.size(); ++i) den += std::pow(db(i) - m, 2);
  return (num / n) / (den / db.size());
}

}  // namespace

TEST_CASE("no sources means a silent field") {
  const auto grid = make_grid(20, 20);
  ScenarioSpec spec;
  spec.n_sources = 0;
  spec.seed = 1;
  const auto ft = synthesize_field(grid, spec);
  CHECK(ft.signal_power.maxCoeff() == 0.0);
  CHECK(ft.truth.n_active() == 0);
  CHECK(ft.truth.pi0() == doctest::Approx(1.0));
  CHECK(ft.source_xy.empty());
}

TEST_CASE("a single source's power decays with distance") {
  const auto grid = make_grid(41, 1);
  ScenarioSpec spec;
  spec.n_sources = 1;
  spec.tx_power = 100.0;
  spec.pathloss_exponent = 2.0;
  spec.shadowing_sigma_db = 0.0;  // deterministic
  spec.noise_power = 1.0;
  spec.seed = 3;
  const auto ft = synthesize_field(grid, spec);
  const auto [sx, sy] = ft.source_xy.at(0);
  double prev = -1.0;
  for (int x = 0; x < grid.width; ++x) {
    const double dist = std::hypot(x - sx, 0.0 - sy);
    const double pw = ft.signal_power(grid.index_of(x, 0));
    // free-space law max(d,1)^-2 exactly, no shadowing
    CHECK(pw == doctest::Approx(100.0 * std::pow(std::max(dist, 1.0), -2.0)).epsilon(1e-9));
    // strictly decreasing while walking away from the source
    if (x - sx >= 1.5) {
      if (prev >= 0.0) CHECK(pw < prev);
      prev = pw;
    }
  }
}

TEST_CASE("field synthesis is deterministic in the seed") {
  const auto grid = make_grid(32, 32);
  ScenarioSpec spec = scenario_preset('B', grid, 42);
  const auto f1 = synthesize_field(grid, spec);
  const auto f2 = synthesize_field(grid, spec);
  CHECK(f1.signal_power == f2.signal_power);
  CHECK(f1.source_xy == f2.source_xy);
  spec.seed = 43;
  const auto f3 = synthesize_field(grid, spec);
  CHECK(f1.signal_power != f3.signal_power);
}

TEST_CASE("raising the noise floor shrinks the active region") {
  const auto grid = make_grid(48, 48);
  ScenarioSpec spec = scenario_preset('A', grid, 7);
  auto lo = spec;
  auto hi = spec;
  hi.noise_power = spec.noise_power * 50.0;
  const auto ft_lo = synthesize_field(grid, lo);
  const auto ft_hi = synthesize_field(grid, hi);
  CHECK(ft_lo.signal_power == ft_hi.signal_power);  // same field, higher bar
  CHECK(ft_hi.truth.n_active() < ft_lo.truth.n_active());
}

TEST_CASE("preset coverage fractions land in their design bands") {
  const auto grid = make_grid(60, 60);
  double cover_a = 0.0, cover_b = 0.0, cover_c = 0.0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    cover_a += 1.0 - synthesize_field(grid, scenario_preset('A', grid, 100 + r)).truth.pi0();
    cover_b += 1.0 - synthesize_field(grid, scenario_preset('B', grid, 200 + r)).truth.pi0();
    cover_c += 1.0 - synthesize_field(grid, scenario_preset('C', grid, 300 + r)).truth.pi0();
  }
  cover_a /= reps;
  cover_b /= reps;
  cover_c /= reps;
  CHECK(cover_a > 0.45);
  CHECK(cover_a < 0.65);
  CHECK(cover_b > 0.24);
  CHECK(cover_b < 0.44);
  CHECK(cover_c > 0.04);
  CHECK(cover_c < 0.18);
}

TEST_CASE("shadowing correlation decays with distance") {
  const auto grid = make_grid(64, 64);
  ScenarioSpec spec;
  spec.n_sources = 1;
  spec.tx_power = 1.0;
  spec.pathloss_exponent = 1e-9;  // flatten path loss so power ~ shadowing
  spec.shadowing_sigma_db = 6.0;
  spec.shadowing_corr_length = 6.0;
  spec.noise_power = 1e-12;
  spec.seed = 11;
  double near = 0.0, far = 0.0;
  const int reps = 6;
  for (int r = 0; r < reps; ++r) {
    spec.seed = 11 + r;
    const auto ft = synthesize_field(grid, spec);
    Eigen::VectorXd db(ft.signal_power.size());
    for (int i = 0; i < db.size(); ++i) db(i) = 10.0 * std::log10(ft.signal_power(i));
    near += row_autocorr(db, grid, 1);
    far += row_autocorr(db, grid, 24);
  }
  near /= reps;
  far /= reps;
  CHECK(near > far + 0.3);
  CHECK(near > 0.5);
}

TEST_CASE("scenario validation rejects nonsense") {
  CHECK_THROWS_AS(validate_spec([] {
                    ScenarioSpec s;
                    s.n_sources = -1;
                    return s;
                  }()),
                  invalid_argument);
  CHECK_THROWS_AS(validate_spec([] {
                    ScenarioSpec s;
                    s.noise_power = 0.0;
                    return s;
                  }()),
                  invalid_argument);
  CHECK_THROWS_AS(validate_spec([] {
                    ScenarioSpec s;
                    s.distance_scale = -2.0;
                    return s;
                  }()),
                  invalid_argument);
  const auto grid = make_grid(8, 8);
  CHECK_THROWS_AS(scenario_preset('Q', grid, 1), invalid_argument);
}

TEST_CASE("measurements have the advertised first two moments") {
  const auto grid = make_grid(4, 1);
  Eigen::VectorXd power(4);
  power << 0.0, 0.0, 9.0, 16.0;
  SensorLayout layout;
  layout.sensor_index = {0, 2, 3};
  layout.n_samples = {100000, 100000, 100000};
  ScenarioSpec spec;
  spec.noise_power = 4.0;
  const auto m = sample_measurements(power, layout, spec, Rng(5));
  REQUIRE(m.samples.size() == 3);
  CHECK(m.samples[0].size() == 100000);
  // null sensor: mean 0, variance = noise power
  CHECK(std::abs(mean_of(m.samples[0])) < 0.02 * 2.0);
  CHECK(m.samples[0].squaredNorm() / 100000.0 == doctest::Approx(4.0).epsilon(0.02));
  // active sensors: mean sqrt(power), same noise variance
  CHECK(mean_of(m.samples[1]) == doctest::Approx(3.0).epsilon(0.01));
  CHECK(mean_of(m.samples[2]) == doctest::Approx(4.0).epsilon(0.01));
  const double var2 = (m.samples[1].array() - mean_of(m.samples[1])).square().mean();
  CHECK(var2 == doctest::Approx(4.0).epsilon(0.02));
  CHECK(m.noise_power == std::vector<double>{4.0, 4.0, 4.0});
}

TEST_CASE("measurement sampling is deterministic and per-sensor keyed") {
  const auto grid = make_grid(6, 6);
  Eigen::VectorXd power = Eigen::VectorXd::Zero(36);
  SensorLayout a, b;
  a.sensor_index = {4, 9, 20};
  a.n_samples = {64, 64, 64};
  b.sensor_index = {9, 20};
  b.n_samples = {64, 64};
  ScenarioSpec spec;
  const auto ma1 = sample_measurements(power, a, spec, Rng(31));
  const auto ma2 = sample_measurements(power, a, spec, Rng(31));
  const auto mb = sample_measurements(power, b, spec, Rng(31));
  CHECK(ma1.samples[1] == ma2.samples[1]);
  // substreams are keyed by grid index, so dropping sensor 4 leaves the rest
  CHECK(mb.samples[0] == ma1.samples[1]);
  CHECK(mb.samples[1] == ma1.samples[2]);
}

TEST_CASE("energy detector hand examples") {
  Measurements m;
  m.layout.sensor_index = {0, 1};
  m.layout.n_samples = {2, 2};
  m.noise_power = {1.0, 1.0};
  m.samples.resize(2);
  m.samples[0] = Eigen::VectorXd::Zero(2);  // tau = 0 -> p = 1
  m.samples[1].resize(2);
  m.samples[1] << std::sqrt(2.0 * std::log(2.0)), 0.0;  // tau = 2 ln 2 = chi2_2 median
  const auto ps = energy_pvalues(m);
  REQUIRE(ps.pvals.size() == 2);
  CHECK(ps.pvals[0] == doctest::Approx(1.0));
  CHECK(ps.pvals[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ps.sensor_index == std::vector<int>{0, 1});
  CHECK(ps.n_samples == std::vector<int>{2, 2});
  CHECK(ps.zvals.empty());
}

TEST_CASE("null p-values are uniform") {
  const auto grid = make_grid(80, 80);
  Eigen::VectorXd power = Eigen::VectorXd::Zero(grid.size());
  SensorLayout layout = all_points_layout(grid, 32);
  layout.sensor_index.resize(5000);
  layout.n_samples.resize(5000);
  ScenarioSpec spec;
  const auto m = sample_measurements(power, layout, spec, Rng(41));
  auto ps = energy_pvalues(m);
  std::sort(ps.pvals.begin(), ps.pvals.end());
  double ks = 0.0;
  const double n = static_cast<double>(ps.pvals.size());
  for (std::size_t i = 0; i < ps.pvals.size(); ++i) {
    ks = std::max(ks, std::abs(ps.pvals[i] - (i + 1) / n));
    ks = std::max(ks, std::abs(ps.pvals[i] - i / n));
  }
  CHECK(ks < 1.63 / std::sqrt(n));  // 1% critical value
}

TEST_CASE("signal shifts p-values toward zero") {
  const auto grid = make_grid(2, 1);
  Eigen::VectorXd power(2);
  power << 0.0, 5.0;
  SensorLayout layout;
  layout.sensor_index = {0, 1};
  layout.n_samples = {256, 256};
  ScenarioSpec spec;
  const auto m = sample_measurements(power, layout, spec, Rng(51));
  const auto ps = energy_pvalues(m);
  CHECK(ps.pvals[1] < 1e-6);
  CHECK(ps.pvals[0] > 1e-4);
}

TEST_CASE("probit transform hand values") {
  CHECK(p_to_z(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p_to_z(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(p_to_z(0.0013499) == doctest::Approx(-3.0).epsilon(1e-3));
  CHECK(p_to_z(0.0) == doctest::Approx(-8.0));
  CHECK(p_to_z(1.0) == doctest::Approx(8.0));
  CHECK_THROWS_AS(p_to_z(-0.1), invalid_argument);
  CHECK_THROWS_AS(p_to_z(1.1), invalid_argument);
}

TEST_CASE("z-values are emitted on request and clamps are counted") {
  Measurements m;
  m.layout.sensor_index = {0, 1};
  m.layout.n_samples = {2, 2};
  m.noise_power = {1.0, 1.0};
  m.samples.resize(2);
  m.samples[0] = Eigen::VectorXd::Zero(2);  // p = 1 -> z clamps to +8
  m.samples[1].resize(2);
  m.samples[1] << std::sqrt(2.0 * std::log(2.0)), 0.0;
  const auto ps = energy_pvalues(m, true);
  REQUIRE(ps.zvals.size() == 2);
  CHECK(ps.zvals[0] == doctest::Approx(8.0));
  CHECK(ps.zvals[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ps.n_z_clamped == 1);
}
