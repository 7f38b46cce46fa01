#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "spatmht/errors.hpp"
#include "spatmht/smom.hpp"

using namespace spatmht;

namespace {

BetaMixtureModel make_model(const std::vector<double>& w,
                            const std::vector<std::vector<double>>& rows) {
  BetaMixtureModel m;
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  m.shapes.resize(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t i = 0; i < rows[k].size(); ++i) m.shapes(k, i) = rows[k][i];
  }
  return m;
}

// closed-form E[p p^T] of a mixture with independent Beta marginals
Eigen::MatrixXd population_second_raw(const BetaMixtureModel& m) {
  const int d = m.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < m.n_components(); ++k) {
    Eigen::VectorXd mu(d), second(d);
    for (int i = 0; i < d; ++i) {
      const auto cm = beta_moments(m.shapes(k, i));
      mu(i) = cm.mean;
      second(i) = cm.variance + cm.mean * cm.mean;
    }
    Eigen::MatrixXd outer = mu * mu.transpose();
    for (int i = 0; i < d; ++i) outer(i, i) = second(i);
    out += m.weights(k) * outer;
  }
  return out;
}

double best_permuted_mean_error(const Eigen::MatrixXd& est_means,
                                const Eigen::MatrixXd& true_means) {
  // K = 2 only: try both labelings, return the better max-abs error
  const double direct =
      std::max((est_means.row(0) - true_means.row(0)).cwiseAbs().maxCoeff(),
               (est_means.row(1) - true_means.row(1)).cwiseAbs().maxCoeff());
  const double swapped =
      std::max((est_means.row(0) - true_means.row(1)).cwiseAbs().maxCoeff(),
               (est_means.row(1) - true_means.row(0)).cwiseAbs().maxCoeff());
  return std::min(direct, swapped);
}

// shape a with beta(a) variance equal to target; v(a) = a / ((1+a)^2 (a+2))
// peaks at a = 1, so each target below 1/12 has a root on either side
double shape_for_variance(double target, bool upper_branch) {
  double lo = upper_branch ? 1.0 : 1e-4;
  double hi = upper_branch ? 5e4 : 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = mid / ((1.0 + mid) * (1.0 + mid) * (mid + 2.0));
    const bool go_right = upper_branch ? (v > target) : (v < target);
    if (go_right) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// rows with per-component variance exactly var[k] in every coordinate,
// mixing the two branch roots so the mean rows are far from parallel
BetaMixtureModel two_branch_model(const std::vector<double>& w,
                                  const std::vector<double>& var,
                                  const std::vector<std::vector<int>>& upper) {
  BetaMixtureModel m;
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  m.shapes.resize(static_cast<int>(upper.size()), static_cast<int>(upper[0].size()));
  for (std::size_t k = 0; k < upper.size(); ++k) {
    for (std::size_t i = 0; i < upper[k].size(); ++i) {
      m.shapes(k, i) = shape_for_variance(var[k], upper[k][i] != 0);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("random partition drops the remainder") {
  const std::vector<double> pv = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  Rng rng(1);
  const auto vs = partition_random(pv, 3, rng);
  CHECK(vs.L() == 3);
  CHECK(vs.dim() == 3);
  // every entry comes from the input
  const std::set<double> pool(pv.begin(), pv.end());
  for (int l = 0; l < 3; ++l) {
    for (int i = 0; i < 3; ++i) CHECK(pool.count(vs.vectors(l, i)) == 1);
  }
}

TEST_CASE("random partition is seeded") {
  std::vector<double> pv(100);
  for (int i = 0; i < 100; ++i) pv[i] = (i + 0.5) / 100.0;
  Rng a(5), b(5), c(6);
  const auto va = partition_random(pv, 4, a);
  const auto vb = partition_random(pv, 4, b);
  const auto vc = partition_random(pv, 4, c);
  CHECK(va.vectors == vb.vectors);
  CHECK(va.vectors != vc.vectors);
  CHECK(va.L() == 25);
}

TEST_CASE("partition validates dimension and sample size") {
  std::vector<double> pv(10, 0.5);
  Rng rng(1);
  CHECK_THROWS_AS(partition_random(pv, 1, rng), invalid_argument);
  CHECK_THROWS_AS(partition_random(pv, 6, rng), insufficient_data);  // N < 2d
}

TEST_CASE("spatial partition tiles the grid in squares") {
  const auto grid = make_grid(4, 4);
  std::vector<double> pv(16);
  std::vector<int> idx(16);
  for (int n = 0; n < 16; ++n) {
    pv[n] = n / 16.0;
    idx[n] = n;
  }
  const auto vs = partition_spatial(pv, 4, grid, idx);
  REQUIRE(vs.L() == 4);
  REQUIRE(vs.dim() == 4);
  // each vector holds one 2x2 tile, row-major within the tile
  std::set<std::set<double>> tiles;
  for (int l = 0; l < 4; ++l) {
    tiles.insert({vs.vectors(l, 0), vs.vectors(l, 1), vs.vectors(l, 2), vs.vectors(l, 3)});
  }
  const auto tile = [&](std::initializer_list<int> ns) {
    std::set<double> t;
    for (int n : ns) t.insert(n / 16.0);
    return t;
  };
  CHECK(tiles.count(tile({0, 1, 4, 5})) == 1);
  CHECK(tiles.count(tile({2, 3, 6, 7})) == 1);
  CHECK(tiles.count(tile({8, 9, 12, 13})) == 1);
  CHECK(tiles.count(tile({10, 11, 14, 15})) == 1);
}

TEST_CASE("spatial partition needs a square d and full coverage") {
  const auto grid = make_grid(10, 10);
  std::vector<double> pv(100, 0.5);
  std::vector<int> idx(100);
  for (int n = 0; n < 100; ++n) idx[n] = n;
  CHECK_THROWS_AS(partition_spatial(pv, 3, grid, idx), invalid_argument);
  std::vector<int> partial(idx.begin(), idx.begin() + 50);
  CHECK_THROWS_AS(partition_spatial(std::vector<double>(50, 0.5), 4, grid, partial),
                  invalid_argument);
  const auto vs = partition_spatial(pv, 4, grid, idx);
  CHECK(vs.L() == 25);
}

TEST_CASE("tensor contraction basics") {
  Tensor3 t(3);
  Eigen::VectorXd e3 = Eigen::VectorXd::Zero(3);
  e3(2) = 1.0;
  CHECK(contract_m3(t, e3).isZero());
  t(0, 1, 2) = 5.0;
  const auto out = contract_m3(t, e3);
  CHECK(out(0, 1) == doctest::Approx(5.0));
  CHECK(out.cwiseAbs().sum() == doctest::Approx(5.0));
  Eigen::VectorXd e12(3);
  e12 << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0;
  CHECK(contract_m3(t, e12)(0, 1) == doctest::Approx(0.0));
  Eigen::VectorXd bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(contract_m3(t, bad), invalid_argument);
  Eigen::VectorXd notunit = Eigen::VectorXd::Constant(3, 1.0);
  CHECK_THROWS_AS(contract_m3(t, notunit), invalid_argument);
}

TEST_CASE("unit sphere samples") {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto eta = sample_unit_sphere(16, rng);
    CHECK(std::abs(eta.norm() - 1.0) < 1e-12);
  }
  const auto one = sample_unit_sphere(1, rng);
  CHECK(std::abs(std::abs(one(0)) - 1.0) < 1e-12);
  // coordinates are approximately N(0, 1/d)
  double var = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) var += std::pow(sample_unit_sphere(16, rng)(3), 2);
  var /= draws;
  CHECK(var == doctest::Approx(1.0 / 16.0).epsilon(0.15));
}

TEST_CASE("moment statistics on a two-point toy set") {
  Eigen::MatrixXd rows(2, 2);
  rows << 0.0, 0.0, 1.0, 1.0;
  const auto s = compute_moment_stats(rows);
  CHECK(s.mean(0) == doctest::Approx(0.5));
  CHECK(s.mean(1) == doctest::Approx(0.5));
  CHECK(s.covariance(0, 0) == doctest::Approx(0.25));  // biased: divide by 2
  CHECK(s.covariance(0, 1) == doctest::Approx(0.25));
  CHECK(s.second_raw(0, 0) == doctest::Approx(0.5));
  CHECK(s.noise_var == doctest::Approx(0.0).epsilon(1e-12));
  // the small eigenvector is (1,-1)/sqrt(2) up to sign
  CHECK(std::abs(s.noise_dir(0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(s.noise_dir(0) * s.noise_dir(1) < 0.0);
  CHECK(std::abs(s.noise_dir.norm() - 1.0) < 1e-10);
}

TEST_CASE("third moment estimate matches a brute-force oracle") {
  Rng rng(3);
  const int L = 40, d = 3;
  Eigen::MatrixXd rows(L, d);
  for (int l = 0; l < L; ++l) {
    for (int i = 0; i < d; ++i) rows(l, i) = rng.uniform();
  }
  Eigen::VectorXd m1(d);
  m1 << 0.2, 0.3, 0.4;
  const auto t = third_moment_estimate(rows, m1);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int h = 0; h < d; ++h) {
        double raw = 0.0;
        for (int l = 0; l < L; ++l) raw += rows(l, i) * rows(l, j) * rows(l, h);
        raw /= L;
        // subtract m1 (x) e_a (x) e_a and its two rotations
        double expect = raw;
        if (j == h) expect -= m1(i);
        if (i == h) expect -= m1(j);
        if (i == j) expect -= m1(h);
        CHECK(t(i, j, h) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("finite-sample error tensor: substitution example") {
  // single component, both shapes 2, noise direction e1
  const auto m = make_model({1.0}, {{2.0, 2.0}});
  Eigen::VectorXd vbar(2);
  vbar << 1.0, 0.0;
  const auto delta = m3_error_terms(m, vbar);
  const double k3 = beta_moments(2.0).third_cumulant;  // -0.0074074
  CHECK(delta(0, 0, 0) == doctest::Approx(-2.0 * k3));         // (-3+1) k3
  CHECK(delta(0, 0, 0) == doctest::Approx(0.0148148).epsilon(1e-4));
  CHECK(delta(1, 1, 1) == doctest::Approx(k3));                // (-0+1) k3
  // two equal indices: the odd coordinate's vbar^2 psi
  CHECK(delta(0, 1, 1) == doctest::Approx(-1.0 * k3));  // odd index 0
  CHECK(delta(1, 0, 1) == doctest::Approx(-1.0 * k3));  // odd index 0
  CHECK(delta(1, 1, 0) == doctest::Approx(-1.0 * k3));  // odd index 0
  CHECK(delta(0, 0, 1) == doctest::Approx(0.0));        // odd index 1, vbar_1 = 0
  CHECK(delta(0, 1, 0) == doctest::Approx(0.0));
  CHECK(delta(1, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("error tensor vanishes for the uniform model") {
  const auto m = make_model({0.5, 0.5}, {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}});
  Eigen::VectorXd vbar(3);
  vbar << 0.6, 0.0, 0.8;
  const auto delta = m3_error_terms(m, vbar);
  for (double v : delta.data()) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("all-distinct entries of the error tensor are zero") {
  const auto m = make_model({0.4, 0.6}, {{0.3, 1.5, 2.0}, {1.0, 0.7, 0.5}});
  Eigen::VectorXd vbar(3);
  vbar << 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), -1.0 / std::sqrt(3.0);
  const auto delta = m3_error_terms(m, vbar);
  CHECK(delta(0, 1, 2) == 0.0);
  CHECK(delta(2, 0, 1) == 0.0);
  CHECK(delta(1, 2, 0) == 0.0);
}

TEST_CASE("estimator validates K and data volume") {
  Rng rng(4);
  PVectorSet vs;
  vs.vectors = Eigen::MatrixXd::Constant(20, 4, 0.5);
  Rng est(1);
  CHECK_THROWS_AS(estimate_mixture_candidates(vs, 4, est), invalid_argument);
  CHECK_THROWS_AS(estimate_mixture_candidates(vs, 0, est), invalid_argument);
  vs.vectors = Eigen::MatrixXd::Constant(5, 4, 0.5);
  CHECK_THROWS_AS(estimate_mixture_candidates(vs, 2, est), insufficient_data);
}

TEST_CASE("uniform vectors recover the single uniform component") {
  // i.i.d. beta(1) entries, d = 8, K = 1: shapes near 1, weight 1
  const auto m = make_model({1.0}, {{1, 1, 1, 1, 1, 1, 1, 1}});
  Rng sampler(11);
  PVectorSet vs;
  vs.vectors = sample_mixture_vectors(m, 5000, sampler);
  Rng est(12);
  const auto cands = estimate_mixture_candidates(vs, 1, est);
  REQUIRE(cands.size() == 10);
  // a projection direction nearly orthogonal to the component mean yields a
  // wild but formally valid candidate, so grade the ensemble, not every draw
  int n_valid = 0, n_good = 0;
  for (const auto& c : cands) {
    if (!c.valid) continue;
    ++n_valid;
    REQUIRE(c.shapes.rows() == 1);
    bool good = std::abs(c.weights(0) - 1.0) < 0.05;
    for (int i = 0; i < 8; ++i) {
      good = good && c.shapes(0, i) > 0.75 && c.shapes(0, i) < 1.35;
    }
    n_good += good;
  }
  CHECK(n_valid >= 8);
  CHECK(n_good >= 7);
}

TEST_CASE("two-component recovery on a well-conditioned model") {
  // equal variance inside each component keeps the noise spectrum isotropic,
  // and the alternating branch choices keep the mean rows well separated
  const auto truth = two_branch_model({0.6, 0.4}, {0.05, 0.07},
                                      {{0, 0, 1, 1, 0, 1}, {1, 0, 0, 1, 1, 0}});
  Eigen::MatrixXd true_means(2, 6);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 6; ++i) true_means(k, i) = beta_moments(truth.shapes(k, i)).mean;
  }
  Rng sampler(21);
  PVectorSet vs;
  vs.vectors = sample_mixture_vectors(truth, 20000, sampler);
  Rng est(22);
  const auto cands = estimate_mixture_candidates(vs, 2, est);
  double best = 1e9;
  for (const auto& c : cands) {
    if (!c.valid) continue;
    best = std::min(best, best_permuted_mean_error(c.means, true_means));
  }
  CHECK(best < 0.05);
}

TEST_CASE("identical shapes across components collapse the second-moment rank") {
  // both rows constant: component means are parallel, so the noise-corrected
  // second moment is rank one and a K = 2 split of it is not identifiable
  const auto m = make_model({0.6, 0.4}, {{0.2, 0.2, 0.2, 0.2}, {1.0, 1.0, 1.0, 1.0}});
  Eigen::MatrixXd second = population_second_raw(m);
  double sigma2 = 0.0;
  for (int k = 0; k < 2; ++k) {
    sigma2 += m.weights(k) * beta_moments(m.shapes(k, 0)).variance;
  }
  const Eigen::MatrixXd m2 = second - sigma2 * Eigen::MatrixXd::Identity(4, 4);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m2);
  const auto ev = es.eigenvalues().cwiseAbs();
  double largest = ev.maxCoeff();
  double second_largest = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (ev(i) < largest && ev(i) > second_largest) second_largest = ev(i);
  }
  // all but one eigenvalue vanish
  int tiny = 0;
  for (int i = 0; i < 4; ++i) tiny += ev(i) < 1e-12 * largest;
  CHECK(tiny == 3);
}

TEST_CASE("column permutation permutes the recovered shapes") {
  const auto truth = two_branch_model({0.5, 0.5}, {0.05, 0.07},
                                      {{0, 1, 1, 0}, {1, 0, 1, 0}});
  Rng sampler(31);
  PVectorSet vs;
  vs.vectors = sample_mixture_vectors(truth, 30000, sampler);

  PVectorSet vs_perm;
  const std::vector<int> perm = {2, 0, 3, 1};
  vs_perm.vectors.resize(vs.vectors.rows(), 4);
  for (int i = 0; i < 4; ++i) vs_perm.vectors.col(i) = vs.vectors.col(perm[i]);

  Eigen::MatrixXd true_means(2, 4), true_means_perm(2, 4);
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 4; ++i) {
      true_means(k, i) = beta_moments(truth.shapes(k, i)).mean;
      true_means_perm(k, i) = beta_moments(truth.shapes(k, perm[i])).mean;
    }
  }

  Rng e1(32), e2(32);
  const auto c1 = estimate_mixture_candidates(vs, 2, e1);
  const auto c2 = estimate_mixture_candidates(vs_perm, 2, e2);
  double best1 = 1e9, best2 = 1e9;
  for (const auto& c : c1) {
    if (c.valid) best1 = std::min(best1, best_permuted_mean_error(c.means, true_means));
  }
  for (const auto& c : c2) {
    if (c.valid) best2 = std::min(best2, best_permuted_mean_error(c.means, true_means_perm));
  }
  // both orderings admit a good candidate; the estimate tracks the data's
  // coordinate order
  CHECK(best1 < 0.05);
  CHECK(best2 < 0.05);
}

TEST_CASE("intermediates expose a whitening that actually whitens") {
  const auto truth = make_model({0.5, 0.5}, {{0.2, 0.35, 0.5, 0.3, 0.4}, {2.0, 1.2, 2.5, 1.6, 3.0}});
  Rng sampler(41);
  PVectorSet vs;
  vs.vectors = sample_mixture_vectors(truth, 20000, sampler);
  Rng est(42);
  SpectralIntermediates si;
  const auto cands = estimate_mixture_candidates(vs, 2, est, {}, &si);
  REQUIRE(si.W.cols() == 2);
  REQUIRE(si.B.cols() == 2);
  // W^T M2 W = I_K and B W^T columns reconstruct M2 = B B^T
  const Eigen::MatrixXd wtw = si.W.transpose() * si.M2 * si.W;
  CHECK((wtw - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((si.B * si.B.transpose() - si.M2).cwiseAbs().maxCoeff() < 1e-8);
  (void)cands;
}
