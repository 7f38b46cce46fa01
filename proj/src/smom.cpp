#include "spatmht/smom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spatmht/errors.hpp"

namespace spatmht {

namespace {

void check_pvals(const std::vector<double>& pvals) {
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) throw invalid_argument("p outside [0,1]");
  }
}

}  // namespace

PVectorSet partition_random(const std::vector<double>& pvals, int d, Rng& rng) {
  if (d < 2) throw invalid_argument("vector dimension must be >= 2");
  check_pvals(pvals);
  const auto n = pvals.size();
  if (n < static_cast<std::size_t>(2 * d)) {
    throw insufficient_data("need at least 2d p-values to form vectors");
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(order);

  const int L = static_cast<int>(n / d);
  PVectorSet vs;
  vs.vectors.resize(L, d);
  for (int l = 0; l < L; ++l) {
    for (int i = 0; i < d; ++i) {
      vs.vectors(l, i) = pvals[order[static_cast<std::size_t>(l) * d + i]];
    }
  }
  return vs;
}

PVectorSet partition_spatial(const std::vector<double>& pvals, int d,
                             const SpatialGrid& grid,
                             const std::vector<int>& sensor_index) {
  if (d < 2) throw invalid_argument("vector dimension must be >= 2");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
  if (side * side != d) {
    throw invalid_argument("spatial partition requires a square dimension");
  }
  if (pvals.size() != sensor_index.size()) {
    throw invalid_argument("pvals/sensor_index size mismatch");
  }
  if (static_cast<int>(sensor_index.size()) != grid.size()) {
    throw invalid_argument("spatial partition requires a sensor at every grid point");
  }
  check_pvals(pvals);

  const int tiles_x = grid.width / side;
  const int tiles_y = grid.height / side;
  if (tiles_x < 1 || tiles_y < 1 || tiles_x * tiles_y < 2) {
    throw insufficient_data("grid too small for the requested tile size");
  }

  // sensor_index is strictly increasing over the whole grid, so the p-value
  // of grid point n sits at position n.
  PVectorSet vs;
  vs.vectors.resize(tiles_x * tiles_y, d);
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const int l = ty * tiles_x + tx;
      int i = 0;
      for (int dy = 0; dy < side; ++dy) {
        for (int dx = 0; dx < side; ++dx) {
          const int n = grid.index_of(tx * side + dx, ty * side + dy);
          vs.vectors(l, i++) = pvals[n];
        }
      }
    }
  }
  return vs;
}

Eigen::MatrixXd contract_m3(const Tensor3& t, const Eigen::VectorXd& eta) {
  const int d = t.dim();
  if (eta.size() != d) throw invalid_argument("tensor/eta dimension mismatch");
  if (std::abs(eta.norm() - 1.0) > 1e-6) {
    throw invalid_argument("eta must have unit norm");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int h = 0; h < d; ++h) acc += t(i, j, h) * eta(h);
      out(i, j) = acc;
    }
  }
  return out;
}

Eigen::VectorXd sample_unit_sphere(int d, Rng& rng) {
  if (d < 1) throw invalid_argument("dimension must be >= 1");
  Eigen::VectorXd v(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

MomentStats compute_moment_stats(const Eigen::MatrixXd& rows) {
  const auto n = static_cast<double>(rows.rows());
  if (rows.rows() < 2) throw insufficient_data("need at least two vectors");

  MomentStats s;
  s.mean = rows.colwise().mean();
  s.second_raw = rows.transpose() * rows / n;
  s.covariance = s.second_raw - s.mean * s.mean.transpose();
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.covariance);
  if (es.info() != Eigen::Success) throw numerical_error("covariance eigendecomposition failed");
  s.noise_var = es.eigenvalues()(0);  // ascending order: smallest first
  s.noise_dir = es.eigenvectors().col(0);
  return s;
}

Eigen::VectorXd weighted_mean_m1(const Eigen::MatrixXd& rows, const MomentStats& s) {
  const auto n = static_cast<double>(rows.rows());
  const Eigen::VectorXd proj =
      (rows.rowwise() - s.mean.transpose()) * s.noise_dir;
  return rows.transpose() * proj.cwiseAbs2() / n;
}

Tensor3 third_moment_estimate(const Eigen::MatrixXd& rows, const Eigen::VectorXd& m1) {
  const int d = static_cast<int>(rows.cols());
  if (m1.size() != d) throw invalid_argument("m1 dimension mismatch");
  const auto n = static_cast<double>(rows.rows());

  Tensor3 t(d);
  double* tv = t.data().data();
  for (Eigen::Index l = 0; l < rows.rows(); ++l) {
    const auto p = rows.row(l);
    std::size_t at = 0;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double pij = p(i) * p(j);
        for (int h = 0; h < d; ++h) tv[at++] += pij * p(h);
      }
    }
  }
  for (double& x : t.data()) x /= n;

  // remove the noise cross terms: m1 (x) e_i (x) e_i and its two rotations
  for (int i = 0; i < d; ++i) {
    for (int a = 0; a < d; ++a) {
      t(a, i, i) -= m1(a);
      t(i, a, i) -= m1(a);
      t(i, i, a) -= m1(a);
    }
  }
  return t;
}

namespace {

std::vector<MixtureCandidate> reject_all(int n_eta, const std::string& reason) {
  std::vector<MixtureCandidate> out(n_eta);
  for (auto& c : out) c.reject_reason = reason;
  return out;
}

}  // namespace

std::vector<MixtureCandidate> estimate_mixture_candidates(
    const PVectorSet& vs, int K, Rng& rng, const SmomOptions& opts,
    SpectralIntermediates* intermediates) {
  const int d = vs.dim();
  const int L = vs.L();
  if (K < 1) throw invalid_argument("K must be >= 1");
  if (K >= d) throw invalid_argument("K must be smaller than the vector dimension");
  if (opts.n_eta < 1) throw invalid_argument("n_eta must be >= 1");
  if (L < 2 * (K + 1)) {
    throw insufficient_data("not enough vectors for a half-split of rank K");
  }

  // random half-split; drop one vector if L is odd
  std::vector<int> order(L);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int half = (L - (L % 2)) / 2;
  Eigen::MatrixXd rows1(half, d), rows2(half, d);
  for (int l = 0; l < half; ++l) {
    rows1.row(l) = vs.vectors.row(order[l]);
    rows2.row(l) = vs.vectors.row(order[half + l]);
  }

  const MomentStats s1 = compute_moment_stats(rows1);
  const MomentStats s2 = compute_moment_stats(rows2);

  Eigen::MatrixXd basis = (opts.basis == SecondMomentBasis::raw_minus_noise)
      ? (s1.second_raw - s1.noise_var * Eigen::MatrixXd::Identity(d, d)).eval()
      : s1.covariance;
  basis = 0.5 * (basis + basis.transpose().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(basis);
  if (es2.info() != Eigen::Success) {
    throw numerical_error("second-moment eigendecomposition failed");
  }
  std::vector<int> by_mag(d);
  std::iota(by_mag.begin(), by_mag.end(), 0);
  std::sort(by_mag.begin(), by_mag.end(), [&](int a, int b) {
    return std::abs(es2.eigenvalues()(a)) > std::abs(es2.eigenvalues()(b));
  });

  Eigen::MatrixXd U(d, K);
  Eigen::VectorXd lam(K);
  for (int k = 0; k < K; ++k) {
    U.col(k) = es2.eigenvectors().col(by_mag[k]);
    lam(k) = es2.eigenvalues()(by_mag[k]);
  }

  const Eigen::VectorXd m1 = weighted_mean_m1(rows2, s2);
  const Tensor3 M3 = third_moment_estimate(rows2, m1);

  if (intermediates) {
    intermediates->s1 = s1;
    intermediates->s2 = s2;
    intermediates->m1 = m1;
    intermediates->M2 = U * lam.asDiagonal() * U.transpose();
    intermediates->M3 = M3;
    intermediates->m2_eigvals = lam;
  }

  if (lam.minCoeff() <= 0.0 || lam.minCoeff() < 1e-13 * lam.maxCoeff()) {
    // cannot whiten: the retained spectrum must be positive
    if (intermediates) {
      intermediates->B.resize(d, 0);
      intermediates->W.resize(d, 0);
    }
    auto out = reject_all(opts.n_eta, "second-moment truncation not positive definite");
    for (auto& c : out) c.eta = sample_unit_sphere(d, rng);  // keep stream advance fixed
    return out;
  }

  const Eigen::MatrixXd B = U * lam.cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd W = U * lam.cwiseSqrt().cwiseInverse().asDiagonal();
  if (intermediates) {
    intermediates->B = B;
    intermediates->W = W;
  }

  std::vector<MixtureCandidate> out;
  out.reserve(opts.n_eta);
  for (int u = 0; u < opts.n_eta; ++u) {
    MixtureCandidate cand;
    cand.eta = sample_unit_sphere(d, rng);
    cand.min_eigengap = std::numeric_limits<double>::infinity();

    const Eigen::MatrixXd A = W.transpose() * contract_m3(M3, cand.eta) * W;
    Eigen::EigenSolver<Eigen::MatrixXd> esA(A);
    if (esA.info() != Eigen::Success) {
      cand.reject_reason = "projected eigendecomposition failed";
      out.push_back(std::move(cand));
      continue;
    }

    // order components by eigenvalue real part for stable labeling
    std::vector<int> ord(K);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
      return esA.eigenvalues()(a).real() < esA.eigenvalues()(b).real();
    });

    bool ok = true;
    Eigen::VectorXd lambda(K);
    Eigen::MatrixXd mu(d, K);
    for (int k = 0; k < K && ok; ++k) {
      const std::complex<double> ev = esA.eigenvalues()(ord[k]);
      if (std::abs(ev.imag()) > 1e-6 * std::abs(ev.real())) {
        cand.reject_reason = "complex eigenvalue";
        ok = false;
        break;
      }
      lambda(k) = ev.real();

      const Eigen::VectorXcd vc = esA.eigenvectors().col(ord[k]);
      if (vc.imag().norm() > 1e-6 * vc.real().norm()) {
        cand.reject_reason = "complex eigenvector";
        ok = false;
        break;
      }
      Eigen::VectorXd v = vc.real();
      v /= v.norm();

      const Eigen::VectorXd Bv = B * v;
      const double denom = cand.eta.dot(Bv);
      if (std::abs(denom) < 1e-12) {
        cand.reject_reason = "projection direction orthogonal to component";
        ok = false;
        break;
      }
      mu.col(k) = (lambda(k) / denom) * Bv;
    }
    if (!ok) {
      out.push_back(std::move(cand));
      continue;
    }

    for (int a = 0; a < K; ++a) {
      for (int b = a + 1; b < K; ++b) {
        cand.min_eigengap = std::min(cand.min_eigengap, std::abs(lambda(a) - lambda(b)));
      }
    }
    if (cand.min_eigengap < 1e-8) {
      cand.reject_reason = "eigenvalues not pairwise distinct";
      out.push_back(std::move(cand));
      continue;
    }

    mu = mu.cwiseMax(1e-6).cwiseMin(1.0 - 1e-6);

    Eigen::VectorXd w =
        mu.completeOrthogonalDecomposition().solve(s1.mean);
    if ((w.array() < -0.05).any()) {
      cand.reject_reason = "strongly negative weight";
      out.push_back(std::move(cand));
      continue;
    }
    w = w.cwiseMax(0.0);
    const double wsum = w.sum();
    if (wsum <= 1e-12) {
      cand.reject_reason = "weights sum to zero";
      out.push_back(std::move(cand));
      continue;
    }
    w /= wsum;

    cand.weights = w;
    cand.means = mu.transpose();
    cand.shapes = (cand.means.array() / (1.0 - cand.means.array())).matrix();
    cand.valid = true;
    out.push_back(std::move(cand));
  }
  return out;
}

Tensor3 m3_error_terms(const BetaMixtureModel& m, const Eigen::VectorXd& v_bar) {
  validate_model(m);
  const int d = m.dim();
  if (v_bar.size() != d) throw invalid_argument("v_bar dimension mismatch");
  if (std::abs(v_bar.norm() - 1.0) > 1e-6) {
    throw invalid_argument("v_bar must have unit norm");
  }

  Eigen::VectorXd psi = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < m.n_components(); ++k) {
      psi(i) += m.weights(k) * beta_moments(m.shapes(k, i)).third_cumulant;
    }
  }

  Tensor3 t(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int h = 0; h < d; ++h) {
        if (i == j && j == h) {
          t(i, j, h) = (-3.0 * v_bar(i) * v_bar(i) + 1.0) * psi(i);
        } else if (j == h) {
          t(i, j, h) = -v_bar(i) * v_bar(i) * psi(i);
        } else if (i == h) {
          t(i, j, h) = -v_bar(j) * v_bar(j) * psi(j);
        } else if (i == j) {
          t(i, j, h) = -v_bar(h) * v_bar(h) * psi(h);
        }
      }
    }
  }
  return t;
}

}  // namespace spatmht
