#include "spatmht/stats.hpp"

#include <algorithm>
#include <cmath>

#include "spatmht/errors.hpp"

namespace spatmht {

namespace {
constexpr double kDensityCap = 1e12;
constexpr int kCdfGridSize = 2048;
}  // namespace

double beta_pdf(double p, double a) {
  if (a <= 0.0) throw invalid_argument("beta shape must be positive");
  if (p < 0.0 || p > 1.0) throw invalid_argument("p outside [0,1]");
  if (p == 0.0) {
    if (a < 1.0) return kDensityCap;
    return a == 1.0 ? 1.0 : 0.0;
  }
  return std::min(a * std::pow(p, a - 1.0), kDensityCap);
}

double beta_cdf(double p, double a) {
  if (a <= 0.0) throw invalid_argument("beta shape must be positive");
  if (p < 0.0 || p > 1.0) throw invalid_argument("p outside [0,1]");
  return std::pow(p, a);
}

ComponentMoments beta_moments(double a) {
  if (a <= 0.0) throw invalid_argument("beta shape must be positive");
  const double ap1 = a + 1.0;
  // product forms of the central moments; exact zero at a = 1
  return ComponentMoments{
      a / ap1,
      a / (ap1 * ap1 * (a + 2.0)),
      2.0 * a * (1.0 - a) / (ap1 * ap1 * ap1 * (a + 2.0) * (a + 3.0)),
  };
}

void validate_model(const BetaMixtureModel& m) {
  const int K = m.n_components();
  if (K < 1) throw invalid_argument("model needs at least one component");
  if (m.shapes.rows() != K) throw invalid_argument("weights/shapes row mismatch");
  if (m.shapes.cols() < 1) throw invalid_argument("model dimension must be >= 1");
  if ((m.weights.array() < 0.0).any()) {
    throw invalid_argument("mixture weights must be non-negative");
  }
  if (std::abs(m.weights.sum() - 1.0) > 1e-8) {
    throw invalid_argument("mixture weights must sum to 1");
  }
  if ((m.shapes.array() <= 0.0).any()) {
    throw invalid_argument("beta shapes must be positive");
  }
}

double mixture_pdf(const BetaMixtureModel& m, double p) {
  double acc = 0.0;
  for (int k = 0; k < m.n_components(); ++k) {
    double row = 0.0;
    for (int i = 0; i < m.dim(); ++i) row += beta_pdf(p, m.shapes(k, i));
    acc += m.weights(k) * row;
  }
  return acc / m.dim();
}

double mixture_cdf(const BetaMixtureModel& m, double p) {
  double acc = 0.0;
  for (int k = 0; k < m.n_components(); ++k) {
    double row = 0.0;
    for (int i = 0; i < m.dim(); ++i) row += std::pow(p, m.shapes(k, i));
    acc += m.weights(k) * row;
  }
  return acc / m.dim();
}

int default_bin_count(std::size_t n) {
  const int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  return std::clamp(k, 10, 200);
}

Histogram build_histogram(const std::vector<double>& pvals, int n_bins) {
  if (pvals.empty()) throw invalid_argument("cannot build histogram of nothing");
  if (n_bins == 0) n_bins = default_bin_count(pvals.size());
  if (n_bins < 1) throw invalid_argument("n_bins must be positive");

  Histogram h;
  h.edges.resize(n_bins + 1);
  for (int b = 0; b <= n_bins; ++b) {
    h.edges[b] = static_cast<double>(b) / n_bins;
  }
  std::vector<int> counts(n_bins, 0);
  for (double p : pvals) {
    if (p < 0.0 || p > 1.0) throw invalid_argument("p outside [0,1]");
    int b = std::min(static_cast<int>(p * n_bins), n_bins - 1);
    ++counts[b];
  }
  h.density.resize(n_bins);
  const double width = 1.0 / n_bins;
  for (int b = 0; b < n_bins; ++b) {
    h.density[b] = counts[b] / (width * static_cast<double>(pvals.size()));
  }
  return h;
}

double edf_distance(std::vector<double> pvals, const BetaMixtureModel& m,
                    EdfDistanceKind kind) {
  if (pvals.empty()) throw invalid_argument("no p-values");
  validate_model(m);
  std::sort(pvals.begin(), pvals.end());
  const auto n = static_cast<double>(pvals.size());

  if (kind == EdfDistanceKind::kolmogorov) {
    // sup at the jump points, checking both sides of each step
    double sup = 0.0;
    for (std::size_t i = 0; i < pvals.size(); ++i) {
      const double F = mixture_cdf(m, pvals[i]);
      sup = std::max(sup, std::max(F - i / n, (i + 1) / n - F));
    }
    return sup;
  }

  // L1 distance between CDFs, midpoint rule on a fixed grid
  double acc = 0.0;
  std::size_t at = 0;
  for (int j = 0; j < kCdfGridSize; ++j) {
    const double t = (j + 0.5) / kCdfGridSize;
    while (at < pvals.size() && pvals[at] <= t) ++at;
    acc += std::abs(at / n - mixture_cdf(m, t));
  }
  return acc / kCdfGridSize;
}

double histogram_distance(const Histogram& h, const BetaMixtureModel& m) {
  validate_model(m);
  double acc = 0.0;
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    const double width = h.edges[b + 1] - h.edges[b];
    const double model_mass = mixture_cdf(m, h.edges[b + 1]) - mixture_cdf(m, h.edges[b]);
    acc += std::abs(h.density[b] * width - model_mass);
  }
  return acc;
}

namespace {

int draw_component(const BetaMixtureModel& m, Rng& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (int k = 0; k < m.n_components(); ++k) {
    cum += m.weights(k);
    if (u < cum) return k;
  }
  return m.n_components() - 1;
}

}  // namespace

Eigen::MatrixXd sample_mixture_vectors(const BetaMixtureModel& m, int L, Rng& rng) {
  validate_model(m);
  if (L < 1) throw invalid_argument("L must be positive");
  Eigen::MatrixXd out(L, m.dim());
  for (int l = 0; l < L; ++l) {
    const int k = draw_component(m, rng);
    for (int i = 0; i < m.dim(); ++i) {
      out(l, i) = std::pow(rng.uniform_open(), 1.0 / m.shapes(k, i));
    }
  }
  return out;
}

std::vector<double> sample_mixture_scalars(const BetaMixtureModel& m,
                                           std::size_t n, Rng& rng) {
  validate_model(m);
  std::vector<double> out(n);
  for (auto& p : out) {
    const int k = draw_component(m, rng);
    const int i = static_cast<int>(rng.uniform_int(m.dim()));
    p = std::pow(rng.uniform_open(), 1.0 / m.shapes(k, i));
  }
  return out;
}

}  // namespace spatmht
