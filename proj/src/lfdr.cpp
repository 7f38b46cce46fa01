#include "spatmht/lfdr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "spatmht/errors.hpp"

namespace spatmht {

namespace {

constexpr int kCdfGrid = 2048;
constexpr int kPi0Grid = 10000;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Distance between data and candidate models, with the data-side statistics
// precomputed once per fit (the search evaluates hundreds of candidates).
class DistanceEval {
 public:
  DistanceEval(const std::vector<double>& pvals, const FitConfig& cfg)
      : kind_(cfg.distance), use_hist_(cfg.use_histogram_distance) {
    if (use_hist_) {
      hist_ = build_histogram(pvals, cfg.hist_bins);
      return;
    }
    sorted_ = pvals;
    std::sort(sorted_.begin(), sorted_.end());
    if (kind_ == EdfDistanceKind::wasserstein1) {
      edf_.resize(kCdfGrid);
      const double n = static_cast<double>(sorted_.size());
      std::size_t at = 0;
      for (int j = 0; j < kCdfGrid; ++j) {
        const double t = (j + 0.5) / kCdfGrid;
        while (at < sorted_.size() && sorted_[at] <= t) ++at;
        edf_[j] = at / n;
      }
    }
  }

  double operator()(const BetaMixtureModel& m) const {
    if (use_hist_) return histogram_distance(hist_, m);
    if (kind_ == EdfDistanceKind::kolmogorov) {
      const double n = static_cast<double>(sorted_.size());
      double sup = 0.0;
      for (std::size_t i = 0; i < sorted_.size(); ++i) {
        const double F = mixture_cdf(m, sorted_[i]);
        sup = std::max(sup, std::max(F - i / n, (i + 1) / n - F));
      }
      return sup;
    }
    double acc = 0.0;
    for (int j = 0; j < kCdfGrid; ++j) {
      acc += std::abs(edf_[j] - mixture_cdf(m, (j + 0.5) / kCdfGrid));
    }
    return acc / kCdfGrid;
  }

 private:
  EdfDistanceKind kind_;
  bool use_hist_;
  Histogram hist_;
  std::vector<double> sorted_;
  std::vector<double> edf_;
};

BetaMixtureModel candidate_model(const MixtureCandidate& c) {
  return BetaMixtureModel{c.weights, c.shapes};
}

BetaMixtureModel uniform_model() {
  BetaMixtureModel m;
  m.weights = Eigen::VectorXd::Ones(1);
  m.shapes = Eigen::MatrixXd::Ones(1, 1);
  return m;
}

}  // namespace

FitResult fit_pvalue_density(const std::vector<double>& pvals, const FitConfig& cfg,
                             const SpatialGrid* grid,
                             const std::vector<int>* sensor_index) {
  if (pvals.size() < 50) {
    throw insufficient_data("need at least 50 p-values to fit a density");
  }
  if (cfg.permutations < 1 || cfg.n_eta < 1 || cfg.max_d < 2) {
    throw invalid_argument("bad fit configuration");
  }
  for (std::size_t i = 1; i < cfg.d_schedule.size(); ++i) {
    if (cfg.d_schedule[i] <= cfg.d_schedule[i - 1]) {
      throw invalid_argument("d_schedule must be strictly increasing");
    }
  }
  if (cfg.partition == PartitionMode::spatial_tiles && (!grid || !sensor_index)) {
    throw invalid_argument("spatial partitioning needs the grid and sensor layout");
  }

  const DistanceEval dist_eval(pvals, cfg);
  Rng base(cfg.seed);

  double ell_star = kInf;
  int d_star = 0;
  FitResult best;
  int total_valid = 0;

  for (int d : cfg.d_schedule) {
    if (d < 2 || d > cfg.max_d) continue;
    if (cfg.partition == PartitionMode::spatial_tiles) {
      const int side = static_cast<int>(std::lround(std::sqrt(double(d))));
      if (side * side != d) continue;
    }
    if (pvals.size() < static_cast<std::size_t>(2 * d)) break;

    PVectorSet part;
    try {
      Rng prng = base.derive(1, d);
      part = (cfg.partition == PartitionMode::random_chunks)
                 ? partition_random(pvals, d, prng)
                 : partition_spatial(pvals, d, *grid, *sensor_index);
    } catch (const insufficient_data&) {
      break;
    }

    for (int perm = 0; perm < cfg.permutations; ++perm) {
      PVectorSet vs = part;
      Rng srng = base.derive(2, d, perm);
      std::vector<double> row(d);
      for (int l = 0; l < vs.L(); ++l) {
        for (int i = 0; i < d; ++i) row[i] = vs.vectors(l, i);
        srng.shuffle(row);
        for (int i = 0; i < d; ++i) vs.vectors(l, i) = row[i];
      }

      double ell_d = kInf;
      for (int K = 1; K < d; ++K) {
        if (vs.L() < 2 * (K + 1)) break;
        Rng krng = base.derive(3, d, perm, K);
        SmomOptions opts;
        opts.n_eta = cfg.n_eta;
        opts.basis = cfg.m2_basis;
        const auto cands = estimate_mixture_candidates(vs, K, krng, opts);

        int u_best = -1;
        double dist_best = kInf;
        BetaMixtureModel model_best;
        for (std::size_t u = 0; u < cands.size(); ++u) {
          if (!cands[u].valid) continue;
          ++total_valid;
          BetaMixtureModel m = candidate_model(cands[u]);
          const double dd = dist_eval(m);
          if (dd < dist_best) {
            dist_best = dd;
            u_best = static_cast<int>(u);
            model_best = std::move(m);
          }
        }

        if (u_best < 0 || !(dist_best < ell_d - cfg.improvement_tol)) break;
        ell_d = dist_best;
        if (ell_d <= ell_star) {
          ell_star = ell_d;
          d_star = d;
          best.model = model_best;
          best.chosen_d = d;
          best.chosen_K = K;
          best.fit_distance = ell_d;
        }
      }
    }
    if (d_star != d) break;
  }

  best.n_valid_candidates = total_valid;
  if (best.chosen_d == 0) {
    best.model = uniform_model();
    best.fit_distance = dist_eval(best.model);
    best.warnings.push_back("no valid mixture candidate; fell back to a uniform fit");
  }
  return best;
}

TwoGroups two_groups_split(const BetaMixtureModel& m) {
  validate_model(m);
  double lo = mixture_pdf(m, 1.0);  // analytic endpoint: mean of all w_k a_{k,i}
  for (int j = 0; j < kPi0Grid; ++j) {
    const double p = 1e-6 + j * (1.0 - 1e-6) / (kPi0Grid - 1);
    lo = std::min(lo, mixture_pdf(m, p));
  }
  TwoGroups tg;
  tg.pi0 = std::min(lo, 1.0);
  tg.f1_defined = tg.pi0 < 1.0;
  return tg;
}

double f1_pdf(const BetaMixtureModel& m, const TwoGroups& tg, double p) {
  if (!tg.f1_defined) {
    throw invalid_argument("alternative density undefined for an all-null fit");
  }
  return (mixture_pdf(m, p) - tg.pi0) / (1.0 - tg.pi0);
}

std::vector<double> compute_lfdrs(const std::vector<double>& pvals, double pi0,
                                  const BetaMixtureModel& m, int* n_zero_density) {
  if (!(pi0 >= 0.0 && pi0 <= 1.0)) throw invalid_argument("pi0 outside [0,1]");
  validate_model(m);
  std::vector<double> out;
  out.reserve(pvals.size());
  int flagged = 0;
  for (double p : pvals) {
    const double f = mixture_pdf(m, p);
    if (f <= 0.0) {
      ++flagged;
      out.push_back(1.0);
    } else {
      out.push_back(std::min(1.0, pi0 / f));
    }
  }
  if (n_zero_density) *n_zero_density = flagged;
  return out;
}

namespace {

double sigmoid_clamped(double x) {
  x = std::clamp(x, -40.0, 40.0);
  return 1.0 / (1.0 + std::exp(-x));
}

// 2-d Nelder-Mead minimization; returns (x, f(x), converged).
template <class F>
std::tuple<std::array<double, 2>, double, bool> nelder_mead2(
    F&& f, std::array<double, 2> x0, double step, int max_iter, double ftol) {
  std::array<std::array<double, 2>, 3> xs = {x0, x0, x0};
  xs[1][0] += step;
  xs[2][1] += step;
  std::array<double, 3> fs;
  for (int i = 0; i < 3; ++i) fs[i] = f(xs[i][0], xs[i][1]);

  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> ord = {0, 1, 2};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int lo = ord[0], mid = ord[1], hi = ord[2];
    if (fs[hi] - fs[lo] < ftol * (std::abs(fs[lo]) + 1.0)) {
      converged = true;
      break;
    }
    const std::array<double, 2> centroid = {
        0.5 * (xs[lo][0] + xs[mid][0]), 0.5 * (xs[lo][1] + xs[mid][1])};
    auto blend = [&](double t) {
      return std::array<double, 2>{centroid[0] + t * (centroid[0] - xs[hi][0]),
                                   centroid[1] + t * (centroid[1] - xs[hi][1])};
    };
    const auto xr = blend(1.0);
    const double fr = f(xr[0], xr[1]);
    if (fr < fs[lo]) {
      const auto xe = blend(2.0);
      const double fe = f(xe[0], xe[1]);
      if (fe < fr) { xs[hi] = xe; fs[hi] = fe; }
      else         { xs[hi] = xr; fs[hi] = fr; }
    } else if (fr < fs[mid]) {
      xs[hi] = xr;
      fs[hi] = fr;
    } else {
      const auto xc = blend(fr < fs[hi] ? 0.5 : -0.5);
      const double fc = f(xc[0], xc[1]);
      if (fc < std::min(fr, fs[hi])) {
        xs[hi] = xc;
        fs[hi] = fc;
      } else {
        for (int i : {mid, hi}) {
          for (int c = 0; c < 2; ++c) xs[i][c] = 0.5 * (xs[i][c] + xs[lo][c]);
          fs[i] = f(xs[i][0], xs[i][1]);
        }
      }
    }
  }
  std::array<int, 3> ord = {0, 1, 2};
  std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fs[a] < fs[b]; });
  return {xs[ord[0]], fs[ord[0]], converged};
}

}  // namespace

BumFit fit_bum_mle(const std::vector<double>& pvals) {
  if (pvals.size() < 50) {
    throw insufficient_data("need at least 50 p-values for the BUM fit");
  }
  std::vector<double> lp;
  lp.reserve(pvals.size());
  for (double p : pvals) {
    if (!(p > 0.0 && p <= 1.0)) throw invalid_argument("p must be in (0,1]");
    lp.push_back(std::max(std::log(p), -667.0));
  }

  const auto nll = [&lp](double x1, double x2) {
    const double w = sigmoid_clamped(x1);
    const double a = 1e-6 + (1.0 - 2e-6) * sigmoid_clamped(x2);
    double acc = 0.0;
    for (double l : lp) {
      acc += std::log(std::max(w + (1.0 - w) * a * std::exp((a - 1.0) * l), 1e-300));
    }
    return -acc;
  };
  const auto logit = [](double q) { return std::log(q / (1.0 - q)); };

  BumFit fit;
  double best = kInf;
  for (double w0 : {0.2, 0.4, 0.6, 0.8}) {
    for (double a0 : {0.1, 0.3, 0.5, 0.7}) {
      const auto [x, fx, conv] =
          nelder_mead2(nll, {logit(w0), logit(a0)}, 0.5, 200, 1e-11);
      if (fx < best) {
        best = fx;
        fit.w = sigmoid_clamped(x[0]);
        fit.a = 1e-6 + (1.0 - 2e-6) * sigmoid_clamped(x[1]);
        fit.loglik = -fx;
        fit.converged = conv;
      }
    }
  }
  return fit;
}

LfdrResult lfdr_smom(const std::vector<double>& pvals, const FitConfig& cfg,
                     const SpatialGrid* grid, const std::vector<int>* sensor_index) {
  FitResult fr = fit_pvalue_density(pvals, cfg, grid, sensor_index);
  const TwoGroups tg = two_groups_split(fr.model);

  LfdrResult res;
  res.pi0 = tg.pi0;
  res.model = fr.model;
  res.fit_distance = fr.fit_distance;
  res.chosen_d = fr.chosen_d;
  res.chosen_K = fr.chosen_K;
  res.warnings = std::move(fr.warnings);
  res.lfdrs = compute_lfdrs(pvals, tg.pi0, fr.model, &res.zero_density_count);
  return res;
}

LfdrResult lfdr_bum(const std::vector<double>& pvals) {
  std::vector<double> clamped = pvals;
  int n_clamped = 0;
  for (double& p : clamped) {
    if (p < 1e-290) {
      p = 1e-290;
      ++n_clamped;
    }
  }
  const BumFit fit = fit_bum_mle(clamped);

  BetaMixtureModel m;
  m.weights = Eigen::VectorXd(2);
  m.weights << fit.w, 1.0 - fit.w;
  m.shapes = Eigen::MatrixXd(2, 1);
  m.shapes << 1.0, fit.a;

  const TwoGroups tg = two_groups_split(m);
  LfdrResult res;
  res.pi0 = tg.pi0;
  res.model = m;
  res.fit_distance = 0.0;
  res.chosen_d = 1;
  res.chosen_K = 2;
  if (!fit.converged) res.warnings.push_back("BUM optimizer did not fully converge");
  if (n_clamped > 0) {
    res.warnings.push_back("clamped " + std::to_string(n_clamped) +
                           " underflowing p-values for the BUM fit");
  }
  res.lfdrs = compute_lfdrs(pvals, tg.pi0, m, &res.zero_density_count);
  return res;
}

}  // namespace spatmht
