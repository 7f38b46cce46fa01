#include "spatmht/bench.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "spatmht/errors.hpp"
#include "spatmht/interp.hpp"

namespace spatmht {

std::string method_name(Method m) {
  switch (m) {
    case Method::smom: return "smom";
    case Method::bum: return "bum";
    case Method::bh: return "bh";
    case Method::oracle: return "oracle";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "smom") return Method::smom;
  if (name == "bum") return Method::bum;
  if (name == "bh") return Method::bh;
  if (name == "oracle") return Method::oracle;
  throw invalid_argument("unknown method: " + name);
}

NetworkConfig network_preset(int cnfg) {
  NetworkConfig nc;
  switch (cnfg) {
    case 1:
      nc.groups = {{-1, 256}};
      break;
    case 2:
      nc.groups = {{300, 256}};
      nc.interpolate = true;
      break;
    case 3:
      nc.groups = {{170, 256}, {80, 512}, {50, 1024}};
      nc.interpolate = true;
      break;
    default:
      throw invalid_argument("unknown network config (use 1, 2 or 3)");
  }
  return nc;
}

double ncchi2_pdf_ratio(double tau, double T, double lambda) {
  if (T <= 0.0) throw invalid_argument("degrees of freedom must be positive");
  if (tau < 0.0 || lambda < 0.0) throw invalid_argument("tau and lambda must be >= 0");
  if (lambda == 0.0) return 1.0;

  // ratio = exp(-lambda/2) * 0F1(T/2; lambda*tau/4), summed with rescaling
  const double z = 0.25 * lambda * tau;
  const double b = 0.5 * T;
  double term = 1.0, sum = 1.0, log_off = 0.0;
  for (long j = 0; j < 2000000; ++j) {
    term *= z / ((b + j) * (j + 1.0));
    sum += term;
    if (term < 1e-17 * sum) break;
    if (sum > 1e280) {
      sum *= 1e-280;
      term *= 1e-280;
      log_off += 280.0 * std::log(10.0);
    }
  }
  return std::exp(std::log(sum) + log_off - 0.5 * lambda);
}

std::vector<double> oracle_lfdrs(const PValueSet& ps,
                                 const Eigen::VectorXd& signal_power,
                                 const GroundTruth& truth, double noise_power) {
  if (noise_power <= 0.0) throw invalid_argument("noise power must be positive");
  const auto S = ps.pvals.size();
  if (ps.sensor_index.size() != S || ps.n_samples.size() != S) {
    throw invalid_argument("inconsistent p-value set");
  }

  // the mixture the oracle knows: uniform mass from null sensors plus one
  // noncentral component per alternative sensor, grouped into lambda bins
  int n_null = 0;
  std::map<int, std::vector<double>> lambdas_by_T;
  for (std::size_t s = 0; s < S; ++s) {
    const int n = ps.sensor_index[s];
    if (!truth.active[n]) {
      ++n_null;
      continue;
    }
    const double snr = signal_power(n) / noise_power;
    lambdas_by_T[ps.n_samples[s]].push_back(ps.n_samples[s] * snr);
  }

  struct Bin {
    int T;
    double lambda;
    double count;
  };
  std::vector<Bin> bins;
  for (auto& [T, ls] : lambdas_by_T) {
    std::sort(ls.begin(), ls.end());
    const int nb = std::min<std::size_t>(128, ls.size());
    for (int b = 0; b < nb; ++b) {
      const std::size_t lo = ls.size() * b / nb, hi = ls.size() * (b + 1) / nb;
      if (hi == lo) continue;
      double mean = 0.0;
      for (std::size_t i = lo; i < hi; ++i) mean += ls[i];
      mean /= (hi - lo);
      bins.push_back({T, mean, static_cast<double>(hi - lo)});
    }
  }

  const double pi0 = static_cast<double>(n_null) / S;
  std::vector<double> out(S);
  std::map<int, boost::math::chi_squared> chi2_by_T;
  for (const auto& [T, ls] : lambdas_by_T) chi2_by_T.emplace(T, boost::math::chi_squared(T));

  for (std::size_t s = 0; s < S; ++s) {
    const double p = ps.pvals[s];
    if (p < 1e-12) {
      out[s] = 0.0;  // certain discovery; null p-values this small do not occur
      continue;
    }
    std::map<int, double> tau_by_T;
    double denom_alt = 0.0;
    for (const Bin& bin : bins) {
      if (bin.lambda > 5e4) continue;  // vanishing density at any p >= 1e-12
      auto it = tau_by_T.find(bin.T);
      if (it == tau_by_T.end()) {
        const double tau =
            boost::math::quantile(boost::math::complement(chi2_by_T.at(bin.T), p));
        it = tau_by_T.emplace(bin.T, tau).first;
      }
      denom_alt += bin.count * ncchi2_pdf_ratio(it->second, bin.T, bin.lambda);
    }
    const double f = (n_null + denom_alt) / S;
    out[s] = f > 0.0 ? std::min(1.0, pi0 / f) : 1.0;
  }
  return out;
}

SensorLayout build_network_layout(const SpatialGrid& grid, const NetworkConfig& nc,
                                  Rng rng) {
  if (nc.groups.empty()) throw invalid_argument("network config has no sensor groups");
  if (nc.groups.size() == 1 && nc.groups[0].first == -1) {
    return all_points_layout(grid, nc.groups[0].second);
  }
  for (const auto& [count, n_samples] : nc.groups) {
    if (count < 0) throw invalid_argument("count = -1 only valid as the sole group");
    (void)n_samples;
  }
  return random_layout_groups(grid, nc.groups, rng, nc.stratified);
}

namespace {

GroundTruth restrict_truth(const GroundTruth& truth, const SensorLayout& layout) {
  GroundTruth out;
  out.active.reserve(layout.count());
  for (int idx : layout.sensor_index) out.active.push_back(truth.active[idx]);
  return out;
}

}  // namespace

ResultsTable monte_carlo_harness(const BenchmarkConfig& cfg) {
  if (cfg.n_runs < 1) throw invalid_argument("n_runs must be >= 1");
  if (cfg.methods.empty()) throw invalid_argument("no methods selected");
  for (double a : cfg.alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) throw invalid_argument("alpha outside (0,1)");
  }
  validate_spec(cfg.scenario);

  const int n_methods = static_cast<int>(cfg.methods.size());
  const int n_alpha = static_cast<int>(cfg.alpha_grid.size());
  const int cells = n_methods * n_alpha;

  struct RunOut {
    std::vector<double> fdp, power;
    std::vector<std::string> warnings;
  };
  std::vector<RunOut> outs(cfg.n_runs);

  auto run_one = [&](int r) {
    RunOut& ro = outs[r];
    ro.fdp.assign(cells, 0.0);
    ro.power.assign(cells, 0.0);

    Rng rr = Rng(cfg.seed).derive(100, r);
    const FieldTruth ft = synthesize_field(cfg.grid, cfg.scenario, rr.derive(0));
    const SensorLayout layout = build_network_layout(cfg.grid, cfg.network, rr.derive(1));
    const Measurements meas =
        sample_measurements(ft.signal_power, layout, cfg.scenario, rr.derive(2));
    const PValueSet ps = energy_pvalues(meas);
    const GroundTruth sensor_truth = restrict_truth(ft.truth, layout);
    const bool interp_mode =
        cfg.network.interpolate && !layout.covers_whole_grid(cfg.grid);

    for (int mi = 0; mi < n_methods; ++mi) {
      const Method method = cfg.methods[mi];
      if (method == Method::bh) {
        for (int ai = 0; ai < n_alpha; ++ai) {
          const auto sel = bh_procedure(ps.pvals, cfg.alpha_grid[ai]);
          const Score sc = score(sel, sensor_truth);
          ro.fdp[mi * n_alpha + ai] = sc.fdp;
          ro.power[mi * n_alpha + ai] = sc.power;
        }
        continue;
      }

      std::vector<double> lf;
      if (method == Method::smom) {
        FitConfig fit = cfg.fit;
        fit.seed = rr.derive(3).key();
        LfdrResult res = lfdr_smom(ps.pvals, fit, &cfg.grid, &layout.sensor_index);
        for (const auto& w : res.warnings) {
          ro.warnings.push_back("run " + std::to_string(r) + " smom: " + w);
        }
        lf = std::move(res.lfdrs);
      } else if (method == Method::bum) {
        LfdrResult res = lfdr_bum(ps.pvals);
        for (const auto& w : res.warnings) {
          ro.warnings.push_back("run " + std::to_string(r) + " bum: " + w);
        }
        lf = std::move(res.lfdrs);
      } else {
        lf = oracle_lfdrs(ps, ft.signal_power, ft.truth, cfg.scenario.noise_power);
      }

      if (interp_mode) {
        const LfdrField field = interpolate_lfdr_field(layout, lf, cfg.grid);
        for (int ai = 0; ai < n_alpha; ++ai) {
          const auto sel = bfdr_select(field.values, cfg.alpha_grid[ai], cfg.rule);
          const Score sc = score(sel, ft.truth);
          ro.fdp[mi * n_alpha + ai] = sc.fdp;
          ro.power[mi * n_alpha + ai] = sc.power;
        }
      } else {
        for (int ai = 0; ai < n_alpha; ++ai) {
          const auto sel = bfdr_select(lf, cfg.alpha_grid[ai], cfg.rule);
          const Score sc = score(sel, sensor_truth);
          ro.fdp[mi * n_alpha + ai] = sc.fdp;
          ro.power[mi * n_alpha + ai] = sc.power;
        }
      }
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1 || cfg.n_runs == 1) {
    for (int r = 0; r < cfg.n_runs; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int n_workers = std::min(jobs, cfg.n_runs);
    pool.reserve(n_workers);
    for (int t = 0; t < n_workers; ++t) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < cfg.n_runs; r = next.fetch_add(1)) {
          run_one(r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  ResultsTable table;
  for (int mi = 0; mi < n_methods; ++mi) {
    for (int ai = 0; ai < n_alpha; ++ai) {
      ResultRow row;
      row.method = method_name(cfg.methods[mi]);
      row.alpha = cfg.alpha_grid[ai];
      row.n_runs = cfg.n_runs;
      double mf = 0.0, mp = 0.0;
      for (int r = 0; r < cfg.n_runs; ++r) {
        mf += outs[r].fdp[mi * n_alpha + ai];
        mp += outs[r].power[mi * n_alpha + ai];
      }
      mf /= cfg.n_runs;
      mp /= cfg.n_runs;
      row.mean_fdr = mf;
      row.mean_power = mp;
      if (cfg.n_runs > 1) {
        double vf = 0.0, vp = 0.0;
        for (int r = 0; r < cfg.n_runs; ++r) {
          vf += std::pow(outs[r].fdp[mi * n_alpha + ai] - mf, 2);
          vp += std::pow(outs[r].power[mi * n_alpha + ai] - mp, 2);
        }
        row.se_fdr = std::sqrt(vf / (cfg.n_runs - 1) / cfg.n_runs);
        row.se_power = std::sqrt(vp / (cfg.n_runs - 1) / cfg.n_runs);
      } else {
        row.se_fdr = std::numeric_limits<double>::quiet_NaN();
        row.se_power = std::numeric_limits<double>::quiet_NaN();
      }
      table.rows.push_back(row);
    }
  }
  for (const auto& ro : outs) {
    table.warnings.insert(table.warnings.end(), ro.warnings.begin(), ro.warnings.end());
  }
  return table;
}

}  // namespace spatmht
