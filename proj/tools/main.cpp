// Command-line pipeline: simulate -> fit -> decide / interpolate -> report.
// CSV is the interchange format between stages; every output embeds the
// config hash and seed so report can refuse to mix incompatible runs.
#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "spatmht/bench.hpp"
#include "spatmht/errors.hpp"
#include "spatmht/interp.hpp"
#include "spatmht/io.hpp"

namespace fs = std::filesystem;
using namespace spatmht;

namespace {

struct Opts {
  // simulate
  std::string scenario = "B";
  std::string config = "1";
  std::string grid = "60x60";
  std::uint64_t seed = 1;
  int n_runs = 1;
  std::string out;
  int sources = 4;
  double tx_power = 1e5;
  double pathloss = 4.0;
  double shadow_sigma = 4.0;
  double corr_length = 10.0;
  double noise = 1.0;
  int sensors = 300;
  int samples = 256;
  bool interp_net = false;

  // fit
  std::string in;
  std::string method = "smom";
  std::uint64_t fit_seed = 0;  // 0: take from metadata, else 1
  int max_d = 10;
  int permutations = 5;
  std::string distance = "w1";
  bool hist_distance = false;
  std::string partition = "random";

  // decide / interpolate / report
  std::vector<double> alphas;
  std::string rule = "mean";
  std::vector<std::string> methods;
  std::vector<std::string> dirs;
  int jobs = 1;
  bool force = false;
  bool no_rasters = false;
};

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string run_dir_name(int r) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "run_%03d", r);
  return buf;
}

ScenarioSpec resolve_scenario(const Opts& o, const SpatialGrid& grid) {
  if (o.scenario == "A" || o.scenario == "B" || o.scenario == "C") {
    return scenario_preset(o.scenario[0], grid, 0);
  }
  if (o.scenario == "custom") {
    ScenarioSpec s;
    s.n_sources = o.sources;
    s.tx_power = o.tx_power;
    s.pathloss_exponent = o.pathloss;
    s.shadowing_sigma_db = o.shadow_sigma;
    s.shadowing_corr_length = o.corr_length;
    s.noise_power = o.noise;
    s.distance_scale = 100.0 / std::max(grid.width, grid.height);
    validate_spec(s);
    return s;
  }
  throw invalid_argument("unknown scenario '" + o.scenario + "' (A, B, C or custom)");
}

NetworkConfig resolve_network(const Opts& o) {
  if (o.config == "1" || o.config == "2" || o.config == "3") {
    return network_preset(o.config[0] - '0');
  }
  if (o.config == "custom") {
    NetworkConfig nc;
    nc.groups = {{o.sensors, o.samples}};
    nc.interpolate = o.interp_net;
    return nc;
  }
  throw invalid_argument("unknown network config '" + o.config + "' (1, 2, 3 or custom)");
}

std::string canonical_config(const Opts& o) {
  std::string c = "scenario=" + o.scenario + " config=" + o.config + " grid=" + o.grid +
                  " seed=" + std::to_string(o.seed);
  if (o.scenario == "custom") {
    c += " sources=" + std::to_string(o.sources) + " tx=" + fmt_num(o.tx_power) +
         " gamma=" + fmt_num(o.pathloss) + " sigma=" + fmt_num(o.shadow_sigma) +
         " corr=" + fmt_num(o.corr_length) + " noise=" + fmt_num(o.noise);
  }
  if (o.config == "custom") {
    c += " sensors=" + std::to_string(o.sensors) + " samples=" + std::to_string(o.samples) +
         " interp=" + std::to_string(int(o.interp_net));
  }
  return c;
}

SpatialGrid grid_from_meta_or_fallback(const Meta& meta, const std::vector<int>& sensor_index,
                                       std::ostream& log) {
  const std::string g = meta_find(meta, "grid");
  if (!g.empty()) return parse_grid_meta(g);
  int max_idx = 0;
  for (int n : sensor_index) max_idx = std::max(max_idx, n);
  log << "note: no grid metadata, assuming a " << (max_idx + 1) << "x1 line\n";
  return make_grid(max_idx + 1, 1);
}

int cmd_simulate(const Opts& o) {
  const SpatialGrid grid = parse_grid_meta(o.grid);
  const ScenarioSpec scen = resolve_scenario(o, grid);
  const NetworkConfig net = resolve_network(o);
  if (o.n_runs < 1) throw invalid_argument("n_runs must be >= 1");
  const std::string out = o.out.empty() ? "out" : o.out;
  const std::string hash = hash_hex(fnv1a64(canonical_config(o)));

  for (int r = 0; r < o.n_runs; ++r) {
    Rng rr = Rng(o.seed).derive(100, r);
    const FieldTruth ft = synthesize_field(grid, scen, rr.derive(0));
    const SensorLayout layout = build_network_layout(grid, net, rr.derive(1));
    const Measurements meas = sample_measurements(ft.signal_power, layout, scen, rr.derive(2));
    const PValueSet ps = energy_pvalues(meas);

    const fs::path dir = fs::path(out) / run_dir_name(r);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());

    Meta meta = {{"config_hash", hash},
                 {"scenario", o.scenario},
                 {"config", o.config},
                 {"grid", grid_meta(grid)},
                 {"seed", std::to_string(o.seed)},
                 {"run", std::to_string(r)},
                 {"noise", fmt_num(scen.noise_power)},
                 {"interpolate", net.interpolate ? "1" : "0"},
                 {"fit_seed", std::to_string(rr.derive(3).key())}};
    write_pvalues_csv((dir / "pvalues.csv").string(), grid, ps, meta);
    write_truth_json((dir / "truth.json").string(), grid, ft, meta);
    write_layout_json((dir / "layout.json").string(), grid, layout, meta);
    std::cout << dir.string() << ": " << ps.pvals.size() << " sensors, true pi0 "
              << fmt_num(ft.truth.pi0()) << "\n";
  }
  return 0;
}

FitConfig make_fit_config(const Opts& o, const Meta& meta) {
  FitConfig fc;
  if (o.max_d < 2) throw invalid_argument("--max-d must be >= 2");
  fc.max_d = o.max_d;
  fc.d_schedule.clear();
  for (int d = 2; d <= o.max_d; ++d) fc.d_schedule.push_back(d);
  fc.permutations = o.permutations;
  if (o.distance == "w1") {
    fc.distance = EdfDistanceKind::wasserstein1;
  } else if (o.distance == "ks") {
    fc.distance = EdfDistanceKind::kolmogorov;
  } else {
    throw invalid_argument("unknown distance '" + o.distance + "' (w1 or ks)");
  }
  fc.use_histogram_distance = o.hist_distance;
  if (o.partition == "random") {
    fc.partition = PartitionMode::random_chunks;
  } else if (o.partition == "spatial") {
    fc.partition = PartitionMode::spatial_tiles;
  } else {
    throw invalid_argument("unknown partition '" + o.partition + "' (random or spatial)");
  }
  if (o.fit_seed != 0) {
    fc.seed = o.fit_seed;
  } else {
    const std::string ms = meta_find(meta, "fit_seed");
    fc.seed = ms.empty() ? 1 : std::stoull(ms);
  }
  return fc;
}

int cmd_fit(const Opts& o) {
  PValueFile pf = read_pvalues_csv(o.in);
  const SpatialGrid grid = grid_from_meta_or_fallback(pf.meta, pf.ps.sensor_index, std::cout);
  const FitConfig fc = make_fit_config(o, pf.meta);

  LfdrResult res;
  if (o.method == "smom") {
    res = lfdr_smom(pf.ps.pvals, fc, &grid, &pf.ps.sensor_index);
  } else if (o.method == "bum") {
    res = lfdr_bum(pf.ps.pvals);
  } else {
    throw invalid_argument("unknown fit method '" + o.method + "' (smom or bum)");
  }

  const fs::path outdir = o.out.empty() ? fs::path(o.in).parent_path() : fs::path(o.out);
  if (!outdir.empty()) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw io_error("cannot create " + outdir.string() + ": " + ec.message());
  }

  Meta meta = pf.meta;
  meta.emplace_back("method", o.method);
  write_lfdr_csv((outdir / "lfdr.csv").string(), grid, pf.ps.sensor_index, res.lfdrs, meta);
  write_model_json((outdir / "model.json").string(), o.method, res, meta);

  std::ofstream log((outdir / "fit.log").string());
  log << "method=" << o.method << "\nchosen_d=" << res.chosen_d
      << "\nchosen_K=" << res.chosen_K << "\nfit_distance=" << res.fit_distance
      << "\npi0=" << res.pi0 << "\nzero_density=" << res.zero_density_count << "\n";
  for (const auto& w : res.warnings) log << "warning: " << w << "\n";

  std::cout << "fit " << o.method << ": d=" << res.chosen_d << " K=" << res.chosen_K
            << " distance=" << fmt_num(res.fit_distance) << " pi0=" << fmt_num(res.pi0)
            << " -> " << (outdir / "lfdr.csv").string() << "\n";
  for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";
  return 0;
}

BfdrRule resolve_rule(const std::string& r) {
  if (r == "mean") return BfdrRule::mean;
  if (r == "sum") return BfdrRule::sum;
  throw invalid_argument("unknown rule '" + r + "' (mean or sum)");
}

int cmd_decide(const Opts& o) {
  const LfdrFile lf = read_lfdr_csv(o.in);
  const SpatialGrid grid = grid_from_meta_or_fallback(lf.meta, lf.sensor_index, std::cout);
  const BfdrRule rule = resolve_rule(o.rule);
  const std::vector<double> alphas = o.alphas.empty() ? std::vector<double>{0.1} : o.alphas;
  const fs::path outdir = o.out.empty() ? fs::path(o.in).parent_path() : fs::path(o.out);
  if (!outdir.empty()) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw io_error("cannot create " + outdir.string() + ": " + ec.message());
  }

  for (double a : alphas) {
    const auto sel = bfdr_select(lf.lfdrs, a, rule);
    std::vector<std::uint8_t> decided(lf.lfdrs.size(), 0);
    for (int i : sel) decided[i] = 1;
    Meta meta = lf.meta;
    meta.emplace_back("alpha", fmt_num(a));
    meta.emplace_back("rule", o.rule);
    const fs::path path = outdir / ("decisions_a" + std::string(fmt_num(a)) + ".csv");
    write_decisions_csv(path.string(), grid, lf.sensor_index, lf.lfdrs, decided, meta);
    std::cout << "alpha=" << fmt_num(a) << ": " << sel.size() << " of " << lf.lfdrs.size()
              << " selected -> " << path.string() << "\n";
  }
  return 0;
}

int cmd_interpolate(const Opts& o) {
  const LfdrFile lf = read_lfdr_csv(o.in);
  const std::string g = meta_find(lf.meta, "grid");
  if (g.empty()) {
    throw invalid_argument("interpolation needs grid metadata (grid=WxH) in " + o.in);
  }
  const SpatialGrid grid = parse_grid_meta(g);
  SensorLayout layout;
  layout.sensor_index = lf.sensor_index;
  layout.n_samples.assign(lf.sensor_index.size(), 0);

  const LfdrField field = interpolate_lfdr_field(layout, lf.lfdrs, grid);
  const double alpha = o.alphas.empty() ? 0.1 : o.alphas.front();
  const auto sel = bfdr_select(field.values, alpha, resolve_rule(o.rule));
  std::vector<std::uint8_t> decided(field.values.size(), 0);
  for (int i : sel) decided[i] = 1;

  const fs::path outdir = o.out.empty() ? fs::path(o.in).parent_path() : fs::path(o.out);
  if (!outdir.empty()) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw io_error("cannot create " + outdir.string() + ": " + ec.message());
  }
  Meta meta = lf.meta;
  meta.emplace_back("alpha", fmt_num(alpha));
  meta.emplace_back("rule", o.rule);
  meta.emplace_back("clamped", std::to_string(field.clamp_count));
  write_raster_csv((outdir / "lfdr_field.csv").string(), grid, field.values, decided, meta);
  write_pgm((outdir / "lfdr_field.pgm").string(), grid, field.values);
  std::cout << "interpolated " << lf.lfdrs.size() << " sensors to " << grid.size()
            << " points (" << field.clamp_count << " clamped); alpha=" << fmt_num(alpha)
            << " selects " << sel.size() << " -> " << (outdir / "lfdr_field.csv").string()
            << "\n";
  return 0;
}

int cmd_report(const Opts& o) {
  if (o.dirs.empty()) throw invalid_argument("report needs at least one run directory");
  const std::vector<double> alphas =
      o.alphas.empty() ? std::vector<double>{0.05, 0.1, 0.2} : o.alphas;
  const std::vector<std::string> methods =
      o.methods.empty() ? std::vector<std::string>{"smom", "bum", "bh"} : o.methods;
  for (const auto& m : methods) method_from_name(m);  // validate early
  const BfdrRule rule = resolve_rule(o.rule);

  const int R = static_cast<int>(o.dirs.size());
  const int n_alpha = static_cast<int>(alphas.size());
  const int cells = static_cast<int>(methods.size()) * n_alpha;

  // refuse to aggregate incompatible runs
  std::vector<PValueFile> pfs(R);
  std::string hash0;
  for (int r = 0; r < R; ++r) {
    pfs[r] = read_pvalues_csv((fs::path(o.dirs[r]) / "pvalues.csv").string());
    const std::string h = meta_find(pfs[r].meta, "config_hash");
    if (r == 0) hash0 = h;
    if (h != hash0 && !o.force) {
      throw invalid_argument("config hash mismatch between " + o.dirs[0] + " and " +
                             o.dirs[r] + " (use --force to aggregate anyway)");
    }
  }

  struct RunOut {
    std::vector<double> fdp, power;
    std::vector<std::string> warnings;
  };
  std::vector<RunOut> outs(R);

  auto run_one = [&](int r) {
    RunOut& ro = outs[r];
    ro.fdp.assign(cells, 0.0);
    ro.power.assign(cells, 0.0);
    const PValueFile& pf = pfs[r];
    const TruthFile tf = read_truth_json((fs::path(o.dirs[r]) / "truth.json").string());
    const SpatialGrid& grid = tf.grid;

    const std::string noise_s = meta_find(pf.meta, "noise");
    const double noise = noise_s.empty() ? 1.0 : std::stod(noise_s);
    const bool interp_flag = meta_find(pf.meta, "interpolate") == "1";
    const std::string fs_s = meta_find(pf.meta, "fit_seed");
    const std::uint64_t fit_seed = fs_s.empty() ? fnv1a64(o.dirs[r]) : std::stoull(fs_s);

    GroundTruth sensor_truth;
    for (int n : pf.ps.sensor_index) {
      if (n < 0 || n >= grid.size()) {
        throw invalid_argument(o.dirs[r] + ": sensor index outside the grid");
      }
      sensor_truth.active.push_back(tf.field.truth.active[n]);
    }
    const bool full_cover = static_cast<int>(pf.ps.sensor_index.size()) ==
                            static_cast<int>(grid.size());
    const bool interp_mode = interp_flag && !full_cover;

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const Method method = method_from_name(methods[mi]);
      if (method == Method::bh) {
        for (int ai = 0; ai < n_alpha; ++ai) {
          const Score sc = score(bh_procedure(pf.ps.pvals, alphas[ai]), sensor_truth);
          ro.fdp[mi * n_alpha + ai] = sc.fdp;
          ro.power[mi * n_alpha + ai] = sc.power;
        }
        continue;
      }
      std::vector<double> lf;
      if (method == Method::smom) {
        FitConfig fc;
        fc.seed = fit_seed;
        LfdrResult res = lfdr_smom(pf.ps.pvals, fc, &grid, &pf.ps.sensor_index);
        for (const auto& w : res.warnings) {
          ro.warnings.push_back(o.dirs[r] + " smom: " + w);
        }
        lf = std::move(res.lfdrs);
      } else if (method == Method::bum) {
        LfdrResult res = lfdr_bum(pf.ps.pvals);
        for (const auto& w : res.warnings) {
          ro.warnings.push_back(o.dirs[r] + " bum: " + w);
        }
        lf = std::move(res.lfdrs);
      } else {
        lf = oracle_lfdrs(pf.ps, tf.field.signal_power, tf.field.truth, noise);
      }

      std::vector<double> field_vals;
      if (interp_mode) {
        SensorLayout layout;
        layout.sensor_index = pf.ps.sensor_index;
        layout.n_samples = pf.ps.n_samples;
        field_vals = interpolate_lfdr_field(layout, lf, grid).values;
      }
      const std::vector<double>& decide_on = interp_mode ? field_vals : lf;
      const GroundTruth& truth_for =
          (interp_mode || full_cover) ? tf.field.truth : sensor_truth;

      for (int ai = 0; ai < n_alpha; ++ai) {
        const Score sc = score(bfdr_select(decide_on, alphas[ai], rule), truth_for);
        ro.fdp[mi * n_alpha + ai] = sc.fdp;
        ro.power[mi * n_alpha + ai] = sc.power;
      }

      if (!o.no_rasters && (interp_mode || full_cover)) {
        const auto sel = bfdr_select(decide_on, alphas[0], rule);
        std::vector<std::uint8_t> decided(decide_on.size(), 0);
        for (int i : sel) decided[i] = 1;
        Meta meta = pf.meta;
        meta.emplace_back("method", methods[mi]);
        meta.emplace_back("alpha", fmt_num(alphas[0]));
        const fs::path base = fs::path(o.dirs[r]) / ("field_" + methods[mi]);
        write_raster_csv(base.string() + ".csv", grid, decide_on, decided, meta);
        write_pgm(base.string() + ".pgm", grid, decide_on);
      }
    }
  };

  const int jobs = std::max(1, o.jobs);
  if (jobs == 1 || R == 1) {
    for (int r = 0; r < R; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(jobs, R); ++t) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) run_one(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  ResultsTable table;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (int ai = 0; ai < n_alpha; ++ai) {
      ResultRow row;
      row.method = methods[mi];
      row.alpha = alphas[ai];
      row.n_runs = R;
      double mf = 0.0, mp = 0.0;
      for (int r = 0; r < R; ++r) {
        mf += outs[r].fdp[mi * n_alpha + ai];
        mp += outs[r].power[mi * n_alpha + ai];
      }
      mf /= R;
      mp /= R;
      row.mean_fdr = mf;
      row.mean_power = mp;
      if (R > 1) {
        double vf = 0.0, vp = 0.0;
        for (int r = 0; r < R; ++r) {
          vf += std::pow(outs[r].fdp[mi * n_alpha + ai] - mf, 2);
          vp += std::pow(outs[r].power[mi * n_alpha + ai] - mp, 2);
        }
        row.se_fdr = std::sqrt(vf / (R - 1) / R);
        row.se_power = std::sqrt(vp / (R - 1) / R);
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

  const std::string out = o.out.empty() ? "results.csv" : o.out;
  Meta meta = {{"config_hash", hash0}, {"n_runs", std::to_string(R)}};
  write_results_csv(out, table, meta);

  std::printf("%-8s %8s %10s %10s %10s %10s\n", "method", "alpha", "fdr", "se", "power",
              "se");
  for (const auto& r : table.rows) {
    std::printf("%-8s %8g %10.4f %10.4f %10.4f %10.4f\n", r.method.c_str(), r.alpha,
                r.mean_fdr, r.se_fdr, r.mean_power, r.se_power);
  }
  std::cout << "wrote " << out << "\n";
  if (!table.warnings.empty()) {
    std::cout << table.warnings.size() << " warnings (see results.csv)\n";
  }
  return 0;
}

int cmd_selftest() {
  const SpatialGrid grid = make_grid(32, 32);
  const ScenarioSpec scen = scenario_preset('B', grid, 0);
  Rng rr = Rng(7).derive(100, 0);
  const FieldTruth ft = synthesize_field(grid, scen, rr.derive(0));
  NetworkConfig net;
  net.groups = {{120, 64}};
  net.interpolate = true;
  const SensorLayout layout = build_network_layout(grid, net, rr.derive(1));
  const Measurements meas = sample_measurements(ft.signal_power, layout, scen, rr.derive(2));
  const PValueSet ps = energy_pvalues(meas);

  FitConfig fc;
  fc.seed = rr.derive(3).key();
  const LfdrResult res = lfdr_smom(ps.pvals, fc);
  for (double v : res.lfdrs) {
    if (!(v >= 0.0 && v <= 1.0)) throw numerical_error("lfdr outside [0,1]");
  }
  const LfdrField field = interpolate_lfdr_field(layout, res.lfdrs, grid);
  const auto sel = bfdr_select(field.values, 0.1);
  const Score sc = score(sel, ft.truth);

  std::cout << "field: " << grid.size() << " points, true pi0 " << fmt_num(ft.truth.pi0())
            << "; " << layout.count() << " sensors\n"
            << "fit: d=" << res.chosen_d << " K=" << res.chosen_K << " pi0_hat="
            << fmt_num(res.pi0) << "\n"
            << "decide at alpha=0.1: " << sel.size() << " of " << grid.size()
            << " points, fdp=" << fmt_num(sc.fdp) << " power=" << fmt_num(sc.power) << "\n"
            << "selftest ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Opts o;
  CLI::App app{"spatial multiple hypothesis testing pipeline"};
  app.set_version_flag("--version", "spatmht 0.3.0");
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "synthesize fields and sensor p-values");
  sim->add_option("--scenario", o.scenario, "A, B, C or custom");
  sim->add_option("--config", o.config, "sensor network: 1, 2, 3 or custom");
  sim->add_option("--grid", o.grid, "grid size WxH");
  sim->add_option("--seed", o.seed, "master seed");
  sim->add_option("--n-runs", o.n_runs, "number of Monte Carlo runs");
  sim->add_option("--out", o.out, "output directory (default: out)");
  sim->add_option("--sources", o.sources, "custom scenario: number of sources");
  sim->add_option("--tx-power", o.tx_power, "custom scenario: transmit power");
  sim->add_option("--pathloss", o.pathloss, "custom scenario: path loss exponent");
  sim->add_option("--shadow-sigma", o.shadow_sigma, "custom scenario: shadowing std (dB)");
  sim->add_option("--corr-length", o.corr_length, "custom scenario: shadowing corr length");
  sim->add_option("--noise", o.noise, "custom scenario: noise power");
  sim->add_option("--sensors", o.sensors, "custom network: sensor count");
  sim->add_option("--samples", o.samples, "custom network: samples per sensor");
  sim->add_flag("--interpolate", o.interp_net, "custom network: decide at all grid points");

  auto* fit = app.add_subcommand("fit", "estimate the p-value density and lfdr's");
  fit->add_option("--in", o.in, "pvalues.csv")->required();
  fit->add_option("--method", o.method, "smom or bum");
  fit->add_option("--seed", o.fit_seed, "fit seed (default: from file metadata)");
  fit->add_option("--max-d", o.max_d, "largest vector dimension tried");
  fit->add_option("--permutations", o.permutations, "re-orderings per dimension");
  fit->add_option("--distance", o.distance, "model-fit distance: w1 or ks");
  fit->add_flag("--histogram-distance", o.hist_distance, "fit against the histogram");
  fit->add_option("--partition", o.partition, "p-vector grouping: random or spatial");
  fit->add_option("--out", o.out, "output directory (default: next to input)");

  auto* dec = app.add_subcommand("decide", "threshold sensor lfdr's at FDR level alpha");
  dec->add_option("--in", o.in, "lfdr.csv")->required();
  dec->add_option("--alpha", o.alphas, "FDR levels (default 0.1)");
  dec->add_option("--rule", o.rule, "aggregate rule: mean or sum");
  dec->add_option("--out", o.out, "output directory (default: next to input)");

  auto* itp = app.add_subcommand("interpolate", "extend sensor lfdr's to every grid point");
  itp->add_option("--in", o.in, "lfdr.csv (needs grid metadata)")->required();
  itp->add_option("--alpha", o.alphas, "FDR level for the decided raster (default 0.1)");
  itp->add_option("--rule", o.rule, "aggregate rule: mean or sum");
  itp->add_option("--out", o.out, "output directory (default: next to input)");

  auto* rep = app.add_subcommand("report", "aggregate FDR/power over simulated runs");
  rep->add_option("dirs", o.dirs, "run directories from simulate")->required();
  rep->add_option("--alpha", o.alphas, "FDR levels (default 0.05 0.1 0.2)");
  rep->add_option("--method", o.methods, "methods (default smom bum bh; also oracle)");
  rep->add_option("--rule", o.rule, "aggregate rule: mean or sum");
  rep->add_option("--jobs", o.jobs, "worker threads over runs");
  rep->add_option("--out", o.out, "results CSV path (default results.csv)");
  rep->add_flag("--force", o.force, "aggregate runs with differing config hashes");
  rep->add_flag("--no-rasters", o.no_rasters, "skip per-run field rasters");

  auto* self = app.add_subcommand("selftest", "run a small end-to-end pipeline check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (fit->parsed()) return cmd_fit(o);
    if (dec->parsed()) return cmd_decide(o);
    if (itp->parsed()) return cmd_interpolate(o);
    if (rep->parsed()) return cmd_report(o);
    if (self->parsed()) return cmd_selftest();
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
