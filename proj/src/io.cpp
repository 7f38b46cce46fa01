#include "spatmht/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "spatmht/errors.hpp"

namespace spatmht {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_escape(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string meta_line(const Meta& meta) {
  std::string line = "#";
  for (const auto& [k, v] : meta) line += " " + k + "=" + v;
  return line;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw io_error("cannot open " + path + " for writing");
  return f;
}

double to_double(const std::string& s, const std::string& path, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw parse_error(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

int to_int(const std::string& s, const std::string& path, int line) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw parse_error(path + ":" + std::to_string(line) + ": not an integer: '" + s + "'");
  }
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& path,
                                        int lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw parse_error(path + ":" + std::to_string(lineno) + ": unterminated quote");
  out.push_back(cur);
  return out;
}

nlohmann::json meta_json(const Meta& meta) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : meta) j[k] = v;
  return j;
}

}  // namespace

std::string meta_find(const Meta& meta, const std::string& key) {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  return "";
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string grid_meta(const SpatialGrid& g) {
  return std::to_string(g.width) + "x" + std::to_string(g.height);
}

SpatialGrid parse_grid_meta(const std::string& value) {
  const auto x = value.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= value.size()) {
    throw parse_error("bad grid metadata '" + value + "' (expected WxH)");
  }
  try {
    return make_grid(std::stoi(value.substr(0, x)), std::stoi(value.substr(x + 1)));
  } catch (const std::logic_error&) {
    throw parse_error("bad grid metadata '" + value + "' (expected WxH)");
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open " + path);
  CsvTable t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(f, line)) {
    ++lineno;
    if (!have_header && !line.empty() && line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) {
          t.meta.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        }
      }
      continue;
    }
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    auto fields = split_csv_line(line, path, lineno);
    if (!have_header) {
      t.columns = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != t.columns.size()) {
        throw parse_error(path + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(t.columns.size()) + " fields, got " +
                          std::to_string(fields.size()));
      }
      t.rows.push_back(std::move(fields));
      t.row_lineno.push_back(lineno);
    }
  }
  if (!have_header) throw parse_error(path + ": empty file, no header row");
  return t;
}

int column_index(const CsvTable& t, const std::string& path, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return static_cast<int>(i);
  }
  throw parse_error(path + ": missing column '" + name + "'");
}

void write_pvalues_csv(const std::string& path, const SpatialGrid& grid,
                       const PValueSet& ps, const Meta& meta) {
  auto f = open_out(path);
  f << meta_line(meta) << "\n";
  f << "sensor_index,x,y,T,p\n";
  for (std::size_t s = 0; s < ps.pvals.size(); ++s) {
    const int n = ps.sensor_index[s];
    f << n << ',' << grid.x_of(n) << ',' << grid.y_of(n) << ',' << ps.n_samples[s]
      << ',' << fmt(ps.pvals[s]) << "\n";
  }
  if (!f) throw io_error("write failed: " + path);
}

PValueFile read_pvalues_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int ci = column_index(t, path, "sensor_index");
  const int cT = column_index(t, path, "T");
  const int cp = column_index(t, path, "p");
  PValueFile out;
  out.meta = t.meta;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int lineno = t.row_lineno[r];
    out.ps.sensor_index.push_back(to_int(row[ci], path, lineno));
    out.ps.n_samples.push_back(to_int(row[cT], path, lineno));
    const double p = to_double(row[cp], path, lineno);
    if (p < 0.0 || p > 1.0) {
      throw parse_error(path + ":" + std::to_string(lineno) + ": p outside [0,1]");
    }
    out.ps.pvals.push_back(p);
  }
  return out;
}

void write_lfdr_csv(const std::string& path, const SpatialGrid& grid,
                    const std::vector<int>& sensor_index,
                    const std::vector<double>& lfdrs, const Meta& meta) {
  if (sensor_index.size() != lfdrs.size()) {
    throw invalid_argument("sensor_index / lfdr size mismatch");
  }
  auto f = open_out(path);
  f << meta_line(meta) << "\n";
  f << "sensor_index,x,y,lfdr\n";
  for (std::size_t s = 0; s < lfdrs.size(); ++s) {
    const int n = sensor_index[s];
    f << n << ',' << grid.x_of(n) << ',' << grid.y_of(n) << ',' << fmt(lfdrs[s]) << "\n";
  }
  if (!f) throw io_error("write failed: " + path);
}

LfdrFile read_lfdr_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int ci = column_index(t, path, "sensor_index");
  const int cl = column_index(t, path, "lfdr");
  LfdrFile out;
  out.meta = t.meta;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int lineno = t.row_lineno[r];
    out.sensor_index.push_back(to_int(row[ci], path, lineno));
    const double v = to_double(row[cl], path, lineno);
    if (v < 0.0 || v > 1.0) {
      throw parse_error(path + ":" + std::to_string(lineno) + ": lfdr outside [0,1]");
    }
    out.lfdrs.push_back(v);
  }
  return out;
}

void write_results_csv(const std::string& path, const ResultsTable& table,
                       const Meta& meta) {
  auto f = open_out(path);
  f << meta_line(meta) << "\n";
  f << "method,alpha,mean_fdr,se_fdr,mean_power,se_power,n_runs,warnings\n";
  for (const ResultRow& r : table.rows) {
    std::string warn;
    const std::string marker = " " + r.method + ": ";
    for (const auto& w : table.warnings) {
      if (w.find(marker) == std::string::npos) continue;
      if (!warn.empty()) warn += "; ";
      warn += w;
    }
    f << r.method << ',' << fmt6(r.alpha) << ',' << fmt6(r.mean_fdr) << ','
      << (std::isnan(r.se_fdr) ? std::string() : fmt6(r.se_fdr)) << ','
      << fmt6(r.mean_power) << ','
      << (std::isnan(r.se_power) ? std::string() : fmt6(r.se_power)) << ','
      << r.n_runs << ',' << csv_escape(warn) << "\n";
  }
  if (!f) throw io_error("write failed: " + path);
}

void write_raster_csv(const std::string& path, const SpatialGrid& grid,
                      const std::vector<double>& values,
                      const std::vector<uint8_t>& decided, const Meta& meta) {
  if (static_cast<int>(values.size()) != grid.size() ||
      static_cast<int>(decided.size()) != grid.size()) {
    throw invalid_argument("raster size does not match grid");
  }
  auto f = open_out(path);
  f << meta_line(meta) << "\n";
  f << "x,y,lfdr,decided\n";
  for (int n = 0; n < grid.size(); ++n) {
    f << grid.x_of(n) << ',' << grid.y_of(n) << ',' << fmt(values[n]) << ','
      << int(decided[n]) << "\n";
  }
  if (!f) throw io_error("write failed: " + path);
}

void write_decisions_csv(const std::string& path, const SpatialGrid& grid,
                         const std::vector<int>& sensor_index,
                         const std::vector<double>& lfdrs,
                         const std::vector<uint8_t>& decided, const Meta& meta) {
  if (sensor_index.size() != lfdrs.size() || decided.size() != lfdrs.size()) {
    throw invalid_argument("decisions column size mismatch");
  }
  auto f = open_out(path);
  f << meta_line(meta) << "\n";
  f << "sensor_index,x,y,lfdr,decided\n";
  for (std::size_t s = 0; s < lfdrs.size(); ++s) {
    const int n = sensor_index[s];
    f << n << ',' << grid.x_of(n) << ',' << grid.y_of(n) << ',' << fmt(lfdrs[s]) << ','
      << int(decided[s]) << "\n";
  }
  if (!f) throw io_error("write failed: " + path);
}

void write_pgm(const std::string& path, const SpatialGrid& grid,
               const std::vector<double>& values, double lo, double hi) {
  if (static_cast<int>(values.size()) != grid.size()) {
    throw invalid_argument("raster size does not match grid");
  }
  if (!(hi > lo)) throw invalid_argument("bad pgm range");
  auto f = open_out(path);
  f << "P2\n" << grid.width << " " << grid.height << "\n255\n";
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      double v = (values[grid.index_of(x, y)] - lo) / (hi - lo);
      v = std::min(1.0, std::max(0.0, v));
      f << static_cast<int>(std::lround(255.0 * v)) << (x + 1 == grid.width ? "\n" : " ");
    }
  }
  if (!f) throw io_error("write failed: " + path);
}

void write_truth_json(const std::string& path, const SpatialGrid& grid,
                      const FieldTruth& ft, const Meta& meta) {
  nlohmann::json j;
  j["grid"] = {{"width", grid.width}, {"height", grid.height}};
  j["active"] = ft.truth.active;
  j["n_active"] = ft.truth.n_active();
  j["pi0"] = ft.truth.pi0();
  std::vector<double> sp(ft.signal_power.data(),
                         ft.signal_power.data() + ft.signal_power.size());
  j["signal_power"] = sp;
  auto srcs = nlohmann::json::array();
  for (const auto& [x, y] : ft.source_xy) srcs.push_back({x, y});
  j["sources"] = srcs;
  j["meta"] = meta_json(meta);
  auto f = open_out(path);
  f << j.dump(1) << "\n";
  if (!f) throw io_error("write failed: " + path);
}

TruthFile read_truth_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
    TruthFile out;
    out.grid = make_grid(j.at("grid").at("width").get<int>(),
                         j.at("grid").at("height").get<int>());
    out.field.truth.active = j.at("active").get<std::vector<std::uint8_t>>();
    if (static_cast<int>(out.field.truth.active.size()) != out.grid.size()) {
      throw parse_error(path + ": active vector does not match grid size");
    }
    const auto sp = j.at("signal_power").get<std::vector<double>>();
    out.field.signal_power =
        Eigen::Map<const Eigen::VectorXd>(sp.data(), sp.size());
    for (const auto& s : j.at("sources")) {
      out.field.source_xy.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
    }
    if (j.contains("meta")) {
      for (const auto& [k, v] : j.at("meta").items()) {
        out.meta.emplace_back(k, v.get<std::string>());
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what());
  }
}

void write_layout_json(const std::string& path, const SpatialGrid& grid,
                       const SensorLayout& layout, const Meta& meta) {
  nlohmann::json j;
  j["grid"] = {{"width", grid.width}, {"height", grid.height}};
  j["sensor_index"] = layout.sensor_index;
  j["n_samples"] = layout.n_samples;
  j["count"] = layout.count();
  j["meta"] = meta_json(meta);
  auto f = open_out(path);
  f << j.dump(1) << "\n";
  if (!f) throw io_error("write failed: " + path);
}

void write_model_json(const std::string& path, const std::string& method,
                      const LfdrResult& res, const Meta& meta) {
  nlohmann::json j;
  j["method"] = method;
  j["pi0"] = res.pi0;
  j["chosen_d"] = res.chosen_d;
  j["chosen_K"] = res.chosen_K;
  j["fit_distance"] = res.fit_distance;
  j["zero_density_count"] = res.zero_density_count;
  std::vector<double> weights(res.model.weights.data(),
                              res.model.weights.data() + res.model.weights.size());
  j["weights"] = weights;
  auto shapes = nlohmann::json::array();
  for (int k = 0; k < res.model.n_components(); ++k) {
    std::vector<double> row(res.model.dim());
    for (int i = 0; i < res.model.dim(); ++i) row[i] = res.model.shapes(k, i);
    shapes.push_back(row);
  }
  j["shapes"] = shapes;
  if (method == "bum" && res.model.n_components() == 2 && res.model.dim() == 1) {
    j["w"] = res.model.weights(0);
    j["a"] = res.model.shapes(1, 0);
  }
  j["warnings"] = res.warnings;
  j["meta"] = meta_json(meta);
  auto f = open_out(path);
  f << j.dump(1) << "\n";
  if (!f) throw io_error("write failed: " + path);
}

}  // namespace spatmht
