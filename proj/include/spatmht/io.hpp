// File formats for the pipeline stages: CSV interchange with embedded
// reproducibility metadata, JSON sidecars, and PGM rasters.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spatmht/bench.hpp"
#include "spatmht/fieldsim.hpp"
#include "spatmht/grid.hpp"
#include "spatmht/lfdr.hpp"

namespace spatmht {

// Ordered key=value pairs carried in a leading "# k=v k=v ..." comment line of
// every CSV and in a "meta" object of every JSON file.
using Meta = std::vector<std::pair<std::string, std::string>>;

std::string meta_find(const Meta& meta, const std::string& key);  // "" if absent

std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

// Grid dims to/from the "grid" metadata value ("60x60").
std::string grid_meta(const SpatialGrid& g);
SpatialGrid parse_grid_meta(const std::string& value);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lineno;  // physical line of each row, for error context
  Meta meta;
};

// Generic reader: leading '#' lines hold metadata, first real line is the
// header. Handles quoted fields. Throws parse_error with "path:line:" context.
CsvTable read_csv(const std::string& path);
int column_index(const CsvTable& t, const std::string& path, const std::string& name);

void write_pvalues_csv(const std::string& path, const SpatialGrid& grid,
                       const PValueSet& ps, const Meta& meta);
struct PValueFile {
  PValueSet ps;
  Meta meta;
};
PValueFile read_pvalues_csv(const std::string& path);

void write_lfdr_csv(const std::string& path, const SpatialGrid& grid,
                    const std::vector<int>& sensor_index,
                    const std::vector<double>& lfdrs, const Meta& meta);
struct LfdrFile {
  std::vector<int> sensor_index;
  std::vector<double> lfdrs;
  Meta meta;
};
LfdrFile read_lfdr_csv(const std::string& path);

// method,alpha,mean_fdr,se_fdr,mean_power,se_power,n_runs,warnings; the SE
// fields are empty when undefined (single run) and the warnings field joins
// the table warnings that mention the row's method.
void write_results_csv(const std::string& path, const ResultsTable& table,
                       const Meta& meta);

// x,y,lfdr,decided over all grid points, row-major.
void write_raster_csv(const std::string& path, const SpatialGrid& grid,
                      const std::vector<double>& values,
                      const std::vector<uint8_t>& decided, const Meta& meta);

// Per-sensor decisions: sensor_index,x,y,lfdr,decided.
void write_decisions_csv(const std::string& path, const SpatialGrid& grid,
                         const std::vector<int>& sensor_index,
                         const std::vector<double>& lfdrs,
                         const std::vector<uint8_t>& decided, const Meta& meta);

// ASCII PGM, values mapped linearly from [lo, hi] to 0..255.
void write_pgm(const std::string& path, const SpatialGrid& grid,
               const std::vector<double>& values, double lo = 0.0,
               double hi = 1.0);

void write_truth_json(const std::string& path, const SpatialGrid& grid,
                      const FieldTruth& ft, const Meta& meta);
struct TruthFile {
  SpatialGrid grid;
  FieldTruth field;
  Meta meta;
};
TruthFile read_truth_json(const std::string& path);
void write_layout_json(const std::string& path, const SpatialGrid& grid,
                       const SensorLayout& layout, const Meta& meta);
void write_model_json(const std::string& path, const std::string& method,
                      const LfdrResult& res, const Meta& meta);

}  // namespace spatmht
