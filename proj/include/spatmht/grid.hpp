// Rectangular observation grid, ground-truth labels and sensor layouts.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spatmht/rng.hpp"

namespace spatmht {

// Grid points are indexed row-major: n = y*width + x.
struct SpatialGrid {
  int width = 0;
  int height = 0;

  int size() const { return width * height; }
  double x_of(int n) const { return static_cast<double>(n % width); }
  double y_of(int n) const { return static_cast<double>(n / width); }
  int index_of(int x, int y) const { return y * width + x; }
};

SpatialGrid make_grid(int width, int height);

// Per-grid-point truth: true where a signal is actually present.
struct GroundTruth {
  std::vector<std::uint8_t> active;

  int n_active() const;
  double pi0() const;  // fraction of null (inactive) points
};

// Sensor positions (grid indices, strictly increasing) and per-sensor sample counts.
struct SensorLayout {
  std::vector<int> sensor_index;
  std::vector<int> n_samples;

  int count() const { return static_cast<int>(sensor_index.size()); }
  bool covers_whole_grid(const SpatialGrid& g) const {
    return count() == g.size();
  }
};

SensorLayout all_points_layout(const SpatialGrid& g, int n_samples);

// n_sensors distinct positions drawn uniformly; stratified mode spreads the
// draws over roughly equal-area cells for more even coverage.
SensorLayout random_layout(const SpatialGrid& g, int n_sensors, int n_samples,
                           Rng rng, bool stratified = false);

// Heterogeneous variant: groups of (count, n_samples) placed in one pass.
SensorLayout random_layout_groups(const SpatialGrid& g,
                                  const std::vector<std::pair<int, int>>& groups,
                                  Rng rng, bool stratified = false);

}  // namespace spatmht
