#include "spatmht/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spatmht/errors.hpp"

namespace spatmht {

SpatialGrid make_grid(int width, int height) {
  if (width < 1 || height < 1) {
    throw invalid_argument("grid dimensions must be positive");
  }
  if (static_cast<long long>(width) * height > 16'000'000LL) {
    throw invalid_argument("grid has too many points");
  }
  return SpatialGrid{width, height};
}

int GroundTruth::n_active() const {
  return static_cast<int>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

double GroundTruth::pi0() const {
  if (active.empty()) return 1.0;
  return 1.0 - static_cast<double>(n_active()) / static_cast<double>(active.size());
}

SensorLayout all_points_layout(const SpatialGrid& g, int n_samples) {
  if (n_samples < 1) throw invalid_argument("n_samples must be positive");
  SensorLayout layout;
  layout.sensor_index.resize(g.size());
  std::iota(layout.sensor_index.begin(), layout.sensor_index.end(), 0);
  layout.n_samples.assign(g.size(), n_samples);
  return layout;
}

namespace {

// Draw n distinct grid indices.  Uniform mode is a partial Fisher-Yates over
// the index pool; stratified mode cycles over a coarse cell tiling so sensors
// spread more evenly, falling back to the leftover pool if cells fill up.
std::vector<int> draw_positions(const SpatialGrid& g, int n, Rng& rng,
                                bool stratified) {
  const int N = g.size();
  std::vector<int> pool(N);
  std::iota(pool.begin(), pool.end(), 0);

  if (!stratified) {
    std::vector<int> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(N - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  const int nx = std::max(1, static_cast<int>(std::ceil(
      std::sqrt(static_cast<double>(n) * g.width / g.height))));
  const int ny = std::max(1, (n + nx - 1) / nx);
  std::vector<std::uint8_t> used(N, 0);
  std::vector<int> cells(static_cast<std::size_t>(nx) * ny);
  std::iota(cells.begin(), cells.end(), 0);
  rng.shuffle(cells);

  std::vector<int> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    bool placed_any = false;
    for (int cell : cells) {
      if (static_cast<int>(out.size()) >= n) break;
      const int cx = cell % nx, cy = cell / nx;
      const int x0 = cx * g.width / nx, x1 = (cx + 1) * g.width / nx;
      const int y0 = cy * g.height / ny, y1 = (cy + 1) * g.height / ny;
      if (x1 <= x0 || y1 <= y0) continue;
      int idx = -1;
      for (int attempt = 0; attempt < 16; ++attempt) {
        const int x = x0 + static_cast<int>(rng.uniform_int(x1 - x0));
        const int y = y0 + static_cast<int>(rng.uniform_int(y1 - y0));
        const int cand = g.index_of(x, y);
        if (!used[cand]) { idx = cand; break; }
      }
      if (idx >= 0) {
        used[idx] = 1;
        out.push_back(idx);
        placed_any = true;
      }
    }
    if (!placed_any) break;  // all reachable cells saturated
  }
  // leftovers (saturated tiling): draw from whatever is still free
  std::vector<int> free;
  for (int i = 0; i < N; ++i) {
    if (!used[i]) free.push_back(i);
  }
  while (static_cast<int>(out.size()) < n) {
    const int j = static_cast<int>(rng.uniform_int(free.size()));
    out.push_back(free[j]);
    std::swap(free[j], free.back());
    free.pop_back();
  }
  return out;
}

}  // namespace

SensorLayout random_layout_groups(const SpatialGrid& g,
                                  const std::vector<std::pair<int, int>>& groups,
                                  Rng rng, bool stratified) {
  int total = 0;
  for (const auto& [count, n_samples] : groups) {
    if (count < 0 || n_samples < 1) {
      throw invalid_argument("group counts must be >= 0 and n_samples positive");
    }
    total += count;
  }
  if (total < 1 || total > g.size()) {
    throw invalid_argument("sensor count must be in [1, grid size]");
  }

  const std::vector<int> positions = draw_positions(g, total, rng, stratified);
  std::vector<std::pair<int, int>> tagged;  // (grid index, n_samples)
  tagged.reserve(total);
  std::size_t at = 0;
  for (const auto& [count, n_samples] : groups) {
    for (int i = 0; i < count; ++i) tagged.emplace_back(positions[at++], n_samples);
  }
  std::sort(tagged.begin(), tagged.end());

  SensorLayout layout;
  layout.sensor_index.reserve(total);
  layout.n_samples.reserve(total);
  for (const auto& [idx, n_samples] : tagged) {
    layout.sensor_index.push_back(idx);
    layout.n_samples.push_back(n_samples);
  }
  return layout;
}

SensorLayout random_layout(const SpatialGrid& g, int n_sensors, int n_samples,
                           Rng rng, bool stratified) {
  return random_layout_groups(g, {{n_sensors, n_samples}}, rng, stratified);
}

}  // namespace spatmht
