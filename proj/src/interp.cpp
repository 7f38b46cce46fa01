#include "spatmht/interp.hpp"

#include <cmath>

#include "spatmht/errors.hpp"

namespace spatmht {

double tps_basis(double r) {
  if (r < 1e-12) return 0.0;
  return r * r * std::log(r);
}

TpsModel tps_fit(const Eigen::MatrixXd& coords, const Eigen::VectorXd& values) {
  const int S = static_cast<int>(coords.rows());
  if (coords.cols() != 2) throw invalid_argument("coords must be S x 2");
  if (values.size() != S) throw invalid_argument("coords/values size mismatch");
  if (S < 3) throw invalid_argument("need at least 3 points for a TPS fit");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(S + 3, S + 3);
  for (int i = 0; i < S; ++i) {
    for (int j = i + 1; j < S; ++j) {
      const double r = std::hypot(coords(i, 0) - coords(j, 0),
                                  coords(i, 1) - coords(j, 1));
      if (r < 1e-9) throw invalid_argument("duplicate interpolation points");
      A(i, j) = A(j, i) = tps_basis(r);
    }
    A(i, S) = A(S, i) = 1.0;
    A(i, S + 1) = A(S + 1, i) = coords(i, 0);
    A(i, S + 2) = A(S + 2, i) = coords(i, 1);
  }

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S + 3);
  rhs.head(S) = values;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) {
    throw degenerate_geometry("TPS system singular (collinear sensor sites?)");
  }
  const Eigen::VectorXd sol = lu.solve(rhs);

  TpsModel model;
  model.centers = coords;
  model.alpha = sol.head(S);
  model.a0 = sol(S);
  model.ax = sol(S + 1);
  model.ay = sol(S + 2);
  return model;
}

double tps_eval(const TpsModel& model, double x, double y) {
  double acc = model.a0 + model.ax * x + model.ay * y;
  for (int s = 0; s < model.centers.rows(); ++s) {
    acc += model.alpha(s) *
           tps_basis(std::hypot(model.centers(s, 0) - x, model.centers(s, 1) - y));
  }
  return acc;
}

LfdrField interpolate_lfdr_field(const SensorLayout& layout,
                                 const std::vector<double>& lfdrs,
                                 const SpatialGrid& grid) {
  if (static_cast<int>(lfdrs.size()) != layout.count()) {
    throw invalid_argument("lfdrs/layout size mismatch");
  }
  for (double l : lfdrs) {
    if (!(l >= 0.0 && l <= 1.0)) throw invalid_argument("lfdr outside [0,1]");
  }

  LfdrField field;
  if (layout.covers_whole_grid(grid)) {
    field.values = lfdrs;
    return field;
  }

  const int S = layout.count();
  Eigen::MatrixXd coords(S, 2);
  Eigen::VectorXd values(S);
  for (int s = 0; s < S; ++s) {
    coords(s, 0) = grid.x_of(layout.sensor_index[s]);
    coords(s, 1) = grid.y_of(layout.sensor_index[s]);
    values(s) = lfdrs[s];
  }
  const TpsModel model = tps_fit(coords, values);

  field.values.resize(grid.size());
  for (int n = 0; n < grid.size(); ++n) {
    double v = tps_eval(model, grid.x_of(n), grid.y_of(n));
    if (v < 0.0 || v > 1.0) {
      v = std::clamp(v, 0.0, 1.0);
      ++field.clamp_count;
    }
    field.values[n] = v;
  }
  for (int s = 0; s < S; ++s) {
    field.values[layout.sensor_index[s]] = lfdrs[s];
  }
  return field;
}

}  // namespace spatmht
