// Thin-plate-spline interpolation of sensor lfdr's to the full grid:
// phi(r) = r^2 ln r radial basis plus an affine part.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spatmht/grid.hpp"

namespace spatmht {

struct TpsModel {
  Eigen::MatrixXd centers;  // S x 2
  Eigen::VectorXd alpha;    // S radial weights, orthogonal to (1, x, y)
  double a0 = 0.0, ax = 0.0, ay = 0.0;
};

double tps_basis(double r);  // r^2 ln r, 0 below r = 1e-12

// Solves the dense (S+3) symmetric system [Phi P; P^T 0][alpha; c] = [v; 0].
TpsModel tps_fit(const Eigen::MatrixXd& coords, const Eigen::VectorXd& values);

double tps_eval(const TpsModel& model, double x, double y);

struct LfdrField {
  std::vector<double> values;  // per grid point, in [0,1]
  int clamp_count = 0;         // interpolants pushed back into [0,1]
};

// Fit at the sensor locations, evaluate everywhere, clamp to [0,1], then put
// the original lfdr values back at the sensors.
LfdrField interpolate_lfdr_field(const SensorLayout& layout,
                                 const std::vector<double>& lfdrs,
                                 const SpatialGrid& grid);

}  // namespace spatmht
