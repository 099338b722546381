#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace scpinn {

/// One uniform grid axis. lo and hi are the coordinates of the first and
/// last node, so linspace(lo, hi, n) reproduces the nodes exactly; periodic
/// grids therefore record the last sample, not the domain edge.
struct GridAxis {
  std::string name;
  long long n = 0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Regular multi-axis grid of solution fields. Field data is flattened with
/// the last listed axis varying fastest; every field block has n_points()
/// entries.
struct FieldGrid {
  std::string problem;
  std::vector<GridAxis> axes;
  std::vector<Eigen::VectorXd> fields;

  long long n_points() const;
  Eigen::VectorXd axis_coords(int axis) const;
};

/// Expands the grid into an n_points x ndims matrix of node coordinates,
/// rows ordered like the flattened field data.
Eigen::MatrixXd grid_points(const FieldGrid& g);

/// Stacks the fields into an n_points x nfields matrix.
Eigen::MatrixXd grid_values(const FieldGrid& g);

/// Binary grid file: a text header (magic line with problem tag, variable
/// and axis counts, then one `name n lo hi` line per axis) followed by one
/// little-endian float64 block per field. Round trips are bit exact.
void save_field(const std::string& path, const FieldGrid& g);
FieldGrid load_field(const std::string& path);

}  // namespace scpinn
