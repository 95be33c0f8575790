#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "kolmo/lie_geometry.hpp"
#include "kolmo/linalg.hpp"

namespace kolmo {

/// Axis-aligned space-time box; axis N is time.
struct Box {
  std::vector<double> lo, hi;

  int n_axes() const { return static_cast<int>(lo.size()); }
  int n_space() const { return n_axes() - 1; }
  double length(int axis) const { return hi[axis] - lo[axis]; }

  /// Bounding box of the unit cylinder in R^{N+1}.
  static Box unit_cylinder(int n_space);
};

/// Values on a uniform cell-centered lattice over a Box, row-major over
/// (x1, ..., xN, t) with the time index fastest. Spatial axes need at least
/// 8 nodes; a time resolution of 1 models a single slice.
class GridFunction {
 public:
  GridFunction(Box box, std::vector<int> resolution);

  static GridFunction sample(Box box, std::vector<int> resolution,
                             const std::function<double(const Vector&, double)>& f);

  const Box& box() const { return box_; }
  const std::vector<int>& resolution() const { return res_; }
  int n_space() const { return box_.n_space(); }
  int n_axes() const { return box_.n_axes(); }

  double h(int axis) const { return h_[axis]; }
  double coord(int axis, int idx) const { return box_.lo[axis] + (idx + 0.5) * h_[axis]; }
  double cell_volume() const { return cell_volume_; }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t flat) const { return values_[flat]; }
  double& operator[](std::size_t flat) { return values_[flat]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  std::size_t flat_index(const std::vector<int>& idx) const;
  void unflatten(std::size_t flat, std::vector<int>& idx) const;
  std::size_t stride(int axis) const { return strides_[axis]; }

  /// Node coordinates of a flat index as a group point.
  GroupPoint point(std::size_t flat) const;
  void node_coords(std::size_t flat, Vector& x, double& t) const;

  double min_value() const;
  double max_value() const;
  bool all_finite() const;
  bool all_positive() const;

  /// CSV schema: `# box=lo:hi,... resolution=r,...` header, then one row per
  /// node in row-major order with columns x1..xN, t, value at 17 significant
  /// digits. Re-import reproduces values bit for bit.
  void write_csv(std::ostream& os) const;
  static GridFunction read_csv(std::istream& is);
  void save_csv(const std::string& path) const;
  static GridFunction load_csv(const std::string& path);

 private:
  Box box_;
  std::vector<int> res_;
  std::vector<double> h_;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
  double cell_volume_ = 0.0;
};

}  // namespace kolmo
