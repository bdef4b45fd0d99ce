#pragma once

#include <cstddef>
#include <vector>

namespace toa {

/// Uniformly sampled closed interval [lo, hi] with `nodes` samples.
struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  int nodes = 0;

  double spacing() const { return (hi - lo) / (nodes - 1); }
  double coord(int i) const { return lo + i * spacing(); }
};

enum class Face { XLow, XHigh, YLow, YHigh };

/// Units and the optional sampled potential. Defaults are natural units.
struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 1.0;
  /// Empty means V == 0. Otherwise one sample per grid node.
  std::vector<double> potential;

  bool is_free() const { return potential.empty(); }
  void validate() const;
};

/// Computational grid for the detector geometry.
///
/// Along x the physical region is [x_far, 0] with the detector surface at
/// x = 0 (outward normal +x). Propagators that continue the field beyond
/// the detector carry `buffer_nodes` extra columns on (0, x_hi]; these are
/// never part of the interior. In 2D the lateral edges y = y_lo, y_hi are
/// reflecting walls and the detector is the whole x = 0 edge.
class Grid {
 public:
  Grid() = default;

  static Grid line(double x_far, int interior_nodes, int buffer_nodes = 0);
  static Grid rectangle(double x_far, int interior_nodes_x, int buffer_nodes, double y_lo,
                        double y_hi, int ny);

  int dim() const { return dim_; }
  const Axis &x() const { return x_; }
  const Axis &y() const { return y_; }
  int nx() const { return x_.nodes; }
  int ny() const { return y_.nodes; }
  std::size_t size() const { return static_cast<std::size_t>(nx()) * ny(); }
  double dx() const { return x_.spacing(); }
  /// Lateral spacing; 1 in 1D so that area elements stay dimensionless.
  double dy() const { return dim_ == 2 ? y_.spacing() : 1.0; }

  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx()) * j;
  }

  /// Column index of the detector plane x = 0.
  int detector_column() const { return detector_column_; }
  int interior_nodes_x() const { return detector_column_ + 1; }
  int buffer_nodes() const { return nx() - detector_column_ - 1; }
  int detector_nodes() const { return ny(); }

  Face detector_face() const { return Face::XHigh; }
  /// Reflecting walls of the computational domain.
  std::vector<Face> far_faces() const;

  /// Trapezoid weight along x restricted to the interior (zero on the buffer).
  double interior_weight_x(int i) const;
  /// Trapezoid weight along y (1 in 1D).
  double weight_y(int j) const;
  /// Surface element dS at detector node j.
  double area_element(int j) const { return weight_y(j); }
  std::vector<double> area_elements() const;

  bool same_shape(const Grid &other) const;

 private:
  int dim_ = 1;
  Axis x_;
  Axis y_{0.0, 0.0, 1};
  int detector_column_ = 0;
};

}  // namespace toa
