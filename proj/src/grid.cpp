#include "toa/grid.hpp"

#include <cmath>
#include <string>

#include "toa/errors.hpp"

namespace toa {

void PhysicalConstants::validate() const {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ConfigError("hbar must be positive", "physics.hbar");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigError("mass must be positive", "physics.mass");
  for (double v : potential)
    if (!std::isfinite(v)) throw ConfigError("potential samples must be finite", "physics.potential");
}

Grid Grid::line(double x_far, int interior_nodes, int buffer_nodes) {
  if (!(x_far < 0.0)) throw ConfigError("x_far must be negative (detector sits at x = 0)", "grid.x_far");
  if (interior_nodes < 8) throw ConfigError("need at least 8 interior nodes", "grid.nodes");
  if (buffer_nodes < 0) throw ConfigError("buffer node count must be non-negative", "grid.buffer");
  Grid g;
  g.dim_ = 1;
  const double h = -x_far / (interior_nodes - 1);
  g.x_ = Axis{x_far, buffer_nodes * h, interior_nodes + buffer_nodes};
  g.detector_column_ = interior_nodes - 1;
  return g;
}

Grid Grid::rectangle(double x_far, int interior_nodes_x, int buffer_nodes, double y_lo, double y_hi,
                     int ny) {
  Grid g = line(x_far, interior_nodes_x, buffer_nodes);
  if (!(y_hi > y_lo)) throw ConfigError("lateral extent must be positive", "grid.y_hi");
  if (ny < 8) throw ConfigError("need at least 8 lateral nodes", "grid.ny");
  g.dim_ = 2;
  g.y_ = Axis{y_lo, y_hi, ny};
  return g;
}

std::vector<Face> Grid::far_faces() const {
  if (dim_ == 1) return {Face::XLow};
  return {Face::XLow, Face::YLow, Face::YHigh};
}

double Grid::interior_weight_x(int i) const {
  if (i < 0 || i > detector_column_) return 0.0;
  const double h = dx();
  return (i == 0 || i == detector_column_) ? 0.5 * h : h;
}

double Grid::weight_y(int j) const {
  if (dim_ == 1) return 1.0;
  const double h = y_.spacing();
  return (j == 0 || j == ny() - 1) ? 0.5 * h : h;
}

std::vector<double> Grid::area_elements() const {
  std::vector<double> a(static_cast<std::size_t>(ny()));
  for (int j = 0; j < ny(); ++j) a[static_cast<std::size_t>(j)] = area_element(j);
  return a;
}

bool Grid::same_shape(const Grid &o) const {
  return dim_ == o.dim_ && x_.nodes == o.x_.nodes && y_.nodes == o.y_.nodes &&
         detector_column_ == o.detector_column_ && x_.lo == o.x_.lo && x_.hi == o.x_.hi &&
         y_.lo == o.y_.lo && y_.hi == o.y_.hi;
}

const char *category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Numerical: return "numerical";
    case ErrorCategory::Validity: return "validity";
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Semantics: return "semantics";
    case ErrorCategory::Undefined: return "undefined";
  }
  return "unknown";
}

}  // namespace toa
