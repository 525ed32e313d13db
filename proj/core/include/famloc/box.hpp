#ifndef FAMLOC_BOX_HPP_
#define FAMLOC_BOX_HPP_

namespace famloc {

/// Axis-aligned box in continuous image coordinates, origin top-left.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  /// Finite coordinates and strictly positive extent on both axes.
  bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Builds a box, throwing ValidationError unless it is valid.
BoundingBox make_box(double x_min, double y_min, double x_max, double y_max);

}  // namespace famloc

#endif  // FAMLOC_BOX_HPP_
