#include "famloc/box.hpp"

#include <cmath>
#include <sstream>

#include "famloc/errors.hpp"

namespace famloc {

bool BoundingBox::valid() const {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
         std::isfinite(y_max) && x_max > x_min && y_max > y_min;
}

BoundingBox make_box(double x_min, double y_min, double x_max, double y_max) {
  BoundingBox b{x_min, y_min, x_max, y_max};
  if (!b.valid()) {
    std::ostringstream os;
    os << "invalid box (" << x_min << ", " << y_min << ", " << x_max << ", " << y_max
       << "): requires x_max > x_min and y_max > y_min";
    throw ValidationError(os.str());
  }
  return b;
}

}  // namespace famloc
