#include "cubiclab/grid.hpp"

#include <cmath>

#include "cubiclab/errors.hpp"

namespace cubiclab {

void validate(const GridSpec& spec) {
  if (spec.resolution < 2) throw ValidationError("grid resolution must be at least 2");
  if (!(spec.half_width > 0) || !std::isfinite(spec.half_width))
    throw ValidationError("grid half-width must be positive");
  if (!std::isfinite(spec.center.real()) || !std::isfinite(spec.center.imag()))
    throw ValidationError("grid centre must be finite");
}

}  // namespace cubiclab
