#pragma once

#include <complex>
#include <cstddef>

namespace cubiclab {

// Square grid of resolution x resolution cells centred on `center`. Cells are
// enumerated row-major, row 0 at the top (largest imaginary part).
struct GridSpec {
  std::complex<double> center;
  double half_width = 1.0;
  std::size_t resolution = 2;

  std::size_t cells() const { return resolution * resolution; }
  double cell_size() const { return 2.0 * half_width / static_cast<double>(resolution); }

  // Centre of cell (row, col); for odd resolution the middle cell is `center`.
  std::complex<double> point(std::size_t row, std::size_t col) const {
    const double n = static_cast<double>(resolution);
    const double x = (2.0 * static_cast<double>(col) + 1.0 - n) * half_width / n;
    const double y = (n - 2.0 * static_cast<double>(row) - 1.0) * half_width / n;
    return center + std::complex<double>(x, y);
  }
  std::complex<double> point(std::size_t index) const { return point(index / resolution, index % resolution); }
};

void validate(const GridSpec& spec);  // ValidationError unless resolution >= 2 and half_width > 0

}  // namespace cubiclab
