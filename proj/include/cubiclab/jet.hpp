#pragma once

// Truncated power series ("jets") over XComplex.
//
// A Jet of order M stores exactly M+1 dense coefficients c_0..c_M, c_k being
// the coefficient of z^k. Products and compositions are truncated at the
// requested order; coefficients up to that order are what exact arithmetic
// would give, up to rounding at the working precision.

#include <cstddef>
#include <span>
#include <vector>

#include "cubiclab/xreal.hpp"

namespace cubiclab {

class Jet {
 public:
  explicit Jet(std::size_t order = 0);
  explicit Jet(std::vector<XComplex> coeffs);

  static Jet identity(std::size_t order);
  static Jet constant(const XComplex& c, std::size_t order);

  std::size_t order() const { return c_.size() - 1; }
  std::size_t size() const { return c_.size(); }
  const XComplex& operator[](std::size_t k) const { return c_[k]; }
  XComplex& operator[](std::size_t k) { return c_[k]; }
  std::span<const XComplex> coeffs() const { return c_; }

  // Index of the highest nonzero coefficient, 0 for the zero jet.
  std::size_t degree() const;
  bool is_zero() const;

  // Same series at another order, zero-padded when growing.
  Jet truncated(std::size_t order) const;

  // Value of the polynomial c_0 + ... + c_M z^M (Horner).
  XComplex eval(const XComplex& z) const;

 private:
  std::vector<XComplex> c_;
};

Jet operator+(const Jet& x, const Jet& y);
Jet operator-(const Jet& x, const Jet& y);
Jet operator*(const XComplex& s, const Jet& x);

// Length at or above which jet_mul switches from schoolbook convolution to
// Karatsuba. Tuned on a 192-bit working precision (see bench in tools/).
inline constexpr std::size_t kDefaultKaratsubaThreshold = 32;
std::size_t karatsuba_threshold();
void set_karatsuba_threshold(std::size_t n);

// Cauchy product truncated at `order`.
Jet jet_mul(const Jet& x, const Jet& y, std::size_t order);

// outer(inner(z)) truncated at `order`; inner must vanish at 0.
Jet jet_compose(const Jet& outer, const Jet& inner, std::size_t order);

// The marked cubic lambda z + a z^2 + z^3 as a jet of the given order (>= 3).
Jet cubic_jet(const XComplex& lambda, const XComplex& a, std::size_t order);

}  // namespace cubiclab
