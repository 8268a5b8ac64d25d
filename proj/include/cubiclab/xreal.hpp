#pragma once

// Extended-precision real and complex scalars on top of MPFR.
//
// Precision is a thread-local "working precision" P (bits of mantissa,
// default 192). Every arithmetic result is rounded to the working precision
// in effect when it is produced, so a computation is bit-reproducible for a
// fixed P. Exponents range over MPFR's default window (about +-2^30), far
// beyond hardware doubles; leaving it raises RangeError instead of producing
// an infinity or a silent zero.

#include <mpfr.h>

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>

namespace cubiclab {

inline constexpr mpfr_prec_t kDefaultPrecision = 192;

mpfr_prec_t working_precision();
void set_working_precision(mpfr_prec_t bits);

// Sets the working precision for the lifetime of the scope.
class PrecisionScope {
 public:
  explicit PrecisionScope(mpfr_prec_t bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  mpfr_prec_t saved_;
};

class XReal {
 public:
  XReal();
  XReal(double v);  // NOLINT: implicit on purpose, doubles are exact at P >= 53
  XReal(const XReal& o);
  XReal(XReal&& o) noexcept;
  XReal& operator=(const XReal& o);
  XReal& operator=(XReal&& o) noexcept;
  ~XReal();

  static XReal from_string(std::string_view text);
  static XReal pi();

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }

  // Throws RangeError when the value does not fit a double.
  double to_double() const;
  // Natural log of |x| as a double; -inf for zero. Never overflows.
  double log_abs() const;
  // Decimal scientific notation with the given number of significant digits.
  std::string to_string(int digits = 20) const;

  XReal& operator+=(const XReal& o);
  XReal& operator-=(const XReal& o);
  XReal& operator*=(const XReal& o);
  XReal& operator/=(const XReal& o);

 private:
  void ensure_init();
  mpfr_t v_;
};

// Raise RangeError if x is infinite or NaN, naming the operation.
void check_finite(mpfr_srcptr x, const char* op);

XReal operator-(const XReal& x);
XReal operator+(const XReal& x, const XReal& y);
XReal operator-(const XReal& x, const XReal& y);
XReal operator*(const XReal& x, const XReal& y);
XReal operator/(const XReal& x, const XReal& y);

bool operator==(const XReal& x, const XReal& y);
bool operator<(const XReal& x, const XReal& y);
inline bool operator>(const XReal& x, const XReal& y) { return y < x; }
inline bool operator<=(const XReal& x, const XReal& y) { return !(y < x); }
inline bool operator>=(const XReal& x, const XReal& y) { return !(x < y); }
inline bool operator!=(const XReal& x, const XReal& y) { return !(x == y); }

XReal abs(const XReal& x);
XReal sqrt(const XReal& x);
XReal exp(const XReal& x);
XReal log(const XReal& x);
XReal sin(const XReal& x);
XReal cos(const XReal& x);
XReal atan2(const XReal& y, const XReal& x);
XReal ldexp(const XReal& x, long e);

struct XComplex {
  XReal re;
  XReal im;

  XComplex() = default;
  XComplex(double r, double i = 0.0) : re(r), im(i) {}  // NOLINT
  XComplex(std::complex<double> z) : re(z.real()), im(z.imag()) {}  // NOLINT
  XComplex(XReal r, XReal i) : re(std::move(r)), im(std::move(i)) {}

  bool is_zero() const { return re.is_zero() && im.is_zero(); }

  XComplex& operator+=(const XComplex& o);
  XComplex& operator-=(const XComplex& o);
  XComplex& operator*=(const XComplex& o);
  XComplex& operator/=(const XComplex& o);
};

XComplex operator-(const XComplex& x);
XComplex operator+(const XComplex& x, const XComplex& y);
XComplex operator-(const XComplex& x, const XComplex& y);
XComplex operator*(const XComplex& x, const XComplex& y);
XComplex operator/(const XComplex& x, const XComplex& y);
XComplex operator*(const XComplex& x, const XReal& s);
XComplex operator*(const XReal& s, const XComplex& x);
XComplex operator/(const XComplex& x, const XReal& s);
bool operator==(const XComplex& x, const XComplex& y);

XComplex conj(const XComplex& z);
XReal norm(const XComplex& z);  // |z|^2
XReal abs(const XComplex& z);
XReal arg(const XComplex& z);   // principal, in (-pi, pi]
XComplex exp(const XComplex& z);
XComplex log(const XComplex& z);  // principal branch
XComplex sqrt(const XComplex& z);  // principal branch
XComplex expi(const XReal& t);    // e^{i t}
XComplex pow(const XComplex& z, std::uint64_t n);
XComplex ldexp(const XComplex& z, long e);

// e^{2 pi i p/q} at the working precision.
XComplex unit_root(std::int64_t p, std::int64_t q);

// Lossy views for reporting and screening.
std::complex<double> to_complex(const XComplex& z);  // RangeError if out of range
double log_abs(const XComplex& z);                     // -inf for zero
double arg_double(const XComplex& z);

}  // namespace cubiclab
