#include "cubiclab/xreal.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <vector>

#include "cubiclab/errors.hpp"

namespace cubiclab {

namespace {

thread_local mpfr_prec_t g_precision = kDefaultPrecision;

constexpr mpfr_rnd_t kRnd = MPFR_RNDN;

void check_mul(mpfr_srcptr r, mpfr_srcptr x, mpfr_srcptr y, const char* op) {
  check_finite(r, op);
  if (mpfr_zero_p(r) && !mpfr_zero_p(x) && !mpfr_zero_p(y))
    throw RangeError(std::string("exponent underflow in ") + op);
}

// For transcendental functions rely on the MPFR flags.
struct FlagCheck {
  const char* op;
  explicit FlagCheck(const char* name) : op(name) { mpfr_clear_flags(); }
  void operator()(mpfr_srcptr r) const {
    if (mpfr_overflow_p()) throw RangeError(std::string("exponent overflow in ") + op);
    if (mpfr_underflow_p()) throw RangeError(std::string("exponent underflow in ") + op);
    check_finite(r, op);
  }
};

}  // namespace

mpfr_prec_t working_precision() { return g_precision; }

void set_working_precision(mpfr_prec_t bits) {
  if (bits < 53 || bits > (1 << 20))
    throw PreconditionError("working precision must be in [53, 2^20] bits");
  g_precision = bits;
}

PrecisionScope::PrecisionScope(mpfr_prec_t bits) : saved_(g_precision) {
  set_working_precision(bits);
}

PrecisionScope::~PrecisionScope() { g_precision = saved_; }

void check_finite(mpfr_srcptr x, const char* op) {
  if (mpfr_inf_p(x)) throw RangeError(std::string("exponent overflow in ") + op);
  if (mpfr_nan_p(x)) throw RangeError(std::string("invalid operation in ") + op);
}

XReal::XReal() {
  mpfr_init2(v_, g_precision);
  mpfr_set_zero(v_, 1);
}

XReal::XReal(double v) {
  if (!std::isfinite(v)) throw RangeError("non-finite double converted to XReal");
  mpfr_init2(v_, g_precision);
  mpfr_set_d(v_, v, kRnd);
}

XReal::XReal(const XReal& o) {
  mpfr_init2(v_, mpfr_get_prec(o.v_));
  mpfr_set(v_, o.v_, kRnd);
}

// Moves steal the limb pointer, the same trick boost::multiprecision uses.
XReal::XReal(XReal&& o) noexcept {
  v_[0] = o.v_[0];
  o.v_[0]._mpfr_d = nullptr;
}

XReal& XReal::operator=(const XReal& o) {
  if (this == &o) return *this;
  if (v_[0]._mpfr_d == nullptr) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
  } else if (mpfr_get_prec(v_) != mpfr_get_prec(o.v_)) {
    mpfr_set_prec(v_, mpfr_get_prec(o.v_));
  }
  mpfr_set(v_, o.v_, kRnd);
  return *this;
}

XReal& XReal::operator=(XReal&& o) noexcept {
  if (this == &o) return *this;
  if (v_[0]._mpfr_d != nullptr) mpfr_clear(v_);
  v_[0] = o.v_[0];
  o.v_[0]._mpfr_d = nullptr;
  return *this;
}

XReal::~XReal() {
  if (v_[0]._mpfr_d != nullptr) mpfr_clear(v_);
}

void XReal::ensure_init() {
  if (v_[0]._mpfr_d == nullptr) {
    mpfr_init2(v_, g_precision);
    mpfr_set_zero(v_, 1);
  }
}

XReal XReal::from_string(std::string_view text) {
  XReal r;
  std::string s(text);
  char* end = nullptr;
  mpfr_strtofr(r.v_, s.c_str(), &end, 10, kRnd);
  if (end == s.c_str() || *end != '\0') throw ValidationError("cannot parse real literal '" + s + "'");
  check_finite(r.v_, "from_string");
  return r;
}

XReal XReal::pi() {
  XReal r;
  mpfr_const_pi(r.v_, kRnd);
  return r;
}

double XReal::to_double() const {
  double d = mpfr_get_d(v_, kRnd);
  if (!std::isfinite(d)) throw RangeError("value does not fit a double");
  if (d == 0.0 && !mpfr_zero_p(v_)) throw RangeError("value underflows a double");
  return d;
}

double XReal::log_abs() const {
  if (mpfr_zero_p(v_)) return -std::numeric_limits<double>::infinity();
  long e = 0;
  double m = mpfr_get_d_2exp(&e, v_, kRnd);
  return std::log(std::fabs(m)) + static_cast<double>(e) * std::log(2.0);
}

std::string XReal::to_string(int digits) const {
  std::vector<char> buf(static_cast<std::size_t>(digits) + 64);
  std::string fmt = "%." + std::to_string(digits) + "Rg";
  int n = mpfr_snprintf(buf.data(), buf.size(), fmt.c_str(), v_);
  if (n < 0) return "nan";
  if (static_cast<std::size_t>(n) >= buf.size()) {
    buf.resize(static_cast<std::size_t>(n) + 1);
    mpfr_snprintf(buf.data(), buf.size(), fmt.c_str(), v_);
  }
  return std::string(buf.data());
}

XReal& XReal::operator+=(const XReal& o) {
  ensure_init();
  if (mpfr_get_prec(v_) != g_precision) mpfr_prec_round(v_, g_precision, kRnd);
  mpfr_add(v_, v_, o.v_, kRnd);
  check_finite(v_, "add");
  return *this;
}

XReal& XReal::operator-=(const XReal& o) {
  ensure_init();
  if (mpfr_get_prec(v_) != g_precision) mpfr_prec_round(v_, g_precision, kRnd);
  mpfr_sub(v_, v_, o.v_, kRnd);
  check_finite(v_, "sub");
  return *this;
}

XReal& XReal::operator*=(const XReal& o) {
  *this = *this * o;
  return *this;
}

XReal& XReal::operator/=(const XReal& o) {
  *this = *this / o;
  return *this;
}

XReal operator-(const XReal& x) {
  XReal r;
  mpfr_neg(r.raw(), x.raw(), kRnd);
  return r;
}

XReal operator+(const XReal& x, const XReal& y) {
  XReal r;
  mpfr_add(r.raw(), x.raw(), y.raw(), kRnd);
  check_finite(r.raw(), "add");
  return r;
}

XReal operator-(const XReal& x, const XReal& y) {
  XReal r;
  mpfr_sub(r.raw(), x.raw(), y.raw(), kRnd);
  check_finite(r.raw(), "sub");
  return r;
}

XReal operator*(const XReal& x, const XReal& y) {
  XReal r;
  mpfr_mul(r.raw(), x.raw(), y.raw(), kRnd);
  check_mul(r.raw(), x.raw(), y.raw(), "mul");
  return r;
}

XReal operator/(const XReal& x, const XReal& y) {
  if (y.is_zero()) throw RangeError("division by zero");
  XReal r;
  mpfr_div(r.raw(), x.raw(), y.raw(), kRnd);
  check_mul(r.raw(), x.raw(), y.raw(), "div");
  return r;
}

bool operator==(const XReal& x, const XReal& y) { return mpfr_equal_p(x.raw(), y.raw()) != 0; }
bool operator<(const XReal& x, const XReal& y) { return mpfr_less_p(x.raw(), y.raw()) != 0; }

XReal abs(const XReal& x) {
  XReal r;
  mpfr_abs(r.raw(), x.raw(), kRnd);
  return r;
}

XReal sqrt(const XReal& x) {
  if (x.sign() < 0) throw RangeError("sqrt of a negative real");
  XReal r;
  mpfr_sqrt(r.raw(), x.raw(), kRnd);
  return r;
}

XReal exp(const XReal& x) {
  XReal r;
  FlagCheck chk("exp");
  mpfr_exp(r.raw(), x.raw(), kRnd);
  chk(r.raw());
  return r;
}

XReal log(const XReal& x) {
  if (x.sign() <= 0) throw RangeError("log of a non-positive real");
  XReal r;
  mpfr_log(r.raw(), x.raw(), kRnd);
  return r;
}

XReal sin(const XReal& x) {
  XReal r;
  mpfr_sin(r.raw(), x.raw(), kRnd);
  return r;
}

XReal cos(const XReal& x) {
  XReal r;
  mpfr_cos(r.raw(), x.raw(), kRnd);
  return r;
}

XReal atan2(const XReal& y, const XReal& x) {
  XReal r;
  mpfr_atan2(r.raw(), y.raw(), x.raw(), kRnd);
  return r;
}

XReal ldexp(const XReal& x, long e) {
  XReal r;
  FlagCheck chk("ldexp");
  mpfr_mul_2si(r.raw(), x.raw(), e, kRnd);
  chk(r.raw());
  return r;
}

// ---------------------------------------------------------------------------
// XComplex

XComplex& XComplex::operator+=(const XComplex& o) {
  re += o.re;
  im += o.im;
  return *this;
}

XComplex& XComplex::operator-=(const XComplex& o) {
  re -= o.re;
  im -= o.im;
  return *this;
}

XComplex& XComplex::operator*=(const XComplex& o) {
  *this = *this * o;
  return *this;
}

XComplex& XComplex::operator/=(const XComplex& o) {
  *this = *this / o;
  return *this;
}

XComplex operator-(const XComplex& x) { return {-x.re, -x.im}; }
XComplex operator+(const XComplex& x, const XComplex& y) { return {x.re + y.re, x.im + y.im}; }
XComplex operator-(const XComplex& x, const XComplex& y) { return {x.re - y.re, x.im - y.im}; }

XComplex operator*(const XComplex& x, const XComplex& y) {
  XComplex r;
  mpfr_fmms(r.re.raw(), x.re.raw(), y.re.raw(), x.im.raw(), y.im.raw(), kRnd);
  mpfr_fmma(r.im.raw(), x.re.raw(), y.im.raw(), x.im.raw(), y.re.raw(), kRnd);
  check_finite(r.re.raw(), "complex mul");
  check_finite(r.im.raw(), "complex mul");
  if (r.is_zero() && !x.is_zero() && !y.is_zero())
    throw RangeError("exponent underflow in complex mul");
  return r;
}

XComplex operator/(const XComplex& x, const XComplex& y) {
  if (y.is_zero()) throw RangeError("complex division by zero");
  // Scale by the exponent of the divisor so |y|^2 cannot leave the range.
  long ey = std::max(mpfr_zero_p(y.re.raw()) ? LONG_MIN : mpfr_get_exp(y.re.raw()),
                     mpfr_zero_p(y.im.raw()) ? LONG_MIN : mpfr_get_exp(y.im.raw()));
  XComplex ys{ldexp(y.re, -ey), ldexp(y.im, -ey)};
  XReal den = norm(ys);
  XComplex num = x * conj(ys);
  XComplex q{num.re / den, num.im / den};
  return ldexp(q, -ey);
}

XComplex operator*(const XComplex& x, const XReal& s) { return {x.re * s, x.im * s}; }
XComplex operator*(const XReal& s, const XComplex& x) { return {x.re * s, x.im * s}; }
XComplex operator/(const XComplex& x, const XReal& s) { return {x.re / s, x.im / s}; }

bool operator==(const XComplex& x, const XComplex& y) { return x.re == y.re && x.im == y.im; }

XComplex conj(const XComplex& z) { return {z.re, -z.im}; }

XReal norm(const XComplex& z) {
  XReal r;
  mpfr_fmma(r.raw(), z.re.raw(), z.re.raw(), z.im.raw(), z.im.raw(), kRnd);
  check_finite(r.raw(), "norm");
  if (r.is_zero() && !z.is_zero()) throw RangeError("exponent underflow in norm");
  return r;
}

XReal abs(const XComplex& z) {
  XReal r;
  mpfr_hypot(r.raw(), z.re.raw(), z.im.raw(), kRnd);
  check_finite(r.raw(), "abs");
  return r;
}

XReal arg(const XComplex& z) { return atan2(z.im, z.re); }

XComplex exp(const XComplex& z) {
  XReal m = exp(z.re);
  return {m * cos(z.im), m * sin(z.im)};
}

XComplex log(const XComplex& z) {
  if (z.is_zero()) throw RangeError("log of zero");
  return {log(abs(z)), arg(z)};
}

XComplex sqrt(const XComplex& z) {
  if (z.is_zero()) return {};
  XReal m = abs(z);
  XReal half = 0.5;
  // Principal root: re >= 0. Use the stable half-angle form.
  XReal t = sqrt((m + abs(z.re)) * half);
  if (z.re.sign() >= 0) return {t, z.im / ldexp(t, 1)};
  XReal s = z.im.sign() < 0 ? -t : t;
  return {abs(z.im) / ldexp(t, 1), s};
}

XComplex expi(const XReal& t) {
  XComplex r;
  mpfr_sin_cos(r.im.raw(), r.re.raw(), t.raw(), kRnd);
  return r;
}

XComplex pow(const XComplex& z, std::uint64_t n) {
  XComplex result(1.0, 0.0);
  XComplex base = z;
  while (n != 0) {
    if (n & 1u) result = result * base;
    n >>= 1u;
    if (n != 0) base = base * base;
  }
  return result;
}

XComplex ldexp(const XComplex& z, long e) { return {ldexp(z.re, e), ldexp(z.im, e)}; }

XComplex unit_root(std::int64_t p, std::int64_t q) {
  if (q <= 0) throw PreconditionError("unit_root needs q > 0");
  // Reduce p mod q first so the angle stays in [0, 2pi).
  std::int64_t pr = ((p % q) + q) % q;
  XReal t = XReal::pi() * XReal(2.0);
  XReal num;
  mpfr_set_si(num.raw(), static_cast<long>(pr), kRnd);
  XReal den;
  mpfr_set_si(den.raw(), static_cast<long>(q), kRnd);
  return expi(t * num / den);
}

std::complex<double> to_complex(const XComplex& z) {
  return {z.re.is_zero() ? 0.0 : z.re.to_double(), z.im.is_zero() ? 0.0 : z.im.to_double()};
}

double log_abs(const XComplex& z) {
  if (z.is_zero()) return -std::numeric_limits<double>::infinity();
  long e = std::max(mpfr_zero_p(z.re.raw()) ? LONG_MIN : mpfr_get_exp(z.re.raw()),
                    mpfr_zero_p(z.im.raw()) ? LONG_MIN : mpfr_get_exp(z.im.raw()));
  double x = mpfr_get_d(ldexp(z.re, -e).raw(), kRnd);
  double y = mpfr_get_d(ldexp(z.im, -e).raw(), kRnd);
  return std::log(std::hypot(x, y)) + static_cast<double>(e) * std::log(2.0);
}

double arg_double(const XComplex& z) { return mpfr_get_d(arg(z).raw(), kRnd); }

}  // namespace cubiclab
