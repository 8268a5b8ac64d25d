#include "cubiclab/jet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "cubiclab/errors.hpp"

namespace cubiclab {

namespace {

constexpr mpfr_rnd_t kRnd = MPFR_RNDN;

std::atomic<std::size_t> g_karatsuba_threshold{kDefaultKaratsubaThreshold};

std::vector<XComplex> zeros(std::size_t n) { return std::vector<XComplex>(n); }

// Reject results that left the exponent window somewhere inside a kernel.
struct RangeGuard {
  RangeGuard() { mpfr_clear_flags(); }
  void check(const char* op) const {
    if (mpfr_overflow_p()) throw RangeError(std::string("exponent overflow in ") + op);
    if (mpfr_underflow_p()) throw RangeError(std::string("exponent underflow in ") + op);
    if (mpfr_nanflag_p()) throw RangeError(std::string("invalid operation in ") + op);
  }
};

void reset(mpfr_ptr v) {
  if (mpfr_get_prec(v) != working_precision()) mpfr_set_prec(v, working_precision());
}

// out[k] = sum_{i+j=k} x_i y_j for k < nout. Output entries are overwritten.
void mul_schoolbook(const XComplex* x, std::size_t nx, const XComplex* y, std::size_t ny,
                    XComplex* out, std::size_t nout) {
  XReal t;
  for (std::size_t k = 0; k < nout; ++k) {
    mpfr_ptr re = out[k].re.raw();
    mpfr_ptr im = out[k].im.raw();
    reset(re);
    reset(im);
    mpfr_set_zero(re, 1);
    mpfr_set_zero(im, 1);
    std::size_t lo = k + 1 > ny ? k + 1 - ny : 0;
    std::size_t hi = std::min(k, nx - 1);
    for (std::size_t i = lo; i <= hi; ++i) {
      const XComplex& a = x[i];
      const XComplex& b = y[k - i];
      mpfr_mul(t.raw(), a.re.raw(), b.re.raw(), kRnd);
      mpfr_add(re, re, t.raw(), kRnd);
      mpfr_mul(t.raw(), a.im.raw(), b.im.raw(), kRnd);
      mpfr_sub(re, re, t.raw(), kRnd);
      mpfr_mul(t.raw(), a.re.raw(), b.im.raw(), kRnd);
      mpfr_add(im, im, t.raw(), kRnd);
      mpfr_mul(t.raw(), a.im.raw(), b.re.raw(), kRnd);
      mpfr_add(im, im, t.raw(), kRnd);
    }
  }
}

void add_into(XComplex& dst, const XComplex& src) {
  mpfr_add(dst.re.raw(), dst.re.raw(), src.re.raw(), kRnd);
  mpfr_add(dst.im.raw(), dst.im.raw(), src.im.raw(), kRnd);
}

void sub_into(XComplex& dst, const XComplex& src) {
  mpfr_sub(dst.re.raw(), dst.re.raw(), src.re.raw(), kRnd);
  mpfr_sub(dst.im.raw(), dst.im.raw(), src.im.raw(), kRnd);
}

// Full product of two length-n arrays into out[0 .. 2n-2].
void mul_karatsuba(const XComplex* x, const XComplex* y, std::size_t n, XComplex* out,
                   std::size_t threshold) {
  if (n < threshold || n < 2) {
    mul_schoolbook(x, n, y, n, out, 2 * n - 1);
    return;
  }
  const std::size_t m = n / 2;  // low half length
  const std::size_t h = n - m;  // high half length, h >= m

  std::vector<XComplex> z0 = zeros(2 * m - 1);
  std::vector<XComplex> z2 = zeros(2 * h - 1);
  std::vector<XComplex> z1 = zeros(2 * h - 1);
  mul_karatsuba(x, y, m, z0.data(), threshold);
  mul_karatsuba(x + m, y + m, h, z2.data(), threshold);

  std::vector<XComplex> sx(x + m, x + n);
  std::vector<XComplex> sy(y + m, y + n);
  for (std::size_t i = 0; i < m; ++i) {
    add_into(sx[i], x[i]);
    add_into(sy[i], y[i]);
  }
  mul_karatsuba(sx.data(), sy.data(), h, z1.data(), threshold);
  for (std::size_t i = 0; i < z0.size(); ++i) sub_into(z1[i], z0[i]);
  for (std::size_t i = 0; i < z2.size(); ++i) sub_into(z1[i], z2[i]);

  for (std::size_t i = 0; i < 2 * n - 1; ++i) {
    reset(out[i].re.raw());
    reset(out[i].im.raw());
    mpfr_set_zero(out[i].re.raw(), 1);
    mpfr_set_zero(out[i].im.raw(), 1);
  }
  for (std::size_t i = 0; i < z0.size(); ++i) add_into(out[i], z0[i]);
  for (std::size_t i = 0; i < z1.size(); ++i) add_into(out[i + m], z1[i]);
  for (std::size_t i = 0; i < z2.size(); ++i) add_into(out[i + 2 * m], z2[i]);
}

// Least-squares slope of log|c_k| against k over both operands.
double growth_rate(const std::vector<XComplex>& x, const std::vector<XComplex>& y) {
  double n = 0, sk = 0, sl = 0, skk = 0, skl = 0;
  for (const auto* v : {&x, &y}) {
    for (std::size_t k = 0; k < v->size(); ++k) {
      const double l = log_abs((*v)[k]);
      if (!std::isfinite(l)) continue;
      const double kk = static_cast<double>(k);
      n += 1;
      sk += kk;
      sl += l;
      skk += kk * kk;
      skl += kk * l;
    }
  }
  const double den = n * skk - sk * sk;
  if (n < 2 || den <= 0) return 0.0;
  return (n * skl - sk * sl) / den;
}

// c_k *= s^k
void scale_powers(std::vector<XComplex>& c, const XReal& s) {
  XReal p(1.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k > 0) p *= s;
    if (k > 0 && !c[k].is_zero()) c[k] = c[k] * p;
  }
}

}  // namespace

Jet::Jet(std::size_t order) : c_(order + 1) {}

Jet::Jet(std::vector<XComplex> coeffs) : c_(std::move(coeffs)) {
  if (c_.empty()) throw PreconditionError("a jet needs at least one coefficient");
}

Jet Jet::identity(std::size_t order) {
  Jet j(order);
  if (order >= 1) j[1] = XComplex(1.0);
  return j;
}

Jet Jet::constant(const XComplex& c, std::size_t order) {
  Jet j(order);
  j[0] = c;
  return j;
}

std::size_t Jet::degree() const {
  for (std::size_t k = c_.size(); k-- > 0;)
    if (!c_[k].is_zero()) return k;
  return 0;
}

bool Jet::is_zero() const {
  return std::all_of(c_.begin(), c_.end(), [](const XComplex& c) { return c.is_zero(); });
}

Jet Jet::truncated(std::size_t order) const {
  Jet j(order);
  for (std::size_t k = 0; k <= std::min(order, this->order()); ++k) j[k] = c_[k];
  return j;
}

XComplex Jet::eval(const XComplex& z) const {
  XComplex acc = c_.back();
  for (std::size_t k = c_.size() - 1; k-- > 0;) acc = acc * z + c_[k];
  return acc;
}

Jet operator+(const Jet& x, const Jet& y) {
  Jet r(std::max(x.order(), y.order()));
  for (std::size_t k = 0; k <= r.order(); ++k) {
    if (k <= x.order()) r[k] += x[k];
    if (k <= y.order()) r[k] += y[k];
  }
  return r;
}

Jet operator-(const Jet& x, const Jet& y) {
  Jet r(std::max(x.order(), y.order()));
  for (std::size_t k = 0; k <= r.order(); ++k) {
    if (k <= x.order()) r[k] += x[k];
    if (k <= y.order()) r[k] -= y[k];
  }
  return r;
}

Jet operator*(const XComplex& s, const Jet& x) {
  Jet r(x.order());
  for (std::size_t k = 0; k <= x.order(); ++k) r[k] = s * x[k];
  return r;
}

std::size_t karatsuba_threshold() { return g_karatsuba_threshold.load(); }

void set_karatsuba_threshold(std::size_t n) { g_karatsuba_threshold.store(std::max<std::size_t>(n, 2)); }

namespace {

// Product of x[0..nx) and y[0..ny) truncated to nout coefficients.
std::vector<XComplex> dense_mul(std::vector<XComplex> px, std::vector<XComplex> py, std::size_t nout) {
  const std::size_t nx = px.size(), ny = py.size();
  std::vector<XComplex> out = zeros(std::min(nout, nx + ny - 1));
  const std::size_t threshold = karatsuba_threshold();
  if (std::min(nx, ny) < threshold) {
    mul_schoolbook(px.data(), nx, py.data(), ny, out.data(), out.size());
    return out;
  }
  const std::size_t n = std::max(nx, ny);
  px.resize(n);
  py.resize(n);
  std::vector<XComplex> full = zeros(2 * n - 1);
  // Karatsuba's middle product cancels across coefficient indices, so a
  // geometrically graded series (|c_k| ~ r^{-k}) would lose about
  // n log2(1/r) bits. Substituting z -> rho z first flattens the grading.
  const double sigma = growth_rate(px, py);
  const bool rescale = std::abs(sigma) * static_cast<double>(n) > 8.0;
  const XReal rho(std::exp(-sigma));
  if (rescale) {
    scale_powers(px, rho);
    scale_powers(py, rho);
  }
  mul_karatsuba(px.data(), py.data(), n, full.data(), threshold);
  if (rescale) scale_powers(full, XReal(1.0) / rho);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::move(full[k]);
  return out;
}

// Nonzero coefficients of c[0..n) sit at offset + stride * i.
struct Lacunary {
  std::size_t offset = 0;
  std::size_t stride = 0;  // 0 for a monomial
};

Lacunary lacunary(const Jet& c, std::size_t n) {
  Lacunary l;
  bool first = true;
  for (std::size_t k = 0; k < n; ++k) {
    if (c[k].is_zero()) continue;
    if (first) {
      l.offset = k;
      first = false;
    } else {
      l.stride = std::gcd(l.stride, k - l.offset);
    }
  }
  return l;
}

}  // namespace

Jet jet_mul(const Jet& x, const Jet& y, std::size_t order) {
  RangeGuard guard;
  Jet r(order);
  if (x.is_zero() || y.is_zero()) return r;
  // Only coefficients that can reach the truncation order matter.
  const std::size_t nx = std::min(x.degree(), order) + 1;
  const std::size_t ny = std::min(y.degree(), order) + 1;
  // Series in z^d (odd maps, iterates at a = 0) are multiplied in the
  // compressed variable: half the work, and structural zeros stay exact.
  const Lacunary lx = lacunary(x, nx), ly = lacunary(y, ny);
  std::size_t d = std::gcd(lx.stride, ly.stride);
  if (d == 0) d = 1;
  const std::size_t shift = lx.offset + ly.offset;
  if (shift > order) return r;
  std::vector<XComplex> cx, cy;
  for (std::size_t k = lx.offset; k < nx; k += d) cx.push_back(x[k]);
  for (std::size_t k = ly.offset; k < ny; k += d) cy.push_back(y[k]);
  std::vector<XComplex> prod = dense_mul(std::move(cx), std::move(cy), (order - shift) / d + 1);
  for (std::size_t k = 0; k < prod.size(); ++k) r[shift + d * k] = std::move(prod[k]);
  guard.check("jet_mul");
  return r;
}

Jet jet_compose(const Jet& outer, const Jet& inner, std::size_t order) {
  if (!inner[0].is_zero())
    throw PreconditionError("jet_compose: inner series must vanish at the origin");
  const std::size_t top = std::min(outer.degree(), order);
  Jet acc = Jet::constant(outer[top], order);
  Jet inner_t = inner.truncated(order);
  for (std::size_t k = top; k-- > 0;) {
    acc = jet_mul(acc, inner_t, order);
    acc[0] += outer[k];
  }
  return acc;
}

Jet cubic_jet(const XComplex& lambda, const XComplex& a, std::size_t order) {
  if (order < 3) throw PreconditionError("cubic_jet needs order >= 3");
  Jet j(order);
  j[1] = lambda;
  j[2] = a;
  j[3] = XComplex(1.0);
  return j;
}

}  // namespace cubiclab
