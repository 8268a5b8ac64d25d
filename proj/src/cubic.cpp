#include "cubiclab/cubic.hpp"

#include <cmath>
#include <complex>

#include "cubiclab/errors.hpp"

namespace cubiclab {

namespace {

using cd = std::complex<double>;

bool lex_greater(const XComplex& x, const XComplex& y) {
  if (x.re != y.re) return x.re > y.re;
  return x.im > y.im;
}

double abs_d(const XComplex& z) { return std::exp(log_abs(z)); }

double log_abs_d(const cd& z) { return std::log(std::abs(z)); }
double log_abs_d(const XComplex& z) { return log_abs(z); }

bool finite(const cd& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Shared Green-function evaluation over double or extended scalars. Returns
// nullopt when the double path leaves the representable range.
template <class C>
std::optional<GreenResult> green_impl(const C& lambda, const C& a, const C& z0, double R,
                                      double tol, std::size_t budget) {
  const double abs_a = std::exp(log_abs_d(a)), abs_l = std::exp(log_abs_d(lambda));
  const double log_r = std::log(R);
  GreenResult out;
  C z = z0;
  std::size_t n = 0;
  auto step = [&](const C& w) { return ((w + a) * w + lambda) * w; };
  for (; n < budget; ++n) {
    if (log_abs_d(z) > log_r) break;
    z = step(z);
    if constexpr (std::is_same_v<C, cd>) {
      if (!finite(z)) return std::nullopt;
    }
  }
  out.iterations = n;
  if (n == budget && !(log_abs_d(z) > log_r)) {
    // G(z) = 3^{-N} G(z_N) and G <= log R + log 2 on the disk of radius R.
    double bound = std::exp(-static_cast<double>(n) * std::log(3.0) + std::log(log_r + std::log(2.0)));
    out.status = bound <= tol ? GreenStatus::Bounded : GreenStatus::Undecided;
    return out;
  }
  // Telescoping tail: G = 3^{-N} log|z_N| + sum_{j>=N} 3^{-(j+1)} log|z_{j+1}/z_j^3|,
  // with z_{j+1}/z_j^3 = 1 + a/z_j + lambda/z_j^2 and |log| <= 2(|a|/|z|+|lambda|/|z|^2).
  double w3 = std::exp(-static_cast<double>(n) * std::log(3.0));  // 3^{-j}
  double g = w3 * log_abs_d(z);
  for (std::size_t j = n;; ++j) {
    const double lz = log_abs_d(z);
    const double eps = std::exp(std::log(abs_a) - lz) + std::exp(std::log(abs_l) - 2 * lz);
    if (w3 * 2.0 * eps <= tol / 2 || eps == 0.0) break;
    C inv = C(1.0) / z;
    C ratio = C(1.0) + (a + lambda * inv) * inv;
    g += w3 / 3.0 * log_abs_d(ratio);
    z = step(z);
    if constexpr (std::is_same_v<C, cd>) {
      if (!finite(z)) return std::nullopt;
    }
    w3 /= 3.0;
  }
  out.status = GreenStatus::Escaped;
  out.value = g;
  return out;
}

}  // namespace

XComplex CubicMap::operator()(const XComplex& z) const { return ((z + a) * z + lambda) * z; }

XComplex CubicMap::derivative(const XComplex& z) const {
  return (XComplex(3.0) * z + XComplex(2.0) * a) * z + lambda;
}

std::pair<XComplex, XComplex> critical_points(const CubicMap& f) {
  // 3z^2 + 2az + lambda = 0: z = (-a +- s)/3 with s^2 = a^2 - 3 lambda. Take the
  // large-modulus root first and recover the other from z1 z2 = lambda/3.
  XComplex s = sqrt(f.a * f.a - XComplex(3.0) * f.lambda);
  XComplex plus = -f.a + s, minus = -f.a - s;
  XComplex big = norm(plus) >= norm(minus) ? plus : minus;
  XComplex z1, z2;
  if (big.is_zero()) {
    z1 = z2 = XComplex(0.0);
  } else {
    z1 = big / XReal(3.0);
    z2 = f.lambda / (XComplex(3.0) * z1);
  }
  if (lex_greater(z2, z1)) std::swap(z1, z2);
  return {z1, z2};
}

double escape_radius(const CubicMap& f) { return 2.0 * (1.0 + abs_d(f.a) + abs_d(f.lambda)); }

OrbitRecord iterate(const CubicMap& f, const XComplex& z0, std::size_t n, double R) {
  OrbitRecord rec;
  rec.escape_radius = R;
  const XReal r2 = XReal(R) * XReal(R);
  rec.samples.push_back(z0);
  for (std::size_t k = 0;; ++k) {
    if (norm(rec.samples.back()) > r2) {
      rec.escaped_at = k;
      break;
    }
    if (k == n) break;
    rec.samples.push_back(f(rec.samples.back()));
  }
  return rec;
}

GreenResult green(const CubicMap& f, const XComplex& z, double tol, std::size_t budget) {
  if (!(tol > 0)) throw PreconditionError("green: tol must be positive");
  const double R = escape_radius(f);
  // Hardware doubles whenever the inputs fit; the extended path handles the rest.
  if (log_abs(z) < 600 && log_abs(f.a) < 600) {
    if (auto r = green_impl<cd>(to_complex(f.lambda), to_complex(f.a), to_complex(z), R, tol, budget))
      return *r;
  }
  GreenResult r = *green_impl<XComplex>(f.lambda, f.a, z, R, tol, budget);
  r.extended = true;
  return r;
}

LyapunovResult lyapunov(const CubicMap& f, double tol, std::size_t budget) {
  auto [cp, cm] = critical_points(f);
  GreenResult gp = green(f, cp, tol, budget), gm = green(f, cm, tol, budget);
  LyapunovResult out;
  out.extended = gp.extended || gm.extended;
  if (gp.status == GreenStatus::Undecided || gm.status == GreenStatus::Undecided) return out;
  out.status = (gp.status == GreenStatus::Escaped || gm.status == GreenStatus::Escaped)
                   ? GreenStatus::Escaped
                   : GreenStatus::Bounded;
  out.value = std::log(3.0) + gp.value + gm.value;
  return out;
}

}  // namespace cubiclab
