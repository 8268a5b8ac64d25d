#include "cubiclab/siegel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cubiclab/errors.hpp"

namespace cubiclab {

namespace {

using cd = std::complex<double>;
constexpr mpfr_rnd_t kRnd = MPFR_RNDN;

// acc += x * y using a caller-provided temporary.
inline void mac(XComplex& acc, const XComplex& x, const XComplex& y, XReal& t) {
  mpfr_mul(t.raw(), x.re.raw(), y.re.raw(), kRnd);
  mpfr_add(acc.re.raw(), acc.re.raw(), t.raw(), kRnd);
  mpfr_mul(t.raw(), x.im.raw(), y.im.raw(), kRnd);
  mpfr_sub(acc.re.raw(), acc.re.raw(), t.raw(), kRnd);
  mpfr_mul(t.raw(), x.re.raw(), y.im.raw(), kRnd);
  mpfr_add(acc.im.raw(), acc.im.raw(), t.raw(), kRnd);
  mpfr_mul(t.raw(), x.im.raw(), y.re.raw(), kRnd);
  mpfr_add(acc.im.raw(), acc.im.raw(), t.raw(), kRnd);
}

struct LineFit {
  double slope = 0.0;
  std::size_t points = 0;
};

LineFit fit_slope(std::span<const double> y, std::size_t lo, std::size_t hi) {
  double n = 0, sk = 0, sy = 0;
  for (std::size_t k = lo; k <= hi && k < y.size(); ++k) {
    if (!std::isfinite(y[k])) continue;
    n += 1;
    sk += static_cast<double>(k);
    sy += y[k];
  }
  LineFit fit;
  fit.points = static_cast<std::size_t>(n);
  if (n < 2) return fit;
  const double kbar = sk / n, ybar = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = lo; k <= hi && k < y.size(); ++k) {
    if (!std::isfinite(y[k])) continue;
    const double dk = static_cast<double>(k) - kbar;
    sxy += dk * (y[k] - ybar);
    sxx += dk * dk;
  }
  fit.slope = sxy / sxx;
  return fit;
}

cd poly(std::span<const cd> s, cd t, cd* deriv) {
  cd p = s.back(), dp = 0.0;
  for (std::size_t k = s.size() - 1; k-- > 0;) {
    dp = dp * t + p;
    p = p * t + s[k];
  }
  if (deriv) *deriv = dp;
  return p;
}

// Newton for sum s_k t^k = target from t; nullopt unless it converges inside
// the unit disk.
std::optional<cd> newton_scaled(std::span<const cd> s, cd target, cd t, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    cd d;
    cd r = poly(s, t, &d) - target;
    if (d == cd(0.0)) return std::nullopt;
    cd step = r / d;
    t -= step;
    if (!(std::abs(t) < 1.5)) return std::nullopt;
    if (std::abs(step) <= 1e-14 * std::max(std::abs(t), 1e-300)) {
      if (std::abs(t) >= 1.0) return std::nullopt;
      return t;
    }
  }
  return std::nullopt;
}

void eval_with_derivative(const LinearizationSeries& s, const XComplex& w, XComplex& p, XComplex& dp) {
  p = s.psi.back();
  dp = XComplex(0.0);
  for (std::size_t k = s.psi.size() - 1; k-- > 0;) {
    dp = dp * w + p;
    p = p * w + s.psi[k];
  }
}

}  // namespace

XComplex LinearizationSeries::eval(const XComplex& w) const {
  XComplex acc = psi.back();
  for (std::size_t k = psi.size() - 1; k-- > 0;) acc = acc * w + psi[k];
  return acc;
}

XComplex LinearizationSeries::derivative(const XComplex& w) const {
  XComplex p, dp;
  eval_with_derivative(*this, w, p, dp);
  return dp;
}

LinearizationSeries linearizer(const CubicMap& f, std::size_t K) {
  if (K < 1) throw PreconditionError("linearizer needs K >= 1");
  LinearizationSeries s;
  s.lambda = f.lambda;
  s.a = f.a;
  s.K = K;
  s.psi.assign(K + 1, XComplex(0.0));
  s.psi[1] = XComplex(1.0);
  std::vector<XComplex> sq(K + 1, XComplex(0.0));  // coefficients of psi^2
  const double floor_log = -0.5 * static_cast<double>(working_precision()) * std::log(2.0);
  double min_div = std::numeric_limits<double>::infinity();
  XComplex lam_pow = f.lambda;
  XReal t;
  mpfr_clear_flags();
  for (std::size_t k = 2; k <= K; ++k) {
    lam_pow = lam_pow * f.lambda;
    XComplex div = lam_pow - f.lambda;
    const double ld = log_abs(div);
    if (ld < floor_log)
      throw PrecisionError("linearizer: small divisor |lambda^" + std::to_string(k) +
                           " - lambda| is below 2^{-P/2}; raise the precision");
    min_div = std::min(min_div, std::exp(ld));

    // psi^2 at k uses psi_1 .. psi_{k-1} only, and is symmetric.
    XComplex& s2 = sq[k];
    for (std::size_t i = 1; 2 * i < k; ++i) mac(s2, s.psi[i], s.psi[k - i], t);
    s2 = s2 + s2;
    if (k % 2 == 0) mac(s2, s.psi[k / 2], s.psi[k / 2], t);

    XComplex cube(0.0);
    for (std::size_t i = 1; i + 2 <= k; ++i) mac(cube, s.psi[i], sq[k - i], t);
    s.psi[k] = (f.a * s2 + cube) / div;
  }
  if (mpfr_overflow_p() || mpfr_underflow_p() || mpfr_nanflag_p())
    throw RangeError("linearizer: coefficient left the exponent range");
  s.small_divisor_min = min_div;

  if (K >= 64) {
    RadiusEstimate r = conformal_radius(s.psi);
    s.r_hat = r.r_hat;
    s.r_hat_err = r.r_hat_err;
    s.scaled.resize(K + 1);
    XReal rk(1.0), rr(r.r_hat);
    bool fits = true;
    for (std::size_t k = 0; k <= K && fits; ++k) {
      XComplex v = s.psi[k] * rk;
      if (!v.is_zero() && std::abs(log_abs(v)) > 600) fits = false;
      else s.scaled[k] = to_complex(v);
      rk = rk * rr;
    }
    if (!fits) s.scaled.clear();
  }
  return s;
}

RadiusEstimate conformal_radius_from_logs(std::span<const double> y) {
  const std::size_t K = y.size() - 1;
  if (y.size() < 65) throw PreconditionError("conformal_radius needs K >= 64");
  LineFit top = fit_slope(y, K / 2, K);
  if (top.points < 2)
    throw StructuralError("conformal_radius: the top half of the series vanishes (degenerate series)");
  RadiusEstimate out;
  out.r_hat = std::exp(-top.slope);
  LineFit half = fit_slope(y, K / 4, K / 2);
  out.r_hat_err = half.points >= 2 ? std::abs(out.r_hat - std::exp(-half.slope)) / out.r_hat
                                   : std::numeric_limits<double>::infinity();
  return out;
}

RadiusEstimate conformal_radius(std::span<const XComplex> psi) {
  std::vector<double> y(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) y[k] = log_abs(psi[k]);
  return conformal_radius_from_logs(y);
}

RadiusEstimate conformal_radius(const LinearizationSeries& series) { return conformal_radius(series.psi); }

std::optional<cd> phi_screen(const LinearizationSeries& series, cd z) {
  if (series.scaled.empty() || !(series.r_hat > 0)) return std::nullopt;
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
  if (z == cd(0.0)) return cd(0.0);
  std::span<const cd> s = series.scaled;
  if (auto t = newton_scaled(s, z, z / series.r_hat, 60)) return t;
  // Homotopy from the origin along target = tau z.
  for (int steps : {32, 256}) {
    cd t = 0.0;
    bool ok = true;
    for (int j = 1; j <= steps && ok; ++j) {
      auto next = newton_scaled(s, z * (static_cast<double>(j) / steps), t, 30);
      if (next) t = *next;
      else ok = false;
    }
    if (ok) return t;
  }
  return std::nullopt;
}

XComplex phi_eval(const LinearizationSeries& series, const XComplex& z, const std::optional<XComplex>& seed) {
  if (z.is_zero()) return XComplex(0.0);
  if (!(series.r_hat > 0)) throw DomainError("phi_eval: series has no radius estimate (K < 64)");
  const double lz = log_abs(z);
  const double log_r = std::log(series.r_hat);
  const double P = static_cast<double>(working_precision());
  XComplex w;
  if (seed) {
    w = *seed;
  } else if (auto t = (std::abs(lz) < 600 ? phi_screen(series, to_complex(z)) : std::nullopt)) {
    w = XComplex(*t * series.r_hat);
  } else {
    w = z;
  }
  XComplex p, dp;
  bool converged = false;
  for (int it = 0; it < 200 && !converged; ++it) {
    eval_with_derivative(series, w, p, dp);
    if (dp.is_zero()) break;
    XComplex step = (p - z) / dp;
    w -= step;
    const double lw = log_abs(w);
    if (!(lw < log_r + 0.5)) break;
    converged = step.is_zero() || log_abs(step) - lw <= -(P - 8) * std::log(2.0);
  }
  if (!converged) throw DomainError("phi_eval: Newton inversion did not converge");
  if (!(log_abs(w) < log_r)) throw DomainError("phi_eval: point lies outside the disk of radius r_hat");
  XComplex res = series.eval(w) - z;
  if (!res.is_zero() && log_abs(res) - lz > -0.5 * P * std::log(2.0))
    throw DomainError("phi_eval: residual above 2^{-P/2}");
  return w;
}

CaptureResult capture_test(const CubicMap& f, const LinearizationSeries& series, const XComplex& c,
                           std::size_t budget, double rho) {
  if (!(rho > 0 && rho < 1)) throw PreconditionError("capture_test: rho must lie in (0, 1)");
  CaptureResult out;
  const double R = escape_radius(f);
  const XReal R2 = XReal(R) * XReal(R);

  // psi(D(rho r_hat)) lies inside the disk of radius max |psi| on its boundary.
  double reach = std::numeric_limits<double>::infinity();
  if (!series.scaled.empty()) {
    reach = 0.0;
    for (int j = 0; j < 128; ++j) {
      cd t = std::polar(rho, 2 * M_PI * j / 128);
      reach = std::max(reach, std::abs(poly(series.scaled, t, nullptr)));
    }
    reach *= 1.1;
  }

  XComplex z = c;
  for (std::size_t k = 0; k <= budget; ++k) {
    out.steps = k;
    if (norm(z) > R2) {
      out.verdict = CaptureVerdict::Escaped;
      return out;
    }
    const double lz = log_abs(z);
    if (lz <= std::log(reach)) {
      std::optional<cd> t = phi_screen(series, to_complex(z));
      if (t && std::abs(*t) < rho) {
        try {
          XComplex w = phi_eval(series, z, XComplex(*t * series.r_hat));
          if (w.is_zero() || log_abs(w) < std::log(rho * series.r_hat)) {
            out.verdict = CaptureVerdict::Landed;
            out.landed_at = k;
            out.w = w;
            return out;
          }
          ++out.annulus_hits;
        } catch (const DomainError&) {
          ++out.annulus_hits;
        }
      } else if (t && std::abs(*t) < 1.0) {
        ++out.annulus_hits;
      }
    }
    if (k < budget) z = f(z);
  }
  out.verdict = out.annulus_hits > 0 ? CaptureVerdict::Unresolved : CaptureVerdict::NotCaptured;
  return out;
}

namespace {

cd u_derivative(const LogRadiusField& U, cd a, double h) {
  const double ux = (U(a + cd(h, 0)) - U(a - cd(h, 0))) / (2 * h);
  const double uy = (U(a + cd(0, h)) - U(a - cd(0, h))) / (2 * h);
  return {ux, -uy};
}

}  // namespace

PathIncrements u_along_path(std::span<const cd> path, const LogRadiusField& log_r, double h) {
  if (!(h > 0)) throw PreconditionError("u_along_path: h must be positive");
  PathIncrements out;
  if (path.size() < 2) return out;
  auto wrap = [&](cd a) {
    try {
      return log_r(a);
    } catch (const Error& e) {
      throw DomainError("u_along_path: radius estimate failed near a = (" + std::to_string(a.real()) + ", " +
                        std::to_string(a.imag()) + "): " + e.what());
    }
  };
  LogRadiusField U = wrap;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const cd A = path[i], B = path[i + 1], M = 0.5 * (A + B), da = B - A;
    double est[2], coarse = 0;
    for (int pass = 0; pass < 2; ++pass) {
      const double hh = pass == 0 ? h : h / 2;
      cd dA = u_derivative(U, A, hh), dM = u_derivative(U, M, hh), dB = u_derivative(U, B, hh);
      est[pass] = ((0.25 * dA + 0.5 * dM + 0.25 * dB) * da).imag();
      if (pass == 0) coarse = ((0.5 * dA + 0.5 * dB) * da).imag();
    }
    out.increments.push_back(est[0]);
    out.errors.push_back(std::abs(est[0] - coarse) / 3 + std::abs(est[0] - est[1]));
    out.total += est[0];
    out.total_error += out.errors.back();
  }
  return out;
}

PathIncrements u_along_path(std::span<const cd> path, const Multiplier& lambda, std::size_t K, double h) {
  const XComplex lam = lambda.value();
  LogRadiusField field = [&](cd a) { return std::log(linearizer(CubicMap{lam, XComplex(a)}, K).r_hat); };
  return u_along_path(path, field, h);
}

}  // namespace cubiclab
