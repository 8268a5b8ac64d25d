#pragma once

// Linearization of the indifferent fixed point at 0. The primary object is
// the inverse linearizer psi (psi(0) = 0, psi'(0) = 1) with
// psi(lambda w) = f(psi(w)); phi = psi^{-1} is evaluated by Newton inversion.

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cubiclab/cubic.hpp"
#include "cubiclab/rotation.hpp"
#include "cubiclab/xreal.hpp"

namespace cubiclab {

inline constexpr std::size_t kRadiusOrder = 1024;
inline constexpr std::size_t kMembershipOrder = 256;
inline constexpr double kDefaultSafety = 0.9;

struct LinearizationSeries {
  XComplex lambda;
  XComplex a;
  std::size_t K = 0;
  std::vector<XComplex> psi;  // psi[0] = 0, psi[1] = 1, ..., psi[K]
  double r_hat = 0.0;
  double r_hat_err = 0.0;
  double small_divisor_min = 0.0;  // min |lambda^k - lambda| over 2 <= k <= K
  std::vector<std::complex<double>> scaled;  // psi_k r_hat^k, for screening

  XComplex eval(const XComplex& w) const;
  XComplex derivative(const XComplex& w) const;
};

// Coefficients by (lambda^k - lambda) psi_k = [w^k](a psi^2 + psi^3), then the
// radius estimate. PrecisionError if a divisor drops below 2^{-P/2}.
LinearizationSeries linearizer(const CubicMap& f, std::size_t K);

struct RadiusEstimate {
  double r_hat = 0.0;
  double r_hat_err = 0.0;
};

// exp(-slope) of the least-squares line through log|psi_k| for K/2 <= k <= K
// (zeros skipped); the error compares with the same fit on [K/4, K/2].
RadiusEstimate conformal_radius(const LinearizationSeries& series);
RadiusEstimate conformal_radius(std::span<const XComplex> psi);
RadiusEstimate conformal_radius_from_logs(std::span<const double> log_abs_psi);

// w with psi(w) = z and |w| < r_hat; DomainError otherwise. The seed
// defaults to z itself.
XComplex phi_eval(const LinearizationSeries& series, const XComplex& z,
                  const std::optional<XComplex>& seed = std::nullopt);

// Double-precision inversion used to screen points cheaply; returns w / r_hat.
std::optional<std::complex<double>> phi_screen(const LinearizationSeries& series, std::complex<double> z);

enum class CaptureVerdict { Landed, NotCaptured, Escaped, Unresolved };

struct CaptureResult {
  CaptureVerdict verdict = CaptureVerdict::NotCaptured;
  std::optional<std::size_t> landed_at;
  std::optional<XComplex> w;     // phi(f^k(c)) at the landing step
  std::size_t annulus_hits = 0;  // orbit points seen with rho r_hat <= |w| < r_hat
  std::size_t steps = 0;
};

// First k <= budget with |phi(f^k(c))| < rho r_hat. Orbit points that only
// reach the annulus rho r_hat <= |w| < r_hat make an uncaptured orbit
// Unresolved rather than NotCaptured.
CaptureResult capture_test(const CubicMap& f, const LinearizationSeries& series, const XComplex& c,
                           std::size_t budget, double rho = kDefaultSafety);

struct PathIncrements {
  std::vector<double> increments;  // Im u(b) - Im u(a) per segment
  std::vector<double> errors;
  double total = 0.0;
  double total_error = 0.0;
};

using LogRadiusField = std::function<double(std::complex<double>)>;

// Im u along a polyline from Re u = log r via u' = U_x - i U_y (central
// differences of step h, composite trapezoid per segment). Errors combine
// the trapezoid refinement and halving h.
PathIncrements u_along_path(std::span<const std::complex<double>> path, const LogRadiusField& log_r,
                            double h);
PathIncrements u_along_path(std::span<const std::complex<double>> path, const Multiplier& lambda,
                            std::size_t K, double h);

}  // namespace cubiclab
