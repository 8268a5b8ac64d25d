#pragma once

// The marked cubic family f(z) = lambda z + a z^2 + z^3: critical points,
// orbits, the Green function and the Lyapunov exponent.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "cubiclab/xreal.hpp"

namespace cubiclab {

struct CubicMap {
  XComplex lambda;
  XComplex a;

  XComplex operator()(const XComplex& z) const;
  XComplex derivative(const XComplex& z) const;
};

// Roots of 3z^2 + 2az + lambda; .first is the lexicographically larger one
// on (re, im).
std::pair<XComplex, XComplex> critical_points(const CubicMap& f);

// 2(1 + |a| + |lambda|). Beyond it |f(z)| >= |z|^2 / 2.
double escape_radius(const CubicMap& f);

struct OrbitRecord {
  std::vector<XComplex> samples;      // samples[0] = z0
  std::optional<std::size_t> escaped_at;
  double escape_radius = 0.0;
};

// z0, f(z0), ..., f^n(z0), stopping after the first sample with
// |z| > escape_radius.
OrbitRecord iterate(const CubicMap& f, const XComplex& z0, std::size_t n, double escape_radius);

inline constexpr std::size_t kDefaultEscapeBudget = 10000;

enum class GreenStatus { Escaped, Bounded, Undecided };

struct GreenResult {
  GreenStatus status = GreenStatus::Undecided;
  double value = 0.0;          // 0 for Bounded; meaningless for Undecided
  std::size_t iterations = 0;  // orbit steps taken
  bool extended = false;       // true when the XComplex path was needed
};

// G(z) = lim 3^{-n} log|f^n(z)| to absolute error tol. An orbit that stays
// within the escape radius for `budget` steps is Bounded (value 0) when that
// already pins G below tol, Undecided otherwise.
GreenResult green(const CubicMap& f, const XComplex& z, double tol,
                  std::size_t budget = kDefaultEscapeBudget);

struct LyapunovResult {
  GreenStatus status = GreenStatus::Undecided;  // Undecided if either critical point is
  double value = 0.0;                           // log 3 + G(c+) + G(c-)
  bool extended = false;
};

LyapunovResult lyapunov(const CubicMap& f, double tol, std::size_t budget = kDefaultEscapeBudget);

}  // namespace cubiclab
