#include <cmath>
#include <random>

#include "cubiclab/errors.hpp"
#include "cubiclab/jet.hpp"
#include "cubiclab/siegel.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cubiclab;
using cubiclab::testing::random_complex;
using cubiclab::testing::rel_err;
using cd = std::complex<double>;

namespace {

XComplex golden_lambda() { return Multiplier::siegel(CFExpansion::golden()).value(); }

double bits(int e) { return std::ldexp(1.0, e); }

}  // namespace

TEST_CASE("low-order coefficients match the hand recursion") {
  XComplex lam = golden_lambda();
  XComplex a(0.3, 0.1);
  auto s = linearizer(CubicMap{lam, a}, 8);
  CHECK(s.psi[0].is_zero());
  CHECK(s.psi[1] == XComplex(1.0));
  CHECK(rel_err(s.psi[2], a / (lam * lam - lam)) <= 1e-12);

  auto s0 = linearizer(CubicMap{lam, XComplex(0.0)}, 64);
  CHECK(rel_err(s0.psi[3], XComplex(1.0) / (lam * lam * lam - lam)) <= 1e-12);
  for (std::size_t k = 0; k <= 64; k += 2) CHECK(s0.psi[k].is_zero());
}

TEST_CASE("functional equation residual through K = 512") {
  XComplex lam = golden_lambda();
  for (XComplex a : {XComplex(0.0), XComplex(0.3, 0.1), XComplex(-0.8, 0.2)}) {
    const std::size_t K = 512;
    auto s = linearizer(CubicMap{lam, a}, K);
    Jet psi(s.psi);
    Jet rhs = jet_compose(cubic_jet(lam, a, K), psi, K);
    XReal scale(0.0), worst(0.0);
    XComplex lk(1.0);
    for (std::size_t k = 0; k <= K; ++k) {
      scale = std::max(scale, abs(s.psi[k]));
      worst = std::max(worst, abs(s.psi[k] * lk - rhs[k]));
      lk = lk * lam;
    }
    CHECK(std::exp(worst.log_abs() - scale.log_abs()) <= bits(-192 + 16));
  }
}

TEST_CASE("small divisors below 2^{-P/2} are refused") {
  // lambda = e^{2 pi i 5/13}: lambda^14 = lambda exactly.
  CHECK_THROWS_AS(linearizer(CubicMap{unit_root(5, 13), XComplex(0.2)}, 20), PrecisionError);
  auto ok = linearizer(CubicMap{unit_root(5, 13), XComplex(0.2)}, 12);
  CHECK(ok.small_divisor_min > 0.0);
}

TEST_CASE("radius estimator on synthetic series") {
  const double rho = 0.37;
  std::vector<XComplex> geo(257), poly(513);
  for (std::size_t k = 1; k < geo.size(); ++k) geo[k] = XComplex(XReal(std::pow(rho, -double(k))), XReal(0.0));
  CHECK(conformal_radius(geo).r_hat == doctest::Approx(rho).epsilon(1e-6));
  for (std::size_t k = 1; k < poly.size(); ++k) {
    XReal v = XReal(double(k) * double(k)) * exp(XReal(-double(k) * std::log(rho)));
    poly[k] = XComplex(v, XReal(0.0));
  }
  CHECK(conformal_radius(poly).r_hat == doctest::Approx(rho).epsilon(1e-2));

  std::vector<double> zeros(129, -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(conformal_radius_from_logs(zeros), StructuralError);
  CHECK_THROWS_AS(conformal_radius(std::span<const XComplex>(geo.data(), 40)), PreconditionError);
}

TEST_CASE("radius doubling stability for the golden mean") {
  XComplex lam = golden_lambda();
  auto half = linearizer(CubicMap{lam, XComplex(0.0)}, 512);
  auto full = linearizer(CubicMap{lam, XComplex(0.0)}, 1024);
  CHECK(std::abs(full.r_hat - half.r_hat) / half.r_hat <= 0.02);
  CHECK(full.r_hat == doctest::Approx(0.4384).epsilon(0.01));
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 3; ++rep) {
    XComplex a = random_complex(rng, 1.0);
    auto s1 = linearizer(CubicMap{lam, a}, 256), s2 = linearizer(CubicMap{lam, a}, 512);
    CHECK(std::abs(s2.r_hat - s1.r_hat) / s1.r_hat <= 0.05);
  }
}

TEST_CASE("phi_eval inverts psi and conjugates f to the rotation") {
  XComplex lam = golden_lambda();
  XComplex a(0.3, 0.1);
  CubicMap f{lam, a};
  auto s = linearizer(f, 256);
  CHECK(phi_eval(s, XComplex(0.0)).is_zero());
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    XComplex w = random_complex(rng, 0.5 * s.r_hat);
    CHECK(rel_err(phi_eval(s, s.eval(w)), w) <= 1e-10);
  }
  for (int rep = 0; rep < 10; ++rep) {
    XComplex z = s.eval(random_complex(rng, 0.6 * s.r_hat));
    CHECK(rel_err(phi_eval(s, f(z)), lam * phi_eval(s, z)) <= 1e-8);
  }
  CHECK_THROWS_AS(phi_eval(s, XComplex(3.0)), DomainError);
}

TEST_CASE("capture test verdicts") {
  XComplex lam = golden_lambda();
  CubicMap tiny{lam, XComplex(1e-3)};
  auto st = linearizer(tiny, 256);
  auto r0 = capture_test(tiny, st, XComplex(0.01, 0.02), 50);
  CHECK(r0.verdict == CaptureVerdict::Landed);
  REQUIRE(r0.landed_at);
  CHECK(*r0.landed_at == 0);

  CubicMap big{lam, XComplex(4.0, 1.0)};
  auto sb = linearizer(big, 256);
  auto [cp, cm] = critical_points(big);
  int escaped = 0;
  for (const auto& c : {cp, cm}) {
    auto r = capture_test(big, sb, c, 200);
    if (r.verdict == CaptureVerdict::Escaped) {
      ++escaped;
      CHECK(green(big, c, 1e-8).value > 0);
    }
  }
  CHECK(escaped == 1);

  // A depth-2 capture in the golden slice.
  CubicMap cap{lam, XComplex(-0.8, 0.2)};
  auto sc = linearizer(cap, 256);
  auto [c1, c2] = critical_points(cap);
  auto rc = capture_test(cap, sc, c1, 200);
  CHECK(rc.verdict == CaptureVerdict::Landed);
  CHECK(rc.landed_at == std::optional<std::size_t>(2));
  CHECK(std::exp(log_abs(*rc.w)) < 0.9 * sc.r_hat);
  CHECK(capture_test(cap, sc, c2, 200).verdict == CaptureVerdict::Unresolved);
  CHECK_THROWS_AS(capture_test(cap, sc, c1, 10, 1.5), PreconditionError);
}

TEST_CASE("u along a path: synthetic fields") {
  std::vector<cd> path{{0, 0}, {0.3, 0.1}, {0.5, -0.2}, {0.1, -0.4}};
  auto constant = u_along_path(path, [](cd) { return 0.7; }, 1e-3);
  for (double d : constant.increments) CHECK(d == 0.0);

  const cd alpha(1.3, -0.6);
  auto linear = u_along_path(path, [&](cd a) { return (alpha * a).real(); }, 1e-3);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    double exact = (alpha * (path[i + 1] - path[i])).imag();
    CHECK(linear.increments[i] == doctest::Approx(exact).epsilon(1e-3));
  }

  // Closed loop in a field harmonic on the enclosed square.
  std::vector<cd> loop{{0, 0}, {0.2, 0}, {0.4, 0}, {0.4, 0.2}, {0.4, 0.4}, {0.2, 0.4}, {0, 0.4}, {0, 0.2}, {0, 0}};
  auto field = [](cd a) { return std::log(std::abs(a - cd(2.0, 1.0))) + (a * a * a).real(); };
  auto closed = u_along_path(loop, field, 1e-3);
  CHECK(std::abs(closed.total) <= 2 * closed.total_error);
  CHECK(closed.total_error < 1e-2);
}

TEST_CASE("u along a path from the conformal radius") {
  std::vector<cd> loop{{0.2, 0.1}, {0.3, 0.1}, {0.3, 0.2}, {0.2, 0.2}, {0.2, 0.1}};
  auto r = u_along_path(loop, Multiplier::siegel(CFExpansion::golden()), 128, 1e-3);
  CHECK(r.increments.size() == 4);
  CHECK(std::abs(r.total) <= 2 * r.total_error + 1e-6);
}
