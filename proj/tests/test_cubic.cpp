#include <cmath>
#include <random>

#include "cubiclab/cubic.hpp"
#include "cubiclab/errors.hpp"
#include "cubiclab/rotation.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace cubiclab;
using cubiclab::testing::random_complex;
using cubiclab::testing::rel_err;

namespace {

double bits(int e) { return std::ldexp(1.0, e); }

CubicMap golden_map(const XComplex& a) { return {Multiplier::siegel(CFExpansion::golden()).value(), a}; }

}  // namespace

TEST_CASE("critical points") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    CubicMap f{random_complex(rng, 1.5), random_complex(rng, 3.0)};
    auto [cp, cm] = critical_points(f);
    CHECK(rel_err(cp * cm, f.lambda / XReal(3.0)) <= bits(-192 + 8));
    CHECK(rel_err(cp + cm, f.a * (XReal(-2.0) / XReal(3.0))) <= bits(-192 + 8));
    CHECK((cp.re > cm.re || (cp.re == cm.re && cp.im >= cm.im)));
  }
  auto [p, m] = critical_points(CubicMap{XComplex(1.0), XComplex(0.0)});
  CHECK(p.re.is_zero());
  CHECK(p.im.to_double() == doctest::Approx(1 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(m.im.to_double() == doctest::Approx(-1 / std::sqrt(3.0)).epsilon(1e-15));

  XComplex lambda = unit_root(1, 5);
  auto [s1, s2] = critical_points(CubicMap{lambda, XComplex(0.0)});
  CHECK(rel_err(s1 * s1, -lambda / XReal(3.0)) <= bits(-184));
  CHECK(rel_err(s2, -s1) <= bits(-184));

  // a^2 = 3 lambda: double root at -a/3.
  XComplex a(1.2, -0.4);
  CubicMap d{a * a / XReal(3.0), a};
  auto [d1, d2] = critical_points(d);
  CHECK(rel_err(d1, -a / XReal(3.0)) <= bits(-90));
  CHECK(rel_err(d2, -a / XReal(3.0)) <= bits(-90));
}

TEST_CASE("iterate") {
  CubicMap f = golden_map(XComplex(0.3, 0.1));
  double R = escape_radius(f);
  auto zero = iterate(f, XComplex(0.0), 20, R);
  CHECK(zero.samples.size() == 21);
  CHECK_FALSE(zero.escaped_at);
  for (auto& s : zero.samples) CHECK(s.is_zero());
  auto far = iterate(f, XComplex(1e8), 20, R);
  REQUIRE(far.escaped_at);
  CHECK(*far.escaped_at == 0);
  CHECK(far.samples.size() == 1);

  // lambda = -1, a = 0: f(f(z)) = z - 2z^3 + ... has the closed form below.
  CubicMap g{XComplex(-1.0), XComplex(0.0)};
  XComplex z(0.05, 0.02);
  auto orbit = iterate(g, z, 6, escape_radius(g));
  for (std::size_t k = 0; k + 2 < orbit.samples.size(); k += 2) {
    const XComplex& w = orbit.samples[k];
    XComplex u = -w + w * w * w;
    XComplex ff = -u + u * u * u;
    CHECK(rel_err(orbit.samples[k + 2], ff) <= bits(-185));
  }
  auto esc = iterate(f, XComplex(1.5, 1.0), 100, R);
  if (esc.escaped_at) {
    for (std::size_t k = 0; k < *esc.escaped_at; ++k) CHECK(abs(esc.samples[k]).to_double() <= R);
    CHECK(abs(esc.samples.back()).to_double() > R);
  }
}

TEST_CASE("green function") {
  CubicMap f{XComplex(1.0), XComplex(0.0)};
  for (double r : {1e4, 1e6, 1e8}) {
    auto g = green(f, XComplex(r * 0.6, r * 0.8), 1e-9);
    REQUIRE(g.status == GreenStatus::Escaped);
    CHECK(std::abs(g.value - std::log(r)) <= 1e-3);
    CHECK(g.value >= 0);
  }
  CHECK(std::abs(green(f, XComplex(1e6), 1e-9).value - std::log(1e6)) <= 1e-4);
  auto g0 = green(f, XComplex(0.0), 1e-6);
  CHECK(g0.status == GreenStatus::Bounded);
  CHECK(g0.value == 0.0);
  CHECK(green(f, XComplex(0.0), 1e-6, 5).status == GreenStatus::Undecided);

  // Huge inputs take the extended path and agree with log|z|.
  XComplex huge(ldexp(XReal(1.0), 5000), XReal(0.0));
  auto gh = green(f, huge, 1e-9);
  CHECK(gh.extended);
  CHECK(gh.value == doctest::Approx(5000 * std::log(2.0)).epsilon(1e-12));

  // G(f(z)) = 3 G(z) on escaping samples.
  std::mt19937_64 rng(9);
  CubicMap h = golden_map(XComplex(0.7, -1.1));
  const double tol = 1e-8;
  int tested = 0;
  for (int rep = 0; rep < 40; ++rep) {
    XComplex z = random_complex(rng, 3.0);
    auto gz = green(h, z, tol), gfz = green(h, h(z), tol);
    if (gz.status != GreenStatus::Escaped) continue;
    ++tested;
    CHECK(gfz.status == GreenStatus::Escaped);
    CHECK(std::abs(gfz.value - 3 * gz.value) <= 3 * tol + 1e-12);
    CHECK(gz.value >= 0);
  }
  CHECK(tested > 5);
}

TEST_CASE("lyapunov exponent") {
  const double tol = 1e-6;
  // a = 0 with golden rotation: both critical orbits stay bounded.
  auto l0 = lyapunov(golden_map(XComplex(0.0)), tol);
  CHECK(l0.status == GreenStatus::Bounded);
  CHECK(std::abs(l0.value - std::log(3.0)) <= 2 * tol);

  XComplex a(1e4, 0.0);
  CubicMap f{XComplex(1.0), a};
  auto l = lyapunov(f, tol);
  REQUIRE(l.status == GreenStatus::Escaped);
  auto [cp, cm] = critical_points(f);
  XComplex c = norm(cp) > norm(cm) ? cp : cm;
  CHECK(std::abs(c.re.to_double() + 2e4 / 3) < 1.0);
  // One critical point is near -2a/3 and escapes; the other is near 0.
  double G = green(f, c, tol).value;
  CHECK(std::abs(G - log_abs(c)) < 0.5);
  CHECK(l.value == doctest::Approx(std::log(3.0) + G + green(f, cp == c ? cm : cp, tol).value));

  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    CubicMap g = golden_map(random_complex(rng, 2.5));
    auto short_run = lyapunov(g, tol, 200), long_run = lyapunov(g, tol, 4000);
    if (long_run.status != GreenStatus::Undecided) CHECK(long_run.value >= std::log(3.0) - 2 * tol);
    if (short_run.status != GreenStatus::Undecided && long_run.status != GreenStatus::Undecided)
      CHECK(long_run.value >= short_run.value - tol);
  }
}
