#include <cmath>

#include "cubiclab/errors.hpp"
#include "cubiclab/rotation.hpp"
#include "doctest.h"

using namespace cubiclab;

namespace {

CFExpansion twos(int count) { return {0, std::vector<std::int64_t>(count, 2), CFExpansion::Tail::None}; }

}  // namespace

TEST_CASE("parse and print") {
  auto g = CFExpansion::parse("[0;1,1,...]");
  CHECK(g.a0 == 0);
  CHECK(g.tail == CFExpansion::Tail::AllOnes);
  CHECK(g.partials == std::vector<std::int64_t>{1, 1});
  CHECK(CFExpansion::parse("[0;...]").partials.empty());
  auto r = CFExpansion::parse(" [0; 3] ");
  CHECK(r.partials == std::vector<std::int64_t>{3});
  CHECK(r.tail == CFExpansion::Tail::None);
  CHECK(CFExpansion::parse(r.to_string()) == r);
  CHECK(CFExpansion::parse(g.to_string()) == g);
  CHECK_THROWS_AS(CFExpansion::parse("0;1,1"), ValidationError);
  CHECK_THROWS_AS(CFExpansion::parse("[0;1,0]"), ValidationError);
  CHECK_THROWS_AS(CFExpansion::parse("[0;...,2]"), ValidationError);
  CHECK_THROWS_AS(CFExpansion::parse("[0;x]"), ValidationError);
}

TEST_CASE("convergents") {
  auto c = convergents(CFExpansion::golden(), 6);
  std::int64_t fib[] = {1, 1, 2, 3, 5, 8, 13};
  for (int n = 0; n <= 6; ++n) {
    CHECK(c[n].q == fib[n]);
    CHECK(c[n].n == n);
  }
  auto t = convergents(twos(10), 3);
  CHECK(t[0].p == 0);
  CHECK(t[0].q == 1);
  CHECK(t[1].p == 1);
  CHECK(t[1].q == 2);
  CHECK(t[2].p == 2);
  CHECK(t[2].q == 5);
  CHECK(t[3].p == 5);
  CHECK(t[3].q == 12);
  auto third = CFExpansion::parse("[0;3]");
  CHECK(convergents(third, 1).back().q == 3);
  CHECK_THROWS_AS(convergents(third, 2), PreconditionError);
  CHECK_THROWS_AS(convergents(CFExpansion::golden(), 200), RangeError);
}

TEST_CASE("cf_value") {
  CHECK(cf_value(CFExpansion::golden()).to_double() == doctest::Approx(0.61803398874989).epsilon(1e-14));
  CFExpansion two_then_ones{0, {2}, CFExpansion::Tail::AllOnes};
  double g = (std::sqrt(5.0) - 1) / 2;
  CHECK(cf_value(two_then_ones).to_double() == doctest::Approx(g * g).epsilon(1e-14));
  XReal third = cf_value(CFExpansion::parse("[0;3]"));
  CHECK(std::abs((third - XReal(1.0) / XReal(3.0)).to_double()) == 0.0);
}

TEST_CASE("convergents approximate the value") {
  for (auto cf : {CFExpansion::golden(), CFExpansion::parse("[0;2,5,1,7,...]"), CFExpansion::parse("[1;3,1,1,40,...]")}) {
    XReal theta = cf_value(cf);
    auto c = convergents(cf, 30);
    for (int n = 0; n < 30; ++n) {
      XReal err = abs(theta - XReal(static_cast<double>(c[n].p)) / XReal(static_cast<double>(c[n].q)));
      double bound = 1.0 / (static_cast<double>(c[n].q) * static_cast<double>(c[n + 1].q));
      CHECK(err.to_double() <= bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("brjuno sums") {
  auto golden = CFExpansion::golden();
  double prev = -1;
  for (int N = 0; N <= 20; ++N) {
    double s = brjuno_sum(golden, N).partial_sum;
    CHECK(s >= prev);
    prev = s;
  }
  auto c = convergents(golden, 21);
  double window = 0;
  for (int n = 16; n <= 20; ++n) window += std::log(double(c[n + 1].q)) / double(c[n].q);
  CHECK(brjuno_sum(golden, 20).partial_sum - brjuno_sum(golden, 15).partial_sum <= window + 1e-15);

  // The tail bound dominates a long direct continuation of the sum.
  for (int N : {3, 10, 20}) {
    auto b = brjuno_sum(golden, N);
    REQUIRE(b.tail_bound);
    double rest = brjuno_sum(golden, 85).partial_sum - b.partial_sum;
    CHECK(rest <= *b.tail_bound);
    CHECK(*b.tail_bound < 40 * rest + 1e-300);
  }
  CHECK_FALSE(brjuno_sum(twos(30), 10).tail_bound);

  // A spike a_k = 10^6 adds log(q_k)/q_{k-1} with q_k ~ 10^6 q_{k-1}.
  CFExpansion spike{0, {1, 1, 1, 1, 1000000}, CFExpansion::Tail::AllOnes};
  auto cs = convergents(spike, 6);
  double jump = brjuno_sum(spike, 4).partial_sum - brjuno_sum(spike, 3).partial_sum;
  CHECK(jump == doctest::Approx(std::log(1e6 * double(cs[4].q)) / double(cs[4].q)).epsilon(1e-6));
}

TEST_CASE("noble truncation") {
  auto golden = CFExpansion::golden();
  for (int n : {0, 1, 5, 17}) CHECK(noble_truncate(golden, n) == golden);
  auto t = noble_truncate(twos(40), 1);
  double g = (std::sqrt(5.0) - 1) / 2;
  CHECK(cf_value(t).to_double() == doctest::Approx(g * g).epsilon(1e-14));
  CHECK(cf_value(twos(40)).to_double() == doctest::Approx(std::sqrt(2.0) - 1).epsilon(1e-14));
  CFExpansion base = CFExpansion::parse("[2;5,3,1,...]");
  auto t0 = noble_truncate(base, 0);
  CHECK(cf_value(t0).to_double() == doctest::Approx(2 + g).epsilon(1e-14));

  auto cf = CFExpansion::parse("[0;3,1,4,1,5,9,2,6,...]");
  auto full = convergents(cf, 12);
  for (int n = 1; n <= 8; ++n) {
    auto tn = convergents(noble_truncate(cf, n), n);
    for (int i = 0; i <= n; ++i) CHECK(tn[i].q == full[i].q);
  }
  CHECK_THROWS_AS(noble_truncate(CFExpansion::parse("[0;3]"), 2), PreconditionError);
}

TEST_CASE("bounded type") {
  auto g = is_bounded_type(CFExpansion::golden());
  CHECK(g.bounded);
  CHECK(g.bound == 1);
  auto t = is_bounded_type(CFExpansion{0, {2}, CFExpansion::Tail::AllOnes});
  CHECK(t.bounded);
  CHECK(t.bound == 2);
  auto r = is_bounded_type(CFExpansion::parse("[0;3]"));
  CHECK_FALSE(r.bounded);
  CHECK(r.rational);
}

TEST_CASE("multipliers re-evaluate at the working precision") {
  auto m = Multiplier::siegel(CFExpansion::golden());
  XComplex lo = m.value();
  PrecisionScope scope(500);
  XComplex hi = m.value();
  CHECK(hi.re.precision() == 500);
  CHECK(std::abs((hi.re - lo.re).to_double()) < 1e-55);
  auto r = Multiplier::rational(3, 8);
  XComplex z = r.value();
  CHECK(abs(pow(z, 8) - XComplex(1.0)).log_abs() < -490 * std::log(2.0));
}
