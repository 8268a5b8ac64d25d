#include "cubiclab/rotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "cubiclab/errors.hpp"

namespace cubiclab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  s = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("bad continued fraction literal '" + std::string(whole) + "'");
  return v;
}

std::int64_t checked_step(std::int64_t a, std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, x, &r) || __builtin_add_overflow(r, y, &r))
    throw RangeError("convergent overflows 64-bit integers");
  return r;
}

XReal golden_tail() { return (sqrt(XReal(5.0)) - XReal(1.0)) / XReal(2.0); }

}  // namespace

CFExpansion CFExpansion::parse(std::string_view text) {
  std::string_view s = trim(text);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw ValidationError("continued fraction must look like [a0;a1,a2,...], got '" +
                          std::string(text) + "'");
  s = s.substr(1, s.size() - 2);
  CFExpansion cf;
  auto semi = s.find(';');
  cf.a0 = parse_int(s.substr(0, semi), text);
  if (semi == std::string_view::npos) return cf;
  std::string_view rest = s.substr(semi + 1);
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string_view item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (item == "..." || item == "…") {
      if (!trim(rest).empty()) throw ValidationError("'...' must end the literal '" + std::string(text) + "'");
      cf.tail = Tail::AllOnes;
      break;
    }
    std::int64_t a = parse_int(item, text);
    if (a < 1) throw ValidationError("partial quotients must be >= 1 in '" + std::string(text) + "'");
    cf.partials.push_back(a);
  }
  return cf;
}

std::string CFExpansion::to_string() const {
  std::string s = "[" + std::to_string(a0);
  for (std::size_t i = 0; i < partials.size(); ++i) s += (i == 0 ? ";" : ",") + std::to_string(partials[i]);
  if (tail == Tail::AllOnes) s += partials.empty() ? ";..." : ",...";
  return s + "]";
}

std::optional<std::int64_t> CFExpansion::partial(std::size_t i) const {
  if (i == 0) return a0;
  if (i <= partials.size()) return partials[i - 1];
  if (tail == Tail::AllOnes) return 1;
  return std::nullopt;
}

std::vector<Convergent> convergents(const CFExpansion& cf, int n_max) {
  if (n_max < 0) throw PreconditionError("convergents: n_max must be >= 0");
  std::vector<Convergent> out;
  std::int64_t p_prev = 1, q_prev = 0, p = cf.a0, q = 1;
  out.push_back({p, q, 0});
  for (int n = 1; n <= n_max; ++n) {
    auto a = cf.partial(static_cast<std::size_t>(n));
    if (!a)
      throw PreconditionError("convergents: index " + std::to_string(n) +
                              " is past the end of the finite expansion " + cf.to_string());
    std::int64_t pn = checked_step(*a, p, p_prev);
    std::int64_t qn = checked_step(*a, q, q_prev);
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    out.push_back({p, q, n});
  }
  return out;
}

XReal cf_value(const CFExpansion& cf) {
  const int m = static_cast<int>(cf.partials.size());
  auto conv = convergents(cf, m);
  // Decimal strings keep 64-bit integers exact at any precision.
  auto to_x = [](std::int64_t v) { return XReal::from_string(std::to_string(v)); };
  XReal pm = to_x(conv[m].p), qm = to_x(conv[m].q);
  if (cf.tail == CFExpansion::Tail::None) return pm / qm;
  XReal pm1 = m == 0 ? XReal(1.0) : to_x(conv[m - 1].p);
  XReal qm1 = m == 0 ? XReal(0.0) : to_x(conv[m - 1].q);
  // The tail [1;1,1,...] has value 1/g.
  XReal g = golden_tail();
  return (pm + pm1 * g) / (qm + qm1 * g);
}

BrjunoSum brjuno_sum(const CFExpansion& cf, int N) {
  if (N < 0) throw PreconditionError("brjuno_sum: N must be >= 0");
  const bool infinite = cf.tail == CFExpansion::Tail::AllOnes;
  const int have = infinite ? N + 2 : std::min(N + 2, static_cast<int>(cf.partials.size()));
  if (have < N + 1)
    throw PreconditionError("brjuno_sum: q_{N+1} is not defined for " + cf.to_string());
  auto conv = convergents(cf, have);
  BrjunoSum out;
  for (int n = 0; n <= N; ++n)
    out.partial_sum += std::log(static_cast<double>(conv[n + 1].q)) / static_cast<double>(conv[n].q);

  BoundedType bt = is_bounded_type(cf);
  if (bt.bounded && static_cast<int>(conv.size()) > N + 2 && conv[N + 1].q >= 2) {
    // Along each parity class q at least doubles every two steps and
    // q_{m+1} <= (A+1) q_m; (c + log x)/x is decreasing for x >= 2, so each
    // chain is dominated by a geometric series.
    const double c = std::log(static_cast<double>(bt.bound + 1));
    double bound = 0.0;
    for (int i : {N + 1, N + 2}) {
      const double q = static_cast<double>(conv[i].q);
      bound += (2.0 * (c + std::log(q)) + 2.0 * std::log(2.0)) / q;
    }
    out.tail_bound = bound;
  }
  return out;
}

CFExpansion noble_truncate(const CFExpansion& cf, int n) {
  if (n < 0) throw PreconditionError("noble_truncate: n must be >= 0");
  CFExpansion out{cf.a0, {}, CFExpansion::Tail::AllOnes};
  for (int i = 1; i <= n; ++i) {
    auto a = cf.partial(static_cast<std::size_t>(i));
    if (!a) throw PreconditionError("noble_truncate: expansion " + cf.to_string() + " has fewer than n partials");
    out.partials.push_back(*a);
  }
  // Trailing ones are part of the tail; drop them so equal values compare equal.
  while (!out.partials.empty() && out.partials.back() == 1) out.partials.pop_back();
  return out;
}

BoundedType is_bounded_type(const CFExpansion& cf) {
  if (cf.tail == CFExpansion::Tail::None) return {false, 0, true};
  std::int64_t a = 1;
  for (auto v : cf.partials) a = std::max(a, v);
  return {true, a, false};
}

Multiplier Multiplier::siegel(CFExpansion cf) {
  Multiplier m;
  m.cf_ = std::move(cf);
  return m;
}

Multiplier Multiplier::rational(std::int64_t p, std::int64_t q) {
  if (q <= 0) throw PreconditionError("rational multiplier needs q > 0");
  Multiplier m;
  m.p_ = p;
  m.q_ = q;
  return m;
}

XComplex Multiplier::value() const {
  if (!cf_) return unit_root(p_, q_);
  XReal theta = cf_value(*cf_);
  return expi(ldexp(XReal::pi(), 1) * theta);
}

}  // namespace cubiclab
