#include "cubiclab/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cubiclab/errors.hpp"
#include "cubiclab/jet.hpp"

namespace cubiclab {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;

double wrap(double x) {
  x = std::remainder(x, 2 * kPi);
  return x <= -kPi ? x + 2 * kPi : x;
}

void require_primitive_root(const XComplex& lambda, std::int64_t q) {
  const double P = static_cast<double>(working_precision());
  // Rounding lambda to P bits already moves lambda^q by about q 2^{-P}.
  const double tol_q = (-P + 8) * kLn2 + std::log(static_cast<double>(q));
  XComplex lq = pow(lambda, static_cast<std::uint64_t>(q)) - XComplex(1.0);
  if (!lq.is_zero() && log_abs(lq) > tol_q)
    throw PreconditionError("b_n_compute: lambda^q differs from 1 by more than q 2^{-P+8}");
  XComplex lj(1.0);
  for (std::int64_t j = 1; j < q; ++j) {
    lj = lj * lambda;
    XComplex d = lj - XComplex(1.0);
    if (d.is_zero() || log_abs(d) < -0.5 * P * kLn2)
      throw PreconditionError("b_n_compute: lambda is not a primitive q-th root of unity (lambda^" +
                              std::to_string(j) + " = 1)");
  }
}

}  // namespace

ParabolicStage b_n_compute(const XComplex& lambda_n, const XComplex& a, std::int64_t q) {
  if (q < 1) throw PreconditionError("b_n_compute: q must be >= 1");
  require_primitive_root(lambda_n, q);
  const std::size_t M = static_cast<std::size_t>(q) + 1;
  ParabolicStage st;
  st.conv = {0, q, -1};
  st.lambda_n = lambda_n;

  Jet g = Jet::identity(M);
  std::vector<double> peak(M + 1, -std::numeric_limits<double>::infinity());
  for (std::int64_t step = 0; step < q; ++step) {
    Jet g2 = jet_mul(g, g, M);
    Jet g3 = jet_mul(g2, g, M);
    for (std::size_t j = 0; j <= M; ++j) {
      g[j] = lambda_n * g[j] + a * g2[j] + g3[j];
      peak[j] = std::max(peak[j], log_abs(g[j]));
    }
  }

  double residual = 0.0;
  for (std::size_t j = 2; j + 1 <= M; ++j) {
    if (!std::isfinite(peak[j])) continue;
    const double l = log_abs(g[j]);
    if (std::isfinite(l)) residual = std::max(residual, std::exp(l - peak[j]));
  }
  st.residual = residual;
  st.b = g[M];
  st.degenerate = st.b.is_zero();
  st.cancellation_bits = st.degenerate ? 0.0 : (peak[M] - log_abs(st.b)) / kLn2;

  const double P = static_cast<double>(working_precision());
  if (residual > std::exp(-0.5 * P * kLn2))
    throw StructuralError("b_n_compute: coefficients 2..q of f^q do not vanish (residual " +
                          std::to_string(residual) + ")");
  if (!st.degenerate && P - st.cancellation_bits < 32)
    throw PrecisionError("b_n_compute: cancellation consumed " + std::to_string(st.cancellation_bits) +
                         " of " + std::to_string(P) + " bits at q = " + std::to_string(q));
  return st;
}

ParabolicStage b_n_stage(const CFExpansion& cf, int n, const XComplex& a) {
  Convergent c = convergents(cf, n).back();
  ParabolicStage st = b_n_compute(unit_root(c.p, c.q), a, c.q);
  st.n = n;
  st.conv = c;
  return st;
}

DegeneracyMap nondegenerate_test(const Multiplier& lambda_n, std::int64_t q, const GridSpec& region,
                                 double threshold) {
  validate(region);
  DegeneracyMap out;
  out.spec = region;
  const XComplex lam = lambda_n.value();
  out.log_abs_b.resize(region.cells());
  for (std::size_t i = 0; i < region.cells(); ++i) {
    try {
      out.log_abs_b[i] = log_abs(b_n_compute(lam, XComplex(region.point(i)), q).b);
    } catch (const Error&) {
      out.log_abs_b[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  std::vector<double> sorted;
  for (double v : out.log_abs_b)
    if (!std::isnan(v)) sorted.push_back(v);
  std::sort(sorted.begin(), sorted.end());
  out.log_median = sorted.empty() ? -std::numeric_limits<double>::infinity() : sorted[sorted.size() / 2];
  const double cut = std::log(threshold) + out.log_median;
  out.flagged.resize(region.cells());
  for (std::size_t i = 0; i < region.cells(); ++i)
    out.flagged[i] = std::isnan(out.log_abs_b[i]) || out.log_abs_b[i] < cut;
  return out;
}

PetalProbe petal_probe(const Multiplier& map_multiplier, const XComplex& a, const LinearizationSeries& series,
                       const XComplex& z_star, std::int64_t q, double margin_bits) {
  PetalProbe out;
  out.z_star = z_star;
  out.precision_used = working_precision();
  if (z_star.is_zero()) {
    out.cause = "z_star is the fixed point 0";
    return out;
  }
  std::optional<cd> t;
  if (std::abs(log_abs(z_star)) < 600) t = phi_screen(series, to_complex(z_star));
  if (!t || *t == cd(0.0)) {
    out.cause = "z_star is outside the linearization domain";
    return out;
  }
  const double extra = static_cast<double>(q) * std::log2(1.0 / std::abs(*t)) + margin_bits;
  const long P_eff = working_precision() + static_cast<long>(std::ceil(extra));
  if (P_eff > (1L << 20)) {
    out.cause = "required precision exceeds 2^20 bits";
    return out;
  }
  PrecisionScope scope(P_eff);
  out.precision_used = P_eff;
  try {
    CubicMap f{map_multiplier.value(), a};
    XComplex w0 = phi_eval(series, z_star, XComplex(*t * series.r_hat));
    XComplex z = z_star;
    for (std::int64_t j = 0; j < q; ++j) z = f(z);
    XComplex w1 = phi_eval(series, z, w0);
    out.w = w0;
    if (w1 == w0) {
      out.delta = XComplex(0.0);
      out.log_abs_delta = -std::numeric_limits<double>::infinity();
      out.cause = "zero displacement";
      return out;
    }
    XComplex delta = log(w1 / w0);
    out.delta = delta;
    out.arg_delta = arg_double(delta);
    out.log_abs_delta = log_abs(delta);
  } catch (const DomainError& e) {
    out.cause = e.what();
    return out;
  }
  if (out.delta->is_zero()) {
    out.cause = "zero displacement";
    return out;
  }
  const double th = out.arg_delta;  // principal, in (-pi, pi]
  const double dist_lo = std::abs(wrap(th - 3 * kPi / 4)), dist_hi = std::abs(wrap(th - 5 * kPi / 4));
  if (std::min(dist_lo, dist_hi) < kBandMargin) {
    out.cause = "arg delta within the band-edge margin";
    return out;
  }
  if (std::abs(th) > 3 * kPi / 4) {
    out.verdict = PetalVerdict::AttractingBand;
    out.band_index = th > 0 ? 0 : -1;
  } else {
    out.verdict = PetalVerdict::RepellingSide;
  }
  return out;
}

namespace {

struct TrackedSample {
  WindingSample s;
  double principal = 0.0;
  XComplex c;  // critical point used
};

}  // namespace

WindingReport winding_experiment(std::span<const cd> path, const CFExpansion& cf, int n, std::size_t k,
                                 const WindingOptions& opt, std::optional<cd> critical_hint) {
  if (path.empty()) throw PreconditionError("winding_experiment: empty path");
  const Convergent conv = convergents(cf, n).back();
  const Multiplier stage = Multiplier::rational(conv.p, conv.q);
  const XComplex lam = Multiplier::siegel(cf).value();
  const XComplex lam_n = stage.value();

  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < path.size(); ++i) cum.push_back(cum.back() + std::abs(path[i] - path[i - 1]));
  const double L = cum.back();
  auto at = [&](double s) {
    if (path.size() == 1 || L == 0.0) return path.front();
    std::size_t i = std::upper_bound(cum.begin(), cum.end(), s) - cum.begin();
    i = std::clamp<std::size_t>(i, 1, path.size() - 1);
    const double seg = cum[i] - cum[i - 1];
    const double u = seg > 0 ? (s - cum[i - 1]) / seg : 0.0;
    return path[i - 1] + u * (path[i] - path[i - 1]);
  };

  XComplex hint;
  if (critical_hint) {
    hint = XComplex(*critical_hint);
  } else {
    const XComplex a0(path.front());
    CubicMap f{lam, a0};
    auto series = linearizer(f, opt.K);
    auto [cp, cm] = critical_points(f);
    bool found = false;
    for (const XComplex& c : {cp, cm}) {
      auto r = capture_test(f, series, c, k + 1);
      if (r.verdict == CaptureVerdict::Landed && r.landed_at == k) {
        hint = c;
        found = true;
        break;
      }
    }
    if (!found)
      throw PreconditionError("winding_experiment: no critical point is captured at depth " + std::to_string(k) +
                              " at the start of the path");
  }

  auto probe_at = [&](double s, const XComplex& prev_c) {
    TrackedSample t;
    const cd a = at(s);
    const XComplex ax(a);
    CubicMap fn{lam_n, ax};
    auto [cp, cm] = critical_points(fn);
    t.c = norm(cp - prev_c) <= norm(cm - prev_c) ? cp : cm;
    XComplex z = t.c;
    for (std::size_t j = 0; j < k; ++j) z = fn(z);
    auto series = linearizer(CubicMap{lam, ax}, opt.K);
    PetalProbe p = petal_probe(stage, ax, series, z, conv.q, opt.margin_bits);
    if (!p.delta || p.delta->is_zero())
      throw DomainError("winding_experiment: petal probe failed at a = (" + std::to_string(a.real()) + ", " +
                        std::to_string(a.imag()) + "): " + p.cause);
    t.s.s = s;
    t.s.a = a;
    t.s.verdict = p.verdict;
    t.s.log_abs_delta = p.log_abs_delta;
    t.principal = p.arg_delta;
    return t;
  };

  std::vector<TrackedSample> samples;
  const std::size_t m0 = L == 0.0 ? 1 : std::max<std::size_t>(opt.initial_samples, 2);
  XComplex prev = hint;
  for (std::size_t i = 0; i < m0; ++i) {
    const double s = m0 == 1 ? 0.0 : L * static_cast<double>(i) / static_cast<double>(m0 - 1);
    samples.push_back(probe_at(s, prev));
    prev = samples.back().c;
  }
  for (std::size_t i = 0; i + 1 < samples.size();) {
    if (std::abs(wrap(samples[i + 1].principal - samples[i].principal)) < kPi / 2) {
      ++i;
      continue;
    }
    const double ds = samples[i + 1].s.s - samples[i].s.s;
    if (ds <= opt.min_step * std::max(L, 1e-300))
      throw DomainError("winding_experiment: branch tracking step underflow near s = " +
                        std::to_string(samples[i].s.s));
    if (samples.size() >= opt.max_samples)
      throw DomainError("winding_experiment: sample budget exhausted while tracking the branch");
    samples.insert(samples.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                   probe_at(samples[i].s.s + ds / 2, samples[i].c));
  }

  WindingReport rep;
  double arg = samples.front().principal;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0) {
      const double d = wrap(samples[i].principal - samples[i - 1].principal);
      arg += d;
      rep.total_arg_variation += std::abs(d);
    }
    WindingSample w = samples[i].s;
    w.arg = arg;
    if (w.verdict == PetalVerdict::AttractingBand)
      w.band = static_cast<int>(std::floor((arg - 3 * kPi / 4) / (2 * kPi)));
    rep.samples.push_back(w);
  }
  rep.net_arg_change = rep.samples.back().arg - rep.samples.front().arg;
  auto centre_index = [](double x) { return std::floor((x - kPi) / (2 * kPi)); };
  for (std::size_t i = 1; i < rep.samples.size(); ++i)
    rep.band_crossings +=
        static_cast<int>(std::abs(centre_index(rep.samples[i].arg) - centre_index(rep.samples[i - 1].arg)));
  for (std::size_t i = 0; i < rep.samples.size() && !rep.adjacent_bands; ++i) {
    if (!rep.samples[i].band) continue;
    for (std::size_t j = i + 1; j < rep.samples.size(); ++j) {
      if (rep.samples[j].band && std::abs(*rep.samples[j].band - *rep.samples[i].band) == 1) {
        rep.adjacent_bands = std::make_pair(i, j);
        break;
      }
    }
  }
  return rep;
}

WindingCount winding_number(const std::function<XComplex(double)>& F, std::size_t m, std::size_t max_samples) {
  if (m < 4) m = 4;
  std::vector<double> args, logs;
  auto sample = [&](double t) {
    XComplex v = F(t);
    if (v.is_zero()) throw DomainError("winding_number: contour passes through a zero");
    args.push_back(arg_double(v));
    logs.push_back(log_abs(v));
  };
  for (std::size_t j = 0; j < m; ++j) sample(static_cast<double>(j) / static_cast<double>(m));
  std::vector<int> history;
  for (;;) {
    double total = 0.0, max_step = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = wrap(args[(j + 1) % m] - args[j]);
      total += d;
      max_step = std::max(max_step, std::abs(d));
    }
    history.push_back(static_cast<int>(std::lround(total / (2 * kPi))));
    std::vector<double> sorted = logs;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double rel_min = std::exp(*std::min_element(logs.begin(), logs.end()) - sorted[sorted.size() / 2]);
    if (rel_min < 1e-8) throw DomainError("winding_number: contour passes too close to a zero; change the radius");
    const std::size_t h = history.size();
    if (h >= 3 && history[h - 1] == history[h - 2] && history[h - 2] == history[h - 3] && max_step < kPi / 2)
      return {history.back(), m, rel_min};
    if (2 * m > max_samples) throw DomainError("winding_number: sample budget exhausted before the count stabilised");
    std::vector<double> a2, l2;
    a2.reserve(2 * m);
    l2.reserve(2 * m);
    std::vector<double> old_a = std::move(args), old_l = std::move(logs);
    args.clear();
    logs.clear();
    for (std::size_t j = 0; j < m; ++j) {
      a2.push_back(old_a[j]);
      l2.push_back(old_l[j]);
      sample((2.0 * static_cast<double>(j) + 1.0) / (2.0 * static_cast<double>(m)));
      a2.push_back(args.back());
      l2.push_back(logs.back());
    }
    args = std::move(a2);
    logs = std::move(l2);
    m *= 2;
  }
}

FixedPointCount count_fixed_points(const Multiplier& lambda_n, const XComplex& a, const LinearizationSeries& series,
                                   std::int64_t q, double r1, std::size_t m) {
  if (!(r1 > 0 && r1 < 1)) throw PreconditionError("count_fixed_points: r1 must lie in (0, 1)");
  const long extra = static_cast<long>(std::ceil(static_cast<double>(q) * std::log2(1.0 / r1))) + 64;
  PrecisionScope scope(working_precision() + extra);
  CubicMap f{lambda_n.value(), a};
  const XReal radius = XReal(r1) * XReal(series.r_hat);
  const XReal two_pi = ldexp(XReal::pi(), 1);
  auto F = [&](double t) {
    XComplex z = series.eval(expi(two_pi * XReal(t)) * radius);
    XComplex w = z;
    for (std::int64_t j = 0; j < q; ++j) w = f(w);
    return w - z;
  };
  WindingCount wc = winding_number(F, m);
  FixedPointCount out;
  out.winding = wc.winding;
  out.n_extra = wc.winding - static_cast<int>(q + 1);
  out.samples = wc.samples;
  out.min_modulus = wc.min_modulus;
  return out;
}

JellouliResult jellouli_stat(const CubicMap& f, const XComplex& rotation, const LinearizationSeries& series,
                             std::int64_t q, double r0, std::size_t m, std::uint64_t seed) {
  if (!(r0 > 0 && r0 < 1)) throw PreconditionError("jellouli_stat: r0 must lie in (0, 1)");
  if (m == 0) throw PreconditionError("jellouli_stat: need at least one sample");
  std::mt19937_64 rng(seed);
  const double offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const XReal radius = XReal(r0) * XReal(series.r_hat);
  const XReal two_pi = ldexp(XReal::pi(), 1);
  const double q2 = static_cast<double>(q) * static_cast<double>(q);
  JellouliResult out;
  double best = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double angle = (static_cast<double>(j) + offset) / static_cast<double>(m);
    XComplex x = expi(two_pi * XReal(angle)) * radius;
    const double lx = log_abs(x);
    XComplex y = series.eval(x), rot_k(1.0);
    double local = 0.0;
    bool ok = true;
    for (std::int64_t k = 1; k <= q && ok; ++k) {
      y = f(y);
      rot_k = rot_k * rotation;
      XComplex target = rot_k * x;
      try {
        XComplex w = phi_eval(series, y, target);
        XComplex d = w - target;
        if (!d.is_zero())
          local = std::max(local, q2 * std::exp(log_abs(d) - lx) / static_cast<double>(k));
      } catch (const DomainError&) {
        ok = false;
      }
    }
    if (!ok) {
      ++out.samples_skipped;
      continue;
    }
    ++out.samples_used;
    best = std::max(best, local);
  }
  if (out.samples_used == 0) throw DomainError("jellouli_stat: every sample left the linearization domain");
  out.c_hat = best;
  return out;
}

}  // namespace cubiclab
