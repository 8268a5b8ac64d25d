#include "cubiclab/bifurc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "cubiclab/errors.hpp"

namespace cubiclab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kLog3 = std::log(3.0);

using cd = std::complex<double>;

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const mpfr_prec_t prec = working_precision();
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      PrecisionScope scope(prec);
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

Cell classify_cell(const XComplex& lambda, cd a, const RasterBudgets& b) {
  Cell cell;
  CubicMap f{lambda, XComplex(a)};
  auto [c1, c2] = critical_points(f);
  auto g1 = green(f, c1, b.tol, b.escape_budget);
  auto g2 = green(f, c2, b.tol, b.escape_budget);
  cell.aux["G1"] = g1.status == GreenStatus::Undecided ? kNaN : g1.value;
  cell.aux["G2"] = g2.status == GreenStatus::Undecided ? kNaN : g2.value;
  const bool decided = g1.status != GreenStatus::Undecided && g2.status != GreenStatus::Undecided;
  cell.L = decided ? kLog3 + g1.value + g2.value : kNaN;

  if (g1.status == GreenStatus::Escaped || g2.status == GreenStatus::Escaped) {
    cell.cls = CellClass::Escape;
    return cell;
  }
  LinearizationSeries s;
  try {
    s = linearizer(f, b.K);
  } catch (const PrecisionError&) {
    cell.aux["linearizer_failed"] = 1;
    return cell;
  }
  cell.aux["r_hat"] = s.r_hat;
  int which = 0;
  for (const XComplex* c : {&c1, &c2}) {
    ++which;
    auto r = capture_test(f, s, *c, b.capture_budget, b.rho);
    if (r.verdict != CaptureVerdict::Landed) continue;
    if (cell.cls == CellClass::Capture && *r.landed_at >= cell.depth) continue;
    cell.cls = CellClass::Capture;
    cell.depth = *r.landed_at;
    cell.aux["critical"] = which;
    cell.aux["w_over_r"] = abs(*r.w).to_double() / s.r_hat;
  }
  return cell;
}

void label_components(Raster& r) {
  const std::size_t n = r.spec.resolution;
  int label = 0;
  for (std::size_t start = 0; start < r.cells.size(); ++start) {
    Cell& s = r.cells[start];
    if (s.cls != CellClass::Capture || s.component >= 0) continue;
    s.component = label;
    std::deque<std::size_t> queue{start};
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const std::size_t row = i / n, col = i % n;
      std::size_t nb[4];
      int count = 0;
      if (row > 0) nb[count++] = i - n;
      if (row + 1 < n) nb[count++] = i + n;
      if (col > 0) nb[count++] = i - 1;
      if (col + 1 < n) nb[count++] = i + 1;
      for (int j = 0; j < count; ++j) {
        Cell& c = r.cells[nb[j]];
        if (c.cls == CellClass::Capture && c.component < 0 && c.depth == s.depth) {
          c.component = label;
          queue.push_back(nb[j]);
        }
      }
    }
    ++label;
  }
  r.components = label;
}

}  // namespace

Raster classify_raster(const XComplex& lambda, const GridSpec& spec, const RasterBudgets& budgets) {
  validate(spec);
  Raster r{spec, std::vector<Cell>(spec.cells()), 0};
  parallel_for(
      spec.cells(), [&](std::size_t i) { r.cells[i] = classify_cell(lambda, spec.point(i), budgets); },
      budgets.threads);
  label_components(r);
  return r;
}

Raster lyapunov_raster(const XComplex& lambda, const GridSpec& spec, const RasterBudgets& budgets) {
  Raster r = classify_raster(lambda, spec, budgets);
  parallel_for(
      spec.cells(),
      [&](std::size_t i) {
        auto ly = lyapunov(CubicMap{lambda, XComplex(spec.point(i))}, budgets.tol, budgets.escape_budget);
        r.cells[i].L = ly.status == GreenStatus::Undecided ? kNaN : ly.value;
      },
      budgets.threads);
  return r;
}

std::optional<CenterResult> locate_center(const XComplex& lambda, cd a0, std::size_t k, cd critical_at_a0,
                                          int max_iterations) {
  const cd lam = to_complex(lambda);
  auto crit = [&](cd a, cd near) {
    const cd d = std::sqrt(a * a - 3.0 * lam);
    const cd r1 = (-a + d) / 3.0, r2 = (-a - d) / 3.0;
    return std::abs(r1 - near) <= std::abs(r2 - near) ? r1 : r2;
  };
  auto F = [&](cd a, cd c) {
    cd z = c;
    for (std::size_t j = 0; j < k; ++j) z = z * (lam + z * (a + z));
    return z;
  };
  cd a = a0, c = crit(a0, critical_at_a0);
  for (int it = 0; it < max_iterations; ++it) {
    const cd v = F(a, c);
    if (!std::isfinite(std::abs(v))) return std::nullopt;
    if (std::abs(v) < 1e-14) return CenterResult{a, c, std::abs(v), it};
    const double h = 1e-7 * std::max(1.0, std::abs(a));
    const cd dv = (F(a + h, crit(a + h, c)) - F(a - h, crit(a - h, c))) / (2 * h);
    if (dv == 0.0) return std::nullopt;
    cd step = v / dv;
    // Damp long steps so the critical point branch can follow.
    if (std::abs(step) > 0.1) step *= 0.1 / std::abs(step);
    a -= step;
    c = crit(a, c);
  }
  const double res = std::abs(F(a, c));
  if (res < 1e-10) return CenterResult{a, c, res, max_iterations};
  return std::nullopt;
}

DensityField slice_current_density(const GridSpec& spec, const std::function<double(cd)>& L) {
  validate(spec);
  std::vector<double> values(spec.cells());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = L(spec.point(i));
  Raster r{spec, std::vector<Cell>(spec.cells()), 0};
  for (std::size_t i = 0; i < values.size(); ++i) r.cells[i].L = values[i];
  return slice_current_density(r);
}

DensityField slice_current_density(const Raster& raster) {
  const GridSpec& spec = raster.spec;
  const std::size_t n = spec.resolution;
  DensityField d{spec, std::vector<double>(spec.cells(), kNaN), std::vector<bool>(spec.cells(), true), 0, 0, false};
  std::size_t masked = 0;
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      const std::size_t i = row * n + col;
      if (row == 0 || col == 0 || row + 1 == n || col + 1 == n) {
        ++masked;
        continue;
      }
      const double c = raster.cells[i].L;
      const double sum = raster.cells[i - n].L + raster.cells[i + n].L + raster.cells[i - 1].L +
                         raster.cells[i + 1].L;
      if (std::isnan(c) || std::isnan(sum)) {
        ++masked;
        continue;
      }
      // Laplacian * h^2 / (2 pi): the h^2 of the stencil and the cell area cancel.
      d.mass[i] = (sum - 4.0 * c) / (2.0 * std::numbers::pi);
      d.masked[i] = false;
      d.total += d.mass[i];
    }
  }
  d.mask_fraction = static_cast<double>(masked) / static_cast<double>(spec.cells());
  d.warning = d.mask_fraction > 0.5;
  return d;
}

const char* to_string(StageStatus s) {
  switch (s) {
    case StageStatus::Ok: return "ok";
    case StageStatus::ParityDegenerate: return "parity-degenerate";
    case StageStatus::Refused: return "refused";
    case StageStatus::PrecisionExhausted: return "precision-exhausted";
  }
  return "?";
}

BnTable bn_scaling_experiment(const XComplex& a, const CFExpansion& cf, int n_min, int n_max,
                              const BnOptions& opt) {
  if (n_min < 1 || n_max < n_min) throw PreconditionError("bn_scaling_experiment: need 1 <= n_min <= n_max");
  BnTable t;
  t.a = to_complex(a);
  t.cf = cf;
  auto s = linearizer(CubicMap{Multiplier::siegel(cf).value(), a}, opt.K);
  t.r_hat = s.r_hat;
  t.r_hat_err = s.r_hat_err;
  const double neg_log_r = -std::log(s.r_hat);
  const auto convs = convergents(cf, n_max);
  const std::size_t centre = (opt.gate_resolution / 2) * opt.gate_resolution + opt.gate_resolution / 2;

  for (int n = n_min; n <= n_max; ++n) {
    const Convergent& c = convs[static_cast<std::size_t>(n)];
    BnRow row;
    row.n = n;
    row.q = c.q;
    row.neg_log_r = neg_log_r;
    if (a.is_zero() && c.q % 2 == 1) {
      row.status = StageStatus::ParityDegenerate;
      row.note = "f is odd at a = 0, so b_n = 0 for odd q";
      t.rows.push_back(row);
      continue;
    }
    try {
      auto gate = nondegenerate_test(Multiplier::rational(c.p, c.q), c.q,
                                     GridSpec{t.a, opt.gate_half_width, opt.gate_resolution});
      if (gate.flagged[centre]) {
        std::ostringstream msg;
        msg << "parabolic: b_n vanishes near a at stage n = " << n << " (q = " << c.q
            << "); the scaling limit needs a non-degenerate parabolic locus";
        row.status = StageStatus::Refused;
        row.note = msg.str();
        t.rows.push_back(row);
        t.refused = msg.str();
        break;
      }
      auto st = b_n_compute(Multiplier::rational(c.p, c.q).value(), a, c.q);
      const double lb = log_abs(st.b);
      row.log_b_over_q = lb / static_cast<double>(c.q);
      row.e = std::abs(row.log_b_over_q - neg_log_r);
      row.log10_abs_b = lb / std::log(10.0);
      row.arg_b_over_pi = arg_double(st.b) / std::numbers::pi;
      row.residual = st.residual;
      row.cancellation_bits = st.cancellation_bits;
    } catch (const PrecisionError& e) {
      row.status = StageStatus::PrecisionExhausted;
      row.note = e.what();
      t.rows.push_back(row);
      t.truncated = e.what();
      break;
    }
    t.rows.push_back(row);
  }

  std::vector<const BnRow*> tail;
  for (const auto& r : t.rows)
    if (r.status == StageStatus::Ok && r.q >= opt.tail_min_q) tail.push_back(&r);
  std::ostringstream msg;
  if (t.refused) {
    msg << "refused: " << *t.refused;
  } else if (tail.size() < 3) {
    msg << "fewer than three usable stages";
  } else {
    const auto* r1 = tail[tail.size() - 3];
    const auto* r2 = tail[tail.size() - 2];
    const auto* r3 = tail.back();
    const bool small = r3->e <= opt.e_tolerance;
    const bool decreasing = r1->e > r2->e && r2->e > r3->e;
    t.check_passed = small && decreasing;
    msg << "e_n at q = " << r3->q << ": " << r3->e << (small ? " <= " : " > ") << opt.e_tolerance
        << "; last three " << r1->e << ", " << r2->e << ", " << r3->e
        << (decreasing ? " decreasing" : " not decreasing");
  }
  t.check_message = msg.str();
  return t;
}

namespace {

struct Captured {
  std::size_t depth;
  XComplex critical;
};

std::optional<Captured> shallowest_capture(const CubicMap& f, const LinearizationSeries& s,
                                           const std::vector<XComplex>& candidates, std::size_t budget,
                                           double rho) {
  std::optional<Captured> best;
  for (const auto& c : candidates) {
    auto r = capture_test(f, s, c, budget, rho);
    if (r.verdict == CaptureVerdict::Landed && (!best || *r.landed_at < best->depth)) best = Captured{*r.landed_at, c};
  }
  return best;
}

}  // namespace

NobleTable noble_radius_experiment(const XComplex& a, const CFExpansion& cf, int n_min, int n_max,
                                   const NobleOptions& opt) {
  if (n_min < 0 || n_max < n_min) throw PreconditionError("noble_radius_experiment: need 0 <= n_min <= n_max");
  NobleTable t;
  t.a = to_complex(a);
  t.cf = cf;
  CubicMap f{Multiplier::siegel(cf).value(), a};
  auto s = linearizer(f, opt.K);
  t.r_hat = s.r_hat;
  auto [c1, c2] = critical_points(f);
  auto cap = shallowest_capture(f, s, {c1, c2}, opt.capture_budget, opt.rho);
  if (!cap)
    throw PreconditionError("noble_radius_experiment: no critical point of f_{lambda(theta),a} lands in the Siegel disk "
                            "within the capture budget");
  t.depth = cap->depth;
  const cd c_ref = to_complex(cap->critical);

  for (int n = n_min; n <= n_max; ++n) {
    NobleRow row;
    row.n = n;
    row.theta_n = noble_truncate(cf, n);
    CubicMap fn{Multiplier::siegel(row.theta_n).value(), a};
    LinearizationSeries sn;
    try {
      sn = linearizer(fn, opt.K);
    } catch (const PrecisionError& e) {
      row.note = std::string("linearizer: ") + e.what();
      t.rows.push_back(row);
      continue;
    }
    row.r_hat = sn.r_hat;
    row.r_hat_err = sn.r_hat_err;
    // Follow the captured critical point, not the lexicographic label.
    auto [d1, d2] = critical_points(fn);
    const XComplex& c = std::abs(to_complex(d1) - c_ref) <= std::abs(to_complex(d2) - c_ref) ? d1 : d2;
    auto r = capture_test(fn, sn, c, opt.capture_budget, opt.rho);
    if (r.verdict == CaptureVerdict::Landed) row.depth = *r.landed_at;
    t.rows.push_back(row);
  }

  std::ostringstream msg;
  const NobleRow* last = nullptr;
  for (auto it = t.rows.rbegin(); it != t.rows.rend(); ++it)
    if (it->r_hat > 0) {
      last = &*it;
      break;
    }
  if (last) {
    const double rel = std::abs(last->r_hat / t.r_hat - 1.0);
    t.radius_ok = rel <= opt.radius_tolerance;
    msg << "r_hat(theta_" << last->n << ") / r_hat(theta) - 1 = " << rel;
  } else {
    msg << "no usable rows";
  }
  const std::size_t m = std::min<std::size_t>(3, t.rows.size());
  t.depth_ok = m > 0;
  for (std::size_t i = t.rows.size() - m; i < t.rows.size(); ++i)
    if (t.rows[i].depth != t.depth) t.depth_ok = false;
  msg << "; capture depth " << (t.depth_ok ? "stable at " : "not stable at ") << t.depth;
  t.check_message = msg.str();
  return t;
}

}  // namespace cubiclab
