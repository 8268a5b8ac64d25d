#include "app.hpp"

#include <cmath>
#include <cstdlib>
#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "cubiclab/bifurc.hpp"
#include "cubiclab/errors.hpp"
#include "cubiclab/output.hpp"
#include "cubiclab/parabolic.hpp"
#include "cubiclab/rotation.hpp"
#include "cubiclab/siegel.hpp"

namespace cubiclab::app {

namespace fs = std::filesystem;
using cd = std::complex<double>;
using Kind = OptionSpec::Kind;

namespace {

const char* kGolden = "[0;1,1,...]";

std::string silver40() {
  std::string s = "[0;";
  for (int i = 0; i < 40; ++i) s += i ? ",2" : "2";
  return s + "]";
}

std::vector<OptionSpec> grid_options() {
  return {{"cf", Kind::Str, kGolden, "rotation number as a continued fraction"},
          {"lambda", Kind::Str, "siegel", "multiplier: siegel or stage:N"},
          {"center", Kind::Complex, json::array({-0.8, 0.2}), "grid centre"},
          {"half_width", Kind::Real, 0.2, "grid half-width"},
          {"resolution", Kind::Int, 32, "cells per axis"},
          {"escape_budget", Kind::Int, 2000, "orbit steps before a critical orbit counts as bounded"},
          {"capture_budget", Kind::Int, 200, "landing depth budget"},
          {"K", Kind::Int, 128, "linearizer order per cell"},
          {"tol", Kind::Real, 1e-6, "Green function tolerance"},
          {"rho", Kind::Real, kDefaultSafety, "Siegel disk safety factor"}};
}

const std::map<std::string, std::vector<OptionSpec>>& option_table() {
  static const std::map<std::string, std::vector<OptionSpec>> table = {
      {"convergents", {{"cf", Kind::Str, kGolden, "continued fraction"}, {"n", Kind::Int, 10, "last index"}}},
      {"brjuno", {{"cf", Kind::Str, kGolden, "continued fraction"}, {"N", Kind::Int, 10, "last index"}}},
      {"bn-scaling",
       {{"cf", Kind::Str, kGolden, "continued fraction"},
        {"a", Kind::Complex, json::array({0.0, 0.0}), "parameter a"},
        {"nmin", Kind::Int, 1, "first stage"},
        {"nmax", Kind::Int, 12, "last stage"},
        {"K", Kind::Int, 1024, "linearizer order for r_hat"},
        {"gate_half_width", Kind::Real, 0.02, "half-width of the non-degeneracy grid"},
        {"e_tol", Kind::Real, 0.05, "tolerance on the last e_n"}}},
      {"radius",
       {{"cf", Kind::Str, kGolden, "continued fraction"},
        {"a", Kind::Complex, json::array({0.0, 0.0}), "parameter a"},
        {"lambda", Kind::Str, "siegel", "multiplier: siegel or stage:N"},
        {"K", Kind::Int, 1024, "series order"}}},
      {"classify", grid_options()},
      {"lyapunov-map", grid_options()},
      {"current-density", grid_options()},
      {"fixed-points",
       {{"cf", Kind::Str, kGolden, "continued fraction"},
        {"a", Kind::Complex, json::array({0.3, 0.1}), "parameter a"},
        {"nmin", Kind::Int, 4, "first stage"},
        {"nmax", Kind::Int, 8, "last stage"},
        {"r1", Kind::Real, 0.6, "contour radius relative to r_hat"},
        {"m", Kind::Int, 256, "initial samples"},
        {"K", Kind::Int, 256, "linearizer order"}}},
      {"winding",
       {{"cf", Kind::Str, kGolden, "continued fraction"},
        {"a", Kind::Complex, json::array({-0.8, 0.2}), "path midpoint"},
        {"diameter", Kind::Real, 0.02, "length of the horizontal path segment"},
        {"nmin", Kind::Int, 6, "first stage"},
        {"nmax", Kind::Int, 9, "last stage"},
        {"k", Kind::Int, 0, "capture depth, 0 to detect"},
        {"K", Kind::Int, 256, "linearizer order"},
        {"max_samples", Kind::Int, 4000, "refinement cap per stage"}}},
      {"jellouli",
       {{"cf", Kind::Str, kGolden, "continued fraction"},
        {"a", Kind::Complex, json::array({0.0, 0.0}), "parameter a"},
        {"nmin", Kind::Int, 4, "first stage"},
        {"nmax", Kind::Int, 8, "last stage"},
        {"r0", Kind::Real, 0.5, "sample radius relative to r_hat"},
        {"m", Kind::Int, 16, "samples on the circle"},
        {"K", Kind::Int, 256, "linearizer order"},
        {"seed", Kind::Int, 0, "sample placement seed"}}},
      {"noble-radius",
       {{"cf", Kind::Str, silver40(), "continued fraction"},
        {"a", Kind::Complex, json::array({0.77, 0.2}), "parameter a"},
        {"nmin", Kind::Int, 0, "first truncation"},
        {"nmax", Kind::Int, 12, "last truncation"},
        {"K", Kind::Int, 1024, "linearizer order"},
        {"capture_budget", Kind::Int, 50, "landing depth budget"}}},
  };
  return table;
}

const std::vector<OptionSpec>& common_options() {
  static const std::vector<OptionSpec> common = {
      {"precision", Kind::Int, static_cast<int>(kDefaultPrecision), "working precision in bits (>= 64)"},
      {"assert", Kind::Bool, false, "exit 4 when the command's check fails"}};
  return common;
}

// Module and statement named in failure messages.
const std::map<std::string, std::pair<const char*, const char*>>& blame() {
  static const std::map<std::string, std::pair<const char*, const char*>> m = {
      {"convergents", {"rotation", "convergents p_n/q_n of the continued fraction"}},
      {"brjuno", {"rotation", "Brjuno sum of log q_{n+1} / q_n"}},
      {"bn-scaling", {"parabolic/bifurc", "|b_n(a)|^{1/q_n} -> 1/r_theta(a) on a non-degenerate parabolic locus"}},
      {"radius", {"siegel", "conformal radius of the Siegel disk"}},
      {"classify", {"bifurc", "capture components of the parameter slice"}},
      {"lyapunov-map", {"bifurc", "L = log 3 + G(c1) + G(c2)"}},
      {"current-density", {"bifurc", "bifurcation current as dd^c L on the slice"}},
      {"fixed-points", {"parabolic", "no fixed points of f_n^q near 0 other than the origin"}},
      {"winding", {"parabolic", "petal indices k_a - k_b not in q_n Z along a path"}},
      {"jellouli", {"parabolic", "|phi f_n^k phi^{-1}(z) - lambda_n^k z| <= C k |z| / q_n^2"}},
      {"noble-radius", {"bifurc/siegel", "r(theta_n, a) -> r(theta, a) and persistence of capture"}},
  };
  return m;
}

std::string fmt(double x) { return format_real(x); }
std::string fmt(std::int64_t x) { return std::to_string(x); }

cd get_complex(const json& c, const char* key) { return {c.at(key)[0].get<double>(), c.at(key)[1].get<double>()}; }

Multiplier multiplier(const json& c) {
  const auto cf = CFExpansion::parse(c.at("cf").get<std::string>());
  const std::string sel = c.at("lambda").get<std::string>();
  if (sel == "siegel") return Multiplier::siegel(cf);
  if (sel.rfind("stage:", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(sel.substr(6));
    } catch (const std::exception&) {
      throw ValidationError("lambda must be 'siegel' or 'stage:N', got '" + sel + "'");
    }
    if (n < 0) throw ValidationError("lambda stage must be >= 0");
    const auto c_n = convergents(cf, n).back();
    return Multiplier::rational(c_n.p, c_n.q);
  }
  throw ValidationError("lambda must be 'siegel' or 'stage:N', got '" + sel + "'");
}

struct Ctx {
  json config;
  std::string config_text;
  fs::path out;
  std::ostream& log;
  unsigned threads;
  bool assert_mode;
  Table table() const { return Table(config_text); }
  int verdict(bool ok, const std::string& what) const {
    log << (ok ? "check passed: " : "check failed: ") << what << '\n';
    return ok || !assert_mode ? kExitOk : kExitAssert;
  }
};

int cmd_convergents(const Ctx& x) {
  const auto cf = CFExpansion::parse(x.config.at("cf").get<std::string>());
  const int n = x.config.at("n").get<int>();
  auto t = x.table();
  t.comment("cf = " + cf.to_string());
  t.columns({"n", "a_n", "p_n", "q_n"});
  for (const auto& c : convergents(cf, n))
    t.row({fmt(std::int64_t{c.n}), fmt(c.n == 0 ? cf.a0 : *cf.partial(static_cast<std::size_t>(c.n))), fmt(c.p),
           fmt(c.q)});
  t.write(x.out / "convergents.csv");
  return kExitOk;
}

int cmd_brjuno(const Ctx& x) {
  const auto cf = CFExpansion::parse(x.config.at("cf").get<std::string>());
  const int N = x.config.at("N").get<int>();
  auto t = x.table();
  t.comment("partial_sum = sum_{n<=N} log(q_{n+1}) / q_n; tail_bound bounds the remainder (bounded type only)");
  t.columns({"N", "partial_sum", "tail_bound"});
  for (int k = 0; k <= N; ++k) {
    auto b = brjuno_sum(cf, k);
    t.row({fmt(std::int64_t{k}), fmt(b.partial_sum), b.tail_bound ? fmt(*b.tail_bound) : ""});
  }
  t.write(x.out / "brjuno.csv");
  return kExitOk;
}

int cmd_bn_scaling(const Ctx& x) {
  const auto cf = CFExpansion::parse(x.config.at("cf").get<std::string>());
  BnOptions opt;
  opt.K = x.config.at("K").get<std::size_t>();
  opt.gate_half_width = x.config.at("gate_half_width").get<double>();
  opt.e_tolerance = x.config.at("e_tol").get<double>();
  auto tb = bn_scaling_experiment(XComplex(get_complex(x.config, "a")), cf, x.config.at("nmin").get<int>(),
                                  x.config.at("nmax").get<int>(), opt);
  auto t = x.table();
  t.comment("b_n: coefficient of z^{q_n+1} in f_{lambda_n,a}^{q_n}, written as log10|b_n| and arg(b_n)/pi");
  t.comment("e_n = |(1/q_n) log|b_n| + log r_hat(a)|; the scaling limit |b_n|^{1/q_n} -> 1/r_theta(a) makes it tend to 0");
  t.comment("r_hat = " + fmt(tb.r_hat) + " +- " + fmt(tb.r_hat_err));
  t.columns({"n", "q_n", "status", "log10_abs_b", "arg_b_over_pi", "log_abs_b_over_q", "neg_log_r_hat", "e_n",
             "residual", "cancellation_bits"});
  for (const auto& r : tb.rows) {
    const bool ok = r.status == StageStatus::Ok;
    auto num = [&](double v) { return ok ? fmt(v) : std::string(); };
    t.row({fmt(std::int64_t{r.n}), fmt(r.q), to_string(r.status), num(r.log10_abs_b), num(r.arg_b_over_pi),
           num(r.log_b_over_q), fmt(r.neg_log_r), num(r.e), num(r.residual), num(r.cancellation_bits)});
  }
  for (const auto& r : tb.rows)
    if (!r.note.empty()) t.footer("n = " + std::to_string(r.n) + ": " + r.note);
  t.footer("check: " + tb.check_message);
  t.write(x.out / "bn_scaling.csv");
  if (tb.refused) {
    x.log << "refused [parabolic/bifurc]: " << *tb.refused << '\n';
    return kExitDomain;
  }
  return x.verdict(tb.check_passed, tb.check_message);
}

int cmd_radius(const Ctx& x) {
  const auto lam = multiplier(x.config);
  auto s = linearizer(CubicMap{lam.value(), XComplex(get_complex(x.config, "a"))},
                      x.config.at("K").get<std::size_t>());
  auto t = x.table();
  t.comment("psi: inverse linearizer with psi(0) = 0, psi'(0) = 1; coefficients as log10|psi_k|, arg/pi");
  t.comment("r_hat = " + fmt(s.r_hat) + " +- " + fmt(s.r_hat_err) + ", min small divisor " +
            fmt(s.small_divisor_min));
  t.columns({"k", "log10_abs_psi", "arg_psi_over_pi"});
  for (std::size_t k = 1; k < s.psi.size(); ++k) {
    if (s.psi[k].is_zero()) {
      t.row({fmt(std::int64_t(k)), "-inf", "0"});
      continue;
    }
    auto la = log_arg(s.psi[k]);
    t.row({fmt(std::int64_t(k)), fmt(la.log10_abs), fmt(la.arg_over_pi)});
  }
  t.footer("r_hat = " + fmt(s.r_hat));
  t.write(x.out / "radius.csv");
  return kExitOk;
}

RasterBudgets budgets(const Ctx& x) {
  RasterBudgets b;
  b.escape_budget = x.config.at("escape_budget").get<std::size_t>();
  b.capture_budget = x.config.at("capture_budget").get<std::size_t>();
  b.K = x.config.at("K").get<std::size_t>();
  b.tol = x.config.at("tol").get<double>();
  b.rho = x.config.at("rho").get<double>();
  b.threads = x.threads;
  return b;
}

GridSpec grid(const Ctx& x) {
  const auto res = x.config.at("resolution").get<std::int64_t>();
  if (res < 2) throw ValidationError("resolution must be at least 2");
  GridSpec g{get_complex(x.config, "center"), x.config.at("half_width").get<double>(),
             static_cast<std::size_t>(res)};
  validate(g);
  return g;
}

const char* class_name(CellClass c) {
  switch (c) {
    case CellClass::Escape: return "escape";
    case CellClass::Capture: return "capture";
    case CellClass::Undecided: return "undecided";
  }
  return "?";
}

std::uint8_t palette(const Cell& c) {
  switch (c.cls) {
    case CellClass::Escape: return kPaletteEscape;
    case CellClass::Undecided: return kPaletteUndecided;
    case CellClass::Capture: return static_cast<std::uint8_t>(kPaletteCapture + 8 * std::min<std::size_t>(c.depth, 15));
  }
  return 0;
}

void write_class_pgm(const Ctx& x, const Raster& r, const std::string& name) {
  std::vector<std::uint8_t> px(r.cells.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = palette(r.cells[i]);
  write_file(x.out / name, pgm(r.spec.resolution, r.spec.resolution, px, x.config_text));
}

int cmd_classify(const Ctx& x) {
  const GridSpec g = grid(x);
  auto r = classify_raster(multiplier(x.config).value(), g, budgets(x));
  auto t = x.table();
  t.comment("class: escape (a critical orbit escapes), capture (a critical orbit lands in the Siegel disk at depth k), undecided");
  t.comment("pgm palette: escape 255, undecided 128, capture 8*min(depth,15)");
  t.columns({"row", "col", "re_a", "im_a", "class", "depth", "component", "L", "w_over_r"});
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const Cell& c = r.cells[i];
    const cd a = g.point(i);
    counts[static_cast<int>(c.cls)]++;
    auto w = c.aux.find("w_over_r");
    t.row({fmt(std::int64_t(i / g.resolution)), fmt(std::int64_t(i % g.resolution)), fmt(a.real()), fmt(a.imag()),
           class_name(c.cls), c.cls == CellClass::Capture ? fmt(std::int64_t(c.depth)) : "",
           c.component >= 0 ? fmt(std::int64_t{c.component}) : "", fmt(c.L), w != c.aux.end() ? fmt(w->second) : ""});
  }
  t.footer("escape " + std::to_string(counts[0]) + ", capture " + std::to_string(counts[1]) + ", undecided " +
           std::to_string(counts[2]) + ", components " + std::to_string(r.components));
  t.write(x.out / "classify.csv");
  write_class_pgm(x, r, "classify.pgm");
  return kExitOk;
}

// Capture cells must carry L = log 3 within 2 tol.
std::pair<bool, std::string> capture_l_check(const Raster& r, double tol) {
  std::size_t bad = 0, n = 0;
  double worst = 0;
  for (const auto& c : r.cells) {
    if (c.cls != CellClass::Capture) continue;
    ++n;
    const double d = std::abs(c.L - std::log(3.0));
    worst = std::max(worst, std::isnan(d) ? INFINITY : d);
    if (!(d <= 2 * tol)) ++bad;
  }
  std::ostringstream msg;
  msg << n << " capture cells, max |L - log 3| = " << worst << ", " << bad << " outside 2 tol";
  return {bad == 0, msg.str()};
}

int cmd_lyapunov_map(const Ctx& x) {
  const GridSpec g = grid(x);
  const auto b = budgets(x);
  auto r = lyapunov_raster(multiplier(x.config).value(), g, b);
  auto t = x.table();
  t.comment("L = log 3 + G(c1) + G(c2), the Lyapunov exponent of the maximal entropy measure; nan where undecided");
  t.columns({"row", "col", "re_a", "im_a", "class", "L"});
  double lmax = std::log(3.0);
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const cd a = g.point(i);
    const Cell& c = r.cells[i];
    if (!std::isnan(c.L)) lmax = std::max(lmax, c.L);
    t.row({fmt(std::int64_t(i / g.resolution)), fmt(std::int64_t(i % g.resolution)), fmt(a.real()), fmt(a.imag()),
           class_name(c.cls), fmt(c.L)});
  }
  auto [ok, msg] = capture_l_check(r, b.tol);
  t.footer("check: " + msg);
  t.write(x.out / "lyapunov.csv");
  // Grey levels: 0 at log 3, 254 at the maximum; undecided 255.
  std::vector<std::uint8_t> px(r.cells.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double L = r.cells[i].L;
    px[i] = std::isnan(L) ? 255
                          : static_cast<std::uint8_t>(std::lround(
                                254.0 * (lmax > std::log(3.0) ? (L - std::log(3.0)) / (lmax - std::log(3.0)) : 0.0)));
  }
  write_file(x.out / "lyapunov.pgm", pgm(g.resolution, g.resolution, px, x.config_text));
  return x.verdict(ok, msg);
}

int cmd_current_density(const Ctx& x) {
  const GridSpec g = grid(x);
  const auto b = budgets(x);
  auto r = lyapunov_raster(multiplier(x.config).value(), g, b);
  auto d = slice_current_density(r);
  auto t = x.table();
  t.comment("mass = five-point Laplacian of L * cell area / (2 pi); masked on the border and next to undecided cells");
  t.columns({"row", "col", "re_a", "im_a", "L", "mass", "masked"});
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const cd a = g.point(i);
    t.row({fmt(std::int64_t(i / g.resolution)), fmt(std::int64_t(i % g.resolution)), fmt(a.real()), fmt(a.imag()),
           fmt(r.cells[i].L), d.masked[i] ? "" : fmt(d.mass[i]), d.masked[i] ? "1" : "0"});
  }
  std::string summary = "total mass " + fmt(d.total) + ", mask fraction " + fmt(d.mask_fraction);
  if (d.warning) summary += ", WARNING: more than half of the cells are masked";
  t.footer(summary);
  t.write(x.out / "density.csv");
  return x.verdict(!d.warning, summary);
}

int cmd_fixed_points(const Ctx& x) {
  const auto cf = CFExpansion::parse(x.config.at("cf").get<std::string>());
  const XComplex a(get_complex(x.config, "a"));
  const auto s = linearizer(CubicMap{Multiplier::siegel(cf).value(), a}, x.config.at("K").get<std::size_t>());
  const double r1 = x.config.at("r1").get<double>();
  const auto m = x.config.at("m").get<std::size_t>();
  const int nmin = x.config.at("nmin").get<int>(), nmax = x.config.at("nmax").get<int>();
  const auto convs = convergents(cf, nmax);
  auto t = x.table();
  t.comment("winding of f_n^q(z) - z along psi(|w| = r1 r_hat); n_extra = winding - (q_n + 1) counts fixed points other than 0");
  t.comment("winding_2m, winding_4m repeat the count from 2m and 4m initial samples");
  t.columns({"n", "q_n", "winding", "n_extra", "samples", "min_modulus", "winding_2m", "winding_4m"});
  bool ok = true;
  std::ostringstream msg;
  for (int n = std::max(nmin, 0); n <= nmax; ++n) {
    const auto& c = convs[static_cast<std::size_t>(n)];
    const auto lam = Multiplier::rational(c.p, c.q);
    auto f1 = count_fixed_points(lam, a, s, c.q, r1, m);
    auto f2 = count_fixed_points(lam, a, s, c.q, r1, 2 * m);
    auto f4 = count_fixed_points(lam, a, s, c.q, r1, 4 * m);
    t.row({fmt(std::int64_t{n}), fmt(c.q), fmt(std::int64_t{f1.winding}), fmt(std::int64_t{f1.n_extra}),
           fmt(std::int64_t(f1.samples)), fmt(f1.min_modulus), fmt(std::int64_t{f2.winding}),
           fmt(std::int64_t{f4.winding})});
    const bool stable = f1.winding == f2.winding && f2.winding == f4.winding;
    const bool small = f1.n_extra >= 0 && f1.n_extra <= 0.1 * static_cast<double>(c.q);
    if (!stable || !small) {
      ok = false;
      msg << "n = " << n << (stable ? "" : " winding changes under doubling") << (small ? "" : " N_extra/q_n > 0.1")
          << "; ";
    }
  }
  if (ok) msg << "N_extra/q_n <= 0.1 and windings stable for every stage";
  t.footer("check: " + msg.str());
  t.write(x.out / "fixed_points.csv");
  return x.verdict(ok, msg.str());
}

int cmd_winding(const Ctx& x) {
  const auto cf = CFExpansion::parse(x.config.at("cf").get<std::string>());
  const cd a0 = get_complex(x.config, "a");
  const double d = x.config.at("diameter").get<double>();
  const int nmin = x.config.at("nmin").get<int>(), nmax = x.config.at("nmax").get<int>();
  if (nmin < 1 || nmax < nmin) throw ValidationError("winding: need 1 <= nmin <= nmax");
  WindingOptions opt;
  opt.K = x.config.at("K").get<std::size_t>();
  opt.max_samples = x.config.at("max_samples").get<std::size_t>();
  auto k = x.config.at("k").get<std::size_t>();
  if (k == 0) {
    CubicMap f{Multiplier::siegel(cf).value(), XComplex(a0)};
    auto s = linearizer(f, opt.K);
    auto [c1, c2] = critical_points(f);
    for (const auto& c : {c1, c2}) {
      auto r = capture_test(f, s, c, 200);
      if (r.verdict == CaptureVerdict::Landed && (k == 0 || *r.landed_at < k)) k = *r.landed_at;
    }
    if (k == 0) throw PreconditionError("winding: no critical point of f_{lambda,a} lands in the Siegel disk at the path midpoint");
  }
  const std::vector<cd> path{a0 - d / 2, a0 + d / 2};
  const auto convs = convergents(cf, nmax);

  auto stages = x.table();
  stages.comment("arg delta_n tracked continuously along a0 +- diameter/2 at capture depth k = " + std::to_string(k));
  stages.comment("band centres are arg delta = pi mod 2 pi; adjacent = samples with petal band indices differing by 1");
  stages.columns({"n", "q_n", "total_arg_variation", "net_arg_change", "band_crossings", "adjacent", "samples"});
  auto samples = x.table();
  samples.columns({"n", "s", "re_a", "im_a", "arg_delta", "log_abs_delta", "verdict", "band"});

  std::vector<double> tv;
  std::vector<std::int64_t> qs;
  WindingReport last;
  for (int n = nmin; n <= nmax; ++n) {
    auto rep = winding_experiment(path, cf, n, k, opt);
    const auto q = convs[static_cast<std::size_t>(n)].q;
    stages.row({fmt(std::int64_t{n}), fmt(q), fmt(rep.total_arg_variation), fmt(rep.net_arg_change),
                fmt(std::int64_t{rep.band_crossings}), rep.adjacent_bands ? "1" : "0",
                fmt(std::int64_t(rep.samples.size()))});
    for (const auto& sm : rep.samples) {
      const char* v = sm.verdict == PetalVerdict::AttractingBand   ? "attracting-band"
                      : sm.verdict == PetalVerdict::RepellingSide ? "repelling-side"
                                                                   : "unresolved";
      samples.row({fmt(std::int64_t{n}), fmt(sm.s), fmt(sm.a.real()), fmt(sm.a.imag()), fmt(sm.arg),
                   fmt(sm.log_abs_delta), v, sm.band ? fmt(std::int64_t{*sm.band}) : ""});
    }
    tv.push_back(rep.total_arg_variation);
    qs.push_back(q);
    last = std::move(rep);
  }
  bool ok = true;
  std::ostringstream msg;
  for (std::size_t i = 1; i < tv.size(); ++i) {
    const double ratio = tv[i] / tv[i - 1];
    const double expect = static_cast<double>(qs[i]) / static_cast<double>(qs[i - 1]);
    const bool within = std::abs(ratio / expect - 1.0) <= 0.5;
    ok &= within;
    msg << "ratio " << ratio << " vs q ratio " << expect << (within ? " ok" : " off") << "; ";
  }
  const bool crossing = last.band_crossings >= 1 && last.adjacent_bands.has_value();
  ok &= crossing;
  msg << "largest stage: " << last.band_crossings << " band crossings"
      << (last.adjacent_bands ? ", adjacent band pair found" : ", no adjacent band pair");
  stages.footer("check: " + msg.str());
  stages.write(x.out / "winding.csv");
  samples.write(x.out / "winding_samples.csv");
  return x.verdict(ok, msg.str());
}

int cmd_jellouli(const Ctx& x) {
  const auto cf = CFExpansion::parse(x.config.at("cf").get<std::string>());
  const XComplex a(get_complex(x.config, "a"));
  const XComplex lam = Multiplier::siegel(cf).value();
  const auto s = linearizer(CubicMap{lam, a}, x.config.at("K").get<std::size_t>());
  const int nmin = x.config.at("nmin").get<int>(), nmax = x.config.at("nmax").get<int>();
  const auto convs = convergents(cf, nmax);
  auto t = x.table();
  t.comment("C_hat(n) = max over |x| = r0 r_hat, 1 <= k <= q_n of q_n^2 |phi(f_n^k(psi(x))) - lambda_n^k x| / (k |x|); bounded in n");
  t.columns({"n", "q_n", "C_hat", "samples_used", "samples_skipped"});
  double lo = INFINITY, hi = 0;
  for (int n = std::max(nmin, 1); n <= nmax; ++n) {
    const auto& c = convs[static_cast<std::size_t>(n)];
    const XComplex ln = unit_root(c.p, c.q);
    auto j = jellouli_stat(CubicMap{ln, a}, ln, s, c.q, x.config.at("r0").get<double>(),
                           x.config.at("m").get<std::size_t>(), x.config.at("seed").get<std::uint64_t>());
    t.row({fmt(std::int64_t{n}), fmt(c.q), fmt(j.c_hat), fmt(std::int64_t(j.samples_used)),
           fmt(std::int64_t(j.samples_skipped))});
    lo = std::min(lo, j.c_hat);
    hi = std::max(hi, j.c_hat);
  }
  const bool ok = std::isfinite(hi) && lo > 0 && hi / lo <= 10;
  const std::string msg = "max/min C_hat = " + fmt(hi / lo) + (ok ? " <= 10" : " not within 10");
  t.footer("check: " + msg);
  t.write(x.out / "jellouli.csv");
  return x.verdict(ok, msg);
}

int cmd_noble_radius(const Ctx& x) {
  const auto cf = CFExpansion::parse(x.config.at("cf").get<std::string>());
  NobleOptions opt;
  opt.K = x.config.at("K").get<std::size_t>();
  opt.capture_budget = x.config.at("capture_budget").get<std::size_t>();
  auto tb = noble_radius_experiment(XComplex(get_complex(x.config, "a")), cf, x.config.at("nmin").get<int>(),
                                    x.config.at("nmax").get<int>(), opt);
  auto t = x.table();
  t.comment("theta_n = [a0; a_1..a_n, 1, 1, ...]; r_hat(theta_n, a) should approach r_hat(theta, a) = " +
            fmt(tb.r_hat) + " and the capture depth stay at " + std::to_string(tb.depth));
  t.columns({"n", "theta_n", "r_hat", "r_hat_err", "depth", "note"});
  for (const auto& r : tb.rows)
    t.row({fmt(std::int64_t{r.n}), "\"" + r.theta_n.to_string() + "\"", r.r_hat > 0 ? fmt(r.r_hat) : "",
           r.r_hat > 0 ? fmt(r.r_hat_err) : "", r.depth ? fmt(std::int64_t(*r.depth)) : "", r.note});
  t.footer("check: " + tb.check_message);
  t.write(x.out / "noble_radius.csv");
  return x.verdict(tb.radius_ok && tb.depth_ok, tb.check_message);
}

const std::map<std::string, std::function<int(const Ctx&)>>& dispatch() {
  static const std::map<std::string, std::function<int(const Ctx&)>> d = {
      {"convergents", cmd_convergents},   {"brjuno", cmd_brjuno},
      {"bn-scaling", cmd_bn_scaling},     {"radius", cmd_radius},
      {"classify", cmd_classify},         {"lyapunov-map", cmd_lyapunov_map},
      {"current-density", cmd_current_density}, {"fixed-points", cmd_fixed_points},
      {"winding", cmd_winding},           {"jellouli", cmd_jellouli},
      {"noble-radius", cmd_noble_radius}};
  return d;
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

json convert(const OptionSpec& o, const std::string& text) {
  switch (o.kind) {
    case Kind::Str: return text;
    case Kind::Int: {
      const double v = parse_real(text);
      if (v != std::floor(v) || std::abs(v) > 9e15) throw ValidationError("--" + o.name + " needs an integer");
      return static_cast<std::int64_t>(v);
    }
    case Kind::Real: return parse_real(text);
    case Kind::Complex: {
      const cd z = parse_complex(text);
      return json::array({z.real(), z.imag()});
    }
    case Kind::Bool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ValidationError("--" + o.name + " needs true or false");
  }
  return nullptr;
}

// Complex values may be given as strings in config files.
json normalize(const OptionSpec& o, const json& v) {
  if (o.kind == Kind::Complex && v.is_string()) return convert(o, v.get<std::string>());
  if (o.kind == Kind::Complex && v.is_number()) return json::array({v.get<double>(), 0.0});
  return v;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : option_table()) n.push_back(k);
    return n;
  }();
  return names;
}

const std::vector<OptionSpec>& options_for(const std::string& command) {
  static std::map<std::string, std::vector<OptionSpec>> merged;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = merged.find(command);
  if (it != merged.end()) return it->second;
  auto t = option_table().find(command);
  if (t == option_table().end()) throw ValidationError("unknown command '" + command + "'");
  auto all = t->second;
  all.insert(all.end(), common_options().begin(), common_options().end());
  return merged.emplace(command, std::move(all)).first->second;
}

std::complex<double> parse_complex(std::string_view text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw ValidationError("empty complex number");
  if (s.back() != 'i') return {parse_real(s), 0.0};
  s.pop_back();
  // Split before the last sign that is not an exponent sign or the leading one.
  std::size_t split = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;)
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      split = i;
      break;
    }
  std::string re = split == std::string::npos ? "" : s.substr(0, split);
  std::string im = split == std::string::npos ? s : s.substr(split);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  return {re.empty() ? 0.0 : parse_real(re), parse_real(im)};
}

json default_config(const std::string& command) {
  json c = json::object();
  c["command"] = command;
  for (const auto& o : options_for(command)) c[o.name] = o.fallback;
  if (const char* env = std::getenv("CUBICLAB_PRECISION"); env && *env)
    c["precision"] = convert(OptionSpec{"precision", Kind::Int, 0, ""}, env);
  return c;
}

void validate_config(const json& c) {
  if (!c.is_object() || !c.contains("command") || !c["command"].is_string())
    throw ValidationError("config must be an object with a \"command\" string");
  const auto& opts = options_for(c["command"].get<std::string>());
  for (const auto& [k, v] : c.items()) {
    if (k == "command") continue;
    auto it = std::find_if(opts.begin(), opts.end(), [&](const OptionSpec& o) { return o.name == k; });
    if (it == opts.end()) throw ValidationError("unknown key '" + k + "' for " + c["command"].get<std::string>());
    bool ok = false;
    switch (it->kind) {
      case Kind::Str: ok = v.is_string(); break;
      case Kind::Int: ok = v.is_number_integer(); break;
      case Kind::Real: ok = v.is_number(); break;
      case Kind::Complex: ok = v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(); break;
      case Kind::Bool: ok = v.is_boolean(); break;
    }
    if (!ok) throw ValidationError("bad value for '" + k + "': " + v.dump());
  }
  for (const auto& o : opts)
    if (!c.contains(o.name)) throw ValidationError("missing key '" + o.name + "'");
  if (c["precision"].get<std::int64_t>() < 64) throw ValidationError("precision must be at least 64 bits");
  for (const char* key : {"K", "m", "n", "N", "nmin", "nmax", "escape_budget", "capture_budget", "max_samples", "seed"})
    if (c.contains(key) && c[key].get<std::int64_t>() < 0) throw ValidationError(std::string(key) + " must be >= 0");
  if (c.contains("cf")) CFExpansion::parse(c["cf"].get<std::string>());
}

int run(const json& config, const fs::path& out, std::ostream& log, unsigned threads) {
  std::string command = config.value("command", std::string("?"));
  auto who = [&] {
    auto b = blame().find(command);
    return b == blame().end() ? std::string("[cli]")
                              : "[" + std::string(b->second.first) + "; " + b->second.second + "]";
  };
  try {
    validate_config(config);
    PrecisionScope scope(static_cast<mpfr_prec_t>(config["precision"].get<std::int64_t>()));
    fs::create_directories(out);
    Ctx ctx{config, config.dump(), out, log, threads, config["assert"].get<bool>()};
    return dispatch().at(command)(ctx);
  } catch (const ValidationError& e) {
    log << "validation error " << who() << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const json::exception& e) {
    log << "validation error " << who() << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    log << "numeric error " << who() << ": " << e.what() << '\n';
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    log << "validation error " << who() << ": " << e.what() << '\n';
    return kExitValidation;
  }
}

int rerun(const fs::path& file, const fs::path& out, std::ostream& log, unsigned threads) {
  json config;
  try {
    config = json::parse(read_config_header(file));
  } catch (const std::exception& e) {
    log << "validation error [cli]: " << e.what() << '\n';
    return kExitValidation;
  }
  return run(config, out, log, threads);
}

int main_entry(int argc, char** argv) {
  CLI::App app{"cubiclab: numerical experiments on the cubic family lambda z + a z^2 + z^3"};
  app.require_subcommand(1);
  std::string out = ".";
  unsigned threads = 0;
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads (0: all cores)");

  std::map<std::string, std::map<std::string, std::string>> given;
  std::map<std::string, std::string> config_files;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    subs[name] = sub;
    sub->add_option("--config", config_files[name], "JSON config file; flags override it");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (0: all cores)");
    for (const auto& o : options_for(name)) {
      const std::string help = o.help + " [default " + o.fallback.dump() + "]";
      if (o.kind == Kind::Bool)
        sub->add_flag_function("--" + o.name, [&given, name, key = o.name](std::int64_t) { given[name][key] = "true"; },
                               help);
      else
        sub->add_option_function<std::string>(
            "--" + o.name, [&given, name, key = o.name](const std::string& v) { given[name][key] = v; }, help);
    }
  }
  std::string rerun_file;
  auto* re = app.add_subcommand("rerun", "reproduce an output file from its embedded config");
  re->add_option("file", rerun_file, "CSV or PGM written by cubiclab")->required();
  re->add_option("--out", out, "output directory");
  re->add_option("--threads", threads, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (re->parsed()) return rerun(rerun_file, out, std::cerr, threads);

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    json config;
    try {
      config = default_config(name);
      if (!config_files[name].empty()) {
        std::ifstream f(config_files[name]);
        if (!f) throw ValidationError("cannot read " + config_files[name]);
        json file = json::parse(f);
        if (!file.is_object()) throw ValidationError("config file must hold a JSON object");
        for (auto& [k, v] : file.items()) {
          if (k == "command") {
            if (v != name) throw ValidationError("config file is for '" + v.dump() + "', not " + name);
            continue;
          }
          const auto& opts = options_for(name);
          auto it = std::find_if(opts.begin(), opts.end(), [&](const OptionSpec& o) { return o.name == k; });
          if (it == opts.end()) throw ValidationError("unknown key '" + k + "' in " + config_files[name]);
          config[k] = normalize(*it, v);
        }
      }
      for (const auto& o : options_for(name))
        if (auto g = given[name].find(o.name); g != given[name].end()) config[o.name] = convert(o, g->second);
    } catch (const std::exception& e) {
      std::cerr << "validation error [cli]: " << e.what() << '\n';
      return kExitValidation;
    }
    return run(config, out, std::cerr, threads);
  }
  return kExitValidation;
}

}  // namespace cubiclab::app
