#pragma once
// Parameter-plane rasters over a (capture/escape classes, Lyapunov field,
// slice current density) and the packaged scaling experiments.
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cubiclab/grid.hpp"
#include "cubiclab/parabolic.hpp"
#include "cubiclab/rotation.hpp"
#include "cubiclab/siegel.hpp"

namespace cubiclab {

// Runs body(i) for i in [0, n) on up to `threads` workers (0: hardware
// concurrency). Workers inherit the caller's working precision.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

enum class CellClass { Escape, Capture, Undecided };

// PGM palette indices.
inline constexpr int kPaletteEscape = 255;
inline constexpr int kPaletteUndecided = 128;
inline constexpr int kPaletteCapture = 0;  // plus 8 * min(depth, 15) for depths >= 1

struct Cell {
  CellClass cls = CellClass::Undecided;
  std::size_t depth = 0;  // k for Capture
  int component = -1;     // 4-connected capture component label
  double L = 0.0;         // NaN when undecided
  std::map<std::string, double> aux;
};

struct Raster {
  GridSpec spec;
  std::vector<Cell> cells;
  int components = 0;
};

struct RasterBudgets {
  std::size_t escape_budget = 2000;
  std::size_t capture_budget = 200;
  std::size_t K = 128;  // linearizer order per cell
  double tol = 1e-6;    // Green / Lyapunov tolerance
  double rho = kDefaultSafety;
  unsigned threads = 0;
};

// Escape if a critical orbit escapes; otherwise capture(k) with the smallest
// depth over both critical points; otherwise undecided.
Raster classify_raster(const XComplex& lambda, const GridSpec& spec, const RasterBudgets& budgets = {});

// classify_raster plus L on every decided cell (log 3 on capture cells).
Raster lyapunov_raster(const XComplex& lambda, const GridSpec& spec, const RasterBudgets& budgets = {});

// Centre of the capture component through a0: the root of f_a^k(c_a) = 0,
// where c_a is the critical point continued from `critical_at_a0`.
struct CenterResult {
  std::complex<double> a;
  std::complex<double> critical;
  double residual = 0.0;
  int iterations = 0;
};
std::optional<CenterResult> locate_center(const XComplex& lambda, std::complex<double> a0, std::size_t k,
                                          std::complex<double> critical_at_a0, int max_iterations = 60);

struct DensityField {
  GridSpec spec;
  std::vector<double> mass;  // NaN where masked
  std::vector<bool> masked;
  double total = 0.0;
  double mask_fraction = 0.0;
  bool warning = false;  // mask_fraction > 0.5
};
// Five-point Laplacian of L times cell area / 2 pi. Border cells and cells
// next to an undecided cell are masked.
DensityField slice_current_density(const Raster& raster);
DensityField slice_current_density(const GridSpec& spec, const std::function<double(std::complex<double>)>& L);

enum class StageStatus { Ok, ParityDegenerate, Refused, PrecisionExhausted };
const char* to_string(StageStatus s);

struct BnRow {
  int n = 0;
  std::int64_t q = 0;
  StageStatus status = StageStatus::Ok;
  double log_b_over_q = 0.0;  // (1/q) log|b_n|
  double neg_log_r = 0.0;     // -log r_hat
  double e = 0.0;
  double log10_abs_b = 0.0;
  double arg_b_over_pi = 0.0;
  double residual = 0.0;
  double cancellation_bits = 0.0;
  std::string note;
};

struct BnTable {
  std::complex<double> a;
  CFExpansion cf;
  double r_hat = 0.0;
  double r_hat_err = 0.0;
  std::vector<BnRow> rows;
  std::optional<std::string> refused;    // a failed nondegenerate_test
  std::optional<std::string> truncated;  // precision ran out
  bool check_passed = false;             // e_n tail condition
  std::string check_message;
};

struct BnOptions {
  std::size_t K = kRadiusOrder;
  double gate_half_width = 0.02;
  std::size_t gate_resolution = 3;
  double e_tolerance = 0.05;
  std::int64_t tail_min_q = 2;  // stages with smaller q are pre-asymptotic
};

// Stages n_min..n_max. a = 0 with odd q is skipped (b_n = 0 since f is odd);
// every other stage is gated on nondegenerate_test around a.
BnTable bn_scaling_experiment(const XComplex& a, const CFExpansion& cf, int n_min, int n_max,
                              const BnOptions& options = {});

struct NobleRow {
  int n = 0;
  CFExpansion theta_n;
  double r_hat = 0.0;
  double r_hat_err = 0.0;
  std::optional<std::size_t> depth;
  std::string note;
};

struct NobleTable {
  std::complex<double> a;
  CFExpansion cf;
  double r_hat = 0.0;
  std::size_t depth = 0;
  std::vector<NobleRow> rows;
  bool radius_ok = false;  // within 5% at the largest n
  bool depth_ok = false;   // last three rows capture at the same depth
  std::string check_message;
};

struct NobleOptions {
  std::size_t K = kRadiusOrder;
  std::size_t capture_budget = 50;
  double rho = kDefaultSafety;
  double radius_tolerance = 0.05;
};

// PreconditionError unless a critical point of f_{lambda(theta),a} is captured.
NobleTable noble_radius_experiment(const XComplex& a, const CFExpansion& cf, int n_min, int n_max,
                                   const NobleOptions& options = {});

}  // namespace cubiclab
