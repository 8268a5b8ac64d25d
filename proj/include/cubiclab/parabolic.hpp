#pragma once

// The rational approximants lambda_n = e^{2 pi i p_n/q_n}: the parabolic
// coefficient b_n, petal-band probes of the near-parabolic return map, the
// argument-principle fixed-point count and the Jellouli statistic.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubiclab/cubic.hpp"
#include "cubiclab/grid.hpp"
#include "cubiclab/rotation.hpp"
#include "cubiclab/siegel.hpp"

namespace cubiclab {

struct ParabolicStage {
  int n = -1;  // convergent index, -1 when called with a bare q
  Convergent conv;
  XComplex lambda_n;
  XComplex b;                     // coefficient of z^{q+1} in f^q
  double residual = 0.0;          // max_{2<=j<=q} |c_j| / max_k |[z^j] f^k|
  double cancellation_bits = 0.0;  // log2 of (largest intermediate [z^{q+1}]) / |b|
  bool degenerate = false;        // b is exactly zero
};

// Jet of f^q to order q+1. PreconditionError unless lambda_n is a primitive
// q-th root of unity; StructuralError if the normal-form residual exceeds
// 2^{-P/2}; PrecisionError if cancellation leaves fewer than 32 bits of b.
ParabolicStage b_n_compute(const XComplex& lambda_n, const XComplex& a, std::int64_t q);
ParabolicStage b_n_stage(const CFExpansion& cf, int n, const XComplex& a);

struct DegeneracyMap {
  GridSpec spec;
  std::vector<double> log_abs_b;  // natural log, -inf where b = 0
  std::vector<bool> flagged;      // |b| < threshold * median |b|
  double log_median = 0.0;
};

inline constexpr double kDegeneracyThreshold = 1e-2;

DegeneracyMap nondegenerate_test(const Multiplier& lambda_n, std::int64_t q, const GridSpec& region,
                                 double threshold = kDegeneracyThreshold);

enum class PetalVerdict { AttractingBand, RepellingSide, Unresolved };

struct PetalProbe {
  XComplex z_star;
  std::optional<XComplex> w;      // phi(z_star)
  std::optional<XComplex> delta;  // Log(phi(f^q z_star) / phi(z_star))
  double arg_delta = 0.0;
  double log_abs_delta = 0.0;
  std::optional<int> band_index;  // k with 2k pi + 3pi/4 < arg < 2k pi + 5pi/4 (principal arg)
  PetalVerdict verdict = PetalVerdict::Unresolved;
  std::string cause;              // why the verdict is Unresolved
  long precision_used = 0;
};

inline constexpr double kBandMargin = 0.05;

// The multiplier of the probed map is re-evaluated at the raised working
// precision the displacement needs, about q log2(r_hat / |phi(z_star)|) bits
// above the current one.
PetalProbe petal_probe(const Multiplier& map_multiplier, const XComplex& a, const LinearizationSeries& series,
                       const XComplex& z_star, std::int64_t q, double margin_bits = 64);

struct WindingSample {
  double s = 0.0;  // arclength along the path
  std::complex<double> a;
  double arg = 0.0;  // continuously tracked arg delta
  double log_abs_delta = 0.0;
  PetalVerdict verdict = PetalVerdict::Unresolved;
  std::optional<int> band;  // band index on the tracked branch
};

struct WindingReport {
  std::vector<WindingSample> samples;
  double total_arg_variation = 0.0;
  double net_arg_change = 0.0;
  int band_crossings = 0;  // crossings of band centres pi + 2k pi
  std::optional<std::pair<std::size_t, std::size_t>> adjacent_bands;  // samples whose bands differ by 1
};

struct WindingOptions {
  std::size_t K = kMembershipOrder;
  std::size_t initial_samples = 33;
  std::size_t max_samples = 4000;
  double min_step = 1e-12;
  double margin_bits = 64;
};

// arg delta_n(a) along a polyline at the stage-n multiplier, with
// z_star = f_{lambda_n,a}^k(c_a) and c_a tracked by continuity from the
// critical point nearest `critical_hint` (defaults to the one captured at
// depth k at the start of the path).
WindingReport winding_experiment(std::span<const std::complex<double>> path, const CFExpansion& cf, int n,
                                 std::size_t k, const WindingOptions& options = {},
                                 std::optional<std::complex<double>> critical_hint = std::nullopt);

struct WindingCount {
  int winding = 0;
  std::size_t samples = 0;
  double min_modulus = 0.0;  // min |F| over the final samples, relative to the median
};

// Winding number of t -> F(t), t in [0, 1), around 0. Sample counts double
// from `m` until the integer is the same for three consecutive counts and
// every step turns by less than pi/2. DomainError when the contour passes
// (numerically) through a zero or `max_samples` is reached first.
WindingCount winding_number(const std::function<XComplex(double)>& F, std::size_t m,
                            std::size_t max_samples = 1 << 16);

struct FixedPointCount {
  int winding = 0;
  int n_extra = 0;  // winding - (q + 1)
  std::size_t samples = 0;
  double min_modulus = 0.0;
};

// Fixed points of f_n^q inside psi(D(0, r1 r_hat)) by the argument principle.
FixedPointCount count_fixed_points(const Multiplier& lambda_n, const XComplex& a,
                                   const LinearizationSeries& series, std::int64_t q, double r1,
                                   std::size_t m = 256);

struct JellouliResult {
  double c_hat = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_skipped = 0;
};

// max over samples x on |x| = r0 r_hat and 1 <= k <= q of
// q^2 |phi(f^k(psi(x))) - rotation^k x| / (k |x|).
JellouliResult jellouli_stat(const CubicMap& f, const XComplex& rotation, const LinearizationSeries& series,
                             std::int64_t q, double r0, std::size_t m, std::uint64_t seed = 0);

}  // namespace cubiclab
