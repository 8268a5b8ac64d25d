#pragma once

// Continued fractions of rotation numbers: convergents, Brjuno sums, noble
// truncations, and the multipliers e^{2 pi i theta} built from them.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cubiclab/xreal.hpp"

namespace cubiclab {

struct CFExpansion {
  enum class Tail { None, AllOnes };

  std::int64_t a0 = 0;
  std::vector<std::int64_t> partials;  // a_1 .. a_m, each >= 1
  Tail tail = Tail::None;

  static CFExpansion golden() { return {0, {}, Tail::AllOnes}; }

  // "[0;1,2,3]" or "[0;2,...]". A trailing "..." means all further partial
  // quotients are 1.
  static CFExpansion parse(std::string_view text);
  std::string to_string() const;

  // a_i for i >= 1 (expanding the tail), nullopt past a finite expansion.
  std::optional<std::int64_t> partial(std::size_t i) const;

  bool operator==(const CFExpansion&) const = default;
};

struct Convergent {
  std::int64_t p = 0;
  std::int64_t q = 1;
  int n = 0;
};

// (p_0, q_0) .. (p_{n_max}, q_{n_max}). PreconditionError past a finite
// expansion, RangeError if q overflows 64 bits.
std::vector<Convergent> convergents(const CFExpansion& cf, int n_max);

// Value at the working precision.
XReal cf_value(const CFExpansion& cf);

struct BrjunoSum {
  double partial_sum = 0.0;              // sum_{n=0}^{N} log(q_{n+1}) / q_n
  std::optional<double> tail_bound;      // bound on the rest; bounded type only
};
BrjunoSum brjuno_sum(const CFExpansion& cf, int N);

// [a0; a_1 .. a_n, 1, 1, ...]. For n = 0 the value is a0 + (sqrt(5) - 1)/2.
CFExpansion noble_truncate(const CFExpansion& cf, int n);

struct BoundedType {
  bool bounded = false;
  std::int64_t bound = 0;  // max partial quotient when bounded
  bool rational = false;
};
BoundedType is_bounded_type(const CFExpansion& cf);

// A multiplier on the unit circle that can be re-evaluated at any working
// precision: either e^{2 pi i theta} for a continued fraction, or the root of
// unity e^{2 pi i p/q}.
class Multiplier {
 public:
  static Multiplier siegel(CFExpansion cf);
  static Multiplier rational(std::int64_t p, std::int64_t q);

  XComplex value() const;
  bool is_rational() const { return !cf_.has_value(); }
  std::int64_t p() const { return p_; }
  std::int64_t q() const { return q_; }
  const std::optional<CFExpansion>& cf() const { return cf_; }

 private:
  std::optional<CFExpansion> cf_;
  std::int64_t p_ = 0, q_ = 1;
};

}  // namespace cubiclab
