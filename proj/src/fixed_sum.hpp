#pragma once

#include <cmath>

namespace softts::detail {

// Order-independent sum. Each term is truncated to a multiple of 2^-64 and
// accumulated as a 128-bit integer, so any permutation of the same terms gives
// bit-identical results. Terms must stay well below 2^62 in magnitude.
class FixedSum {
 public:
  void add(double x) { acc_ += static_cast<Int>(std::ldexp(x, 64)); }
  double value() const { return std::ldexp(static_cast<double>(acc_), -64); }

 private:
  __extension__ typedef __int128 Int;
  Int acc_ = 0;
};

}  // namespace softts::detail
