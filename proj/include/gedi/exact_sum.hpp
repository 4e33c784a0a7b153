#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace gedi {

// Exact (correctly rounded) double summation via a growing expansion of
// non-overlapping partials. The result is a function of the multiset of
// addends only, independent of their order — this is what makes batch-level
// marginals bit-exactly permutation invariant.
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (std::size_t j = 0; j < partials_.size(); ++j) {
      double y = partials_[j];
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  // Correctly rounded value of the exact running sum (round-half-even fixup
  // over the partials, largest magnitude first).
  double value() const {
    if (partials_.empty()) return 0.0;
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(partials_.size()) - 1;
    double hi = partials_[static_cast<std::size_t>(i)];
    double lo = 0.0;
    while (i > 0) {
      const double x = hi;
      const double y = partials_[static_cast<std::size_t>(--i)];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    if (i > 0 && ((lo < 0.0 && partials_[static_cast<std::size_t>(i - 1)] < 0.0) ||
                  (lo > 0.0 && partials_[static_cast<std::size_t>(i - 1)] > 0.0))) {
      const double y2 = lo * 2.0;
      const double x2 = hi + y2;
      if (y2 == x2 - hi) hi = x2;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

}  // namespace gedi
