#pragma once

#include <cmath>

#include "qtd/errors.hpp"
#include "qtd/timeops.hpp"

namespace qtd::detail {

// Fixed horizons are used as given; the automatic one is widened while the tail stays fat
// and the guard band allows it.
template <class Sum>
SumResult with_growing_horizon(long n_max, long n_auto, Sum&& sum) {
  if (n_max > 0) return sum(n_max);
  SumResult res = sum(n_auto);
  for (int attempt = 0; attempt < 6 && !res.conclusive; ++attempt) {
    try {
      res = sum(static_cast<long>(std::ceil(1.25 * static_cast<double>(res.n_max))));
    } catch (const TruncationError&) {
      break;
    }
  }
  return res;
}

}  // namespace qtd::detail
