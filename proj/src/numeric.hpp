#pragma once

#include <cmath>
#include <utility>

namespace upscost::detail {

/// Root of a non-decreasing g on [lo, hi] with g(lo) <= 0 <= g(hi).
template <class F>
double bisect_root(F&& g, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Minimizer of a unimodal f on [a, b], endpoints included.
template <class F>
double golden_min(F&& f, double a, double b) {
  if (!(b > a)) return a;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double lo0 = a, hi0 = b;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double best = 0.5 * (a + b);
  double fbest = f(best);
  for (double p : {lo0, hi0}) {
    const double fp = f(p);
    if (fp < fbest) {
      best = p;
      fbest = fp;
    }
  }
  return best;
}

}  // namespace upscost::detail
