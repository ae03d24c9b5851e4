#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "abreu/errors.hpp"

namespace abreu {

// Monotone cubic Hermite interpolant with Fritsch-Carlson slope limiting.
// Where the data are monotone the interpolant is too, so interpolating a
// convex radial profile cannot manufacture spurious extrema.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw InvalidInput("monotone cubic: need >= 2 matching (x, y) pairs");
    for (size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i] < x_[i + 1]))
        throw InvalidInput("monotone cubic: abscissae must strictly increase");

    std::vector<double> h(n - 1), s(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      s[i] = (y_[i + 1] - y_[i]) / h[i];
    }

    d_.assign(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
      if (s[i - 1] * s[i] <= 0.0) {
        d_[i] = 0.0;  // local extremum in the data
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
      }
    }
    d_.front() = edge_slope(h[0], h[std::min<size_t>(1, n - 2)], s[0],
                            s[std::min<size_t>(1, n - 2)]);
    d_.back() = edge_slope(h[n - 2], h[n - 2 - std::min<size_t>(1, n - 2)],
                           s[n - 2], s[n - 2 - std::min<size_t>(1, n - 2)]);
  }

  // Clamps the argument to the data range.
  double operator()(double t) const {
    if (t <= x_.front()) t = x_.front();
    if (t >= x_.back()) t = x_.back();
    const size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double u = (t - x_[i]) / h;
    const double u2 = u * u, u3 = u2 * u;
    return y_[i] * (2 * u3 - 3 * u2 + 1) + h * d_[i] * (u3 - 2 * u2 + u) +
           y_[i + 1] * (-2 * u3 + 3 * u2) + h * d_[i + 1] * (u3 - u2);
  }

 private:
  // Shape-preserving one-sided slope (three-point estimate, then limited).
  static double edge_slope(double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0) return 0.0;
    if (s0 * s1 < 0.0 && std::fabs(d) > 3.0 * std::fabs(s0)) return 3.0 * s0;
    return d;
  }

  size_t interval(double t) const {
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    size_t i = static_cast<size_t>(it - x_.begin());
    if (i > 0) --i;
    return std::min(i, x_.size() - 2);
  }

  std::vector<double> x_, y_, d_;
};

}  // namespace abreu
