#include "ebk/monotone_cubic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ebk/error.hpp"

namespace ebk {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y,
                             std::vector<double> slopes)
    : x_(std::move(x)), y_(std::move(y)), d_(std::move(slopes)) {
  if (x_.size() < 2 || y_.size() != x_.size() || d_.size() != x_.size()) {
    throw Error(ErrorCode::InvalidArgument, "interpolant needs >= 2 matching nodes");
  }
  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    if (!(x_[i] < x_[i + 1])) throw Error(ErrorCode::InvalidArgument, "nodes must increase");
    if (!(y_[i] < y_[i + 1])) throw Error(ErrorCode::NotDiffeomorphism, "data not increasing");
  }
  for (double& d : d_) {
    if (!(d >= 0.0)) {
      d = 0.0;
      ++limited_;
    }
  }
  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    const double secant = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    const double a = d_[i] / secant;
    const double b = d_[i + 1] / secant;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double t = 3.0 / std::sqrt(r2);
      d_[i] = t * a * secant;
      d_[i + 1] = t * b * secant;
      ++limited_;
    }
  }
}

std::size_t MonotoneCubic::interval(double x) const {
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin(), 1)) - 1;
  return std::min(i, x_.size() - 2);
}

double MonotoneCubic::operator()(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] +
         (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * d_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[i] + (6 * t - 6 * t2) * y_[i + 1]) / h +
         (3 * t2 - 4 * t + 1) * d_[i] + (3 * t2 - 2 * t) * d_[i + 1];
}

double MonotoneCubic::inverse(double y, double tol) const {
  if (y < y_.front() || y > y_.back()) {
    throw Error(ErrorCode::OutOfWindow, "value outside the interpolant range");
  }
  const auto it = std::upper_bound(y_.begin(), y_.end(), y);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - y_.begin(), 1)) - 1;
  i = std::min(i, y_.size() - 2);
  double lo = x_[i];
  double hi = x_[i + 1];
  // Newton from the secant guess, bisection whenever Newton leaves the bracket.
  double x = lo + (y - y_[i]) / (y_[i + 1] - y_[i]) * (hi - lo);
  for (int it_count = 0; it_count < 200; ++it_count) {
    const double r = (*this)(x) - y;
    if (std::abs(r) <= tol) return x;
    if (r < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
      return x;
    }
    const double d = derivative(x);
    double next = d > 0.0 ? x - r / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

}  // namespace ebk
