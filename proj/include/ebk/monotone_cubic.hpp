#pragma once

#include <cstddef>
#include <vector>

namespace ebk {

// Piecewise cubic Hermite interpolant of increasing data with prescribed
// slopes. Slopes that would break monotonicity are limited with the
// Fritsch-Carlson rule, so the interpolant is invertible.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y, std::vector<double> slopes);

  double operator()(double x) const;
  double derivative(double x) const;
  // x with |p(x) - y| <= tol; y must lie in [front, back] of the data.
  double inverse(double y, double tol = 1e-13) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  double y_min() const { return y_.front(); }
  double y_max() const { return y_.back(); }
  // Number of slopes modified by the limiter.
  std::size_t limited() const noexcept { return limited_; }

 private:
  std::size_t interval(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_;
  std::size_t limited_ = 0;
};

}  // namespace ebk
