#include "ebk/flow.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <utility>

#include "ebk/error.hpp"

namespace ebk {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

FlowState axpy(const FlowState& y, double h, std::initializer_list<std::pair<double, const FlowState*>> terms) {
  FlowState r = y;
  for (const auto& [c, k] : terms) {
    r.x += h * c * k->x;
    r.xi += h * c * k->xi;
    r.action += h * c * k->action;
  }
  return r;
}

}  // namespace

FlowState HamiltonianFlow::derivative(const FlowState& y) const noexcept {
  const Gradient g = spec_.gradient(y.point());
  return {g.dxi, -g.dx, y.xi * g.dxi};
}

FlowStep HamiltonianFlow::step(const FlowState& y, double h) const noexcept {
  const FlowState k1 = derivative(y);
  const FlowState k2 = derivative(axpy(y, h, {{a21, &k1}}));
  const FlowState k3 = derivative(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
  const FlowState k4 = derivative(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  const FlowState k5 = derivative(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  const FlowState k6 =
      derivative(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  const FlowState y5 = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
  const FlowState k7 = derivative(y5);
  const FlowState err =
      axpy(FlowState{}, h, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}});

  auto weighted = [&](double e, double a, double b) {
    return std::abs(e) / (abs_tol_ + rel_tol_ * std::max(std::abs(a), std::abs(b)));
  };
  const double norm = std::max({weighted(err.x, y.x, y5.x), weighted(err.xi, y.xi, y5.xi),
                                weighted(err.action, y.action, y5.action)});
  return {y5, std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity()};
}

double HamiltonianFlow::next_step(double h, double error) noexcept {
  const double factor =
      error == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(error, -0.2), 0.2, 5.0);
  return h * factor;
}

double HamiltonianFlow::initial_step(const FlowState& y) const noexcept {
  const FlowState f = derivative(y);
  const double speed = std::hypot(f.x, f.xi);
  const double scale = std::max(1.0, std::hypot(y.x, y.xi));
  return speed > 0.0 ? 1e-3 * scale / speed : 1e-3;
}

FlowState HamiltonianFlow::advance(FlowState y, double duration) const {
  if (duration == 0.0) return y;
  const double dir = duration > 0.0 ? 1.0 : -1.0;
  double remaining = std::abs(duration);
  double h = std::min(initial_step(y), remaining);
  for (int guard = 0; remaining > 0.0; ++guard) {
    if (guard > 10'000'000) throw Error(ErrorCode::TraceDiverged, "step budget exhausted");
    const bool last = h >= remaining;
    const double take = last ? remaining : h;
    const FlowStep s = step(y, dir * take);
    if (s.error <= 1.0) {
      y = s.state;
      remaining = last ? 0.0 : remaining - take;
    }
    h = next_step(take, s.error);
    if (h < 1e-15 * std::max(1.0, std::abs(duration))) {
      throw Error(ErrorCode::TraceDiverged, "step size underflow");
    }
  }
  return y;
}

}  // namespace ebk
