#include "ebk/symbol_catalog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ebk/error.hpp"

namespace ebk {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double horner(const std::vector<double>& c, double x) noexcept {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// First and second derivatives by nested Horner, no allocation.
double horner_d1(const std::vector<double>& c, double x) noexcept {
  double p = 0.0;
  double d = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    d = d * x + p;
    p = p * x + *it;
  }
  return d;
}

double horner_d2(const std::vector<double>& c, double x) noexcept {
  double p = 0.0;
  double d = 0.0;
  double dd = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    dd = dd * x + 2.0 * d;
    d = d * x + p;
    p = p * x + *it;
  }
  return dd;
}

std::vector<double> derivative_coeffs(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t i = 1; i < c.size(); ++i) d.push_back(static_cast<double>(i) * c[i]);
  return d;
}

// Coefficients with trailing (highest-degree) zeros removed.
std::vector<double> trimmed(std::vector<double> c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  return c;
}

bool polynomial_confining(const std::vector<double>& coeffs) {
  const auto c = trimmed(coeffs);
  return c.size() >= 3 && (c.size() - 1) % 2 == 0 && c.back() > 0.0;
}

// Every real root of sum c_i x^i lies in (-R, R).
double cauchy_bound(const std::vector<double>& c) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) m = std::max(m, std::abs(c[i] / c.back()));
  return 1.0 + m;
}

template <class F>
double bisect_root(F&& f, double a, double b, int iters = 200) {
  double fa = f(a);
  for (int i = 0; i < iters; ++i) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = f(m);
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double polynomial_minimum(const std::vector<double>& coeffs) {
  const auto c = trimmed(coeffs);
  if (!polynomial_confining(c)) {
    throw Error(ErrorCode::NonCompactWindow, "polynomial potential is not confining");
  }
  const auto d = derivative_coeffs(c);
  const double r = cauchy_bound(d);
  constexpr int n = 20000;
  double best = std::numeric_limits<double>::infinity();
  double prev_x = -r;
  double prev_d = horner(d, prev_x);
  for (int i = 1; i <= n; ++i) {
    const double x = -r + 2.0 * r * i / n;
    const double dx = horner(d, x);
    best = std::min(best, horner(c, x));
    if ((prev_d < 0.0) != (dx < 0.0)) {
      const double root = bisect_root([&](double t) { return horner(d, t); }, prev_x, x);
      best = std::min(best, horner(c, root));
    }
    prev_x = x;
    prev_d = dx;
  }
  return best;
}

std::pair<double, double> polynomial_hull(const std::vector<double>& coeffs, double level) {
  auto c = trimmed(coeffs);
  if (!polynomial_confining(c)) {
    throw Error(ErrorCode::NonCompactWindow, "polynomial potential is not confining");
  }
  auto shifted = c;
  shifted[0] -= level;
  const double r = cauchy_bound(shifted);
  auto f = [&](double x) { return horner(shifted, x); };
  constexpr int n = 40000;
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = lo;
  double prev = -r;
  for (int i = 1; i <= n; ++i) {
    const double x = -r + 2.0 * r * i / n;
    if (f(x) <= 0.0) {
      if (std::isnan(lo)) lo = bisect_root(f, prev, x);
      hi = x;
    }
    prev = x;
  }
  if (std::isnan(lo)) {
    throw Error(ErrorCode::EmptyLevelSet, "sublevel set of the potential is empty");
  }
  const double step = 2.0 * r / n;
  hi = bisect_root(f, hi, std::min(hi + step, r));
  return {lo, hi};
}

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::InvalidSymbol, std::string("non-finite ") + what);
  }
}

}  // namespace

double potential_value(const PotentialSpec& v, double x) noexcept {
  return std::visit(overloaded{
                        [&](const Polynomial& p) { return horner(p.coeffs, x); },
                        [&](const DoubleWell& d) {
                          const double u = x * x - d.a * d.a;
                          return u * u;
                        },
                        [&](const Morse& m) {
                          const double u = -std::expm1(-m.width * x);
                          return m.depth * u * u;
                        },
                    },
                    v);
}

double potential_derivative(const PotentialSpec& v, double x) noexcept {
  return std::visit(overloaded{
                        [&](const Polynomial& p) { return horner_d1(p.coeffs, x); },
                        [&](const DoubleWell& d) { return 4.0 * x * (x * x - d.a * d.a); },
                        [&](const Morse& m) {
                          const double e = std::exp(-m.width * x);
                          return 2.0 * m.depth * m.width * (1.0 - e) * e;
                        },
                    },
                    v);
}

double potential_second_derivative(const PotentialSpec& v, double x) noexcept {
  return std::visit(
      overloaded{
          [&](const Polynomial& p) { return horner_d2(p.coeffs, x); },
          [&](const DoubleWell& d) { return 12.0 * x * x - 4.0 * d.a * d.a; },
          [&](const Morse& m) {
            const double e = std::exp(-m.width * x);
            return 2.0 * m.depth * m.width * m.width * e * (2.0 * e - 1.0);
          },
      },
      v);
}

double potential_minimum(const PotentialSpec& v) {
  return std::visit(overloaded{
                        [](const Polynomial& p) { return polynomial_minimum(p.coeffs); },
                        [](const DoubleWell&) { return 0.0; },
                        [](const Morse&) { return 0.0; },
                    },
                    v);
}

std::pair<double, double> sublevel_hull(const PotentialSpec& v, double level) {
  return std::visit(
      overloaded{
          [&](const Polynomial& p) { return polynomial_hull(p.coeffs, level); },
          [&](const DoubleWell& d) {
            if (level < 0.0) throw Error(ErrorCode::EmptyLevelSet, "level below well bottom");
            const double r = std::sqrt(d.a * d.a + std::sqrt(level));
            return std::pair{-r, r};
          },
          [&](const Morse& m) {
            if (level < 0.0) throw Error(ErrorCode::EmptyLevelSet, "level below well bottom");
            if (level >= m.depth) {
              std::ostringstream os;
              os << "Morse level " << level << " reaches the dissociation plateau " << m.depth;
              throw Error(ErrorCode::NonCompactWindow, os.str());
            }
            const double s = std::sqrt(level / m.depth);
            return std::pair{-std::log1p(s) / m.width, -std::log1p(-s) / m.width};
          },
      },
      v);
}

SymbolSpec::SymbolSpec(std::variant<PotentialSpec, ClosedForm> kind, std::string description)
    : kind_(std::move(kind)), description_(std::move(description)) {}

SymbolSpec SymbolSpec::schrodinger(PotentialSpec potential, std::string description) {
  std::visit(overloaded{
                 [](const Polynomial& p) {
                   if (p.coeffs.empty()) {
                     throw Error(ErrorCode::InvalidSymbol, "empty polynomial");
                   }
                   for (double c : p.coeffs) require_finite(c, "polynomial coefficient");
                 },
                 [](const DoubleWell& d) { require_finite(d.a, "double-well parameter"); },
                 [](const Morse& m) {
                   require_finite(m.depth, "Morse depth");
                   require_finite(m.width, "Morse width");
                   if (m.depth <= 0.0 || m.width <= 0.0) {
                     throw Error(ErrorCode::InvalidSymbol, "Morse depth and width must be > 0");
                   }
                 },
             },
             potential);
  return SymbolSpec(std::move(potential), std::move(description));
}

SymbolSpec SymbolSpec::closed_form(ClosedFormId id, std::vector<double> params,
                                   std::string description) {
  for (double p : params) require_finite(p, "closed-form parameter");
  switch (id) {
    case ClosedFormId::KerrOscillator:
      if (params.size() != 2 || params[0] <= 0.0 || params[1] < 0.0) {
        throw Error(ErrorCode::InvalidSymbol, "kerr oscillator needs omega > 0, kappa >= 0");
      }
      break;
    case ClosedFormId::QuarticKinetic:
      if (!params.empty()) {
        throw Error(ErrorCode::InvalidSymbol, "quartic_kinetic takes no parameters");
      }
      break;
  }
  return SymbolSpec(ClosedForm{id, std::move(params)}, std::move(description));
}

SymbolSpec SymbolSpec::harmonic(double omega) {
  return schrodinger(Polynomial{{0.0, 0.0, 0.5 * omega * omega}}, "harmonic");
}

SymbolSpec SymbolSpec::quartic() { return schrodinger(Polynomial{{0.0, 0.0, 0.0, 0.0, 1.0}}, "quartic"); }

SymbolSpec SymbolSpec::polynomial(std::vector<double> coeffs) {
  return schrodinger(Polynomial{std::move(coeffs)}, "polynomial");
}

SymbolSpec SymbolSpec::double_well(double a) { return schrodinger(DoubleWell{a}, "double_well"); }

SymbolSpec SymbolSpec::morse(double depth, double width) {
  return schrodinger(Morse{depth, width}, "morse");
}

bool SymbolSpec::is_schrodinger() const noexcept {
  return std::holds_alternative<PotentialSpec>(kind_);
}

const PotentialSpec* SymbolSpec::potential() const noexcept {
  return std::get_if<PotentialSpec>(&kind_);
}

const ClosedForm* SymbolSpec::closed_form_data() const noexcept {
  return std::get_if<ClosedForm>(&kind_);
}

double SymbolSpec::value(PhasePoint p) const noexcept {
  if (const auto* v = potential()) return 0.5 * p.xi * p.xi + potential_value(*v, p.x);
  const auto& cf = std::get<ClosedForm>(kind_);
  switch (cf.id) {
    case ClosedFormId::KerrOscillator: {
      const double r2 = p.x * p.x + p.xi * p.xi;
      return 0.5 * cf.params[0] * r2 + 0.25 * cf.params[1] * r2 * r2;
    }
    case ClosedFormId::QuarticKinetic: {
      const double q = p.xi * p.xi;
      return 0.25 * q * q + 0.5 * p.x * p.x;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Gradient SymbolSpec::gradient(PhasePoint p) const noexcept {
  if (const auto* v = potential()) return {potential_derivative(*v, p.x), p.xi};
  const auto& cf = std::get<ClosedForm>(kind_);
  switch (cf.id) {
    case ClosedFormId::KerrOscillator: {
      const double s = cf.params[0] + cf.params[1] * (p.x * p.x + p.xi * p.xi);
      return {s * p.x, s * p.xi};
    }
    case ClosedFormId::QuarticKinetic:
      return {p.x, p.xi * p.xi * p.xi};
  }
  return {};
}

Hessian SymbolSpec::hessian(PhasePoint p) const noexcept {
  if (const auto* v = potential()) return {potential_second_derivative(*v, p.x), 0.0, 1.0};
  const auto& cf = std::get<ClosedForm>(kind_);
  switch (cf.id) {
    case ClosedFormId::KerrOscillator: {
      const double w = cf.params[0];
      const double k = cf.params[1];
      const double s = w + k * (p.x * p.x + p.xi * p.xi);
      return {s + 2.0 * k * p.x * p.x, 2.0 * k * p.x * p.xi, s + 2.0 * k * p.xi * p.xi};
    }
    case ClosedFormId::QuarticKinetic:
      return {1.0, 0.0, 3.0 * p.xi * p.xi};
  }
  return {};
}

double eval_symbol(const SymbolSpec& spec, double x, double xi) {
  const double h = spec.value({x, xi});
  require_finite(h, "symbol value");
  return h;
}

Gradient eval_gradient(const SymbolSpec& spec, double x, double xi) {
  const Gradient g = spec.gradient({x, xi});
  require_finite(g.dx, "dH/dx");
  require_finite(g.dxi, "dH/dxi");
  return g;
}

EnergyWindow::EnergyWindow(double lo, double hi, double eps) : e1(lo), e2(hi), margin(eps) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(eps) || !(lo < hi) ||
      !(eps > 0.0)) {
    std::ostringstream os;
    os << "invalid energy window [" << lo << ", " << hi << "] margin " << eps;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

Box Box::scaled(double factor) const noexcept {
  const double cx = 0.5 * (x_min + x_max);
  const double cxi = 0.5 * (xi_min + xi_max);
  const double hx = 0.5 * (x_max - x_min) * factor;
  const double hxi = 0.5 * (xi_max - xi_min) * factor;
  return {cx - hx, cx + hx, cxi - hxi, cxi + hxi};
}

RegularityReport regularity_report(const SymbolSpec& spec, const EnergyWindow& window,
                                   const Box& box) {
  if (!std::isfinite(box.x_min) || !std::isfinite(box.x_max) || !std::isfinite(box.xi_min) ||
      !std::isfinite(box.xi_max) || !(box.x_min < box.x_max) || !(box.xi_min < box.xi_max)) {
    throw Error(ErrorCode::InvalidArgument, "box bounds must be finite and non-degenerate");
  }
  constexpr int n = 401;
  const double dx = (box.x_max - box.x_min) / (n - 1);
  const double dxi = (box.xi_max - box.xi_min) / (n - 1);
  auto node = [&](int i, int j) { return PhasePoint{box.x_min + i * dx, box.xi_min + j * dxi}; };

  for (int i = 0; i < n; ++i) {
    for (const PhasePoint p : {node(i, 0), node(i, n - 1), node(0, i), node(n - 1, i)}) {
      if (eval_symbol(spec, p.x, p.xi) <= window.upper()) {
        std::ostringstream os;
        os << "H(" << p.x << ", " << p.xi << ") = " << spec.value(p)
           << " on the box boundary is inside the energy band";
        throw Error(ErrorCode::PreimageNotEnclosed, os.str());
      }
    }
  }

  std::vector<double> gnorm(static_cast<std::size_t>(n) * n);
  auto at = [&](int i, int j) -> double& { return gnorm[static_cast<std::size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Gradient g = eval_gradient(spec, node(i, j).x, node(i, j).xi);
      at(i, j) = std::hypot(g.dx, g.dxi);
    }
  }

  // Candidates: small gradient, or a discrete local minimum of |grad H|.
  // The threshold alone misses critical points that fall between nodes.
  std::vector<PhasePoint> candidates;
  for (int i = 1; i + 1 < n; ++i) {
    for (int j = 1; j + 1 < n; ++j) {
      const double g = at(i, j);
      bool local_min = true;
      for (int di = -1; di <= 1 && local_min; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di != 0 || dj != 0) && at(i + di, j + dj) < g) {
            local_min = false;
            break;
          }
        }
      }
      if (g < 1e-3 || local_min) candidates.push_back(node(i, j));
    }
  }

  RegularityReport report;
  const double merge = 1e-6 * std::max(box.x_max - box.x_min, box.xi_max - box.xi_min);
  for (PhasePoint p : candidates) {
    for (int it = 0; it < 20; ++it) {
      const Gradient g = spec.gradient(p);
      const Hessian h = spec.hessian(p);
      const double det = h.xx * h.xixi - h.xxi * h.xxi;
      if (det == 0.0 || !std::isfinite(det)) break;
      p.x -= (h.xixi * g.dx - h.xxi * g.dxi) / det;
      p.xi -= (-h.xxi * g.dx + h.xx * g.dxi) / det;
    }
    const Gradient g = spec.gradient(p);
    if (!std::isfinite(p.x) || !std::isfinite(p.xi) || !box.contains(p) ||
        std::hypot(g.dx, g.dxi) > 1e-8) {
      continue;
    }
    const bool seen = std::any_of(
        report.critical_points.begin(), report.critical_points.end(),
        [&](PhasePoint q) { return std::hypot(q.x - p.x, q.xi - p.xi) < merge; });
    if (seen) continue;
    report.critical_points.push_back(p);
    const double value = spec.value(p);
    if (value >= window.lower() && value <= window.upper()) {
      report.regular = false;
      report.critical_values_found.push_back(value);
    }
  }
  std::sort(report.critical_values_found.begin(), report.critical_values_found.end());
  return report;
}

Box compact_preimage_box(const SymbolSpec& spec, const EnergyWindow& window) {
  const double level = window.upper();
  if (const auto* v = spec.potential()) {
    const auto [lo, hi] = sublevel_hull(*v, level);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.55 * (hi - lo);
    const double pmax = 1.1 * std::sqrt(2.0 * (level - potential_minimum(*v)));
    return {mid - half, mid + half, -pmax, pmax};
  }
  if (level < 0.0) throw Error(ErrorCode::EmptyLevelSet, "window lies below the symbol minimum");
  const auto& cf = *spec.closed_form_data();
  switch (cf.id) {
    case ClosedFormId::KerrOscillator: {
      const double w = cf.params[0];
      const double k = cf.params[1];
      const double r2 = k > 0.0 ? (-w + std::sqrt(w * w + 4.0 * k * level)) / k : 2.0 * level / w;
      const double r = 1.1 * std::sqrt(r2);
      return {-r, r, -r, r};
    }
    case ClosedFormId::QuarticKinetic: {
      const double x = 1.1 * std::sqrt(2.0 * level);
      const double xi = 1.1 * std::pow(4.0 * level, 0.25);
      return {-x, x, -xi, xi};
    }
  }
  throw Error(ErrorCode::InvalidSymbol, "unknown closed form");
}

}  // namespace ebk
