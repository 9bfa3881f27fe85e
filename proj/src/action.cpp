#include "ebk/action.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ebk/error.hpp"
#include "ebk/parallel.hpp"

namespace ebk {

namespace {

double orient(PhasePoint a, PhasePoint b, PhasePoint c) noexcept {
  return (b.x - a.x) * (c.xi - a.xi) - (b.xi - a.xi) * (c.x - a.x);
}

bool segments_cross(PhasePoint a, PhasePoint b, PhasePoint c, PhasePoint d) noexcept {
  if (std::max(a.x, b.x) < std::min(c.x, d.x) || std::max(c.x, d.x) < std::min(a.x, b.x) ||
      std::max(a.xi, b.xi) < std::min(c.xi, d.xi) || std::max(c.xi, d.xi) < std::min(a.xi, b.xi)) {
    return false;
  }
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  return ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) &&
         ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0));
}

}  // namespace

double loop_action(const LevelComponent& c) { return c.orientation * c.flow_action; }

double shoelace_area(std::span<const PhasePoint> points) {
  const std::size_t n = points.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const PhasePoint p = points[i];
    const PhasePoint q = points[(i + 1) % n];
    twice += p.x * q.xi - q.x * p.xi;
  }
  return 0.5 * twice;
}

bool is_simple(std::span<const PhasePoint> points) {
  const std::size_t n = points.size();
  if (n < 4) return true;
  for (std::size_t i = 0; i < n; ++i) {
    const PhasePoint a = points[i];
    const PhasePoint b = points[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(a, b, points[j], points[(j + 1) % n])) return false;
    }
  }
  return true;
}

double green_area(const LevelComponent& c) {
  if (!is_simple(c.points)) {
    throw Error(ErrorCode::NotSimple, "level component polyline intersects itself");
  }
  const double full = shoelace_area(c.points);
  if (c.points.size() % 2 != 0 || c.points.size() < 8) return full;
  std::vector<PhasePoint> half;
  half.reserve(c.points.size() / 2);
  for (std::size_t i = 0; i < c.points.size(); i += 2) half.push_back(c.points[i]);
  return (4.0 * full - shoelace_area(half)) / 3.0;
}

MaslovIndex maslov_index(const LevelComponent& c) {
  const auto& p = c.points;
  const std::size_t n = p.size();
  if (n < 4) throw Error(ErrorCode::InvalidArgument, "loop has too few samples");

  double scale = 0.0;
  for (const auto& q : p) scale = std::max({scale, std::abs(q.x), std::abs(q.xi)});
  // Indices of segments with nonzero horizontal motion.
  std::vector<std::size_t> moving;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[(i + 1) % n].x != p[i].x) moving.push_back(i);
  }
  if (moving.size() < 2) throw Error(ErrorCode::DegenerateCaustic, "loop has no horizontal motion");

  int total = 0;
  for (std::size_t m = 0; m < moving.size(); ++m) {
    const std::size_t a = moving[m];
    const std::size_t b = moving[(m + 1) % moving.size()];
    const double da = p[(a + 1) % n].x - p[a].x;
    const double db = p[(b + 1) % n].x - p[b].x;
    if ((da > 0.0) == (db > 0.0)) continue;
    // Vertical motion across the turning point, from the start of segment a
    // to the end of segment b.
    const double dxi = p[(b + 1) % n].xi - p[a].xi;
    if (std::abs(dxi) <= 1e-14 * std::max(1.0, scale)) {
      throw Error(ErrorCode::DegenerateCaustic, "vertical tangency without vertical motion");
    }
    const bool x_max = da > 0.0;
    const bool clockwise = x_max ? dxi < 0.0 : dxi > 0.0;
    total += clockwise ? 1 : -1;
  }
  if (std::abs(total) != 2) {
    std::ostringstream os;
    os << "caustic count " << total << " is not +-2 for a closed plane loop";
    throw Error(ErrorCode::DegenerateCaustic, os.str());
  }
  return {total};
}

namespace {

// dA0/dE at every node from the polynomial through all samples, via the
// barycentric differentiation matrix.
std::vector<double> interpolant_slopes(const std::vector<ActionSample>& s) {
  const std::size_t n = s.size();
  const double scale = 4.0 / (s.back().energy - s.front().energy);
  std::vector<double> w(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != j) w[j] /= scale * (s[j].energy - s[k].energy);
    }
  }
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dij = (w[j] / w[i]) / (s[i].energy - s[j].energy);
      diag -= dij;
      d[i] += dij * s[j].action;
    }
    d[i] += diag * s[i].action;
  }
  return d;
}

}  // namespace

double ActionTable::min_period() const {
  double m = samples.front().period;
  for (const auto& s : samples) m = std::min(m, s.period);
  return m;
}

double ActionTable::max_period() const {
  double m = samples.front().period;
  for (const auto& s : samples) m = std::max(m, s.period);
  return m;
}

ActionTable make_action_table(int k, std::vector<ActionSample> samples, int maslov) {
  if (samples.size() < 2) throw Error(ErrorCode::InvalidArgument, "action table needs >= 2 samples");
  std::sort(samples.begin(), samples.end(),
            [](const ActionSample& a, const ActionSample& b) { return a.energy < b.energy; });
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].period > 0.0)) {
      std::ostringstream os;
      os << "period " << samples[i].period << " at E = " << samples[i].energy << " is not positive";
      throw Error(ErrorCode::NotDiffeomorphism, os.str());
    }
    if (i > 0 && !(samples[i].action > samples[i - 1].action)) {
      std::ostringstream os;
      os << "action is not increasing between E = " << samples[i - 1].energy << " and "
         << samples[i].energy;
      throw Error(ErrorCode::NotDiffeomorphism, os.str());
    }
  }
  ActionTable t;
  t.k = k;
  t.maslov = maslov;
  const auto slopes = interpolant_slopes(samples);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double tau = samples[i].period;
    t.max_derivative_mismatch = std::max(t.max_derivative_mismatch, std::abs(slopes[i] - tau) / tau);
  }
  if (t.max_derivative_mismatch > 1e-4) {
    std::ostringstream os;
    os << "dA0/dE departs from the period by " << t.max_derivative_mismatch << " (relative)";
    throw Error(ErrorCode::InconsistentAction, os.str());
  }
  std::vector<double> e, a, d;
  for (const auto& s : samples) {
    e.push_back(s.energy);
    a.push_back(s.action);
    d.push_back(s.period);
  }
  t.interpolant = MonotoneCubic(std::move(e), std::move(a), std::move(d));
  t.samples = std::move(samples);
  return t;
}

std::vector<double> chebyshev_lobatto(double a, double b, int n) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need >= 2 Chebyshev nodes");
  std::vector<double> nodes(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    nodes[j] = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(std::numbers::pi * j / (n - 1));
  }
  nodes.front() = a;
  nodes.back() = b;
  return nodes;
}

ActionTable build_action_table(const SymbolSpec& spec, const ComponentFamily& family,
                               const EnergyWindow& window, int n_samples,
                               const ActionOptions& opts) {
  if (n_samples < 9) throw Error(ErrorCode::InvalidArgument, "action table needs >= 9 samples");
  const auto energies = chebyshev_lobatto(window.e1, window.e2, n_samples);
  std::vector<ActionSample> samples(energies.size());
  std::vector<int> maslov(energies.size(), 0);
  const std::size_t middle = energies.size() / 2;
  parallel_for(energies.size(), opts.threads, [&](std::size_t j) {
    const double e = energies[j];
    const LevelComponent c = trace_component(spec, family.seed_at(spec, e), e, opts.trace);
    samples[j] = {e, loop_action(c), c.period};
    if (j == middle) maslov[j] = maslov_index(c).value;
  });
  return make_action_table(family.k, std::move(samples), maslov[middle]);
}

double invert_action(const ActionTable& table, double a) {
  const double lo = table.interpolant.y_min();
  const double hi = table.interpolant.y_max();
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (!(a >= lo - slack && a <= hi + slack)) {
    std::ostringstream os;
    os << "action " << a << " outside [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::OutOfWindow, os.str());
  }
  return table.interpolant.inverse(std::clamp(a, lo, hi), 1e-13 * std::max(1.0, std::abs(a)));
}

}  // namespace ebk
