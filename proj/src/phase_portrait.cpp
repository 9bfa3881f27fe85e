#include "ebk/phase_portrait.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "ebk/error.hpp"
#include "ebk/flow.hpp"
#include "ebk/parallel.hpp"

namespace ebk {

namespace {

double dist(PhasePoint a, PhasePoint b) noexcept { return std::hypot(a.x - b.x, a.xi - b.xi); }

double grad_norm(const SymbolSpec& spec, PhasePoint p) noexcept {
  const Gradient g = spec.gradient(p);
  return std::hypot(g.dx, g.dxi);
}

void check_options(const TraceOptions& opts) {
  if (!(opts.trace_tol > 0.0) || !(opts.max_time > 0.0) || opts.samples < 64 ||
      opts.samples % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "trace options need trace_tol > 0, max_time > 0 and an even sample count >= 64");
  }
}

// Sign changes of H - E along grid edges, refined by bisection.
std::vector<PhasePoint> edge_crossings(const SymbolSpec& spec, double energy, const Box& box,
                                       int grid_n) {
  if (grid_n < 3) throw Error(ErrorCode::InvalidArgument, "grid_n must be >= 3");
  const double dx = (box.x_max - box.x_min) / (grid_n - 1);
  const double dxi = (box.xi_max - box.xi_min) / (grid_n - 1);
  auto node = [&](int i, int j) { return PhasePoint{box.x_min + i * dx, box.xi_min + j * dxi}; };
  std::vector<double> f(static_cast<std::size_t>(grid_n) * grid_n);
  auto at = [&](int i, int j) { return f[static_cast<std::size_t>(j) * grid_n + i]; };
  for (int j = 0; j < grid_n; ++j) {
    for (int i = 0; i < grid_n; ++i) {
      const PhasePoint p = node(i, j);
      f[static_cast<std::size_t>(j) * grid_n + i] = eval_symbol(spec, p.x, p.xi) - energy;
    }
  }

  const double level_tol = 1e-12 * std::max(1.0, std::abs(energy));
  auto refine = [&](PhasePoint a, PhasePoint b, double fa) {
    PhasePoint m = a;
    for (int it = 0; it < 200; ++it) {
      m = {0.5 * (a.x + b.x), 0.5 * (a.xi + b.xi)};
      const double fm = spec.value(m) - energy;
      if (std::abs(fm) <= level_tol) break;
      if ((fm < 0.0) == (fa < 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    return m;
  };

  std::vector<PhasePoint> out;
  for (int j = 0; j < grid_n; ++j) {
    for (int i = 0; i < grid_n; ++i) {
      if (i + 1 < grid_n && (at(i, j) < 0.0) != (at(i + 1, j) < 0.0)) {
        out.push_back(refine(node(i, j), node(i + 1, j), at(i, j)));
      }
      if (j + 1 < grid_n && (at(i, j) < 0.0) != (at(i, j + 1) < 0.0)) {
        out.push_back(refine(node(i, j), node(i, j + 1), at(i, j)));
      }
    }
  }
  return out;
}

}  // namespace

PhasePoint LevelComponent::centroid() const noexcept {
  PhasePoint c;
  if (points.empty()) return c;
  for (const auto& p : points) {
    c.x += p.x;
    c.xi += p.xi;
  }
  c.x /= static_cast<double>(points.size());
  c.xi /= static_cast<double>(points.size());
  return c;
}

double LevelComponent::max_segment() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    m = std::max(m, dist(points[i], points[(i + 1) % points.size()]));
  }
  return m;
}

LevelComponent reversed(const LevelComponent& c) {
  LevelComponent r = c;
  std::reverse(r.points.begin(), r.points.end());
  // Keep the seed first so the reversed loop starts where the original did.
  if (!r.points.empty()) std::rotate(r.points.begin(), r.points.end() - 1, r.points.end());
  for (std::size_t i = 0; i < r.times.size(); ++i) r.times[i] = c.times[i];
  r.orientation = -c.orientation;
  return r;
}

PhasePoint project_to_level(const SymbolSpec& spec, PhasePoint p, double energy) {
  const double tol = 1e-14 * std::max(1.0, std::abs(energy));
  for (int it = 0; it < 60; ++it) {
    const double r = spec.value(p) - energy;
    if (std::abs(r) <= tol) break;
    const Gradient g = spec.gradient(p);
    const double g2 = g.dx * g.dx + g.dxi * g.dxi;
    if (!(g2 > 0.0)) break;
    p.x -= r * g.dx / g2;
    p.xi -= r * g.dxi / g2;
  }
  return p;
}

LevelComponent trace_component(const SymbolSpec& spec, PhasePoint seed_in, double energy,
                               const TraceOptions& opts) {
  check_options(opts);
  if (grad_norm(spec, seed_in) <= 1e-8) {
    std::ostringstream os;
    os << "seed (" << seed_in.x << ", " << seed_in.xi << ") is at a critical point";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  const PhasePoint seed = project_to_level(spec, seed_in, energy);
  if (std::abs(eval_symbol(spec, seed.x, seed.xi) - energy) > opts.trace_tol) {
    throw Error(ErrorCode::TraceDiverged, "seed could not be projected onto the level set");
  }

  const double local_tol = opts.trace_tol / 100.0;
  const HamiltonianFlow flow(spec, local_tol, local_tol);
  FlowState y{seed.x, seed.xi, 0.0};
  const FlowState f0 = flow.derivative(y);
  const double speed = std::hypot(f0.x, f0.xi);
  const double nx = f0.x / speed;
  const double nxi = f0.xi / speed;
  auto section = [&](const FlowState& s) { return (s.x - seed.x) * nx + (s.xi - seed.xi) * nxi; };
  const double close_radius = std::sqrt(opts.trace_tol);

  std::vector<double> ts{0.0};
  std::vector<FlowState> ys{y};
  double t = 0.0;
  double h = flow.initial_step(y);
  std::optional<FlowState> closing;
  double period = 0.0;
  while (!closing) {
    if (t > opts.max_time) {
      std::ostringstream os;
      os << "no return to the section within t = " << opts.max_time << " at E = " << energy;
      throw Error(ErrorCode::NotClosedOrbit, os.str());
    }
    const FlowStep s = flow.step(y, h);
    if (s.error > 1.0) {
      h = HamiltonianFlow::next_step(h, s.error);
      if (h < 1e-14 * std::max(1.0, t)) throw Error(ErrorCode::TraceDiverged, "step size underflow");
      continue;
    }
    const double drift = std::abs(spec.value(s.state.point()) - energy);
    if (!(drift <= opts.trace_tol)) {
      std::ostringstream os;
      os << "energy drift " << drift << " exceeds " << opts.trace_tol << " at t = " << t;
      throw Error(ErrorCode::TraceDiverged, os.str());
    }
    if (section(y) < 0.0 && section(s.state) >= 0.0) {
      double lo = 0.0;
      double hi = h;
      for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (section(flow.step(y, mid).state) < 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      const double dt = 0.5 * (lo + hi);
      const FlowState crossing = flow.step(y, dt).state;
      if (dist(crossing.point(), seed) <= close_radius) {
        closing = crossing;
        period = t + dt;
        break;
      }
    }
    t += h;
    y = s.state;
    ts.push_back(t);
    ys.push_back(y);
    h = HamiltonianFlow::next_step(h, s.error);
  }

  LevelComponent c;
  c.energy = energy;
  c.period = period;
  c.seed = seed;
  c.orientation = 1;
  c.flow_action = closing->action;
  c.closure_error = dist(closing->point(), seed);
  if (c.closure_error > opts.trace_tol) {
    std::ostringstream os;
    os << "closure defect " << c.closure_error << " exceeds " << opts.trace_tol;
    throw Error(ErrorCode::NotClosedOrbit, os.str());
  }

  const std::size_t m = opts.samples;
  c.points.reserve(m);
  c.times.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double tj = period * static_cast<double>(j) / static_cast<double>(m);
    const auto k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), tj) - ts.begin()) - 1;
    const double dt = tj - ts[k];
    const FlowState s = dt == 0.0 ? ys[k] : flow.step(ys[k], dt).state;
    c.points.push_back(s.point());
    c.times.push_back(tj);
    c.max_energy_error = std::max(c.max_energy_error, std::abs(spec.value(s.point()) - energy));
  }
  if (!(c.max_energy_error <= opts.trace_tol)) {
    throw Error(ErrorCode::TraceDiverged, "resampled point leaves the level set");
  }
  return c;
}

double distance_to_component(const SymbolSpec& spec, const LevelComponent& c, PhasePoint q,
                             const TraceOptions& opts) {
  if (c.points.empty()) return std::numeric_limits<double>::infinity();
  std::size_t best = 0;
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const double d = dist(c.points[i], q);
    if (d < dmin) {
      dmin = d;
      best = i;
    }
  }
  if (dmin > c.max_segment()) return std::numeric_limits<double>::infinity();

  // Newton on (y(s) - q) . y'(s) = 0 along the flow from the closest sample.
  const double local_tol = opts.trace_tol / 100.0;
  const HamiltonianFlow flow(spec, local_tol, local_tol);
  const FlowState start{c.points[best].x, c.points[best].xi, 0.0};
  const double span = 2.0 * c.period / static_cast<double>(c.points.size());
  double s = 0.0;
  double d = dmin;
  for (int it = 0; it < 20; ++it) {
    const FlowState y = flow.advance(start, s * c.orientation);
    FlowState f = flow.derivative(y);
    f.x *= c.orientation;
    f.xi *= c.orientation;
    d = std::min(d, dist(y.point(), q));
    const double f2 = f.x * f.x + f.xi * f.xi;
    const double ds = -((y.x - q.x) * f.x + (y.xi - q.xi) * f.xi) / f2;
    const double next = std::clamp(s + ds, -span, span);
    if (std::abs(next - s) <= 1e-15 * std::max(1.0, c.period)) break;
    s = next;
  }
  return d;
}

std::vector<LevelComponent> trace_level_set(const SymbolSpec& spec, double energy, const Box& box,
                                            int grid_n, const TraceOptions& opts) {
  const auto crossings = edge_crossings(spec, energy, box, grid_n);
  if (crossings.empty()) {
    std::ostringstream os;
    os << "no sign change of H - " << energy << " on the seeding grid";
    throw Error(ErrorCode::EmptyLevelSet, os.str());
  }
  const double merge_radius = 100.0 * opts.trace_tol;
  std::vector<LevelComponent> comps;
  for (const PhasePoint q : crossings) {
    const bool known = std::any_of(comps.begin(), comps.end(), [&](const LevelComponent& c) {
      return distance_to_component(spec, c, q, opts) <= merge_radius;
    });
    if (!known) comps.push_back(trace_component(spec, q, energy, opts));
  }
  std::sort(comps.begin(), comps.end(), [](const LevelComponent& a, const LevelComponent& b) {
    const PhasePoint ca = a.centroid();
    const PhasePoint cb = b.centroid();
    return ca.x != cb.x ? ca.x < cb.x : ca.xi < cb.xi;
  });
  return comps;
}

std::vector<PhasePoint> seed_components(const SymbolSpec& spec, double energy, const Box& box,
                                        int grid_n, const TraceOptions& opts) {
  std::vector<PhasePoint> seeds;
  for (const auto& c : trace_level_set(spec, energy, box, grid_n, opts)) seeds.push_back(c.seed);
  return seeds;
}

int component_count(const SymbolSpec& spec, double energy, const Box& box, int grid_n,
                    const TraceOptions& opts) {
  return static_cast<int>(trace_level_set(spec, energy, box, grid_n, opts).size());
}

double hausdorff_distance(const LevelComponent& a, const LevelComponent& b) {
  auto directed = [](const LevelComponent& from, const LevelComponent& to) {
    const std::size_t stride = std::max<std::size_t>(1, from.points.size() / 128);
    double worst = 0.0;
    for (std::size_t i = 0; i < from.points.size(); i += stride) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to.points) best = std::min(best, dist(from.points[i], q));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

PhasePoint ComponentFamily::seed_at(const SymbolSpec& spec, double energy) const {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "empty component family");
  const auto nearest = std::min_element(
      samples.begin(), samples.end(), [&](const FamilySample& a, const FamilySample& b) {
        return std::abs(a.energy - energy) < std::abs(b.energy - energy);
      });
  return project_to_level(spec, nearest->component.seed, energy);
}

std::vector<ComponentFamily> build_families(const SymbolSpec& spec, const EnergyWindow& window,
                                            int n_samples, const FamilyOptions& opts) {
  if (n_samples < 2) throw Error(ErrorCode::InvalidArgument, "build_families needs >= 2 samples");
  const Box box = compact_preimage_box(spec, window);
  std::vector<double> energies(static_cast<std::size_t>(n_samples));
  for (int j = 0; j < n_samples; ++j) {
    energies[j] = window.e1 + (window.e2 - window.e1) * j / (n_samples - 1);
  }

  std::vector<std::vector<LevelComponent>> levels(energies.size());
  std::vector<std::string> failures(energies.size());
  parallel_for(energies.size(), opts.threads, [&](std::size_t j) {
    try {
      levels[j] = trace_level_set(spec, energies[j], box, opts.grid_n, opts.trace);
    } catch (const Error& e) {
      failures[j] = e.what();
    }
  });
  for (std::size_t j = 0; j < energies.size(); ++j) {
    if (!failures[j].empty()) {
      std::ostringstream os;
      os << "level set at E = " << energies[j] << " could not be traced (" << failures[j] << ")";
      throw Error(ErrorCode::NonConstantTopology, os.str());
    }
  }
  const std::size_t d = levels.front().size();
  for (std::size_t j = 1; j < levels.size(); ++j) {
    if (levels[j].size() != d) {
      std::ostringstream os;
      os << "component count changes from " << d << " at E = " << energies.front() << " to "
         << levels[j].size() << " at E = " << energies[j];
      throw Error(ErrorCode::NonConstantTopology, os.str());
    }
  }

  std::vector<ComponentFamily> families(d);
  for (std::size_t k = 0; k < d; ++k) {
    families[k].k = static_cast<int>(k) + 1;
    families[k].e_lo = window.e1;
    families[k].e_hi = window.e2;
    families[k].samples.push_back({energies.front(), levels.front()[k]});
  }
  for (std::size_t j = 1; j < levels.size(); ++j) {
    const double de = energies[j] - energies[j - 1];
    std::vector<bool> taken(d, false);
    for (auto& fam : families) {
      const LevelComponent& prev = fam.samples.back().component;
      const PhasePoint cp = prev.centroid();
      std::size_t best = d;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < d; ++c) {
        const double dd = dist(cp, levels[j][c].centroid());
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (taken[best]) {
        throw Error(ErrorCode::NonConstantTopology, "component families cannot be matched");
      }
      taken[best] = true;
      const LevelComponent& next = levels[j][best];

      double gmin = std::numeric_limits<double>::infinity();
      for (const auto* comp : {&prev, &next}) {
        for (const auto& p : comp->points) gmin = std::min(gmin, grad_norm(spec, p));
      }
      const double bound = 4.0 * de / gmin + 2.0 * std::max(prev.max_segment(), next.max_segment());
      if (hausdorff_distance(prev, next) > bound) {
        std::ostringstream os;
        os << "family " << fam.k << " jumps between E = " << energies[j - 1] << " and "
           << energies[j];
        throw Error(ErrorCode::NonConstantTopology, os.str());
      }
      fam.samples.push_back({energies[j], next});
    }
  }
  return families;
}

}  // namespace ebk
