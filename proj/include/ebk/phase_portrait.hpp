#pragma once

#include <cstddef>
#include <vector>

#include "ebk/symbol_catalog.hpp"

namespace ebk {

struct TraceOptions {
  // Bound on |H - E| at every sample and on the closure defect.
  double trace_tol = 1e-10;
  double max_time = 1e4;
  // Resampled points per component, equispaced in flow time. Must be even.
  std::size_t samples = 1024;
};

// One connected component of {H = E}, traversed by the Hamiltonian flow.
struct LevelComponent {
  double energy = 0.0;
  std::vector<PhasePoint> points;
  std::vector<double> times;
  double period = 0.0;
  PhasePoint seed;
  // +1 when points follow the flow, -1 after reversal.
  int orientation = 1;
  // int_0^period xi dH/dxi dt along the flow.
  double flow_action = 0.0;
  double closure_error = 0.0;
  double max_energy_error = 0.0;

  PhasePoint centroid() const noexcept;
  // Largest distance between consecutive samples (cyclic).
  double max_segment() const noexcept;
};

LevelComponent reversed(const LevelComponent& c);

// Trace the orbit through seed until its first return to the Poincare section
// through the seed (normal to the flow).
LevelComponent trace_component(const SymbolSpec& spec, PhasePoint seed, double energy,
                               const TraceOptions& opts = {});

// All components of {H = E} inside box, deduplicated and sorted by centroid.
std::vector<LevelComponent> trace_level_set(const SymbolSpec& spec, double energy, const Box& box,
                                            int grid_n = 201, const TraceOptions& opts = {});

// One seed per connected component.
std::vector<PhasePoint> seed_components(const SymbolSpec& spec, double energy, const Box& box,
                                        int grid_n = 201, const TraceOptions& opts = {});

int component_count(const SymbolSpec& spec, double energy, const Box& box, int grid_n = 201,
                    const TraceOptions& opts = {});

// Distance from q to the curve traced by c, refined along the flow near the
// closest sample. Returns +infinity when q is farther than one segment.
double distance_to_component(const SymbolSpec& spec, const LevelComponent& c, PhasePoint q,
                             const TraceOptions& opts = {});

// Newton projection of p onto {H = E} along the gradient.
PhasePoint project_to_level(const SymbolSpec& spec, PhasePoint p, double energy);

struct FamilySample {
  double energy = 0.0;
  LevelComponent component;
};

// A component C_k(E) followed continuously over the window.
struct ComponentFamily {
  int k = 0;
  std::vector<FamilySample> samples;
  double e_lo = 0.0;
  double e_hi = 0.0;

  // Seed on C_k(E), continued from the sample with the nearest energy.
  PhasePoint seed_at(const SymbolSpec& spec, double energy) const;
};

struct FamilyOptions {
  int grid_n = 201;
  TraceOptions trace;
  unsigned threads = 1;
};

// Throws NonConstantTopology when the number of components changes over the
// window or a level set cannot be traced (critical value inside).
std::vector<ComponentFamily> build_families(const SymbolSpec& spec, const EnergyWindow& window,
                                            int n_samples, const FamilyOptions& opts = {});

// Hausdorff distance between two sampled curves.
double hausdorff_distance(const LevelComponent& a, const LevelComponent& b);

}  // namespace ebk
