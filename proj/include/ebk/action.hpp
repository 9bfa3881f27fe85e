#pragma once

#include <span>
#include <vector>

#include "ebk/monotone_cubic.hpp"
#include "ebk/phase_portrait.hpp"
#include "ebk/symbol_catalog.hpp"

namespace ebk {

// Oriented loop integral of the Liouville form xi dx, taken from the flow
// integration (orientation +1 gives A0 > 0 for wells).
double loop_action(const LevelComponent& c);

// Signed polygon area, counter-clockwise positive in the (x, xi) plane.
double shoelace_area(std::span<const PhasePoint> points);

// Signed area enclosed by c. For time-equispaced samples the shoelace error
// expands in even powers of the spacing, so one Richardson step against the
// every-other-point polygon is applied. Throws NotSimple on self-intersection.
double green_area(const LevelComponent& c);

bool is_simple(std::span<const PhasePoint> points);

struct MaslovIndex {
  int value = 0;
};

// Algebraic count of vertical tangencies (caustics). A turning point counts
// +1 when the curve turns clockwise there, which is the sense of the
// Hamiltonian flow around a potential well.
MaslovIndex maslov_index(const LevelComponent& c);

struct ActionSample {
  double energy = 0.0;
  double action = 0.0;
  double period = 0.0;
};

// Leading action A0(E) of one family with its period tau(E) = A0'(E) and the
// Maslov index; the semiclassical action is truncated after A0/hbar + mu pi/2.
struct ActionTable {
  int k = 0;
  std::vector<ActionSample> samples;
  int maslov = 2;
  int truncation_order = 2;
  MonotoneCubic interpolant;
  double max_derivative_mismatch = 0.0;

  double e_lo() const { return samples.front().energy; }
  double e_hi() const { return samples.back().energy; }
  double action(double energy) const { return interpolant(energy); }
  double period(double energy) const { return interpolant.derivative(energy); }
  double min_period() const;
  double max_period() const;
};

// Validates tau > 0, strict monotonicity (NotDiffeomorphism) and
// |dA0/dE - tau| / tau <= 1e-4 at every sample (InconsistentAction), where
// dA0/dE comes from the polynomial through all samples.
ActionTable make_action_table(int k, std::vector<ActionSample> samples, int maslov);

// Chebyshev-Lobatto nodes on [a, b], increasing, endpoints included.
std::vector<double> chebyshev_lobatto(double a, double b, int n);

struct ActionOptions {
  TraceOptions trace;
  unsigned threads = 1;
};

ActionTable build_action_table(const SymbolSpec& spec, const ComponentFamily& family,
                               const EnergyWindow& window, int n_samples,
                               const ActionOptions& opts = {});

// E with A0(E) = a on the interpolant; OutOfWindow outside the table range.
double invert_action(const ActionTable& table, double a);

}  // namespace ebk
