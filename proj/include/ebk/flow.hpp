#pragma once

#include "ebk/symbol_catalog.hpp"

namespace ebk {

// Phase point augmented with the running Liouville integral  int xi dx.
struct FlowState {
  double x = 0.0;
  double xi = 0.0;
  double action = 0.0;

  PhasePoint point() const noexcept { return {x, xi}; }
};

struct FlowStep {
  FlowState state;
  // Weighted max-norm of the embedded error estimate; accepted when <= 1.
  double error = 0.0;
};

// Hamiltonian vector field  x' = dH/dxi,  xi' = -dH/dx,  action' = xi dH/dxi,
// integrated with the Dormand-Prince 5(4) pair.
class HamiltonianFlow {
 public:
  HamiltonianFlow(const SymbolSpec& spec, double abs_tol, double rel_tol)
      : spec_(spec), abs_tol_(abs_tol), rel_tol_(rel_tol) {}

  FlowState derivative(const FlowState& y) const noexcept;

  // Single explicit step of (signed) size h.
  FlowStep step(const FlowState& y, double h) const noexcept;

  // Adaptive integration over a signed duration.
  FlowState advance(FlowState y, double duration) const;

  // Step-size suggestion for the next attempt given the last error norm.
  static double next_step(double h, double error) noexcept;

  double initial_step(const FlowState& y) const noexcept;

  const SymbolSpec& spec() const noexcept { return spec_; }

 private:
  const SymbolSpec& spec_;
  double abs_tol_;
  double rel_tol_;
};

}  // namespace ebk
