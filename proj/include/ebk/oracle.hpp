#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ebk/symbol_catalog.hpp"

namespace ebk {

struct Grid {
  double L = 0.0;
  int N = 0;
  double h = 0.0;

  double x(std::size_t i) const noexcept { return -L + static_cast<double>(i) * h; }
};

// Three-point Dirichlet discretization of -(hbar^2/2) d^2/dx^2 + V on [-L, L].
struct TridiagonalOperator {
  std::vector<double> diag;
  std::vector<double> offdiag;
  Grid grid;
  double hbar = 0.0;

  std::size_t size() const noexcept { return diag.size(); }
  // Gershgorin enclosure of the spectrum.
  double lower_bound() const noexcept;
  double upper_bound() const noexcept;
  // max_i |diag_i| + |off_{i-1}| + |off_i|
  double norm_bound() const noexcept;
};

// Plain symmetric tridiagonal matrix without grid metadata.
TridiagonalOperator make_tridiagonal(std::vector<double> diag, std::vector<double> offdiag);

TridiagonalOperator discretize(const PotentialSpec& potential, double hbar, double L, int N);

// Same, after check_confinement for the given window.
TridiagonalOperator discretize(const PotentialSpec& potential, double hbar, double L, int N,
                               const EnergyWindow& window);

struct DomainOptions {
  // Bound on the local phase error (xi_max h / hbar)^2 / 12.
  double target_tol = 1e-5;
  // V(+-L0) >= e2 + margin + tail_factor * hbar.
  double tail_factor = 10.0;
  // int sqrt(2 (V - e2 - margin)) / hbar dx over the forbidden tail.
  double decay_exponent = 25.0;
  double padding = 1.5;
};

struct DomainChoice {
  double L = 0.0;
  int N = 0;
};

// Half-width and grid size for an oracle run over window at hbar. Throws
// NonCompactWindow when {V <= e2 + margin} is unbounded.
DomainChoice domain_auto(const PotentialSpec& potential, const EnergyWindow& window, double hbar,
                         const DomainOptions& opts = {});

// WKB decay exponent of a state at energy e2 + margin through the forbidden
// region between the turning point and x = +-L (smaller of the two sides).
double tail_decay_exponent(const PotentialSpec& potential, const EnergyWindow& window, double hbar,
                           double L);

// Throws DomainTooSmall when V(+-L) < e2 + margin or the tail decay exponent
// is below opts.decay_exponent.
void check_confinement(const PotentialSpec& potential, const EnergyWindow& window, double hbar,
                       double L, const DomainOptions& opts = {});

// Number of eigenvalues strictly below lambda (Sturm sequence).
int count_below(const TridiagonalOperator& t, double lambda) noexcept;

// The j-th smallest eigenvalue (0-based), bracketed to width tol.
double eigenvalue_by_index(const TridiagonalOperator& t, int j, double tol = 1e-13);

struct EigenResult {
  std::vector<double> eigenvalues;
  // Global index of each eigenvalue in the full spectrum, 0-based.
  std::vector<int> indices;
  std::vector<double> residual_bounds;
  std::vector<std::vector<double>> eigenvectors;

  double max_residual_bound() const noexcept;
};

// All eigenvalues in the open interval (a, b).
EigenResult eigenvalues_in(const TridiagonalOperator& t, double a, double b, double tol = 1e-13,
                           unsigned threads = 1);

struct RichardsonResult {
  // Extrapolated from grids 2N-1 and 4N-3; residual bounds hold the
  // difference to the extrapolation from N and 2N-1.
  EigenResult result;
  // max |R(2N-1, 4N-3) - R(N, 2N-1)|
  double gate_difference = 0.0;
  Grid base_grid;
};

// Eigenvalues in (a, b) extrapolated over three nested grids on [-L, L].
RichardsonResult richardson_eigenvalues(const PotentialSpec& potential, double hbar, double L,
                                        int N, double a, double b, unsigned threads = 1);

// Inverse iteration from a seeded random start; unit Euclidean norm, sign
// fixed so the largest component is positive.
std::vector<double> eigenvector(const TridiagonalOperator& t, double lambda,
                                unsigned long long seed = 0);

int node_count(std::span<const double> v);

// Squared mass of v on grid points with V(x_i) > energy + delta.
double allowed_region_mass(std::span<const double> v, const Grid& grid,
                           const PotentialSpec& potential, double energy, double delta);

// Squared mass of v on grid points with x_lo <= x_i <= x_hi.
double mass_between(std::span<const double> v, const Grid& grid, double x_lo, double x_hi);

// Eigenvalues in the closed ball [center - radius, center + radius].
int ball_multiplicity(const TridiagonalOperator& t, double center, double radius);

}  // namespace ebk
