#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ebk/action.hpp"
#include "ebk/symbol_catalog.hpp"

namespace ebk {

struct LevelEntry {
  double energy = 0.0;
  int k = 0;  // family label
  int n = 0;  // quantum number
};

struct BsSpectrum {
  double hbar = 0.0;
  EnergyWindow window;
  // Sorted by energy, ties by family label.
  std::vector<LevelEntry> entries;
};

struct QuantizedLevel {
  int n = 0;
  double energy = 0.0;
};

// Right-hand side of the quantization condition  A0(E) = 2 pi hbar (n + mu/4).
double quantized_action(const ActionTable& table, int n, double hbar);

// All levels of one family inside the window, increasing in n and E.
std::vector<QuantizedLevel> quantize_family(const ActionTable& table, double hbar,
                                            const EnergyWindow& window);

// Disjoint union over families; coincident energies are all kept.
BsSpectrum merged_spectrum(std::span<const ActionTable> tables, double hbar,
                           const EnergyWindow& window);

struct WeylCount {
  long count = 0;
  std::vector<long> per_family;
  // sum_k (A0_k(E2~) - A0_k(E1~)) / (2 pi hbar)
  double leading = 0.0;
  // sum_k (tau_k(E2~) - tau_k(E1~)) / (2 pi)
  double correction = 0.0;
  // count - leading; |delta| < number of families
  double delta = 0.0;
};

// Minimum distance an endpoint must keep from the BS spectrum:
// safety * hbar * 2 pi / tau_max.
double endpoint_clearance(std::span<const ActionTable> tables, double hbar, double safety = 0.3);

bool endpoint_is_safe(std::span<const ActionTable> tables, double hbar, double energy,
                      const BsSpectrum& bs, double safety = 0.3);

// Number of eigenvalues in [e1t, e2t] from the floor formula, family by family.
// Throws UnsafeEndpoint when an endpoint sits too close to the spectrum.
WeylCount exact_weyl_count(std::span<const ActionTable> tables, double hbar, double e1t, double e2t,
                           const BsSpectrum& bs, double safety = 0.3);

// Energy of the branch (k, n) at hbar, or nullopt once it has left the table
// range.
std::optional<double> branch_energy(const ActionTable& table, int n, double hbar);

// Largest hbar below which branch n sits under the window: all smaller hbar
// give nullopt from branch_energy.
double branch_exit_hbar(const ActionTable& table, int n);

struct NearestLevel {
  double energy = 0.0;
  double gap = 0.0;
};

NearestLevel nearest_level(const BsSpectrum& bs, double e0);

// (1 + 0.1) pi hbar / tau_min: half the widest level spacing, with slack.
double density_bound(std::span<const ActionTable> tables, double hbar);

struct Cluster {
  double center = 0.0;
  std::vector<LevelEntry> members;
  std::vector<int> families;  // distinct labels, sorted
};

// Single-linkage grouping of levels closer than radius; returns the clusters
// with at least two members from distinct families.
std::vector<Cluster> doublet_scan(const BsSpectrum& bs, double radius);

}  // namespace ebk
