#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ebk/action.hpp"
#include "ebk/bs_solver.hpp"
#include "ebk/oracle.hpp"
#include "ebk/phase_portrait.hpp"
#include "ebk/symbol_catalog.hpp"

namespace ebk {

// Uniform double in [0, 1) from the top 53 bits of one draw; identical on
// every platform, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct StudyOptions {
  int family_samples = 9;
  int action_samples = 65;
  int grid_n = 201;
  TraceOptions trace;
  unsigned threads = 1;
};

// Hbar-independent geometry of one symbol over one window.
struct Study {
  SymbolSpec spec;
  EnergyWindow window;
  std::vector<ComponentFamily> families;
  std::vector<ActionTable> tables;
};

// Builds families (NonConstantTopology), checks regularity (IrregularWindow)
// and tabulates the action of every family.
Study prepare_study(const SymbolSpec& spec, const EnergyWindow& window,
                    const StudyOptions& opts = {});

struct OracleRun {
  double hbar = 0.0;
  DomainChoice domain;
  RichardsonResult richardson;
  // Operator on the base grid, used for counts and eigenvectors.
  TridiagonalOperator op;

  const EigenResult& spectrum() const noexcept { return richardson.result; }
};

// Finite-difference oracle over (e1, e2) on an automatically chosen domain.
// Throws InvalidArgument for closed-form symbols.
OracleRun run_oracle(const SymbolSpec& spec, const EnergyWindow& window, double hbar,
                     const DomainOptions& domain = {}, unsigned threads = 1);

struct MatchedPair {
  double e_bs = 0.0;
  double e_oracle = 0.0;
  double abs_err = 0.0;
  int k = 0;
  int n = 0;
  int oracle_index = 0;
  std::optional<int> node_count;
};

struct MatchReport {
  double hbar = 0.0;
  // Interior window (lo, hi); both bounds sit in gaps of the BS spectrum.
  double lo = 0.0;
  double hi = 0.0;
  std::vector<MatchedPair> pairs;
  int unmatched_bs = 0;
  int unmatched_oracle = 0;
  double max_err = 0.0;
  double mean_err = 0.0;
  // Over pairs at least one widest spacing 2 pi hbar / tau_min from both
  // window edges; 0 when there are none.
  double core_max_err = 0.0;
  int core_pairs = 0;
};

// Order-preserving matching inside an interior window whose bounds sit in
// spectral gaps about 0.4 widest spacings inside [e1, e2] (a window edge
// counts as a level when no BS level lies below the guard). Throws
// BijectionFailure when the interior counts differ.
MatchReport match_spectra(const BsSpectrum& bs, const EigenResult& oracle,
                          std::span<const ActionTable> tables);

// Fills node_count of every pair from eigenvectors of run.op.
void attach_node_counts(MatchReport& report, const OracleRun& run, std::uint64_t seed = 0);

struct ConvergencePoint {
  double hbar = 0.0;
  double max_err = 0.0;
  double oracle_error = 0.0;
  int pairs = 0;
};

struct ConvergenceReport {
  std::vector<ConvergencePoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  // Root mean square residual of the log-log fit.
  double residual = 0.0;
  bool floor_limited = false;
};

// Least squares fit of log(max_err) against log(hbar). floor_limited when
// every max_err is below 10 * oracle_tol.
ConvergenceReport fit_convergence(std::vector<ConvergencePoint> points, double oracle_tol);

// Requires >= 3 hbar values, each half of the previous.
ConvergenceReport convergence_study(const Study& study, std::span<const double> hbars,
                                    double oracle_tol, unsigned threads = 1);

struct WeylCheck {
  double e1t = 0.0;
  double e2t = 0.0;
  WeylCount formula;
  int oracle_count = 0;
  bool agree = false;
};

// Formula count against the Sturm count of run.op on [e1t, e2t].
WeylCheck verify_weyl(const Study& study, const BsSpectrum& bs, const OracleRun& run, double e1t,
                      double e2t);

// count random endpoint pairs in the window that pass the safety predicate.
std::vector<std::pair<double, double>> safe_endpoint_pairs(std::span<const ActionTable> tables,
                                                           const BsSpectrum& bs, int count,
                                                           std::mt19937_64& rng);

struct DensityProbe {
  double e0 = 0.0;
  double nearest = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  bool ok = false;
};

// Probes drawn at least one widest spacing away from the window edges.
std::vector<DensityProbe> density_probes(std::span<const ActionTable> tables, const BsSpectrum& bs,
                                         int count, std::mt19937_64& rng);

struct BranchTrace {
  int k = 0;
  int n = 0;
  double hbar_exit = 0.0;
  double hbar_top = 0.0;
  std::vector<double> hbars;
  std::vector<double> energies;
  bool exits = false;
  bool monotone = false;
};

// Follows branch (k, n) from hbar_exit to where it leaves the top of the
// table; exits is true when branch_energy is empty just below hbar_exit.
BranchTrace trace_branch(const ActionTable& table, int n, int samples = 64);

struct DoubletCheck {
  Cluster cluster;
  // max |E_k - E_l| over members of the cluster
  double bs_spread = 0.0;
  int multiplicity = 0;
  std::vector<double> oracle_energies;
  double oracle_splitting = 0.0;
};

// Clusters of radius hbar^2 with their oracle multiplicity and splitting.
std::vector<DoubletCheck> verify_doublets(const BsSpectrum& bs, const OracleRun& run);

}  // namespace ebk
