#include "ebk/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ebk/error.hpp"

namespace ebk {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double min_period(std::span<const ActionTable> tables) {
  if (tables.empty()) throw Error(ErrorCode::InvalidArgument, "no action tables");
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : tables) m = std::min(m, t.min_period());
  return m;
}

// Widest level spacing 2 pi hbar / tau_min over all families.
double widest_spacing(std::span<const ActionTable> tables, double hbar) {
  return two_pi * hbar / min_period(tables);
}

// Midpoint of the gap that straddles target; the window edge stands in for
// a missing neighbour.
double gap_cut(const std::vector<double>& levels, double target, double edge) {
  const auto next = std::upper_bound(levels.begin(), levels.end(), target);
  const double below = next == levels.begin() ? std::min(edge, target) : *std::prev(next);
  const double above = next == levels.end() ? std::max(edge, target) : *next;
  return 0.5 * (below + above);
}

constexpr double edge_guard = 0.4;

}  // namespace

Study prepare_study(const SymbolSpec& spec, const EnergyWindow& window, const StudyOptions& opts) {
  Study study{spec, window, {}, {}};
  FamilyOptions fopts;
  fopts.grid_n = opts.grid_n;
  fopts.trace = opts.trace;
  fopts.threads = opts.threads;
  study.families = build_families(spec, window, opts.family_samples, fopts);

  const RegularityReport reg = regularity_report(spec, window, compact_preimage_box(spec, window));
  if (!reg.regular) {
    std::ostringstream os;
    os << "critical values inside the window:";
    for (double v : reg.critical_values_found) os << ' ' << v;
    throw Error(ErrorCode::IrregularWindow, os.str());
  }

  ActionOptions aopts;
  aopts.trace = opts.trace;
  aopts.threads = opts.threads;
  for (const auto& fam : study.families) {
    study.tables.push_back(build_action_table(spec, fam, window, opts.action_samples, aopts));
  }
  return study;
}

OracleRun run_oracle(const SymbolSpec& spec, const EnergyWindow& window, double hbar,
                     const DomainOptions& domain, unsigned threads) {
  const PotentialSpec* v = spec.potential();
  if (v == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "the oracle needs a Schrodinger-form symbol");
  }
  OracleRun run;
  run.hbar = hbar;
  run.domain = domain_auto(*v, window, hbar, domain);
  run.op = discretize(*v, hbar, run.domain.L, run.domain.N, window);
  run.richardson =
      richardson_eigenvalues(*v, hbar, run.domain.L, run.domain.N, window.e1, window.e2, threads);
  return run;
}

MatchReport match_spectra(const BsSpectrum& bs, const EigenResult& oracle,
                          std::span<const ActionTable> tables) {
  MatchReport r;
  r.hbar = bs.hbar;
  const double s = widest_spacing(tables, bs.hbar);
  std::vector<double> levels;
  for (const auto& e : bs.entries) levels.push_back(e.energy);
  r.lo = gap_cut(levels, bs.window.e1 + edge_guard * s, bs.window.e1);
  r.hi = gap_cut(levels, bs.window.e2 - edge_guard * s, bs.window.e2);

  std::vector<const LevelEntry*> inner_bs;
  for (const auto& e : bs.entries) {
    if (e.energy > r.lo && e.energy < r.hi) inner_bs.push_back(&e);
  }
  std::vector<std::size_t> inner_oracle;
  for (std::size_t i = 0; i < oracle.eigenvalues.size(); ++i) {
    if (oracle.eigenvalues[i] > r.lo && oracle.eigenvalues[i] < r.hi) inner_oracle.push_back(i);
  }
  if (inner_bs.size() != inner_oracle.size()) {
    std::ostringstream os;
    os << "interior window (" << r.lo << ", " << r.hi << ") holds " << inner_bs.size()
       << " BS levels but " << inner_oracle.size() << " oracle eigenvalues at hbar = " << bs.hbar;
    throw Error(ErrorCode::BijectionFailure, os.str());
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < inner_bs.size(); ++i) {
    const std::size_t j = inner_oracle[i];
    MatchedPair p;
    p.e_bs = inner_bs[i]->energy;
    p.e_oracle = oracle.eigenvalues[j];
    p.abs_err = std::abs(p.e_bs - p.e_oracle);
    p.k = inner_bs[i]->k;
    p.n = inner_bs[i]->n;
    p.oracle_index = oracle.indices[j];
    r.max_err = std::max(r.max_err, p.abs_err);
    sum += p.abs_err;
    if (p.e_bs - bs.window.e1 >= s && bs.window.e2 - p.e_bs >= s) {
      r.core_max_err = std::max(r.core_max_err, p.abs_err);
      ++r.core_pairs;
    }
    r.pairs.push_back(p);
  }
  if (!r.pairs.empty()) r.mean_err = sum / static_cast<double>(r.pairs.size());
  r.unmatched_bs = static_cast<int>(bs.entries.size() - r.pairs.size());
  r.unmatched_oracle = static_cast<int>(oracle.eigenvalues.size() - r.pairs.size());
  return r;
}

void attach_node_counts(MatchReport& report, const OracleRun& run, std::uint64_t seed) {
  for (auto& p : report.pairs) {
    const double lambda = eigenvalue_by_index(run.op, p.oracle_index);
    const auto v = eigenvector(run.op, lambda, seed + static_cast<std::uint64_t>(p.oracle_index));
    p.node_count = node_count(v);
  }
}

ConvergenceReport fit_convergence(std::vector<ConvergencePoint> points, double oracle_tol) {
  if (points.size() < 2) throw Error(ErrorCode::InvalidArgument, "a slope fit needs >= 2 points");
  ConvergenceReport r;
  r.points = std::move(points);
  const double tiny = std::numeric_limits<double>::min();
  const auto n = static_cast<double>(r.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : r.points) {
    mx += std::log(p.hbar);
    my += std::log(std::max(p.max_err, tiny));
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& p : r.points) {
    const double dx = std::log(p.hbar) - mx;
    sxy += dx * (std::log(std::max(p.max_err, tiny)) - my);
    sxx += dx * dx;
  }
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss = 0.0;
  for (const auto& p : r.points) {
    const double e = std::log(std::max(p.max_err, tiny)) - (r.intercept + r.slope * std::log(p.hbar));
    ss += e * e;
  }
  r.residual = std::sqrt(ss / n);
  r.floor_limited = std::all_of(r.points.begin(), r.points.end(), [&](const ConvergencePoint& p) {
    return p.max_err < 10.0 * oracle_tol;
  });
  return r;
}

ConvergenceReport convergence_study(const Study& study, std::span<const double> hbars,
                                    double oracle_tol, unsigned threads) {
  if (hbars.size() < 3) throw Error(ErrorCode::InvalidArgument, "convergence needs >= 3 hbar values");
  for (std::size_t i = 1; i < hbars.size(); ++i) {
    if (std::abs(hbars[i] / hbars[i - 1] - 0.5) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "each hbar must be half of the previous one");
    }
  }
  std::vector<ConvergencePoint> points;
  for (double hbar : hbars) {
    const BsSpectrum bs = merged_spectrum(study.tables, hbar, study.window);
    const OracleRun run = run_oracle(study.spec, study.window, hbar, {}, threads);
    const MatchReport m = match_spectra(bs, run.spectrum(), study.tables);
    points.push_back({hbar, m.core_max_err, run.richardson.gate_difference, m.core_pairs});
  }
  return fit_convergence(std::move(points), oracle_tol);
}

WeylCheck verify_weyl(const Study& study, const BsSpectrum& bs, const OracleRun& run, double e1t,
                      double e2t) {
  WeylCheck w;
  w.e1t = e1t;
  w.e2t = e2t;
  w.formula = exact_weyl_count(study.tables, bs.hbar, e1t, e2t, bs);
  const double top = std::nextafter(e2t, std::numeric_limits<double>::infinity());
  w.oracle_count = count_below(run.op, top) - count_below(run.op, e1t);
  w.agree = w.formula.count == w.oracle_count;
  return w;
}

std::vector<std::pair<double, double>> safe_endpoint_pairs(std::span<const ActionTable> tables,
                                                           const BsSpectrum& bs, int count,
                                                           std::mt19937_64& rng) {
  const double e1 = bs.window.e1;
  const double e2 = bs.window.e2;
  std::vector<std::pair<double, double>> out;
  for (long attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    if (attempt > 1000L * std::max(count, 1)) {
      throw Error(ErrorCode::UnsafeEndpoint, "could not draw enough safe endpoint pairs");
    }
    double a = e1 + (e2 - e1) * uniform01(rng);
    double b = e1 + (e2 - e1) * uniform01(rng);
    if (a > b) std::swap(a, b);
    if (!(a < b)) continue;
    if (endpoint_is_safe(tables, bs.hbar, a, bs) && endpoint_is_safe(tables, bs.hbar, b, bs)) {
      out.emplace_back(a, b);
    }
  }
  return out;
}

std::vector<DensityProbe> density_probes(std::span<const ActionTable> tables, const BsSpectrum& bs,
                                         int count, std::mt19937_64& rng) {
  const double s = widest_spacing(tables, bs.hbar);
  const double lo = bs.window.e1 + s;
  const double hi = bs.window.e2 - s;
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "window narrower than two spacings");
  const double bound = density_bound(tables, bs.hbar);
  std::vector<DensityProbe> out;
  for (int i = 0; i < count; ++i) {
    DensityProbe p;
    p.e0 = lo + (hi - lo) * uniform01(rng);
    const NearestLevel nl = nearest_level(bs, p.e0);
    p.nearest = nl.energy;
    p.gap = nl.gap;
    p.bound = bound;
    p.ok = p.gap <= bound;
    out.push_back(p);
  }
  return out;
}

BranchTrace trace_branch(const ActionTable& table, int n, int samples) {
  if (samples < 2) throw Error(ErrorCode::InvalidArgument, "branch trace needs >= 2 samples");
  BranchTrace b;
  b.k = table.k;
  b.n = n;
  b.hbar_exit = branch_exit_hbar(table, n);
  b.hbar_top = table.interpolant.y_max() / (two_pi * (n + table.maslov / 4.0));
  b.exits = true;
  for (double f : {1.0 - 1e-6, 0.9, 0.5, 0.1}) {
    if (branch_energy(table, n, f * b.hbar_exit).has_value()) b.exits = false;
  }
  b.monotone = true;
  for (int j = 0; j < samples; ++j) {
    const double hbar = b.hbar_exit + (b.hbar_top - b.hbar_exit) * (j + 0.5) / samples;
    const auto e = branch_energy(table, n, hbar);
    if (!e) {
      b.monotone = false;
      continue;
    }
    if (!b.energies.empty() && !(*e > b.energies.back())) b.monotone = false;
    b.hbars.push_back(hbar);
    b.energies.push_back(*e);
  }
  return b;
}

std::vector<DoubletCheck> verify_doublets(const BsSpectrum& bs, const OracleRun& run) {
  const double radius = bs.hbar * bs.hbar;
  std::vector<DoubletCheck> out;
  for (auto& c : doublet_scan(bs, radius)) {
    DoubletCheck d;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& m : c.members) {
      lo = std::min(lo, m.energy);
      hi = std::max(hi, m.energy);
    }
    d.bs_spread = hi - lo;
    d.multiplicity = ball_multiplicity(run.op, c.center, radius);
    for (double e : run.spectrum().eigenvalues) {
      if (std::abs(e - c.center) <= radius) d.oracle_energies.push_back(e);
    }
    if (d.oracle_energies.size() >= 2) {
      const auto [mn, mx] = std::minmax_element(d.oracle_energies.begin(), d.oracle_energies.end());
      d.oracle_splitting = *mx - *mn;
    } else {
      d.oracle_splitting = std::numeric_limits<double>::infinity();
    }
    d.cluster = std::move(c);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace ebk
