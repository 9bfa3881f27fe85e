#include "ebk/bs_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <sstream>

#include "ebk/error.hpp"

namespace ebk {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void check_hbar(double hbar) {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) {
    throw Error(ErrorCode::InvalidArgument, "hbar must be positive and finite");
  }
}

double maslov_shift(const ActionTable& t) { return t.maslov / 4.0; }

}  // namespace

double quantized_action(const ActionTable& table, int n, double hbar) {
  return two_pi * hbar * (n + maslov_shift(table));
}

std::vector<QuantizedLevel> quantize_family(const ActionTable& table, double hbar,
                                            const EnergyWindow& window) {
  check_hbar(hbar);
  const double e_lo = std::max(window.e1, table.e_lo());
  const double e_hi = std::min(window.e2, table.e_hi());
  std::vector<QuantizedLevel> out;
  if (!(e_lo <= e_hi)) return out;
  const double a_lo = table.action(e_lo);
  const double a_hi = table.action(e_hi);
  const double unit = two_pi * hbar;
  const auto n_min = static_cast<int>(std::ceil(a_lo / unit - maslov_shift(table)));
  const auto n_max = static_cast<int>(std::floor(a_hi / unit - maslov_shift(table)));
  for (int n = n_min; n <= n_max; ++n) {
    const double a = quantized_action(table, n, hbar);
    if (a < a_lo || a > a_hi) continue;
    const double e = invert_action(table, a);
    if (e >= window.e1 && e <= window.e2) out.push_back({n, e});
  }
  return out;
}

BsSpectrum merged_spectrum(std::span<const ActionTable> tables, double hbar,
                           const EnergyWindow& window) {
  BsSpectrum bs;
  bs.hbar = hbar;
  bs.window = window;
  for (const auto& t : tables) {
    for (const auto& level : quantize_family(t, hbar, window)) {
      bs.entries.push_back({level.energy, t.k, level.n});
    }
  }
  std::sort(bs.entries.begin(), bs.entries.end(), [](const LevelEntry& a, const LevelEntry& b) {
    return a.energy != b.energy ? a.energy < b.energy : a.k < b.k;
  });
  return bs;
}

double endpoint_clearance(std::span<const ActionTable> tables, double hbar, double safety) {
  double tau_max = 0.0;
  for (const auto& t : tables) tau_max = std::max(tau_max, t.max_period());
  return safety * hbar * two_pi / tau_max;
}

bool endpoint_is_safe(std::span<const ActionTable> tables, double hbar, double energy,
                      const BsSpectrum& bs, double safety) {
  const double clearance = endpoint_clearance(tables, hbar, safety) * (1.0 - 1e-9);
  for (const auto& entry : bs.entries) {
    if (std::abs(entry.energy - energy) < clearance) return false;
  }
  // Levels just outside the window are not listed in bs; measure the distance
  // of the quantum-number coordinate to the nearest integer instead.
  for (const auto& t : tables) {
    if (energy < t.e_lo() || energy > t.e_hi()) {
      throw Error(ErrorCode::OutOfWindow, "endpoint outside the action table range");
    }
    const double beta = t.action(energy) / (two_pi * hbar) - maslov_shift(t);
    const double frac = std::abs(beta - std::round(beta));
    if (frac * two_pi * hbar / t.period(energy) < clearance) return false;
  }
  return true;
}

WeylCount exact_weyl_count(std::span<const ActionTable> tables, double hbar, double e1t, double e2t,
                           const BsSpectrum& bs, double safety) {
  check_hbar(hbar);
  if (!(e1t < e2t)) throw Error(ErrorCode::InvalidArgument, "Weyl endpoints must satisfy e1 < e2");
  for (const double e : {e1t, e2t}) {
    if (!endpoint_is_safe(tables, hbar, e, bs, safety)) {
      std::ostringstream os;
      os << "endpoint " << e << " is closer than " << endpoint_clearance(tables, hbar, safety)
         << " to the spectrum";
      throw Error(ErrorCode::UnsafeEndpoint, os.str());
    }
  }
  WeylCount w;
  const double unit = two_pi * hbar;
  for (const auto& t : tables) {
    const double a1 = t.action(e1t);
    const double a2 = t.action(e2t);
    const auto n_k = static_cast<long>(std::floor(a2 / unit + maslov_shift(t))) -
                     static_cast<long>(std::floor(a1 / unit + maslov_shift(t)));
    w.per_family.push_back(n_k);
    w.count += n_k;
    w.leading += (a2 - a1) / unit;
    w.correction += (t.period(e2t) - t.period(e1t)) / two_pi;
  }
  w.delta = static_cast<double>(w.count) - w.leading;
  return w;
}

std::optional<double> branch_energy(const ActionTable& table, int n, double hbar) {
  check_hbar(hbar);
  const double a = quantized_action(table, n, hbar);
  if (a < table.interpolant.y_min() || a > table.interpolant.y_max()) return std::nullopt;
  return invert_action(table, a);
}

double branch_exit_hbar(const ActionTable& table, int n) {
  const double q = n + maslov_shift(table);
  if (!(q > 0.0)) throw Error(ErrorCode::InvalidArgument, "branch has no positive action");
  return table.interpolant.y_min() / (two_pi * q);
}

NearestLevel nearest_level(const BsSpectrum& bs, double e0) {
  if (bs.entries.empty()) throw Error(ErrorCode::EmptySpectrum, "no levels in the window");
  const auto it = std::lower_bound(bs.entries.begin(), bs.entries.end(), e0,
                                   [](const LevelEntry& a, double e) { return a.energy < e; });
  NearestLevel best{0.0, std::numeric_limits<double>::infinity()};
  for (auto cand : {it, it == bs.entries.begin() ? it : std::prev(it)}) {
    if (cand == bs.entries.end()) continue;
    const double gap = std::abs(cand->energy - e0);
    if (gap < best.gap) best = {cand->energy, gap};
  }
  return best;
}

double density_bound(std::span<const ActionTable> tables, double hbar) {
  double tau_min = std::numeric_limits<double>::infinity();
  for (const auto& t : tables) tau_min = std::min(tau_min, t.min_period());
  return 1.1 * std::numbers::pi * hbar / tau_min;
}

std::vector<Cluster> doublet_scan(const BsSpectrum& bs, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "cluster radius must be positive");
  std::vector<Cluster> out;
  auto flush = [&](std::vector<LevelEntry>& group) {
    if (group.size() >= 2) {
      Cluster c;
      double sum = 0.0;
      for (const auto& e : group) {
        sum += e.energy;
        c.families.push_back(e.k);
      }
      std::sort(c.families.begin(), c.families.end());
      c.families.erase(std::unique(c.families.begin(), c.families.end()), c.families.end());
      if (c.families.size() >= 2) {
        c.center = sum / static_cast<double>(group.size());
        c.members = group;
        out.push_back(std::move(c));
      }
    }
    group.clear();
  };
  std::vector<LevelEntry> group;
  for (const auto& e : bs.entries) {
    if (!group.empty() && e.energy - group.back().energy > radius) flush(group);
    group.push_back(e);
  }
  flush(group);
  return out;
}

}  // namespace ebk
