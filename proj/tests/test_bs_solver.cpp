#include <cmath>
#include <numbers>
#include <set>
#include <utility>

#include "doctest.h"
#include "ebk/action.hpp"
#include "ebk/bs_solver.hpp"
#include "ebk/error.hpp"
#include "ebk/phase_portrait.hpp"
#include "quadrature_oracle.hpp"

using namespace ebk;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ebk::Error");
  return ErrorCode::InvalidArgument;
}

std::vector<ActionTable> tables_for(const SymbolSpec& spec, const EnergyWindow& w, int samples) {
  std::vector<ActionTable> out;
  for (const auto& fam : build_families(spec, w, 9)) out.push_back(build_action_table(spec, fam, w, samples));
  return out;
}

const EnergyWindow unit_window(0.2, 0.8, 0.05);

const std::vector<ActionTable>& harmonic_tables() {
  static const auto t = tables_for(SymbolSpec::harmonic(), unit_window, 33);
  return t;
}

const std::vector<ActionTable>& double_well_tables() {
  static const auto t = tables_for(SymbolSpec::double_well(1.0), EnergyWindow(0.1, 0.6, 0.05), 65);
  return t;
}

const std::vector<ActionTable>& quartic_tables() {
  static const auto t = tables_for(SymbolSpec::quartic(), EnergyWindow(0.5, 2.0, 0.05), 65);
  return t;
}

}  // namespace

TEST_CASE("quantize_family on the harmonic table") {
  const auto& t = harmonic_tables().at(0);
  const auto levels = quantize_family(t, 0.1, unit_window);
  REQUIRE(levels.size() == 6);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    CHECK(levels[i].n == static_cast<int>(i) + 2);
    CHECK(std::abs(levels[i].energy - 0.1 * (levels[i].n + 0.5)) <= 1e-10);
  }
  // n = 1 at hbar = 0.5 sits at 0.75, also inside the window.
  const auto coarse = quantize_family(t, 0.5, unit_window);
  REQUIRE(coarse.size() == 2);
  CHECK(coarse[0].n == 0);
  CHECK(std::abs(coarse[0].energy - 0.25) <= 1e-10);
  CHECK(coarse[1].n == 1);
  CHECK(std::abs(coarse[1].energy - 0.75) <= 1e-10);
  CHECK(quantize_family(t, 10.0, unit_window).empty());
  CHECK(code_of([&] { quantize_family(t, 0.0, unit_window); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Morse levels against the closed-form action") {
  const EnergyWindow w(0.1, 0.6, 0.05);
  for (double e : {0.1, 0.35, 0.6}) {
    CHECK(std::abs(oracle::morse_action(e) - two_pi * std::sqrt(2.0) * (1.0 - std::sqrt(1.0 - e))) <=
          1e-12);
  }
  const auto tables = tables_for(SymbolSpec::morse(1.0, 1.0), w, 65);
  REQUIRE(tables.size() == 1);
  const double hbar = 0.05;
  const auto levels = quantize_family(tables[0], hbar, w);
  REQUIRE_FALSE(levels.empty());
  for (const auto& l : levels) {
    const double q = l.n + 0.5;
    CHECK(std::abs(l.energy - (std::sqrt(2.0) * hbar * q - hbar * hbar * q * q / 2.0)) <= 1e-8);
  }
}

TEST_CASE("BS spectrum invariants") {
  for (const auto* tables : {&harmonic_tables(), &double_well_tables(), &quartic_tables()}) {
    const EnergyWindow w(tables->front().e_lo(), tables->front().e_hi(), 0.05);
    for (double hbar : {0.1, 0.05}) {
      const auto bs = merged_spectrum(*tables, hbar, w);
      for (std::size_t i = 0; i < bs.entries.size(); ++i) {
        const auto& e = bs.entries[i];
        CHECK(e.energy >= w.e1);
        CHECK(e.energy <= w.e2);
        const auto& t = tables->at(e.k - 1);
        CHECK(std::abs(t.action(e.energy) - two_pi * hbar * (e.n + 0.5)) <= 1e-9 * hbar);
        if (i > 0) CHECK(bs.entries[i - 1].energy <= e.energy);
      }
      for (const auto& t : *tables) {
        const auto levels = quantize_family(t, hbar, w);
        for (std::size_t i = 1; i < levels.size(); ++i) {
          CHECK(levels[i].n > levels[i - 1].n);
          CHECK(levels[i].energy > levels[i - 1].energy);
        }
      }
    }
  }
}

TEST_CASE("convention equivalence of half-integer shifts") {
  const auto& t = quartic_tables().at(0);
  const double hbar = 0.1;
  std::vector<double> plus, minus;
  for (int n = -5; n < 60; ++n) {
    if (auto e = branch_energy(t, n, hbar)) plus.push_back(*e);
    const double a = two_pi * hbar * (n - 0.5);
    if (a >= t.interpolant.y_min() && a <= t.interpolant.y_max()) minus.push_back(invert_action(t, a));
  }
  REQUIRE(plus.size() == minus.size());
  for (std::size_t i = 0; i < plus.size(); ++i) CHECK(plus[i] == minus[i]);
}

TEST_CASE("merged_spectrum") {
  SUBCASE("symmetric double well pairs coincide") {
    const auto bs = merged_spectrum(double_well_tables(), 0.05, EnergyWindow(0.1, 0.6, 0.05));
    REQUIRE(bs.entries.size() % 2 == 0);
    REQUIRE_FALSE(bs.entries.empty());
    for (std::size_t i = 0; i < bs.entries.size(); i += 2) {
      CHECK(bs.entries[i].k + bs.entries[i + 1].k == 3);
      CHECK(bs.entries[i].k != bs.entries[i + 1].k);
      CHECK(bs.entries[i].n == bs.entries[i + 1].n);
      CHECK(std::abs(bs.entries[i].energy - bs.entries[i + 1].energy) <= 1e-9);
    }
  }
  SUBCASE("harmonic gaps equal hbar") {
    for (double hbar : {0.1, 0.05, 0.025}) {
      const auto bs = merged_spectrum(harmonic_tables(), hbar, unit_window);
      for (std::size_t i = 1; i < bs.entries.size(); ++i) {
        CHECK(std::abs(bs.entries[i].energy - bs.entries[i - 1].energy - hbar) <= 1e-9);
      }
    }
  }
  SUBCASE("quartic count matches the Weyl formula") {
    const double hbar = 0.1;
    const EnergyWindow w(0.5, 2.0, 0.05);
    const auto bs = merged_spectrum(quartic_tables(), hbar, w);
    REQUIRE(bs.entries.size() >= 4);
    for (std::size_t i = 1; i + 1 < bs.entries.size(); ++i) {
      for (std::size_t j = i + 1; j < bs.entries.size(); ++j) {
        const double e1 = 0.5 * (bs.entries[i - 1].energy + bs.entries[i].energy);
        const double e2 = 0.5 * (bs.entries[j].energy + bs.entries[j - 1].energy);
        const auto wc = exact_weyl_count(quartic_tables(), hbar, e1, e2, bs);
        CHECK(wc.count == static_cast<long>(j - i));
        CHECK(std::abs(wc.delta) < 1.0);
      }
    }
  }
}

TEST_CASE("exact_weyl_count") {
  const EnergyWindow wide(0.2, 1.05, 0.05);
  const auto tables = tables_for(SymbolSpec::harmonic(), wide, 33);
  const double hbar = 0.1;
  const auto bs = merged_spectrum(tables, hbar, wide);
  const auto wc = exact_weyl_count(tables, hbar, 0.22, 1.01, bs);
  CHECK(wc.count == 8);
  REQUIRE(wc.per_family.size() == 1);
  CHECK(wc.per_family[0] == 8);
  CHECK(wc.leading == doctest::Approx(7.9).epsilon(1e-9));
  CHECK(std::abs(wc.correction) <= 1e-9);
  CHECK(wc.delta == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(code_of([&] { exact_weyl_count(tables, hbar, 0.25, 0.93, bs); }) == ErrorCode::UnsafeEndpoint);
  CHECK(code_of([&] { exact_weyl_count(tables, hbar, 0.5, 0.3, bs); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("branch_energy") {
  const auto& h = harmonic_tables().at(0);
  REQUIRE(branch_energy(h, 3, 0.1).has_value());
  CHECK(std::abs(*branch_energy(h, 3, 0.1) - 0.35) <= 1e-10);
  CHECK_FALSE(branch_energy(h, 3, 0.05).has_value());

  const auto& q = quartic_tables().at(0);
  const auto e = branch_energy(q, 5, 0.1);
  REQUIRE(e.has_value());
  const double expected = std::pow(two_pi * 0.1 * 5.5 / oracle::quartic_action(1.0), 4.0 / 3.0);
  CHECK(std::abs(*e - expected) <= 1e-8);
  CHECK(*e == doctest::Approx(0.62).epsilon(1e-2));
}

TEST_CASE("branch monotonicity and drift") {
  const auto& q = quartic_tables().at(0);
  for (int n = 0; n < 8; ++n) {
    double prev = -1.0;
    for (double hbar = 0.05; hbar <= 0.4; hbar += 0.005) {
      if (auto e = branch_energy(q, n, hbar)) {
        CHECK(*e > prev);
        prev = *e;
        if (auto up = branch_energy(q, n + 1, hbar)) CHECK(*up > *e);
      }
    }
    const double exit = branch_exit_hbar(q, n);
    CHECK(exit > 0.0);
    for (double f : {0.999999, 0.9, 0.5, 0.1}) CHECK_FALSE(branch_energy(q, n, f * exit).has_value());
  }
}

TEST_CASE("nearest_level") {
  const auto bs = merged_spectrum(harmonic_tables(), 0.1, unit_window);
  const auto mid = nearest_level(bs, 0.30);
  CHECK(std::abs(mid.gap - 0.05) <= 1e-10);
  CHECK((std::abs(mid.energy - 0.25) <= 1e-10 || std::abs(mid.energy - 0.35) <= 1e-10));
  const auto on = nearest_level(bs, 0.35);
  CHECK(std::abs(on.energy - 0.35) <= 1e-10);
  CHECK(on.gap <= 1e-10);

  const auto dw = merged_spectrum(double_well_tables(), 0.05, EnergyWindow(0.1, 0.6, 0.05));
  double tau_min = 1e300;
  for (const auto& t : double_well_tables()) {
    for (const auto& s : t.samples) tau_min = std::min(tau_min, s.period);
  }
  CHECK(nearest_level(dw, 0.3).gap <= 1.1 * std::numbers::pi * 0.05 / tau_min);
  CHECK(density_bound(double_well_tables(), 0.05) ==
        doctest::Approx(1.1 * std::numbers::pi * 0.05 / tau_min).epsilon(1e-9));

  BsSpectrum empty;
  CHECK(code_of([&] { nearest_level(empty, 0.3); }) == ErrorCode::EmptySpectrum);
}

TEST_CASE("doublet_scan") {
  const double hbar = 0.05;
  SUBCASE("symmetric double well") {
    const auto bs = merged_spectrum(double_well_tables(), hbar, EnergyWindow(0.1, 0.6, 0.05));
    const auto clusters = doublet_scan(bs, hbar * hbar);
    CHECK(clusters.size() * 2 == bs.entries.size());
    for (const auto& c : clusters) {
      CHECK(c.members.size() == 2);
      CHECK(c.families == std::vector<int>{1, 2});
    }
  }
  SUBCASE("harmonic") {
    for (double h : {0.1, 0.05}) {
      CHECK(doublet_scan(merged_spectrum(harmonic_tables(), h, unit_window), h * h).empty());
    }
  }
  SUBCASE("asymmetric double well agrees with pairwise search") {
    const EnergyWindow w(0.2, 0.6, 0.05);
    const auto tables = tables_for(SymbolSpec::polynomial({1.0, 0.1, -2.0, 0.0, 1.0}), w, 65);
    REQUIRE(tables.size() == 2);
    CHECK(std::abs(tables[0].action(0.4) - tables[1].action(0.4)) > 1e-3);
    const auto bs = merged_spectrum(tables, hbar, w);
    const double radius = hbar * hbar;
    std::set<std::pair<int, int>> brute;
    for (std::size_t i = 0; i < bs.entries.size(); ++i) {
      for (std::size_t j = 0; j < bs.entries.size(); ++j) {
        const auto& a = bs.entries[i];
        const auto& b = bs.entries[j];
        if (a.k != b.k && std::abs(a.energy - b.energy) <= radius) brute.insert({a.k, a.n});
      }
    }
    std::set<std::pair<int, int>> scanned;
    for (const auto& c : doublet_scan(bs, radius)) {
      for (const auto& m : c.members) scanned.insert({m.k, m.n});
    }
    CHECK(scanned == brute);
  }
  CHECK(code_of([] { doublet_scan(BsSpectrum{}, 0.0); }) == ErrorCode::InvalidArgument);
}
