#include <cmath>
#include <random>

#include "doctest.h"
#include "ebk/compare.hpp"
#include "ebk/error.hpp"

using namespace ebk;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ebk::Error");
  return ErrorCode::InvalidArgument;
}

const Study& harmonic_study() {
  static const Study s = prepare_study(SymbolSpec::harmonic(), EnergyWindow(0.2, 0.8, 0.05));
  return s;
}

const Study& double_well_study() {
  static const Study s = prepare_study(SymbolSpec::double_well(1.0), EnergyWindow(0.1, 0.6, 0.05));
  return s;
}

}  // namespace

TEST_CASE("prepare_study") {
  CHECK(harmonic_study().tables.size() == 1);
  CHECK(double_well_study().tables.size() == 2);
  CHECK(code_of([] {
          prepare_study(SymbolSpec::double_well(1.0), EnergyWindow(0.8, 1.2, 0.05));
        }) == ErrorCode::NonConstantTopology);
  CHECK(code_of([] {
          run_oracle(SymbolSpec::closed_form(ClosedFormId::KerrOscillator, {1.0, 0.5}),
                     EnergyWindow(0.2, 1.0, 0.05), 0.1);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("harmonic spectra match with node identity") {
  const auto& s = harmonic_study();
  const double hbar = 0.1;
  const auto bs = merged_spectrum(s.tables, hbar, s.window);
  const auto run = run_oracle(s.spec, s.window, hbar);
  auto report = match_spectra(bs, run.spectrum(), s.tables);
  REQUIRE(report.pairs.size() == 6);
  CHECK(report.unmatched_bs == 0);
  CHECK(report.unmatched_oracle == 0);
  CHECK(report.max_err <= 1e-8);
  CHECK(report.mean_err <= report.max_err);
  attach_node_counts(report, run, 1);
  for (const auto& p : report.pairs) {
    REQUIRE(p.node_count.has_value());
    CHECK(*p.node_count == p.n);
    CHECK(p.abs_err == doctest::Approx(std::abs(p.e_bs - p.e_oracle)));
  }
}

TEST_CASE("double-well doublets match oracle pairs") {
  const auto& s = double_well_study();
  const double hbar = 0.05;
  const auto bs = merged_spectrum(s.tables, hbar, s.window);
  const auto run = run_oracle(s.spec, s.window, hbar);
  const auto report = match_spectra(bs, run.spectrum(), s.tables);
  REQUIRE(report.pairs.size() % 2 == 0);
  REQUIRE_FALSE(report.pairs.empty());
  for (std::size_t i = 0; i < report.pairs.size(); i += 2) {
    const auto& a = report.pairs[i];
    const auto& b = report.pairs[i + 1];
    CHECK(a.n == b.n);
    CHECK(a.k != b.k);
    CHECK(std::abs(a.e_oracle - b.e_oracle) <= hbar * hbar * hbar);
  }

  const auto doublets = verify_doublets(bs, run);
  REQUIRE_FALSE(doublets.empty());
  for (const auto& d : doublets) {
    CHECK(d.multiplicity == 2);
    CHECK(d.bs_spread <= 1e-9);
    CHECK(d.oracle_splitting >= 0.0);
    CHECK(d.oracle_splitting <= hbar * hbar * hbar);
  }
}

TEST_CASE("quartic error has second-order magnitude") {
  const auto s = prepare_study(SymbolSpec::quartic(), EnergyWindow(0.5, 2.0, 0.05));
  const double hbar = 0.1;
  const auto bs = merged_spectrum(s.tables, hbar, s.window);
  const auto run = run_oracle(s.spec, s.window, hbar);
  const auto report = match_spectra(bs, run.spectrum(), s.tables);
  REQUIRE(report.pairs.size() >= 3);
  CHECK(report.max_err <= hbar * hbar);
  CHECK(report.max_err >= 1e-3 * hbar * hbar);
}

TEST_CASE("missing level triggers BijectionFailure") {
  const auto& s = harmonic_study();
  auto bs = merged_spectrum(s.tables, 0.1, s.window);
  const auto run = run_oracle(s.spec, s.window, 0.1);
  bs.entries.erase(bs.entries.begin() + 3);
  CHECK(code_of([&] { match_spectra(bs, run.spectrum(), s.tables); }) == ErrorCode::BijectionFailure);
}

TEST_CASE("fit_convergence") {
  std::vector<ConvergencePoint> pts;
  for (double h : {0.2, 0.1, 0.05, 0.025}) pts.push_back({h, 0.3 * h * h, 0.0, 4});
  const auto r = fit_convergence(pts, 1e-8);
  CHECK(r.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.intercept == doctest::Approx(std::log(0.3)).epsilon(1e-12));
  CHECK(r.residual <= 1e-12);
  CHECK_FALSE(r.floor_limited);

  std::vector<ConvergencePoint> flat;
  for (double h : {0.2, 0.1, 0.05}) flat.push_back({h, 1e-12, 0.0, 4});
  CHECK(fit_convergence(flat, 1e-8).floor_limited);
}

TEST_CASE("convergence_study") {
  const auto& s = harmonic_study();
  const std::vector<double> hbars = {0.1, 0.05, 0.025};
  const auto r = convergence_study(s, hbars, 1e-8);
  REQUIRE(r.points.size() == 3);
  CHECK(r.floor_limited);

  const std::vector<double> uneven = {0.1, 0.06, 0.025};
  CHECK(code_of([&] { convergence_study(s, uneven, 1e-8); }) == ErrorCode::InvalidArgument);
  const std::vector<double> two = {0.1, 0.05};
  CHECK(code_of([&] { convergence_study(s, two, 1e-8); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("verify_weyl") {
  const auto s = prepare_study(SymbolSpec::harmonic(), EnergyWindow(0.2, 1.05, 0.05));
  const double hbar = 0.1;
  const auto bs = merged_spectrum(s.tables, hbar, s.window);
  const auto run = run_oracle(s.spec, s.window, hbar);
  const auto w = verify_weyl(s, bs, run, 0.22, 1.01);
  CHECK(w.formula.count == 8);
  CHECK(w.oracle_count == 8);
  CHECK(w.agree);
  CHECK(code_of([&] { verify_weyl(s, bs, run, 0.25, 0.9); }) == ErrorCode::UnsafeEndpoint);

  std::mt19937_64 rng(2026);
  const auto pairs = safe_endpoint_pairs(s.tables, bs, 10, rng);
  REQUIRE(pairs.size() == 10);
  for (const auto& [a, b] : pairs) {
    CHECK(a < b);
    CHECK(verify_weyl(s, bs, run, a, b).agree);
  }
}

TEST_CASE("double-well Weyl law with random endpoints") {
  const auto& s = double_well_study();
  const double hbar = 0.05;
  const auto bs = merged_spectrum(s.tables, hbar, s.window);
  const auto run = run_oracle(s.spec, s.window, hbar);
  if (endpoint_is_safe(s.tables, hbar, 0.12, bs) && endpoint_is_safe(s.tables, hbar, 0.58, bs)) {
    CHECK(verify_weyl(s, bs, run, 0.12, 0.58).agree);
  } else {
    CHECK(code_of([&] { verify_weyl(s, bs, run, 0.12, 0.58); }) == ErrorCode::UnsafeEndpoint);
  }
  std::mt19937_64 rng(7);
  for (const auto& [a, b] : safe_endpoint_pairs(s.tables, bs, 10, rng)) {
    CHECK(verify_weyl(s, bs, run, a, b).agree);
  }
}

TEST_CASE("density_probes") {
  const auto& s = double_well_study();
  const auto bs = merged_spectrum(s.tables, 0.05, s.window);
  std::mt19937_64 rng(3);
  const auto probes = density_probes(s.tables, bs, 50, rng);
  REQUIRE(probes.size() == 50);
  for (const auto& p : probes) {
    CHECK(p.ok);
    CHECK(p.gap <= p.bound);
  }
}

TEST_CASE("trace_branch") {
  const auto& t = harmonic_study().tables.at(0);
  const auto b = trace_branch(t, 3);
  CHECK(b.hbar_exit == doctest::Approx(0.2 / 3.5).epsilon(1e-9));
  CHECK(b.hbar_top == doctest::Approx(0.8 / 3.5).epsilon(1e-9));
  CHECK(b.exits);
  CHECK(b.monotone);
  REQUIRE(b.energies.size() == 64);
  for (std::size_t i = 0; i < b.energies.size(); ++i) {
    CHECK(std::abs(b.energies[i] - 3.5 * b.hbars[i]) <= 1e-9);
  }
}

TEST_CASE("uniform01 stays in the unit interval") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}
