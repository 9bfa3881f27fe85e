#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "ebk/error.hpp"
#include "ebk/oracle.hpp"
#include "ebk/symbol_catalog.hpp"

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

const PotentialSpec harmonic_v = Polynomial{{0.0, 0.0, 0.5}};
const PotentialSpec double_well_v = DoubleWell{1.0};
const PotentialSpec morse_v = Morse{1.0, 1.0};

TridiagonalOperator diag123() { return make_tridiagonal({1.0, 2.0, 3.0}, {0.0, 0.0}); }

const TridiagonalOperator& fine_harmonic() {
  static const auto t = discretize(harmonic_v, 0.1, 4.0, 8001);
  return t;
}

}  // namespace

TEST_CASE("discretize") {
  const auto t = discretize(Polynomial{{0.0}}, 1.0, 1.0, 3);
  CHECK(t.grid.h == doctest::Approx(1.0));
  CHECK(t.diag == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(t.offdiag == std::vector<double>{-0.5, -0.5});

  const auto& h = fine_harmonic();
  REQUIRE(h.size() == 8001);
  const double hbar = 0.1;
  const double step = h.grid.h;
  for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{4000}, std::size_t{8000}}) {
    CHECK(h.diag[i] == doctest::Approx(hbar * hbar / (step * step) + 0.5 * h.grid.x(i) * h.grid.x(i)));
  }
  for (double o : h.offdiag) CHECK(o == h.offdiag.front());
  CHECK(h.offdiag.front() == doctest::Approx(-hbar * hbar / (2.0 * step * step)));

  CHECK(code_of([] { discretize(harmonic_v, 0.1, 1.0, 2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Sturm count") {
  const auto d = diag123();
  CHECK(count_below(d, 2.5) == 2);
  CHECK(count_below(d, 0.5) == 0);
  CHECK(count_below(d, 2.0) == 1);
  CHECK(count_below(fine_harmonic(), 0.5) == 5);

  const auto& h = fine_harmonic();
  int prev = 0;
  for (double lambda = -1.0; lambda <= 3.0; lambda += 0.01) {
    const int c = count_below(h, lambda);
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(count_below(h, h.upper_bound() + 1.0) == static_cast<int>(h.size()));
  CHECK(count_below(h, h.lower_bound() - 1.0) == 0);
}

TEST_CASE("eigenvalue_by_index and eigenvalues_in") {
  CHECK(std::abs(eigenvalue_by_index(fine_harmonic(), 0) - 0.05) <= 1e-6);

  const auto r = eigenvalues_in(diag123(), 1.5, 3.5);
  REQUIRE(r.eigenvalues.size() == 2);
  CHECK(r.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.indices == std::vector<int>{1, 2});
  CHECK(code_of([] { eigenvalues_in(diag123(), 2.0, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("Richardson eigenvalues of the harmonic oscillator") {
  const EnergyWindow w(0.2, 0.8, 0.05);
  const double hbar = 0.1;
  const auto d = domain_auto(harmonic_v, w, hbar);
  const auto rr = richardson_eigenvalues(harmonic_v, hbar, d.L, d.N, 0.2, 0.8);
  const auto& ev = rr.result.eigenvalues;
  REQUIRE(ev.size() == 6);
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(ev[i] - hbar * (i + 2.5)) <= 1e-5);
  CHECK(rr.gate_difference <= 1e-8);
  for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i] > ev[i - 1]);
}

TEST_CASE("double-well eigenvalues come in tight pairs") {
  const EnergyWindow w(0.1, 0.6, 0.05);
  const double hbar = 0.05;
  const auto d = domain_auto(double_well_v, w, hbar);
  const auto t = discretize(double_well_v, hbar, d.L, d.N, w);
  const auto r = eigenvalues_in(t, 0.1, 0.6);
  REQUIRE(r.eigenvalues.size() % 2 == 0);
  REQUIRE_FALSE(r.eigenvalues.empty());
  for (std::size_t i = 0; i < r.eigenvalues.size(); i += 2) {
    const double split = r.eigenvalues[i + 1] - r.eigenvalues[i];
    CHECK(split >= 0.0);
    CHECK(r.indices[i + 1] == r.indices[i] + 1);
    CHECK(split < 1e-2 * hbar * hbar);
    if (i + 2 < r.eigenvalues.size()) CHECK(r.eigenvalues[i + 2] - r.eigenvalues[i + 1] > hbar);
  }
}

TEST_CASE("eigenvector") {
  const auto v = eigenvector(diag123(), 2.0, 5);
  REQUIRE(v.size() == 3);
  CHECK(std::abs(v[0]) <= 1e-12);
  CHECK(v[1] == doctest::Approx(1.0));
  CHECK(std::abs(v[2]) <= 1e-12);

  const auto& h = fine_harmonic();
  for (int j = 0; j < 8; ++j) {
    const double lambda = eigenvalue_by_index(h, j);
    const auto u = eigenvector(h, lambda, 2026);
    double norm = 0.0;
    for (double x : u) norm += x * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    double res = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double r = (h.diag[i] - lambda) * u[i];
      if (i > 0) r += h.offdiag[i - 1] * u[i - 1];
      if (i + 1 < u.size()) r += h.offdiag[i] * u[i + 1];
      res += r * r;
    }
    CHECK(std::sqrt(res) <= 1e-8 * std::max(1.0, h.norm_bound()));
    CHECK(node_count(u) == j);
    CHECK(*std::max_element(u.begin(), u.end()) >= -*std::min_element(u.begin(), u.end()));
  }
  CHECK(node_count(eigenvector(h, eigenvalue_by_index(h, 3), 1)) == 3);
  CHECK(std::abs(eigenvalue_by_index(h, 3) - 0.35) <= 1e-4);
}

TEST_CASE("eigenvector seeds agree") {
  const auto& h = fine_harmonic();
  const double lambda = eigenvalue_by_index(h, 2);
  const auto a = eigenvector(h, lambda, 1);
  const auto b = eigenvector(h, lambda, 99);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  CHECK(diff <= 1e-8);
}

TEST_CASE("node_count") {
  CHECK(node_count(std::vector<double>{1.0, -1.0, 1.0}) == 2);
  CHECK(node_count(std::vector<double>{1.0, 1.0, 1.0}) == 0);
  CHECK(node_count(std::vector<double>{1.0, 1e-14, -1.0}) == 1);
  CHECK(node_count(std::vector<double>{1.0, -1e-14, 1.0}) == 0);
  const auto& h = fine_harmonic();
  CHECK(node_count(eigenvector(h, eigenvalue_by_index(h, 2), 3)) == 2);
  CHECK(code_of([] { node_count(std::vector<double>{0.0, 0.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("allowed_region_mass") {
  const auto t = discretize(harmonic_v, 0.05, 3.0, 3001);
  std::vector<double> flat(t.size(), 1.0 / std::sqrt(static_cast<double>(t.size())));
  CHECK(allowed_region_mass(flat, t.grid, harmonic_v, 10.0, 0.0) == 0.0);

  const double e0 = eigenvalue_by_index(t, 0);
  CHECK(e0 == doctest::Approx(0.025).epsilon(1e-4));
  const auto g = eigenvector(t, e0, 4);
  CHECK(allowed_region_mass(g, t.grid, harmonic_v, 0.025, 0.1) <= 0.05);

  const EnergyWindow w(0.1, 0.6, 0.05);
  const double hbar = 0.05;
  const auto d = domain_auto(double_well_v, w, hbar);
  const auto dw = discretize(double_well_v, hbar, d.L, d.N, w);
  const auto r = eigenvalues_in(dw, 0.1, 0.6);
  REQUIRE(r.eigenvalues.size() >= 2);
  const double lower = r.eigenvalues[r.eigenvalues.size() - 2];
  const auto v = eigenvector(dw, lower, 7);
  CHECK(allowed_region_mass(v, dw.grid, double_well_v, lower, 0.1) <= 0.05);
  CHECK(mass_between(v, dw.grid, -d.L, 0.0) >= 0.3);
  CHECK(mass_between(v, dw.grid, 0.0, d.L) >= 0.3);
  double asym = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) asym = std::max(asym, std::abs(v[i] - v[v.size() - 1 - i]));
  CHECK(asym <= 1e-6);
}

TEST_CASE("ball_multiplicity") {
  CHECK(ball_multiplicity(diag123(), 2.0, 0.1) == 1);
  CHECK(ball_multiplicity(diag123(), 2.0, 1.0) == 3);
  CHECK(ball_multiplicity(fine_harmonic(), 0.35, 0.01) == 1);
  CHECK(code_of([] { ball_multiplicity(diag123(), 2.0, 0.0); }) == ErrorCode::InvalidArgument);

  const EnergyWindow w(0.1, 0.6, 0.05);
  const double hbar = 0.05;
  const auto d = domain_auto(double_well_v, w, hbar);
  const auto dw = discretize(double_well_v, hbar, d.L, d.N, w);
  const auto r = eigenvalues_in(dw, 0.1, 0.6);
  for (std::size_t i = 0; i + 1 < r.eigenvalues.size(); i += 2) {
    const double center = 0.5 * (r.eigenvalues[i] + r.eigenvalues[i + 1]);
    CHECK(ball_multiplicity(dw, center, hbar * hbar) == 2);
  }
}

TEST_CASE("domain_auto") {
  const EnergyWindow w(0.2, 0.8, 0.05);
  const double hbar = 0.1;
  const auto d = domain_auto(harmonic_v, w, hbar);
  CHECK(d.L >= std::sqrt(1.7) * 1.5);
  const double h = 2.0 * d.L / (d.N - 1);
  const double xi_max = std::sqrt(2.0 * 0.85);
  CHECK(std::pow(xi_max * h / hbar, 2) / 12.0 <= 1e-5);

  CHECK(code_of([] { domain_auto(morse_v, EnergyWindow(0.8, 1.2, 0.05), 0.05); }) ==
        ErrorCode::NonCompactWindow);
}

TEST_CASE("Morse domain has negligible tail mass") {
  const EnergyWindow w(0.1, 0.6, 0.05);
  const double hbar = 0.05;
  const auto d = domain_auto(morse_v, w, hbar);
  CHECK(std::isfinite(d.L));
  const auto wide = discretize(morse_v, hbar, 2.0 * d.L, 2 * d.N - 1, w);
  const auto r = eigenvalues_in(wide, 0.1, 0.6);
  REQUIRE_FALSE(r.eigenvalues.empty());
  for (double e : r.eigenvalues) {
    const auto v = eigenvector(wide, e, 3);
    const double outside = 1.0 - mass_between(v, wide.grid, -d.L, d.L);
    CHECK(outside < 1e-10);
  }
}

TEST_CASE("confinement checks") {
  const EnergyWindow w(0.1, 0.6, 0.05);
  CHECK(code_of([&] { check_confinement(morse_v, w, 0.05, 1.0); }) == ErrorCode::DomainTooSmall);
  CHECK(code_of([&] { discretize(morse_v, 0.05, 1.0, 201, w); }) == ErrorCode::DomainTooSmall);
  const auto d = domain_auto(morse_v, w, 0.05);
  CHECK_NOTHROW(check_confinement(morse_v, w, 0.05, d.L));
  CHECK(tail_decay_exponent(morse_v, w, 0.05, d.L) >= 25.0);
}

TEST_CASE("domain stability under doubling L") {
  for (const auto& [v, w, hbar] : {std::tuple{harmonic_v, EnergyWindow(0.2, 0.8, 0.05), 0.1},
                                   std::tuple{double_well_v, EnergyWindow(0.1, 0.6, 0.05), 0.1},
                                   std::tuple{morse_v, EnergyWindow(0.1, 0.6, 0.05), 0.1}}) {
    const auto d = domain_auto(v, w, hbar);
    const auto a = eigenvalues_in(discretize(v, hbar, d.L, d.N), w.e1, w.e2);
    const auto b = eigenvalues_in(discretize(v, hbar, 2.0 * d.L, 2 * d.N - 1), w.e1, w.e2);
    REQUIRE(a.eigenvalues.size() == b.eigenvalues.size());
    for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) {
      CHECK(std::abs(a.eigenvalues[i] - b.eigenvalues[i]) <= 1e-10);
    }
  }
}
