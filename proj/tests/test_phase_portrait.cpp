#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ebk/action.hpp"
#include "ebk/error.hpp"
#include "ebk/phase_portrait.hpp"
#include "quadrature_oracle.hpp"

using namespace ebk;

namespace {

const Box square2{-2.0, 2.0, -2.0, 2.0};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ebk::Error");
  return ErrorCode::InvalidArgument;
}

void check_invariants(const SymbolSpec& spec, const LevelComponent& c, double tol) {
  CHECK(c.points.size() >= 64);
  CHECK(c.points.size() == c.times.size());
  CHECK(c.period > 0.0);
  CHECK(c.closure_error <= tol);
  for (const auto& p : c.points) CHECK(std::abs(spec.value(p) - c.energy) <= tol);
  CHECK(is_simple(c.points));
}

}  // namespace

TEST_CASE("seed_components") {
  const auto h = seed_components(SymbolSpec::harmonic(), 0.5, square2, 201);
  REQUIRE(h.size() == 1);
  CHECK(std::hypot(h[0].x, h[0].xi) == doctest::Approx(1.0).epsilon(1e-10));

  const auto d = seed_components(SymbolSpec::double_well(1.0), 0.5, square2, 201);
  REQUIRE(d.size() == 2);
  CHECK(d[0].x < 0.0);
  CHECK(d[1].x > 0.0);

  CHECK(seed_components(SymbolSpec::double_well(1.0), 1.5, Box{-2.5, 2.5, -2.5, 2.5}, 201).size() == 1);

  CHECK(code_of([] { seed_components(SymbolSpec::harmonic(), -1.0, square2, 201); }) ==
        ErrorCode::EmptyLevelSet);
}

TEST_CASE("trace_component on the harmonic circle") {
  const auto spec = SymbolSpec::harmonic();
  const auto a = trace_component(spec, {1.0, 0.0}, 0.5);
  CHECK(std::abs(a.period - 2.0 * std::numbers::pi) <= 1e-9);
  check_invariants(spec, a, 1e-10);
  const auto b = trace_component(spec, {0.0, 1.0}, 0.5);
  CHECK(std::abs(b.period - a.period) <= 1e-9);
  CHECK(std::abs(loop_action(b) - loop_action(a)) <= 1e-9);
}

TEST_CASE("quartic period against turning-point quadrature") {
  const auto spec = SymbolSpec::quartic();
  const double reference = oracle::quartic_period(1.0);
  const auto c = trace_component(spec, {1.0, 0.0}, 1.0);
  CHECK(std::abs(c.period - reference) <= 1e-9);
  check_invariants(spec, c, 1e-10);
  const auto other = trace_component(spec, {0.0, std::sqrt(2.0)}, 1.0);
  CHECK(std::abs(other.period - c.period) <= 1e-9);
  CHECK(std::abs(loop_action(other) - loop_action(c)) <= 1e-9);
}

TEST_CASE("trace_component rejects a critical seed") {
  CHECK(code_of([] { trace_component(SymbolSpec::harmonic(), {0.0, 0.0}, 0.0); }) ==
        ErrorCode::InvalidArgument);
  TraceOptions bad;
  bad.samples = 63;
  CHECK(code_of([&] { trace_component(SymbolSpec::harmonic(), {1.0, 0.0}, 0.5, bad); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("short max_time gives NotClosedOrbit") {
  TraceOptions o;
  o.max_time = 1.0;
  CHECK(code_of([&] { trace_component(SymbolSpec::harmonic(), {1.0, 0.0}, 0.5, o); }) ==
        ErrorCode::NotClosedOrbit);
}

TEST_CASE("component_count") {
  CHECK(component_count(SymbolSpec::double_well(1.0), 0.5, square2) == 2);
  CHECK(component_count(SymbolSpec::double_well(1.0), 1.5, Box{-2.5, 2.5, -2.5, 2.5}) == 1);
  CHECK(component_count(SymbolSpec::morse(1.0, 1.0), 0.5, Box{-1.5, 4.0, -1.5, 1.5}) == 1);
}

TEST_CASE("double-well components are disjoint") {
  const auto comps = trace_level_set(SymbolSpec::double_well(1.0), 0.5, square2);
  REQUIRE(comps.size() == 2);
  double sep = 1e300;
  for (const auto& p : comps[0].points) {
    for (const auto& q : comps[1].points) sep = std::min(sep, std::hypot(p.x - q.x, p.xi - q.xi));
  }
  CHECK(sep > 10.0 * 1e-10);
}

TEST_CASE("build_families") {
  const auto dw = build_families(SymbolSpec::double_well(1.0), EnergyWindow(0.2, 0.8, 0.05), 25);
  REQUIRE(dw.size() == 2);
  CHECK(dw[0].k == 1);
  CHECK(dw[1].k == 2);
  for (const auto& fam : dw) {
    CHECK(fam.samples.size() == 25);
    const double side = fam.samples.front().component.centroid().x;
    for (const auto& s : fam.samples) CHECK(s.component.centroid().x * side > 0.0);
  }
  CHECK(build_families(SymbolSpec::harmonic(), EnergyWindow(0.2, 0.8, 0.05), 25).size() == 1);
  CHECK(code_of([] {
          build_families(SymbolSpec::double_well(1.0), EnergyWindow(0.8, 1.2, 0.05), 25);
        }) == ErrorCode::NonConstantTopology);
}

TEST_CASE("seed_at continues a family to a new energy") {
  const auto spec = SymbolSpec::double_well(1.0);
  const auto fams = build_families(spec, EnergyWindow(0.2, 0.8, 0.05), 9);
  for (const auto& fam : fams) {
    const PhasePoint p = fam.seed_at(spec, 0.4321);
    CHECK(std::abs(spec.value(p) - 0.4321) <= 1e-12);
    CHECK(p.x * fam.samples.front().component.centroid().x > 0.0);
  }
}

TEST_CASE("reversed component") {
  const auto c = trace_component(SymbolSpec::harmonic(), {1.0, 0.0}, 0.5);
  const auto r = reversed(c);
  CHECK(r.orientation == -c.orientation);
  CHECK(r.points.front().x == c.points.front().x);
  CHECK(r.points.front().xi == c.points.front().xi);
  CHECK(r.points[1].xi == c.points.back().xi);
}

TEST_CASE("distance_to_component") {
  const auto spec = SymbolSpec::harmonic();
  const auto c = trace_component(spec, {1.0, 0.0}, 0.5);
  const double angle = 0.123;
  CHECK(distance_to_component(spec, c, {std::cos(angle), std::sin(angle)}) <= 1e-9);
  CHECK(std::isinf(distance_to_component(spec, c, {0.0, 0.0})));
}

TEST_CASE("hausdorff distance between nested circles") {
  const auto spec = SymbolSpec::harmonic();
  const auto a = trace_component(spec, {1.0, 0.0}, 0.5);
  const auto b = trace_component(spec, {std::sqrt(1.2), 0.0}, 0.6);
  CHECK(hausdorff_distance(a, b) == doctest::Approx(std::sqrt(1.2) - 1.0).epsilon(1e-3));
}
