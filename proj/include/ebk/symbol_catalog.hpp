#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ebk {

struct PhasePoint {
  double x = 0.0;
  double xi = 0.0;
};

struct Gradient {
  double dx = 0.0;   // dH/dx
  double dxi = 0.0;  // dH/dxi
};

struct Hessian {
  double xx = 0.0;
  double xxi = 0.0;
  double xixi = 0.0;
};

// V(x) = sum_i coeffs[i] x^i
struct Polynomial {
  std::vector<double> coeffs;
};

// V(x) = (x^2 - a^2)^2
struct DoubleWell {
  double a = 1.0;
};

// V(x) = depth * (1 - exp(-width x))^2
struct Morse {
  double depth = 1.0;
  double width = 1.0;
};

using PotentialSpec = std::variant<Polynomial, DoubleWell, Morse>;

double potential_value(const PotentialSpec& v, double x) noexcept;
double potential_derivative(const PotentialSpec& v, double x) noexcept;
double potential_second_derivative(const PotentialSpec& v, double x) noexcept;

// Global minimum of V (finite for every confining catalog entry).
double potential_minimum(const PotentialSpec& v);

// Convex hull [lo, hi] of the sublevel set {V <= level}.
// Throws NonCompactWindow when the sublevel set is unbounded and
// EmptyLevelSet when it is empty.
std::pair<double, double> sublevel_hull(const PotentialSpec& v, double level);

// Non-Schrodinger symbols, all with the only critical value 0 at the origin.
enum class ClosedFormId {
  // H = omega r^2 / 2 + kappa r^4 / 4, r^2 = x^2 + xi^2
  KerrOscillator,
  // H = xi^4 / 4 + x^2 / 2
  QuarticKinetic,
};

struct ClosedForm {
  ClosedFormId id = ClosedFormId::KerrOscillator;
  std::vector<double> params;
};

// Hamiltonian symbol H(x, xi). Immutable after construction.
class SymbolSpec {
 public:
  static SymbolSpec schrodinger(PotentialSpec potential, std::string description = {});
  static SymbolSpec closed_form(ClosedFormId id, std::vector<double> params,
                                std::string description = {});

  static SymbolSpec harmonic(double omega = 1.0);
  static SymbolSpec quartic();
  static SymbolSpec polynomial(std::vector<double> coeffs);
  static SymbolSpec double_well(double a);
  static SymbolSpec morse(double depth, double width);

  bool is_schrodinger() const noexcept;
  // nullptr for closed-form symbols
  const PotentialSpec* potential() const noexcept;
  const ClosedForm* closed_form_data() const noexcept;
  const std::string& description() const noexcept { return description_; }

  double value(PhasePoint p) const noexcept;
  Gradient gradient(PhasePoint p) const noexcept;
  Hessian hessian(PhasePoint p) const noexcept;

 private:
  SymbolSpec(std::variant<PotentialSpec, ClosedForm> kind, std::string description);

  std::variant<PotentialSpec, ClosedForm> kind_;
  std::string description_;
};

// Checked evaluation; non-finite results raise InvalidSymbol.
double eval_symbol(const SymbolSpec& spec, double x, double xi);
Gradient eval_gradient(const SymbolSpec& spec, double x, double xi);

struct EnergyWindow {
  double e1 = 0.0;
  double e2 = 0.0;
  double margin = 0.0;

  EnergyWindow() = default;
  EnergyWindow(double lo, double hi, double eps);

  double lower() const noexcept { return e1 - margin; }
  double upper() const noexcept { return e2 + margin; }
  bool contains(double e) const noexcept { return e >= e1 && e <= e2; }
};

struct Box {
  double x_min = 0.0;
  double x_max = 0.0;
  double xi_min = 0.0;
  double xi_max = 0.0;

  bool contains(PhasePoint p) const noexcept {
    return p.x >= x_min && p.x <= x_max && p.xi >= xi_min && p.xi <= xi_max;
  }
  // Same center, every side multiplied by factor.
  Box scaled(double factor) const noexcept;
};

struct RegularityReport {
  bool regular = true;
  // Critical values inside [e1 - margin, e2 + margin].
  std::vector<double> critical_values_found;
  // Every critical point located in the box, offending or not.
  std::vector<PhasePoint> critical_points;
};

RegularityReport regularity_report(const SymbolSpec& spec, const EnergyWindow& window,
                                   const Box& box);

// Rectangle strictly containing H^{-1}([e1 - margin, e2 + margin]).
Box compact_preimage_box(const SymbolSpec& spec, const EnergyWindow& window);

}  // namespace ebk
