#include "ebk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ebk/error.hpp"
#include "ebk/parallel.hpp"

namespace ebk {

double TridiagonalOperator::lower_bound() const noexcept {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double r = (i > 0 ? std::abs(offdiag[i - 1]) : 0.0) +
                     (i + 1 < diag.size() ? std::abs(offdiag[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
  }
  return lo;
}

double TridiagonalOperator::upper_bound() const noexcept {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double r = (i > 0 ? std::abs(offdiag[i - 1]) : 0.0) +
                     (i + 1 < diag.size() ? std::abs(offdiag[i]) : 0.0);
    hi = std::max(hi, diag[i] + r);
  }
  return hi;
}

double TridiagonalOperator::norm_bound() const noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    const double r = (i > 0 ? std::abs(offdiag[i - 1]) : 0.0) +
                     (i + 1 < diag.size() ? std::abs(offdiag[i]) : 0.0);
    m = std::max(m, std::abs(diag[i]) + r);
  }
  return m;
}

TridiagonalOperator make_tridiagonal(std::vector<double> diag, std::vector<double> offdiag) {
  if (diag.empty() || offdiag.size() + 1 != diag.size()) {
    throw Error(ErrorCode::InvalidArgument, "offdiag must have exactly one entry less than diag");
  }
  TridiagonalOperator t;
  t.diag = std::move(diag);
  t.offdiag = std::move(offdiag);
  t.grid = {0.0, static_cast<int>(t.diag.size()), 1.0};
  return t;
}

TridiagonalOperator discretize(const PotentialSpec& potential, double hbar, double L, int N) {
  if (N < 3) throw Error(ErrorCode::InvalidArgument, "need N >= 3 grid points");
  if (!(L > 0.0) || !std::isfinite(L)) throw Error(ErrorCode::InvalidArgument, "L must be positive");
  if (!(hbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "hbar must be positive");
  TridiagonalOperator t;
  t.hbar = hbar;
  t.grid = {L, N, 2.0 * L / (N - 1)};
  const double kinetic = hbar * hbar / (t.grid.h * t.grid.h);
  t.diag.resize(static_cast<std::size_t>(N));
  for (std::size_t i = 0; i < t.diag.size(); ++i) {
    t.diag[i] = kinetic + potential_value(potential, t.grid.x(i));
  }
  t.offdiag.assign(static_cast<std::size_t>(N - 1), -0.5 * kinetic);
  return t;
}

TridiagonalOperator discretize(const PotentialSpec& potential, double hbar, double L, int N,
                               const EnergyWindow& window) {
  check_confinement(potential, window, hbar, L);
  return discretize(potential, hbar, L, N);
}

namespace {

// Distance beyond the turning point x_t (direction dir) at which the WKB
// exponent reaches `target`, or the exponent reached at `limit` if smaller.
struct DecayWalk {
  double x = 0.0;
  double exponent = 0.0;
};

DecayWalk walk_decay(const PotentialSpec& v, double level, double hbar, double x_t, double dir,
                     double target, double limit) {
  const double step = 1e-3 * std::max(1.0, std::abs(x_t));
  double x = x_t;
  double acc = 0.0;
  double f_prev = 0.0;
  while (acc < target) {
    double next = x + dir * step;
    if (dir * (next - limit) > 0.0) next = limit;
    const double f = std::sqrt(2.0 * std::max(potential_value(v, next) - level, 0.0)) / hbar;
    acc += 0.5 * (f + f_prev) * std::abs(next - x);
    f_prev = f;
    x = next;
    if (x == limit) break;
  }
  return {x, acc};
}

double phase_error_spacing(const PotentialSpec& v, const EnergyWindow& w, double hbar, double tol) {
  const double xi_max = std::sqrt(2.0 * (w.upper() - potential_minimum(v)));
  return hbar * std::sqrt(12.0 * tol) / xi_max;
}

}  // namespace

DomainChoice domain_auto(const PotentialSpec& potential, const EnergyWindow& window, double hbar,
                         const DomainOptions& opts) {
  if (!(hbar > 0.0)) throw Error(ErrorCode::InvalidArgument, "hbar must be positive");
  const double top = window.upper();
  // Propagates NonCompactWindow when the window itself is not confined.
  const auto [t_lo, t_hi] = sublevel_hull(potential, top);

  double lo = t_lo;
  double hi = t_hi;
  try {
    const auto [c_lo, c_hi] = sublevel_hull(potential, top + opts.tail_factor * hbar);
    lo = c_lo;
    hi = c_hi;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonCompactWindow) throw;
  }
  const double far = 1e3 * std::max({1.0, std::abs(t_lo), std::abs(t_hi)});
  const DecayWalk left = walk_decay(potential, top, hbar, t_lo, -1.0, opts.decay_exponent, -far);
  const DecayWalk right = walk_decay(potential, top, hbar, t_hi, 1.0, opts.decay_exponent, far);
  if (left.exponent < opts.decay_exponent || right.exponent < opts.decay_exponent) {
    throw Error(ErrorCode::NonCompactWindow, "wavefunction tails do not decay over the window");
  }
  lo = std::min(lo, left.x);
  hi = std::max(hi, right.x);

  DomainChoice d;
  d.L = opts.padding * std::max(std::abs(lo), std::abs(hi));
  const double h_max = phase_error_spacing(potential, window, hbar, opts.target_tol);
  d.N = static_cast<int>(std::ceil(2.0 * d.L / h_max)) + 1;
  return d;
}

double tail_decay_exponent(const PotentialSpec& potential, const EnergyWindow& window, double hbar,
                           double L) {
  const double top = window.upper();
  const auto [t_lo, t_hi] = sublevel_hull(potential, top);
  if (-L >= t_lo || L <= t_hi) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const DecayWalk left = walk_decay(potential, top, hbar, t_lo, -1.0, inf, -L);
  const DecayWalk right = walk_decay(potential, top, hbar, t_hi, 1.0, inf, L);
  return std::min(left.exponent, right.exponent);
}

void check_confinement(const PotentialSpec& potential, const EnergyWindow& window, double hbar,
                       double L, const DomainOptions& opts) {
  const double top = window.upper();
  if (potential_value(potential, -L) < top || potential_value(potential, L) < top) {
    std::ostringstream os;
    os << "V(+-" << L << ") is below e2 + margin = " << top;
    throw Error(ErrorCode::DomainTooSmall, os.str());
  }
  const double decay = tail_decay_exponent(potential, window, hbar, L);
  if (decay < opts.decay_exponent) {
    std::ostringstream os;
    os << "tail decay exponent " << decay << " at L = " << L << " is below "
       << opts.decay_exponent;
    throw Error(ErrorCode::DomainTooSmall, os.str());
  }
}

int count_below(const TridiagonalOperator& t, double lambda) noexcept {
  constexpr double tiny = 1e-300;
  int count = 0;
  double d = t.diag[0] - lambda;
  if (d == 0.0) d = tiny;
  if (d < 0.0) ++count;
  for (std::size_t i = 1; i < t.diag.size(); ++i) {
    const double b = t.offdiag[i - 1];
    d = (t.diag[i] - lambda) - b * b / d;
    if (d == 0.0) d = tiny;
    if (d < 0.0) ++count;
  }
  return count;
}

namespace {

double bisect_index(const TridiagonalOperator& t, int j, double lo, double hi, double tol) {
  while (true) {
    const double mid = 0.5 * (lo + hi);
    const double width_floor = 4.0 * std::numeric_limits<double>::epsilon() *
                               std::max({1.0, std::abs(lo), std::abs(hi)});
    if (hi - lo <= std::max(tol, width_floor) || mid <= lo || mid >= hi) return mid;
    if (count_below(t, mid) > j) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
}

}  // namespace

double eigenvalue_by_index(const TridiagonalOperator& t, int j, double tol) {
  if (j < 0 || static_cast<std::size_t>(j) >= t.size()) {
    throw Error(ErrorCode::InvalidArgument, "eigenvalue index out of range");
  }
  const double span = std::max(1.0, t.norm_bound());
  return bisect_index(t, j, t.lower_bound() - 1e-12 * span, t.upper_bound() + 1e-12 * span, tol);
}

double EigenResult::max_residual_bound() const noexcept {
  double m = 0.0;
  for (double r : residual_bounds) m = std::max(m, r);
  return m;
}

EigenResult eigenvalues_in(const TridiagonalOperator& t, double a, double b, double tol,
                           unsigned threads) {
  if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "interval must satisfy a < b");
  const double a_open = std::nextafter(a, std::numeric_limits<double>::infinity());
  const int first = count_below(t, a_open);
  const int last = count_below(t, b);
  EigenResult r;
  const auto n = static_cast<std::size_t>(std::max(0, last - first));
  r.eigenvalues.resize(n);
  r.indices.resize(n);
  r.residual_bounds.assign(n, tol);
  parallel_for(n, threads, [&](std::size_t i) {
    const int j = first + static_cast<int>(i);
    r.indices[i] = j;
    r.eigenvalues[i] = bisect_index(t, j, a, b, tol);
  });
  return r;
}

RichardsonResult richardson_eigenvalues(const PotentialSpec& potential, double hbar, double L,
                                        int N, double a, double b, unsigned threads) {
  const TridiagonalOperator coarse = discretize(potential, hbar, L, N);
  const TridiagonalOperator mid = discretize(potential, hbar, L, 2 * N - 1);
  const TridiagonalOperator fine = discretize(potential, hbar, L, 4 * N - 3);
  const EigenResult base = eigenvalues_in(mid, a, b, 1e-13, threads);

  const std::size_t n = base.indices.size();
  std::vector<double> e_coarse(n), e_fine(n);
  parallel_for(n, threads, [&](std::size_t i) {
    e_coarse[i] = eigenvalue_by_index(coarse, base.indices[i], 1e-14);
    e_fine[i] = eigenvalue_by_index(fine, base.indices[i], 1e-14);
  });

  RichardsonResult out;
  out.base_grid = coarse.grid;
  out.result.indices = base.indices;
  for (std::size_t i = 0; i < n; ++i) {
    const double r1 = (4.0 * base.eigenvalues[i] - e_coarse[i]) / 3.0;
    const double r2 = (4.0 * e_fine[i] - base.eigenvalues[i]) / 3.0;
    out.result.eigenvalues.push_back(r2);
    out.result.residual_bounds.push_back(std::abs(r2 - r1));
    out.gate_difference = std::max(out.gate_difference, std::abs(r2 - r1));
  }
  return out;
}

namespace {

struct TridiagonalLu {
  std::vector<double> dl, d, du, du2;
  std::vector<bool> swapped;
};

// Gaussian elimination with partial pivoting on T - shift I.
TridiagonalLu factor(const TridiagonalOperator& t, double shift) {
  const std::size_t n = t.size();
  TridiagonalLu f;
  f.dl = t.offdiag;
  f.du = t.offdiag;
  f.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.d[i] = t.diag[i] - shift;
  f.du2.assign(n >= 2 ? n - 2 : 0, 0.0);
  f.swapped.assign(n >= 1 ? n - 1 : 0, false);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(f.d[i]) >= std::abs(f.dl[i])) {
      if (f.d[i] != 0.0) {
        const double fact = f.dl[i] / f.d[i];
        f.dl[i] = fact;
        f.d[i + 1] -= fact * f.du[i];
      }
    } else {
      const double fact = f.d[i] / f.dl[i];
      f.d[i] = f.dl[i];
      f.dl[i] = fact;
      const double temp = f.du[i];
      f.du[i] = f.d[i + 1];
      f.d[i + 1] = temp - fact * f.d[i + 1];
      if (i + 2 < n) {
        f.du2[i] = f.du[i + 1];
        f.du[i + 1] = -fact * f.du[i + 1];
      }
      f.swapped[i] = true;
    }
  }
  const double tiny = std::numeric_limits<double>::epsilon() * std::max(1.0, t.norm_bound());
  for (double& p : f.d) {
    if (std::abs(p) < tiny) p = std::copysign(tiny, p == 0.0 ? 1.0 : p);
  }
  return f;
}

void solve(const TridiagonalLu& f, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!f.swapped[i]) {
      b[i + 1] -= f.dl[i] * b[i];
    } else {
      const double temp = b[i];
      b[i] = b[i + 1];
      b[i + 1] = temp - f.dl[i] * b[i];
    }
  }
  b[n - 1] /= f.d[n - 1];
  if (n >= 2) b[n - 2] = (b[n - 2] - f.du[n - 2] * b[n - 1]) / f.d[n - 2];
  for (std::size_t k = n; k-- > 2;) {
    const std::size_t i = k - 2;
    b[i] = (b[i] - f.du[i] * b[i + 1] - f.du2[i] * b[i + 2]) / f.d[i];
  }
}

double normalize(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double norm = std::sqrt(s);
  if (norm > 0.0 && std::isfinite(norm)) {
    for (double& x : v) x /= norm;
  }
  return norm;
}

double residual(const TridiagonalOperator& t, const std::vector<double>& v, double lambda) {
  const std::size_t n = v.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = (t.diag[i] - lambda) * v[i];
    if (i > 0) r += t.offdiag[i - 1] * v[i - 1];
    if (i + 1 < n) r += t.offdiag[i] * v[i + 1];
    s += r * r;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<double> eigenvector(const TridiagonalOperator& t, double lambda,
                                unsigned long long seed) {
  const std::size_t n = t.size();
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  normalize(v);

  const TridiagonalLu f = factor(t, lambda);
  const double target = 1e-8 * std::max(1.0, t.norm_bound());
  constexpr int min_iterations = 3;
  constexpr int max_iterations = 10;
  for (int it = 1; it <= max_iterations; ++it) {
    solve(f, v);
    const double norm = normalize(v);
    if (!(norm > 0.0) || !std::isfinite(norm)) break;
    if (it >= min_iterations && residual(t, v, lambda) <= target) {
      const auto big = std::max_element(v.begin(), v.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
      if (*big < 0.0) {
        for (double& x : v) x = -x;
      }
      return v;
    }
  }
  std::ostringstream os;
  os << "inverse iteration at lambda = " << lambda << " did not reach residual " << target;
  throw Error(ErrorCode::InverseIterationFailed, os.str());
}

int node_count(std::span<const double> v) {
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  if (vmax == 0.0) throw Error(ErrorCode::InvalidArgument, "node count of the zero vector");
  const double floor = 1e-12 * vmax;
  int nodes = 0;
  int last_sign = 0;
  for (double x : v) {
    if (std::abs(x) < floor) continue;
    const int s = x > 0.0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++nodes;
    last_sign = s;
  }
  return nodes;
}

double allowed_region_mass(std::span<const double> v, const Grid& grid,
                           const PotentialSpec& potential, double energy, double delta) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (potential_value(potential, grid.x(i)) > energy + delta) m += v[i] * v[i];
  }
  return m;
}

double mass_between(std::span<const double> v, const Grid& grid, double x_lo, double x_hi) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = grid.x(i);
    if (x >= x_lo && x <= x_hi) m += v[i] * v[i];
  }
  return m;
}

int ball_multiplicity(const TridiagonalOperator& t, double center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  const double hi = std::nextafter(center + radius, std::numeric_limits<double>::infinity());
  return count_below(t, hi) - count_below(t, center - radius);
}

}  // namespace ebk
