#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace efp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Result of a grid certification check (monotone hazard rate, convexity).
struct Certificate {
  bool pass = true;
  double worst_violation = 0.0;  // largest slack beyond tolerance, 0 when clean
  double where = 0.0;            // abscissa of the worst violation
};

enum class DemandFamily { Uniform, Linear, Exponential, PowerLaw, Tabulated };

/// Inverse demand curve of one buyer type: value(x) is the valuation held by
/// the marginal buyer once a mass x of the population has been served.
/// Non-increasing on [0, mass], differentiable between knots, and expected to
/// have a non-decreasing hazard |value'|/value (certified by check_mhr).
class DemandFn {
 public:
  static DemandFn uniform(double level, double mass);
  static DemandFn linear(double peak, double slope, double mass);
  static DemandFn exponential(double peak, double rate, double mass);
  static DemandFn power_law(double peak, double gamma, double mass);
  static DemandFn tabulated(std::vector<double> x, std::vector<double> v);

  DemandFamily family() const { return family_; }
  double peak() const { return peak_; }     // value(0)
  double mass() const { return mass_; }     // total population of the type

  double value(double x) const;
  double derivative(double x) const;
  /// |value'(x)| / value(x); throws where value(x) == 0.
  double hazard(double x) const;

  /// sup{ x in [0, mass] : value(x) >= p }. Returns 0 above the peak and the
  /// full mass at or below value(mass). Plateaus resolve to the supremum, so
  /// indifferent buyers purchase.
  double inverse(double p) const;

  /// Integral of value over [a, b], closed form per family.
  double integral(double a, double b) const;

  const std::vector<double>& knots_x() const { return tab_x_; }
  const std::vector<double>& knots_v() const { return tab_v_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }

 private:
  DemandFamily family_ = DemandFamily::Uniform;
  double a_ = 0.0;    // family parameter (slope, rate, gamma)
  double b_ = 0.0;    // spare parameter
  double peak_ = 0.0;
  double mass_ = 0.0;
  std::vector<double> tab_x_, tab_v_;  // Tabulated only
};

/// Certifies a non-decreasing hazard on a uniform grid over (0, mass).
/// Grid points where the value is zero, and exact interpolation knots, are
/// skipped: the hazard is undefined there.
Certificate check_mhr(const DemandFn& fn, int grid_size = 1024, double tol = 1e-7);

enum class CostFamily { Zero, Linear, Quadratic, Power, Capacitated };

/// Production cost of one item. total(y) is convex with total(0) = 0 and
/// marginal(y) its non-decreasing derivative. Capacitated costs stay finite
/// on [0, capacity] via a smooth marginal ramp over the final `ramp` fraction
/// of capacity, and are infinite beyond it.
class CostFn {
 public:
  static CostFn zero();
  static CostFn linear(double marginal);
  static CostFn quadratic(double a, double b = 0.0);  // a*y^2 + b*y
  static CostFn power(double scale, double exponent); // scale*y^p, p >= 1
  static CostFn capacitated(double base_marginal, double capacity,
                            double ramp = 1e-3, double barrier = 1e3);

  CostFamily family() const { return family_; }
  double capacity() const { return capacity_; }  // +inf when unlimited

  double total(double y) const;
  double marginal(double y) const;

  /// sup{ y : marginal(y) <= m }, clamped to min(cap, capacity). Constant
  /// stretches of the marginal resolve to the plateau's upper end, so
  /// constant-marginal families return the cap. Requires m >= marginal(0).
  double marginal_inverse(double m, double cap = kInf) const;

  double param_a() const { return a_; }
  double param_b() const { return b_; }
  double ramp() const { return ramp_; }
  double barrier() const { return barrier_; }

 private:
  CostFamily family_ = CostFamily::Zero;
  double a_ = 0.0;
  double b_ = 0.0;
  double capacity_ = kInf;
  double ramp_ = 0.0;
  double barrier_ = 0.0;
};

/// Grid certification that the marginal is convex with marginal(0) == 0,
/// the shape required by the price-ladder algorithm.
Certificate check_doubly_convex(const CostFn& fn, int grid_size = 1024,
                                double tol = 1e-7);

/// Grid certification of plain convexity: marginal non-decreasing.
Certificate check_convex(const CostFn& fn, int grid_size = 1024,
                         double tol = 1e-7);

}  // namespace efp
