#include "efp/functions.hpp"

#include <algorithm>
#include <cmath>

namespace efp {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

DemandFn DemandFn::uniform(double level, double mass) {
  require(level > 0 && std::isfinite(level), "uniform demand: level must be positive");
  require(mass > 0 && std::isfinite(mass), "uniform demand: mass must be positive");
  DemandFn fn;
  fn.family_ = DemandFamily::Uniform;
  fn.peak_ = level;
  fn.mass_ = mass;
  return fn;
}

DemandFn DemandFn::linear(double peak, double slope, double mass) {
  require(peak > 0, "linear demand: peak must be positive");
  require(slope > 0, "linear demand: slope must be positive");
  require(mass > 0 && peak - slope * mass >= -1e-12,
          "linear demand: value must stay nonnegative on [0, mass]");
  DemandFn fn;
  fn.family_ = DemandFamily::Linear;
  fn.a_ = slope;
  fn.peak_ = peak;
  fn.mass_ = mass;
  return fn;
}

DemandFn DemandFn::exponential(double peak, double rate, double mass) {
  require(peak > 0, "exponential demand: peak must be positive");
  require(rate > 0, "exponential demand: rate must be positive");
  require(mass > 0, "exponential demand: mass must be positive");
  DemandFn fn;
  fn.family_ = DemandFamily::Exponential;
  fn.a_ = rate;
  fn.peak_ = peak;
  fn.mass_ = mass;
  return fn;
}

DemandFn DemandFn::power_law(double peak, double gamma, double mass) {
  require(peak > 0, "power-law demand: peak must be positive");
  require(gamma >= 1.0, "power-law demand: gamma must be >= 1");
  require(mass > 0, "power-law demand: mass must be positive");
  DemandFn fn;
  fn.family_ = DemandFamily::PowerLaw;
  fn.a_ = gamma;
  fn.peak_ = peak;
  fn.mass_ = mass;
  return fn;
}

DemandFn DemandFn::tabulated(std::vector<double> x, std::vector<double> v) {
  require(x.size() == v.size() && x.size() >= 2, "tabulated demand: need >= 2 knots");
  require(x.front() == 0.0, "tabulated demand: first knot must be at x = 0");
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    require(x[i + 1] > x[i], "tabulated demand: knots must be strictly increasing");
    require(v[i + 1] <= v[i] + 1e-15, "tabulated demand: values must be non-increasing");
  }
  require(v.front() > 0, "tabulated demand: peak must be positive");
  for (double vi : v) require(vi >= 0, "tabulated demand: values must be nonnegative");
  DemandFn fn;
  fn.family_ = DemandFamily::Tabulated;
  fn.peak_ = v.front();
  fn.mass_ = x.back();
  fn.tab_x_ = std::move(x);
  fn.tab_v_ = std::move(v);
  return fn;
}

double DemandFn::value(double x) const {
  if (x < -1e-12 || x > mass_ * (1 + 1e-12))
    throw std::domain_error("demand value: x outside [0, mass]");
  x = std::clamp(x, 0.0, mass_);
  switch (family_) {
    case DemandFamily::Uniform:
      return peak_;
    case DemandFamily::Linear:
      return std::max(0.0, peak_ - a_ * x);
    case DemandFamily::Exponential:
      return peak_ * std::exp(-a_ * x);
    case DemandFamily::PowerLaw:
      return peak_ * std::pow(std::max(0.0, 1.0 - x / mass_), a_);
    case DemandFamily::Tabulated: {
      auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
      size_t hi = std::min<size_t>(tab_x_.size() - 1,
                                   static_cast<size_t>(it - tab_x_.begin()));
      size_t lo = hi - 1;
      double w = (x - tab_x_[lo]) / (tab_x_[hi] - tab_x_[lo]);
      return tab_v_[lo] + w * (tab_v_[hi] - tab_v_[lo]);
    }
  }
  return 0.0;
}

double DemandFn::derivative(double x) const {
  if (x < -1e-12 || x > mass_ * (1 + 1e-12))
    throw std::domain_error("demand derivative: x outside [0, mass]");
  x = std::clamp(x, 0.0, mass_);
  switch (family_) {
    case DemandFamily::Uniform:
      return 0.0;
    case DemandFamily::Linear:
      return -a_;
    case DemandFamily::Exponential:
      return -a_ * peak_ * std::exp(-a_ * x);
    case DemandFamily::PowerLaw: {
      if (x >= mass_) return a_ > 1 ? 0.0 : -peak_ * a_ / mass_;
      return -peak_ * (a_ / mass_) * std::pow(1.0 - x / mass_, a_ - 1.0);
    }
    case DemandFamily::Tabulated: {
      auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
      size_t hi = std::min<size_t>(tab_x_.size() - 1,
                                   static_cast<size_t>(it - tab_x_.begin()));
      size_t lo = hi - 1;
      return (tab_v_[hi] - tab_v_[lo]) / (tab_x_[hi] - tab_x_[lo]);
    }
  }
  return 0.0;
}

double DemandFn::hazard(double x) const {
  double v = value(x);
  if (v <= 0.0) throw std::domain_error("hazard undefined where demand value is zero");
  return std::abs(derivative(x)) / v;
}

double DemandFn::inverse(double p) const {
  if (!(p >= 0)) throw std::domain_error("demand inverse: price must be >= 0");
  if (p > peak_) return 0.0;
  double at_mass = value(mass_);
  if (p <= at_mass) return mass_;
  switch (family_) {
    case DemandFamily::Uniform:
      return mass_;  // p <= peak on a plateau: supremum
    case DemandFamily::Linear:
      return std::clamp((peak_ - p) / a_, 0.0, mass_);
    case DemandFamily::Exponential:
      return std::clamp(std::log(peak_ / p) / a_, 0.0, mass_);
    case DemandFamily::PowerLaw:
      return std::clamp(mass_ * (1.0 - std::pow(p / peak_, 1.0 / a_)), 0.0, mass_);
    case DemandFamily::Tabulated: {
      // walk the segments; supremum of {x : value >= p}
      for (size_t s = 0; s + 1 < tab_x_.size(); ++s) {
        double v0 = tab_v_[s], v1 = tab_v_[s + 1];
        if (p > v1 && p <= v0) {
          if (v0 == v1) continue;
          double w = (v0 - p) / (v0 - v1);
          return tab_x_[s] + w * (tab_x_[s + 1] - tab_x_[s]);
        }
        if (p == v1) {
          // extend through any flat stretch at exactly p
          size_t e = s + 1;
          while (e + 1 < tab_x_.size() && tab_v_[e + 1] == p) ++e;
          return tab_x_[e];
        }
      }
      return 0.0;
    }
  }
  return 0.0;
}

double DemandFn::integral(double a, double b) const {
  if (a > b) throw std::invalid_argument("demand integral: inverted bounds");
  if (a < -1e-12 || b > mass_ * (1 + 1e-12))
    throw std::domain_error("demand integral: bounds outside [0, mass]");
  a = std::clamp(a, 0.0, mass_);
  b = std::clamp(b, 0.0, mass_);
  if (a == b) return 0.0;
  switch (family_) {
    case DemandFamily::Uniform:
      return peak_ * (b - a);
    case DemandFamily::Linear:
      return peak_ * (b - a) - 0.5 * a_ * (b * b - a * a);
    case DemandFamily::Exponential:
      return (peak_ / a_) * (std::exp(-a_ * a) - std::exp(-a_ * b));
    case DemandFamily::PowerLaw: {
      double c = peak_ * mass_ / (a_ + 1.0);
      auto anti = [&](double x) {
        return -c * std::pow(1.0 - x / mass_, a_ + 1.0);
      };
      return anti(b) - anti(a);
    }
    case DemandFamily::Tabulated: {
      // piecewise linear: trapezoid per overlapped segment is exact
      double acc = 0.0;
      for (size_t s = 0; s + 1 < tab_x_.size(); ++s) {
        double lo = std::max(a, tab_x_[s]), hi = std::min(b, tab_x_[s + 1]);
        if (hi <= lo) continue;
        double x0 = tab_x_[s], x1 = tab_x_[s + 1];
        double v0 = tab_v_[s], v1 = tab_v_[s + 1];
        auto val = [&](double x) { return v0 + (x - x0) / (x1 - x0) * (v1 - v0); };
        acc += 0.5 * (val(lo) + val(hi)) * (hi - lo);
      }
      return acc;
    }
  }
  return 0.0;
}

Certificate check_mhr(const DemandFn& fn, int grid_size, double tol) {
  if (grid_size < 2) throw std::invalid_argument("check_mhr: grid_size must be >= 2");
  Certificate cert;
  double T = fn.mass();
  // compare hazards at consecutive valid grid points strictly inside (0, T)
  bool have_prev = false;
  double prev = 0.0;
  for (int g = 1; g < grid_size; ++g) {
    double x = T * g / grid_size;
    if (fn.family() == DemandFamily::Tabulated) {
      // skip exact knots, where the one-sided derivatives disagree
      const auto& kx = fn.knots_x();
      bool at_knot = false;
      for (double k : kx)
        if (std::abs(x - k) <= 1e-12 * std::max(1.0, T)) at_knot = true;
      if (at_knot) continue;
    }
    double v = fn.value(x);
    if (v <= 0.0) continue;
    double h = fn.hazard(x);
    if (have_prev && h < prev - tol) {
      double viol = prev - h;
      if (viol > cert.worst_violation) {
        cert.worst_violation = viol;
        cert.where = x;
      }
      cert.pass = false;
    }
    prev = h;
    have_prev = true;
  }
  return cert;
}

CostFn CostFn::zero() { return CostFn{}; }

CostFn CostFn::linear(double marginal) {
  require(marginal >= 0, "linear cost: marginal must be >= 0");
  CostFn fn;
  fn.family_ = CostFamily::Linear;
  fn.a_ = marginal;
  return fn;
}

CostFn CostFn::quadratic(double a, double b) {
  require(a > 0, "quadratic cost: leading coefficient must be positive");
  require(b >= 0, "quadratic cost: linear coefficient must be >= 0");
  CostFn fn;
  fn.family_ = CostFamily::Quadratic;
  fn.a_ = a;
  fn.b_ = b;
  return fn;
}

CostFn CostFn::power(double scale, double exponent) {
  require(scale > 0, "power cost: scale must be positive");
  require(exponent >= 1.0, "power cost: exponent must be >= 1");
  CostFn fn;
  fn.family_ = CostFamily::Power;
  fn.a_ = scale;
  fn.b_ = exponent;
  return fn;
}

CostFn CostFn::capacitated(double base_marginal, double capacity, double ramp,
                           double barrier) {
  require(base_marginal >= 0, "capacitated cost: base marginal must be >= 0");
  require(capacity > 0 && std::isfinite(capacity),
          "capacitated cost: capacity must be positive and finite");
  require(ramp > 0 && ramp < 1, "capacitated cost: ramp fraction must be in (0,1)");
  require(barrier > 0, "capacitated cost: barrier must be positive");
  CostFn fn;
  fn.family_ = CostFamily::Capacitated;
  fn.a_ = base_marginal;
  fn.capacity_ = capacity;
  fn.ramp_ = ramp;
  fn.barrier_ = barrier;
  return fn;
}

double CostFn::total(double y) const {
  if (y < -1e-12) throw std::domain_error("cost total: y must be >= 0");
  y = std::max(0.0, y);
  if (y > capacity_ * (1 + 1e-12)) return kInf;
  switch (family_) {
    case CostFamily::Zero:
      return 0.0;
    case CostFamily::Linear:
      return a_ * y;
    case CostFamily::Quadratic:
      return a_ * y * y + b_ * y;
    case CostFamily::Power:
      return a_ * std::pow(y, b_);
    case CostFamily::Capacitated: {
      double knee = capacity_ * (1.0 - ramp_);
      double base = a_ * y;
      if (y <= knee) return base;
      double w = capacity_ * ramp_;
      double s = (y - knee) / w;  // 0..1 inside the ramp
      return base + barrier_ * w * s * s * s / 3.0;
    }
  }
  return 0.0;
}

double CostFn::marginal(double y) const {
  if (y < -1e-12) throw std::domain_error("cost marginal: y must be >= 0");
  y = std::max(0.0, y);
  if (y > capacity_ * (1 + 1e-12)) return kInf;
  switch (family_) {
    case CostFamily::Zero:
      return 0.0;
    case CostFamily::Linear:
      return a_;
    case CostFamily::Quadratic:
      return 2.0 * a_ * y + b_;
    case CostFamily::Power:
      return b_ == 1.0 ? a_ : a_ * b_ * std::pow(y, b_ - 1.0);
    case CostFamily::Capacitated: {
      double knee = capacity_ * (1.0 - ramp_);
      if (y <= knee) return a_;
      double s = (y - knee) / (capacity_ * ramp_);
      return a_ + barrier_ * s * s;
    }
  }
  return 0.0;
}

double CostFn::marginal_inverse(double m, double cap) const {
  double m0 = marginal(0.0);
  if (m < m0 - 1e-12) throw std::domain_error("marginal_inverse: m below marginal(0)");
  double bound = std::min(cap, capacity_);
  switch (family_) {
    case CostFamily::Zero:
    case CostFamily::Linear:
      return bound;  // plateau: take the declared maximum
    case CostFamily::Quadratic:
      return std::min(bound, std::max(0.0, (m - b_) / (2.0 * a_)));
    case CostFamily::Power: {
      if (b_ == 1.0) return bound;
      double y = std::pow(std::max(0.0, m / (a_ * b_)), 1.0 / (b_ - 1.0));
      return std::min(bound, y);
    }
    case CostFamily::Capacitated: {
      double knee = capacity_ * (1.0 - ramp_);
      if (m <= a_) return std::min(bound, knee);
      double s = std::sqrt((m - a_) / barrier_);
      return std::min(bound, knee + s * capacity_ * ramp_);
    }
  }
  return bound;
}

namespace {

Certificate certify_marginal(const CostFn& fn, int grid_size, double tol,
                             bool require_convex_marginal) {
  Certificate cert;
  double hi = std::isfinite(fn.capacity()) ? fn.capacity() : 8.0;
  std::vector<double> c(grid_size + 1);
  for (int g = 0; g <= grid_size; ++g) c[g] = fn.marginal(hi * g / grid_size);
  if (require_convex_marginal && std::abs(c[0]) > tol) {
    cert.pass = false;
    cert.worst_violation = std::abs(c[0]);
    cert.where = 0.0;
    return cert;
  }
  for (int g = 0; g + 1 <= grid_size; ++g) {
    double viol = c[g] - c[g + 1];
    if (viol > tol && viol > cert.worst_violation) {
      cert.pass = false;
      cert.worst_violation = viol;
      cert.where = hi * g / grid_size;
    }
  }
  if (require_convex_marginal) {
    for (int g = 1; g < grid_size; ++g) {
      double mid_excess = c[g] - 0.5 * (c[g - 1] + c[g + 1]);
      if (mid_excess > tol && mid_excess > cert.worst_violation) {
        cert.pass = false;
        cert.worst_violation = mid_excess;
        cert.where = hi * g / grid_size;
      }
    }
  }
  return cert;
}

}  // namespace

Certificate check_doubly_convex(const CostFn& fn, int grid_size, double tol) {
  if (grid_size < 2)
    throw std::invalid_argument("check_doubly_convex: grid_size must be >= 2");
  return certify_marginal(fn, grid_size, tol, true);
}

Certificate check_convex(const CostFn& fn, int grid_size, double tol) {
  if (grid_size < 2) throw std::invalid_argument("check_convex: grid_size must be >= 2");
  return certify_marginal(fn, grid_size, tol, false);
}

}  // namespace efp
