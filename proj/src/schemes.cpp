#include "shaken/schemes.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "shaken/errors.hpp"

namespace shaken {

using std::numbers::pi;

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::polynomial: return "polynomial";
    case SchemeKind::piecewise: return "piecewise";
    case SchemeKind::custom: return "custom";
  }
  return "custom";
}

SchemeKind scheme_from_string(std::string_view name) {
  if (name == "polynomial") return SchemeKind::polynomial;
  if (name == "piecewise") return SchemeKind::piecewise;
  if (name == "custom") return SchemeKind::custom;
  throw InvalidParameter("unknown scheme '" + std::string(name) + "'");
}

PulseSchedule::PulseSchedule(SchemeKind kind, double total_time, JetFn jet)
    : kind_(kind), total_time_(total_time), jet_(std::move(jet)) {
  if (!(total_time > 0.0)) throw InvalidParameter("schedule total time must be positive");
}

CouplingJet PulseSchedule::jet(double t) const {
  if (t < 0.0 || t > total_time_) return {};
  return jet_(t);
}

Couplings PulseSchedule::at(double t) const {
  const CouplingJet j = jet(t);
  return {j.omega_x(0), j.omega_rho(0)};
}

// ---------------------------------------------------------------------------

namespace {

// Polynomial in s and its derivatives, coefficients in increasing degree.
double poly_derivative(const Eigen::VectorXd& c, int order, double s) {
  double acc = 0.0;
  for (Eigen::Index n = c.size() - 1; n >= order; --n) {
    double factor = 1.0;
    for (int k = 0; k < order; ++k) factor *= static_cast<double>(n - k);
    acc = acc * s + c(n) * factor;
  }
  return acc;
}

// 70 s^9 - 315 s^8 + 540 s^7 - 420 s^6 + 126 s^5, which satisfies p(s) + p(1 - s) = 1.
Eigen::VectorXd smoothstep9() {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(10);
  c(5) = 126.0;
  c(6) = -420.0;
  c(7) = 540.0;
  c(8) = -315.0;
  c(9) = 70.0;
  return c;
}

// s^5 (1 - s)^5
Eigen::VectorXd bump10() {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(11);
  c(5) = 1.0;
  c(6) = -5.0;
  c(7) = 10.0;
  c(8) = -10.0;
  c(9) = 5.0;
  c(10) = -1.0;
  return c;
}

// 6 u^5 - 15 u^4 + 10 u^3 with its first three derivatives.
Eigen::Vector4d smoothstep5(double u) {
  return {u * u * u * (10.0 + u * (-15.0 + 6.0 * u)),
          30.0 * u * u * (1.0 - u) * (1.0 - u),
          60.0 * u * (1.0 - u) * (1.0 - 2.0 * u),
          60.0 * (1.0 - 6.0 * u + 6.0 * u * u)};
}

}  // namespace

PolynomialTrajectory::PolynomialTrajectory(double w, double total_time, double C1, double C2)
    : InvariantTrajectory(InvariantConstants{C1, C2, +1}, total_time), w_(w) {
  a1_coeffs_ = 1024.0 * w * bump10();
  a2_coeffs_ = constants().Q() * smoothstep9();
  a2_coeffs_(0) += 0.5 * (C1 - constants().Q());
}

// Both shapes are symmetric about s = 1/2 (alpha_1 even, alpha_2 - C1/2 odd),
// so derivatives for s > 1/2 are taken from the mirror point where the
// expanded coefficients do not cancel.
double PolynomialTrajectory::alpha_s_derivative(int which, int order, double s) const {
  const Eigen::VectorXd& c = which == 1 ? a1_coeffs_ : a2_coeffs_;
  if (s <= 0.5) return poly_derivative(c, order, s);
  const double parity = order % 2 == 0 ? 1.0 : -1.0;
  if (which == 1) return parity * poly_derivative(c, order, 1.0 - s);
  if (order == 0) return constants().C1 - poly_derivative(c, 0, 1.0 - s);
  return -parity * poly_derivative(c, order, 1.0 - s);
}

AlphaJet PolynomialTrajectory::alphas(double t) const {
  const double T = total_time();
  const double s = t / T;
  AlphaJet j;
  double scale = 1.0;
  for (int k = 0; k < 4; ++k) {
    j.a1(k) = alpha_s_derivative(1, k, s) * scale;
    j.a2(k) = alpha_s_derivative(2, k, s) * scale;
    scale /= T;
  }
  // Factored forms for the values and first derivatives avoid the
  // cancellation of the expanded coefficients near either endpoint.
  const double Q = constants().Q();
  const double u = 1.0 - s;
  const double s4u4 = std::pow(s * u, 4);
  j.a1(0) = 1024.0 * w_ * s4u4 * s * u;
  j.a1(1) = 5120.0 * w_ * s4u4 * (u - s) / T;
  j.a2(1) = 630.0 * Q * s4u4 / T;
  static const Eigen::VectorXd step = smoothstep9();
  j.lower_gap = Q * poly_derivative(step, 0, s);
  j.upper_gap = Q * poly_derivative(step, 0, u);
  j.a2(0) = s <= 0.5 ? 0.5 * (constants().C1 - Q) + j.lower_gap
                     : 0.5 * (constants().C1 + Q) - j.upper_gap;
  return j;
}

double PolynomialTrajectory::radicand(double t) const {
  const AlphaJet j = alphas(t);
  return j.lower_gap * j.upper_gap - j.a1(0) * j.a1(0);
}

// Near either end Omega ~ s^{3/2}, so both couplings and their first
// derivatives vanish; the second derivative diverges like s^{-1/2} and is
// reported as zero at the endpoint itself.
std::optional<CouplingJet> PolynomialTrajectory::coupling_limit(double t) const {
  const double T = total_time();
  if (t <= 0.0 || t >= T) return CouplingJet{};
  return std::nullopt;
}

// ---------------------------------------------------------------------------

CouplingJet piecewise_couplings(double t, double T, double ts) {
  CouplingJet c;
  if (t < 0.0 || t > T) return c;
  if (t <= ts) {
    const double k = 30.0 * pi / std::pow(ts, 5);
    const double d = t - ts;
    c.omega_x << k * t * t * d * d, k * (2.0 * t * d * d + 2.0 * t * t * d),
        k * (2.0 * d * d + 8.0 * t * d + 2.0 * t * t);
  }
  if (t >= ts) {
    const double k = 15.0 * pi / std::pow(T - ts, 5);
    const double a = t - T;
    const double b = t - ts;
    c.omega_rho << k * a * a * b * b, k * (2.0 * a * b * b + 2.0 * a * a * b),
        k * (2.0 * b * b + 8.0 * a * b + 2.0 * a * a);
  }
  return c;
}

PiecewiseTrajectory::PiecewiseTrajectory(double total_time, double switch_time, double epsilon,
                                         double C1, double C2)
    : InvariantTrajectory(InvariantConstants{C1, C2, -1}, total_time),
      switch_time_(switch_time),
      epsilon_(epsilon) {
  if (!(switch_time > 0.0 && switch_time < total_time)) {
    throw InvalidParameter("switch time must lie strictly inside (0, T)");
  }
  if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  const double Q = constants().Q();
  r_eps_ = std::sqrt(Q * Q - 4.0 * epsilon * epsilon);
}

AlphaJet PiecewiseTrajectory::alphas(double t) const {
  const double T = total_time();
  const double ts = switch_time_;
  const double C1 = constants().C1;
  const double Q = constants().Q();
  const double eps = epsilon_;
  const double base_gap = 2.0 * eps * eps / (Q + r_eps_);  // (Q - r_eps)/2
  AlphaJet j;
  if (t < ts) {
    // theta = integral of Omega_x, so theta' = Omega_x etc.
    const Eigen::Vector4d th = smoothstep5(std::max(t, 0.0) / ts);
    const double theta = pi * th(0);
    const double d1 = pi * th(1) / ts;
    const double d2 = pi * th(2) / (ts * ts);
    const double d3 = pi * th(3) / (ts * ts * ts);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double h = 0.5 * r_eps_;
    j.a1 << eps, 0.0, 0.0, 0.0;
    j.a2 << 0.5 * (C1 - r_eps_ * c), h * s * d1, h * (c * d1 * d1 + s * d2),
        h * (-s * d1 * d1 * d1 + 3.0 * c * d1 * d2 + s * d3);
    const double half_s = std::sin(0.5 * theta);
    const double half_c = std::cos(0.5 * theta);
    j.lower_gap = base_gap + r_eps_ * half_s * half_s;
    j.upper_gap = base_gap + r_eps_ * half_c * half_c;
  } else {
    const Eigen::Vector4d ph = smoothstep5(std::min((t - ts) / (T - ts), 1.0));
    const double D = T - ts;
    // g = phi/2 with phi = integral of Omega_rho from ts
    const double g = 0.25 * pi * ph(0);
    const double g1 = 0.25 * pi * ph(1) / D;
    const double g2 = 0.25 * pi * ph(2) / (D * D);
    const double g3 = 0.25 * pi * ph(3) / (D * D * D);
    const double c = std::cos(g);
    const double s = std::sin(g);
    j.a1 << eps * c, -eps * s * g1, -eps * (c * g1 * g1 + s * g2),
        -eps * (-s * g1 * g1 * g1 + 3.0 * c * g1 * g2 + s * g3);
    j.a2 << 0.5 * (C1 + r_eps_), 0.0, 0.0, 0.0;
    j.lower_gap = 0.5 * (Q + r_eps_);
    j.upper_gap = base_gap;
  }
  return j;
}

double PiecewiseTrajectory::radicand(double t) const {
  const double T = total_time();
  const double ts = switch_time_;
  if (t < ts) {
    const double theta = pi * smoothstep5(std::max(t, 0.0) / ts)(0);
    const double s = 0.5 * r_eps_ * std::sin(theta);
    return s * s;
  }
  const double g = 0.25 * pi * smoothstep5(std::min((t - ts) / (T - ts), 1.0))(0);
  const double s = epsilon_ * std::sin(g);
  return s * s;
}

std::optional<CouplingJet> PiecewiseTrajectory::coupling_limit(double t) const {
  return piecewise_couplings(t, total_time(), switch_time_);
}

// ---------------------------------------------------------------------------

namespace {

double beta4_offset(double w, double C1, double C2) {
  auto traj = std::make_shared<const PolynomialTrajectory>(w, 1.0, C1, C2);
  const LrPhases phases(traj);
  return phases.beta(4, 1.0) - kTargetBeta4;
}

// Near the edge of the feasible band alpha_3 almost touches zero and the phase
// integral stops converging; such W are treated as infeasible.
std::optional<double> try_beta4_offset(double w, double C1, double C2) {
  try {
    PolynomialTrajectory(w, 1.0, C1, C2).validate();
    return beta4_offset(w, C1, C2);
  } catch (const DomainError&) {
    return std::nullopt;
  } catch (const NumericalFailure&) {
    return std::nullopt;
  }
}

}  // namespace

double solve_polynomial_w(double C1, double C2, WRootReport* report) {
  // beta_4(T) depends on W only through s = t/T, so T = 1 is used throughout.
  constexpr double lo = -10.0;
  constexpr double hi = -0.1;
  constexpr int scan = 100;
  constexpr double guess = -2.74;

  WRootReport local;
  double prev_w = std::numeric_limits<double>::quiet_NaN();
  double prev_f = 0.0;
  for (int i = 0; i <= scan; ++i) {
    const double w = lo + (hi - lo) * i / scan;
    const std::optional<double> offset = try_beta4_offset(w, C1, C2);
    if (!offset) {
      local.rejected.push_back(w);
      prev_w = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double f = *offset;
    if (!std::isnan(prev_w) && (f == 0.0 || (prev_f < 0.0) != (f < 0.0))) {
      double a = prev_w, b = w, fa = prev_f;
      while (b - a > 1e-10) {
        const double m = 0.5 * (a + b);
        const double fm = beta4_offset(m, C1, C2);
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      local.roots.push_back(0.5 * (a + b));
    }
    prev_w = w;
    prev_f = f;
  }
  if (local.roots.empty()) {
    std::ostringstream os;
    os << "no sign change of beta_4(T) - target found for W in [" << lo << ", " << hi << "] ("
       << local.rejected.size() << " infeasible samples)";
    throw SynthesisError(os.str());
  }
  local.chosen = local.roots.front();
  for (double r : local.roots) {
    if (std::abs(r - guess) < std::abs(local.chosen - guess)) local.chosen = r;
  }
  local.residual = beta4_offset(local.chosen, C1, C2);
  if (report) *report = local;
  return local.chosen;
}

PulseSchedule polynomial_scheme_with_w(double total_time, double w, double C1, double C2) {
  auto traj = std::make_shared<const PolynomialTrajectory>(w, total_time, C1, C2);
  traj->validate();
  PulseSchedule s(SchemeKind::polynomial, total_time,
                  [traj](double t) { return coupling_jet(*traj, t); });
  s.amplitude_w = w;
  s.constants = traj->constants();
  s.trajectory = traj;
  return s;
}

PulseSchedule polynomial_scheme(double total_time, double C1, double C2) {
  if (!(total_time > 0.0)) throw InvalidParameter("total time must be positive");
  return polynomial_scheme_with_w(total_time, solve_polynomial_w(C1, C2), C1, C2);
}

PulseSchedule piecewise_scheme(double total_time, double switch_time) {
  if (!(total_time > 0.0)) throw InvalidParameter("total time must be positive");
  if (!(switch_time > 0.0 && switch_time < total_time)) {
    throw InvalidParameter("piecewise switch time must lie strictly inside (0, T)");
  }
  PulseSchedule s(SchemeKind::piecewise, total_time, [total_time, switch_time](double t) {
    return piecewise_couplings(t, total_time, switch_time);
  });
  s.switch_time = switch_time;
  auto traj = std::make_shared<const PiecewiseTrajectory>(total_time, switch_time);
  s.constants = traj->constants();
  s.trajectory = traj;
  return s;
}

PulseSchedule piecewise_scheme(double total_time) {
  return piecewise_scheme(total_time, 0.75 * total_time);
}

PulseSchedule transform_schedule(const PulseSchedule& base,
                                 std::function<CouplingJet(double, const CouplingJet&)> fn) {
  PulseSchedule s(SchemeKind::custom, base.total_time(),
                  [base, fn](double t) { return fn(t, base.jet(t)); });
  s.switch_time = base.switch_time;
  s.amplitude_w = base.amplitude_w;
  s.constants = base.constants;
  s.trajectory = base.trajectory;
  return s;
}

bool BoundaryReport::all_passed() const {
  for (const auto& c : conditions) {
    if (!c.passed) return false;
  }
  return true;
}

BoundaryReport boundary_check(const PulseSchedule& schedule, double tolerance) {
  BoundaryReport report;
  auto add = [&](std::string name, double value) {
    report.conditions.push_back({std::move(name), std::abs(value), std::abs(value) <= tolerance});
  };
  const double T = schedule.total_time();
  for (const auto& [label, t] : {std::pair{"0", 0.0}, std::pair{"T", T}}) {
    const CouplingJet j = schedule.jet(t);
    add(std::string("Omega_x(") + label + ")", j.omega_x(0));
    add(std::string("Omega_rho(") + label + ")", j.omega_rho(0));
    add(std::string("dOmega_x(") + label + ")", j.omega_x(1));
    add(std::string("dOmega_rho(") + label + ")", j.omega_rho(1));
  }
  if (schedule.switch_time) {
    const double ts = *schedule.switch_time;
    const double eta = 1e-12 * T;
    const CouplingJet left = schedule.jet(ts - eta);
    const CouplingJet right = schedule.jet(ts + eta);
    add("Omega_x jump at t_S", left.omega_x(0) - right.omega_x(0));
    add("dOmega_x jump at t_S", left.omega_x(1) - right.omega_x(1));
    add("Omega_rho jump at t_S", left.omega_rho(0) - right.omega_rho(0));
    add("dOmega_rho jump at t_S", left.omega_rho(1) - right.omega_rho(1));
  }
  if (auto poly = std::dynamic_pointer_cast<const PolynomialTrajectory>(schedule.trajectory)) {
    const InvariantConstants& c = poly->constants();
    const double Q = c.Q();
    for (const auto& [label, s] : {std::pair{"0", 0.0}, std::pair{"T", 1.0}}) {
      add(std::string("alpha_1(") + label + ")", poly->alpha_s_derivative(1, 0, s));
      const double target = s == 0.0 ? 0.5 * (c.C1 - Q) : 0.5 * (c.C1 + Q);
      add(std::string("alpha_2(") + label + ") - boundary", poly->alpha_s_derivative(2, 0, s) - target);
      for (int order = 1; order <= 4; ++order) {
        add("d" + std::to_string(order) + " alpha_1(" + label + ")",
            poly->alpha_s_derivative(1, order, s));
        add("d" + std::to_string(order) + " alpha_2(" + label + ")",
            poly->alpha_s_derivative(2, order, s));
      }
    }
  }
  return report;
}

double pulse_area(const PulseSchedule& schedule, int axis) {
  auto f = [&](double t) {
    const Couplings c = schedule.at(t);
    return axis == 0 ? c.omega_x : c.omega_rho;
  };
  const double T = schedule.total_time();
  double error = 0.0;
  if (schedule.switch_time) {
    const double ts = *schedule.switch_time;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, ts, 12, 1e-12, &error) +
           boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, ts, T, 12, 1e-12, &error);
  }
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, T, 12, 1e-12, &error);
}

}  // namespace shaken
