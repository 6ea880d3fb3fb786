#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "shaken/invariant.hpp"

namespace shaken {

enum class SchemeKind { polynomial, piecewise, custom };

std::string to_string(SchemeKind kind);
SchemeKind scheme_from_string(std::string_view name);

/// Couplings Omega_x(t), Omega_rho(t) on [0, T] with analytic first and second
/// derivatives. Immutable once built; copies share the underlying evaluator.
class PulseSchedule {
public:
  using JetFn = std::function<CouplingJet(double)>;

  PulseSchedule(SchemeKind kind, double total_time, JetFn jet);

  /// Zero outside [0, T].
  CouplingJet jet(double t) const;
  Couplings at(double t) const;

  SchemeKind kind() const { return kind_; }
  double total_time() const { return total_time_; }

  std::optional<double> switch_time;  ///< piecewise only
  std::optional<double> amplitude_w;  ///< polynomial only
  InvariantConstants constants;
  /// Invariant trajectory the couplings derive from, when there is one.
  std::shared_ptr<const InvariantTrajectory> trajectory;

private:
  SchemeKind kind_;
  double total_time_;
  JetFn jet_;
};

/// alpha_1 = 1024 W s^5 (1-s)^5, alpha_2 = (C1-Q)/2 + Q p(s) with p the
/// degree-9 smoothstep; xi = +1.
class PolynomialTrajectory final : public InvariantTrajectory {
public:
  PolynomialTrajectory(double w, double total_time, double C1 = 10.0, double C2 = 11.0);

  AlphaJet alphas(double t) const override;
  double radicand(double t) const override;
  double singular_threshold() const override { return 0.0; }
  std::optional<CouplingJet> coupling_limit(double t) const override;

  double w() const { return w_; }
  /// d^order alpha_{which}/ds^order at s = t/T, which in {1, 2}, order in 0..9.
  double alpha_s_derivative(int which, int order, double s) const;

private:
  double w_;
  Eigen::VectorXd a1_coeffs_;
  Eigen::VectorXd a2_coeffs_;
};

/// alpha functions reproducing the piecewise pi / pi-half pulses for a small
/// epsilon > 0 (the couplings are exact only as epsilon -> 0+); xi = -1.
class PiecewiseTrajectory final : public InvariantTrajectory {
public:
  PiecewiseTrajectory(double total_time, double switch_time, double epsilon = 1e-6,
                      double C1 = 10.0, double C2 = 11.0);

  AlphaJet alphas(double t) const override;
  double radicand(double t) const override;
  double singular_threshold() const override { return 0.0; }
  std::optional<CouplingJet> coupling_limit(double t) const override;

  double switch_time() const { return switch_time_; }
  double epsilon() const { return epsilon_; }

private:
  double switch_time_;
  double epsilon_;
  double r_eps_;  // sqrt(C1^2 + 8 C2 - 4 eps^2)
};

/// Closed-form piecewise couplings (pi pulse in Omega_x, then pi/2 in Omega_rho).
CouplingJet piecewise_couplings(double t, double total_time, double switch_time);

struct WRootReport {
  std::vector<double> roots;
  std::vector<double> rejected;  ///< scanned W values where alpha_3 turns complex
  double chosen = 0.0;
  double residual = 0.0;  ///< beta_4(T) + pi/4 at the chosen root
};

/// Phase of the fourth invariant eigenstate at T that makes the superposition
/// land on |->: beta_4(T) = -pi/4.
inline constexpr double kTargetBeta4 = -0.78539816339744830962;

/// Finds W != 0 in [-10, -0.1] with beta_4(T; W) = kTargetBeta4 by bisection.
double solve_polynomial_w(double C1 = 10.0, double C2 = 11.0, WRootReport* report = nullptr);

PulseSchedule polynomial_scheme(double total_time, double C1 = 10.0, double C2 = 11.0);
PulseSchedule polynomial_scheme_with_w(double total_time, double w, double C1 = 10.0,
                                       double C2 = 11.0);

PulseSchedule piecewise_scheme(double total_time, double switch_time);
PulseSchedule piecewise_scheme(double total_time);  ///< switch at 0.75 T

/// Wraps a schedule with modified couplings (used for consistency tests and
/// envelope studies).
PulseSchedule transform_schedule(const PulseSchedule& base,
                                 std::function<CouplingJet(double, const CouplingJet&)> fn);

struct BoundaryCondition {
  std::string name;
  double magnitude = 0.0;
  bool passed = false;
};

struct BoundaryReport {
  std::vector<BoundaryCondition> conditions;
  bool all_passed() const;
};

BoundaryReport boundary_check(const PulseSchedule& schedule, double tolerance = 1e-10);

/// Integral over [0, T] of Omega_x (axis 0) or Omega_rho (axis 1).
double pulse_area(const PulseSchedule& schedule, int axis);

}  // namespace shaken
