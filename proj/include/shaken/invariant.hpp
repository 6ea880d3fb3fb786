#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace shaken {

using cd = std::complex<double>;

/// Integration constants of the invariant. Q = sqrt(C1^2 + 8 C2) must be real
/// and nonzero; xi picks the branch of alpha_3.
struct InvariantConstants {
  double C1 = 10.0;
  double C2 = 11.0;
  int xi = 1;

  double Q() const;
  static InvariantConstants make(double C1, double C2, int xi);
};

/// alpha_1 and alpha_2 with their first three time derivatives, plus the
/// distances of alpha_2 from its two boundary values (C1 -+ Q)/2. The gaps are
/// carried separately so trajectories can supply them without cancellation.
struct AlphaJet {
  Eigen::Vector4d a1 = Eigen::Vector4d::Zero();
  Eigen::Vector4d a2 = Eigen::Vector4d::Zero();
  double lower_gap = 0.0;  ///< alpha_2 - (C1 - Q)/2
  double upper_gap = 0.0;  ///< (C1 + Q)/2 - alpha_2
};

/// Couplings and their first two derivatives: (value, d/dt, d^2/dt^2).
struct CouplingJet {
  Eigen::Vector3d omega_x = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega_rho = Eigen::Vector3d::Zero();
};

struct Couplings {
  double omega_x = 0.0;
  double omega_rho = 0.0;
};

/// Invariant I(t) = sum_i alpha_i(t) G_i for the four-level Hamiltonian with
/// Omega_y = 0. Subclasses supply alpha_1, alpha_2; alpha_3 and alpha_4 follow.
class InvariantTrajectory {
public:
  InvariantTrajectory(InvariantConstants constants, double total_time);
  virtual ~InvariantTrajectory() = default;

  virtual AlphaJet alphas(double t) const = 0;

  /// 2 C2 - alpha_1^2 - alpha_2^2 + C1 alpha_2, i.e. alpha_3^2.
  virtual double radicand(double t) const;

  /// Radicand values at or below this are treated as zeros of alpha_3.
  virtual double singular_threshold() const;

  /// Exact coupling limit at a zero of alpha_3, when the trajectory knows it.
  virtual std::optional<CouplingJet> coupling_limit(double t) const;

  const InvariantConstants& constants() const { return constants_; }
  double total_time() const { return total_time_; }

  /// Dense check that alpha_3 stays real; throws DomainError at the first bad t.
  void validate(int n_samples = 4001) const;

protected:
  AlphaJet with_gaps(AlphaJet jet) const;

private:
  InvariantConstants constants_;
  double total_time_;
};

/// User-supplied alpha_1, alpha_2 (with derivatives) as a callable.
class FunctionTrajectory final : public InvariantTrajectory {
public:
  using AlphaFn = std::function<AlphaJet(double)>;
  FunctionTrajectory(InvariantConstants constants, double total_time, AlphaFn fn);
  AlphaJet alphas(double t) const override;

private:
  AlphaFn fn_;
};

double alpha3(const InvariantTrajectory& traj, double t);
double alpha4(const InvariantTrajectory& traj, double t);

/// (alpha_1, alpha_2, alpha_3, alpha_4) and their time derivatives.
Eigen::Vector4d alpha_vector(const InvariantTrajectory& traj, double t);
Eigen::Vector4d alpha_rates(const InvariantTrajectory& traj, double t);

/// Omega_x = -alpha_2'/alpha_3 and Omega_rho = 2 alpha_1'/alpha_3, with the
/// 0/0 limit resolved at zeros of alpha_3.
Couplings couplings_from_alphas(const InvariantTrajectory& traj, double t);
CouplingJet coupling_jet(const InvariantTrajectory& traj, double t);

/// Lie-algebra generators G_1..G_4 in the basis (|10>, |00>, |01>, |11>).
const Eigen::Matrix4cd& generator(int index);

Eigen::Matrix4cd invariant_matrix(const InvariantTrajectory& traj, double t);

/// H = (1/2)(Omega_x G_1 + Omega_rho G_2), hbar = 1.
Eigen::Matrix4cd invariant_hamiltonian(double omega_x, double omega_rho);

template <typename DerivedA, typename DerivedB>
auto commutator(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a * b - b * a).eval();
}

struct InvariantEigensystem {
  Eigen::Vector4d kappas = Eigen::Vector4d::Zero();
  Eigen::Matrix4cd phis = Eigen::Matrix4cd::Zero();  ///< columns phi_1..phi_4
};

/// Closed-form eigenpairs of I(t); kappa_{1..4} = (-C1-Q, C1-Q, -C1+Q, C1+Q)/2.
InvariantEigensystem invariant_eigensystem(const InvariantTrajectory& traj, double t);

/// d chi_+/dt (sign = +1) or d chi_-/dt (sign = -1).
double chi_integrand(const InvariantTrajectory& traj, double t, int sign);

/// Cumulative Lewis-Riesenfeld phases chi_+(t), chi_-(t) on [0, T].
class LrPhases {
public:
  explicit LrPhases(std::shared_ptr<const InvariantTrajectory> traj, int panels = 64,
                    double tolerance = 1e-10);

  double chi_plus(double t) const { return chi(t, +1); }
  double chi_minus(double t) const { return chi(t, -1); }
  /// beta_1 = -chi_+, beta_2 = chi_-, beta_3 = -chi_-, beta_4 = chi_+.
  double beta(int n, double t) const;
  const InvariantTrajectory& trajectory() const { return *traj_; }

private:
  double chi(double t, int sign) const;
  double integrate(double a, double b, int sign) const;

  std::shared_ptr<const InvariantTrajectory> traj_;
  double tolerance_;
  std::vector<double> nodes_;
  std::vector<double> cum_plus_;
  std::vector<double> cum_minus_;
};

LrPhases lr_phases(std::shared_ptr<const InvariantTrajectory> traj, int panels = 64);

/// State built from the invariant, (-phi_1 e^{i beta_1} + phi_4 e^{i beta_4})/sqrt 2.
Eigen::Vector4cd invariant_superposition(const LrPhases& phases, double t);

class PulseSchedule;

/// Max over n_samples interior times of || dI/dt + i [H, I] ||_F.
double verify_invariant(const PulseSchedule& schedule, const InvariantTrajectory& traj,
                        int n_samples = 1000);

}  // namespace shaken
