#include "shaken/invariant.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "shaken/errors.hpp"
#include "shaken/schemes.hpp"

namespace shaken {

namespace {

constexpr double kRadicandSlack = 1e-12;

std::string at_time(const std::string& what, double t) {
  std::ostringstream os;
  os << what << " at t = " << t;
  return os.str();
}

}  // namespace

double InvariantConstants::Q() const { return std::sqrt(C1 * C1 + 8.0 * C2); }

InvariantConstants InvariantConstants::make(double C1, double C2, int xi) {
  if (xi != 1 && xi != -1) throw InvalidParameter("xi must be +1 or -1");
  if (!(C1 * C1 + 8.0 * C2 > 0.0)) {
    throw InvalidParameter("C1^2 + 8 C2 must be positive so that Q is real and nonzero");
  }
  return InvariantConstants{C1, C2, xi};
}

InvariantTrajectory::InvariantTrajectory(InvariantConstants constants, double total_time)
    : constants_(InvariantConstants::make(constants.C1, constants.C2, constants.xi)),
      total_time_(total_time) {
  if (!(total_time > 0.0)) throw InvalidParameter("total time must be positive");
}

AlphaJet InvariantTrajectory::with_gaps(AlphaJet jet) const {
  const double Q = constants_.Q();
  jet.lower_gap = jet.a2(0) - 0.5 * (constants_.C1 - Q);
  jet.upper_gap = 0.5 * (constants_.C1 + Q) - jet.a2(0);
  return jet;
}

double InvariantTrajectory::radicand(double t) const {
  const AlphaJet j = alphas(t);
  return j.lower_gap * j.upper_gap - j.a1(0) * j.a1(0);
}

double InvariantTrajectory::singular_threshold() const {
  const double Q = constants_.Q();
  return 1e-14 * Q * Q;
}

std::optional<CouplingJet> InvariantTrajectory::coupling_limit(double) const {
  return std::nullopt;
}

void InvariantTrajectory::validate(int n_samples) const {
  for (int i = 0; i < n_samples; ++i) {
    const double t = total_time_ * i / (n_samples - 1);
    if (radicand(t) < -kRadicandSlack) {
      throw DomainError(at_time("alpha_3 radicand is negative", t), t);
    }
  }
}

FunctionTrajectory::FunctionTrajectory(InvariantConstants constants, double total_time,
                                       AlphaFn fn)
    : InvariantTrajectory(constants, total_time), fn_(std::move(fn)) {}

AlphaJet FunctionTrajectory::alphas(double t) const { return with_gaps(fn_(t)); }

// ---------------------------------------------------------------------------

namespace {

double checked_radicand(const InvariantTrajectory& traj, double t) {
  const double r = traj.radicand(t);
  if (r < -kRadicandSlack) throw DomainError(at_time("alpha_3 radicand is negative", t), t);
  return std::max(r, 0.0);
}

// alpha_3 with its first two derivatives.
Eigen::Vector3d alpha3_jet(const InvariantTrajectory& traj, const AlphaJet& j, double r) {
  const int xi = traj.constants().xi;
  const Eigen::Vector4d& a1 = j.a1;
  const Eigen::Vector4d& a2 = j.a2;
  const double slope = j.upper_gap - j.lower_gap;  // C1 - 2 alpha_2
  const double dr = -2.0 * a1(0) * a1(1) + slope * a2(1);
  const double ddr = -2.0 * (a1(1) * a1(1) + a1(0) * a1(2)) - 2.0 * a2(1) * a2(1) + slope * a2(2);
  const double root = std::sqrt(r);
  Eigen::Vector3d out;
  out(0) = xi * root;
  out(1) = xi * dr / (2.0 * root);
  out(2) = xi * (ddr / (2.0 * root) - dr * dr / (4.0 * r * root));
  return out;
}

// (n / d) and its first two derivatives from jets of n and d.
Eigen::Vector3d quotient_jet(const Eigen::Vector3d& n, const Eigen::Vector3d& d) {
  Eigen::Vector3d f;
  f(0) = n(0) / d(0);
  f(1) = (n(1) - f(0) * d(1)) / d(0);
  f(2) = (n(2) - 2.0 * f(1) * d(1) - f(0) * d(2)) / d(0);
  return f;
}

CouplingJet regular_jet(const InvariantTrajectory& traj, double t, double r) {
  const AlphaJet j = traj.alphas(t);
  const Eigen::Vector3d a3 = alpha3_jet(traj, j, r);
  const Eigen::Vector3d da2 = j.a2.tail<3>();
  const Eigen::Vector3d da1 = j.a1.tail<3>();
  CouplingJet c;
  c.omega_x = -quotient_jet(da2, a3);
  c.omega_rho = 2.0 * quotient_jet(da1, a3);
  return c;
}

// One-sided quadratic extrapolation from three regular samples.
CouplingJet extrapolated_jet(const InvariantTrajectory& traj, double t) {
  const double T = traj.total_time();
  const double h = 1e-4 * T;
  auto sample = [&](double s) {
    const double r = checked_radicand(traj, s);
    if (r <= traj.singular_threshold()) {
      throw DomainError(at_time("coupling 0/0 limit is not resolvable", t), t);
    }
    return regular_jet(traj, s, r);
  };
  auto extrapolate = [&](double dir) {
    const CouplingJet f1 = sample(t + dir * h);
    const CouplingJet f2 = sample(t + dir * 2.0 * h);
    const CouplingJet f3 = sample(t + dir * 3.0 * h);
    CouplingJet out;
    out.omega_x = 3.0 * f1.omega_x - 3.0 * f2.omega_x + f3.omega_x;
    out.omega_rho = 3.0 * f1.omega_rho - 3.0 * f2.omega_rho + f3.omega_rho;
    return out;
  };
  if (t - 3.0 * h < 0.0) return extrapolate(+1.0);
  if (t + 3.0 * h > T) return extrapolate(-1.0);
  const CouplingJet lo = extrapolate(-1.0);
  const CouplingJet hi = extrapolate(+1.0);
  CouplingJet out;
  out.omega_x = 0.5 * (lo.omega_x + hi.omega_x);
  out.omega_rho = 0.5 * (lo.omega_rho + hi.omega_rho);
  return out;
}

}  // namespace

double alpha3(const InvariantTrajectory& traj, double t) {
  return traj.constants().xi * std::sqrt(checked_radicand(traj, t));
}

double alpha4(const InvariantTrajectory& traj, double t) {
  return traj.constants().C1 - traj.alphas(t).a2(0);
}

Eigen::Vector4d alpha_vector(const InvariantTrajectory& traj, double t) {
  const AlphaJet j = traj.alphas(t);
  return {j.a1(0), j.a2(0), alpha3(traj, t), traj.constants().C1 - j.a2(0)};
}

Eigen::Vector4d alpha_rates(const InvariantTrajectory& traj, double t) {
  const AlphaJet j = traj.alphas(t);
  const double r = checked_radicand(traj, t);
  if (r <= 0.0) throw DomainError(at_time("alpha_3 rate is singular", t), t);
  const Eigen::Vector3d a3 = alpha3_jet(traj, j, r);
  return {j.a1(1), j.a2(1), a3(1), -j.a2(1)};
}

CouplingJet coupling_jet(const InvariantTrajectory& traj, double t) {
  const double r = checked_radicand(traj, t);
  if (r > traj.singular_threshold()) return regular_jet(traj, t, r);
  if (auto limit = traj.coupling_limit(t)) return *limit;
  return extrapolated_jet(traj, t);
}

Couplings couplings_from_alphas(const InvariantTrajectory& traj, double t) {
  const CouplingJet j = coupling_jet(traj, t);
  return {j.omega_x(0), j.omega_rho(0)};
}

const Eigen::Matrix4cd& generator(int index) {
  static const std::array<Eigen::Matrix4cd, 4> gens = [] {
    const cd i(0.0, 1.0);
    std::array<Eigen::Matrix4cd, 4> g;
    g[0] << 0, 1, 0, 0,
            1, 0, 0, 0,
            0, 0, 0, 1,
            0, 0, 1, 0;
    g[1] << 0, 0, 1, 0,
            0, 0, 0, 0,
            1, 0, 0, 0,
            0, 0, 0, 0;
    g[2] << 0, 0, 0, i,
            0, 0, -i, 0,
            0, i, 0, 0,
            -i, 0, 0, 0;
    g[3] << 0, 0, 0, 0,
            0, 0, 0, 1,
            0, 0, 0, 0,
            0, 1, 0, 0;
    return g;
  }();
  if (index < 1 || index > 4) throw InvalidParameter("generator index must be 1..4");
  return gens[index - 1];
}

Eigen::Matrix4cd invariant_matrix(const InvariantTrajectory& traj, double t) {
  const Eigen::Vector4d a = alpha_vector(traj, t);
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 4; ++i) m += a(i) * generator(i + 1);
  return m;
}

Eigen::Matrix4cd invariant_hamiltonian(double omega_x, double omega_rho) {
  return 0.5 * (omega_x * generator(1) + omega_rho * generator(2));
}

InvariantEigensystem invariant_eigensystem(const InvariantTrajectory& traj, double t) {
  const InvariantConstants& c = traj.constants();
  const double Q = c.Q();
  const AlphaJet j = traj.alphas(t);
  const double a = j.lower_gap;  // (-C1 + Q + 2 alpha_2)/2
  const double b = j.upper_gap;  // ( C1 + Q - 2 alpha_2)/2
  if (a < 0.0 || b < 0.0) {
    throw DomainError(at_time("alpha_2 lies outside its allowed band", t), t);
  }
  // With D_+ = (alpha_1 + i alpha_3)/Q and alpha_1^2 + alpha_3^2 = a b, the
  // normalized eigenvectors only need the phase of D_+ and the two gaps.
  double a1 = j.a1(0);
  double a3 = alpha3(traj, t);
  double h = std::hypot(a1, a3);
  if (h == 0.0) {
    // Both vanish where a gap closes; the phase is the limit from inside.
    const double T = traj.total_time();
    const double tn = t + (t < 0.5 * T ? 1e-6 : -1e-6) * T;
    a1 = traj.alphas(tn).a1(0);
    a3 = alpha3(traj, tn);
    h = std::hypot(a1, a3);
    if (h == 0.0) throw DomainError(at_time("invariant eigenvector phase is undefined", t), t);
  }
  const cd u_plus(a1 / h, a3 / h);
  const cd u_minus(-a1 / h, a3 / h);
  const double sa = std::sqrt(a / (2.0 * Q));
  const double sb = std::sqrt(b / (2.0 * Q));

  InvariantEigensystem e;
  e.kappas << 0.5 * (-c.C1 - Q), 0.5 * (c.C1 - Q), 0.5 * (-c.C1 + Q), 0.5 * (c.C1 + Q);
  e.phis.col(0) << -sa * u_minus, -sb, sa * u_minus, sb;
  e.phis.col(1) << -sb * u_plus, sa, -sb * u_plus, sa;
  e.phis.col(2) << sb * u_minus, -sa, -sb * u_minus, sa;
  e.phis.col(3) << sa * u_plus, sb, sa * u_plus, sb;
  return e;
}

// With the double roots of the numerator factored out, the integrand reduces to
//   chi_+' =  alpha_1 alpha_2' / (2 b alpha_3),
//   chi_-' = -alpha_1 alpha_2' / (2 a alpha_3).
double chi_integrand(const InvariantTrajectory& traj, double t, int sign) {
  const AlphaJet j = traj.alphas(t);
  const double num = j.a1(0) * j.a2(1);
  const double r = checked_radicand(traj, t);
  if (r <= 0.0) {
    if (num == 0.0) return 0.0;
    throw DomainError(at_time("LR phase integrand is singular", t), t);
  }
  const double a3 = traj.constants().xi * std::sqrt(r);
  return sign > 0 ? num / (2.0 * j.upper_gap * a3) : -num / (2.0 * j.lower_gap * a3);
}

LrPhases::LrPhases(std::shared_ptr<const InvariantTrajectory> traj, int panels, double tolerance)
    : traj_(std::move(traj)), tolerance_(tolerance) {
  if (!traj_) throw InvalidParameter("LrPhases: null trajectory");
  if (panels < 1) throw InvalidParameter("LrPhases: need at least one panel");
  const double T = traj_->total_time();
  nodes_.resize(panels + 1);
  cum_plus_.assign(panels + 1, 0.0);
  cum_minus_.assign(panels + 1, 0.0);
  for (int p = 0; p <= panels; ++p) nodes_[p] = T * p / panels;
  for (int p = 0; p < panels; ++p) {
    cum_plus_[p + 1] = cum_plus_[p] + integrate(nodes_[p], nodes_[p + 1], +1);
    cum_minus_[p + 1] = cum_minus_[p] + integrate(nodes_[p], nodes_[p + 1], -1);
  }
}

double LrPhases::integrate(double a, double b, int sign) const {
  if (b <= a) return 0.0;
  double error = 0.0;
  auto f = [&](double t) { return chi_integrand(*traj_, t, sign); };
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 12, 1e-11, &error);
  if (!std::isfinite(value) || error > tolerance_) {
    throw NumericalFailure(at_time("LR phase quadrature failed to converge on panel", a),
                           {a, b, error});
  }
  return value;
}

double LrPhases::chi(double t, int sign) const {
  const double T = traj_->total_time();
  t = std::clamp(t, 0.0, T);
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  const std::size_t p = std::min<std::size_t>(std::distance(nodes_.begin(), it) - 1,
                                              nodes_.size() - 2);
  const auto& cum = sign > 0 ? cum_plus_ : cum_minus_;
  return cum[p] + integrate(nodes_[p], t, sign);
}

double LrPhases::beta(int n, double t) const {
  switch (n) {
    case 1: return -chi_plus(t);
    case 2: return chi_minus(t);
    case 3: return -chi_minus(t);
    case 4: return chi_plus(t);
    default: throw InvalidParameter("beta index must be 1..4");
  }
}

LrPhases lr_phases(std::shared_ptr<const InvariantTrajectory> traj, int panels) {
  return LrPhases(std::move(traj), panels);
}

Eigen::Vector4cd invariant_superposition(const LrPhases& phases, double t) {
  const InvariantEigensystem e = invariant_eigensystem(phases.trajectory(), t);
  const cd i(0.0, 1.0);
  return (-e.phis.col(0) * std::exp(i * phases.beta(1, t)) +
          e.phis.col(3) * std::exp(i * phases.beta(4, t))) /
         std::numbers::sqrt2;
}

double verify_invariant(const PulseSchedule& schedule, const InvariantTrajectory& traj,
                        int n_samples) {
  const double T = traj.total_time();
  const cd i(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const double t = T * (k + 0.5) / n_samples;
    const Couplings c = schedule.at(t);
    const Eigen::Matrix4cd H = invariant_hamiltonian(c.omega_x, c.omega_rho);
    const Eigen::Matrix4cd I = invariant_matrix(traj, t);
    const Eigen::Vector4d rates = alpha_rates(traj, t);
    Eigen::Matrix4cd dI = Eigen::Matrix4cd::Zero();
    for (int g = 0; g < 4; ++g) dI += rates(g) * generator(g + 1);
    worst = std::max(worst, (dI + i * commutator(H, I)).norm());
  }
  return worst;
}

}  // namespace shaken
