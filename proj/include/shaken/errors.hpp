#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace shaken {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// Eigensolver, integrator or quadrature did not reach its tolerance.
class NumericalFailure : public Error {
public:
  NumericalFailure(const std::string& what, std::vector<double> diagnostics = {})
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::vector<double>& diagnostics() const { return diagnostics_; }

private:
  std::vector<double> diagnostics_;
};

/// A quantity was evaluated outside its domain (negative radicand, 0/0 limit).
class DomainError : public Error {
public:
  DomainError(const std::string& what, double t) : Error(what), t_(t) {}
  double time() const { return t_; }

private:
  double t_;
};

class SynthesisError : public Error {
public:
  using Error::Error;
};

/// Requested controls are not realisable (arcsine argument out of range).
class ControlInfeasible : public Error {
public:
  ControlInfeasible(const std::string& what, double required_v0)
      : Error(what), required_v0_(required_v0) {}
  double required_v0() const { return required_v0_; }

private:
  double required_v0_;
};

}  // namespace shaken
