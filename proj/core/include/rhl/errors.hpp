#pragma once

#include <stdexcept>
#include <string>

namespace rhl {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the harness maps subclasses onto exit
// codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value or shape does not satisfy a type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnsupportedRank : public Error {
 public:
  UnsupportedRank(int rank, int max_rank)
      : Error("tensor rank " + std::to_string(rank) + " exceeds K_max = " +
              std::to_string(max_rank)),
        rank_(rank),
        max_rank_(max_rank) {}

  int rank() const { return rank_; }
  int max_rank() const { return max_rank_; }

 private:
  int rank_;
  int max_rank_;
};

// Explicit step rejected because dt exceeds the parabolic stability bound.
class CflViolation : public Error {
 public:
  CflViolation(double dt, double dt_max)
      : Error("time step " + std::to_string(dt) + " violates CFL bound " +
              std::to_string(dt_max)),
        dt_(dt),
        dt_max_(dt_max) {}

  double dt() const { return dt_; }
  double dt_max() const { return dt_max_; }

 private:
  double dt_;
  double dt_max_;
};

// Closed-form model evaluated outside its interval of existence.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A field violates a pointwise hypothesis that makes evaluation impossible
// (nonpositive u under a logarithm, unnormalized v, ...).
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public HypothesisViolation {
 public:
  using HypothesisViolation::HypothesisViolation;
};

// A constant ledger fails one of its defining inequalities.
class LedgerViolation : public Error {
 public:
  using Error::Error;
};

// Configuration text could not be parsed or validated. `line` is 0 when the
// problem is not tied to a specific line (e.g. a missing required key).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::string field = {}, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        field_(std::move(field)),
        line_(line) {}

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

}  // namespace rhl
