#pragma once

#include <stdexcept>
#include <string>

namespace varjet {

/// Base class for all varjet errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Operand dimensions do not conform (block widths, column counts, ...).
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

/// Requested tensor order is outside the supported range.
class OrderError : public Error {
 public:
  explicit OrderError(const std::string& what) : Error(what) {}
};

/// Operation restricted to a specific dimension (e.g. scalar-only formulas).
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

/// Pivot fell below the singularity threshold during factorization.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate(condition_estimate) {}
  double condition_estimate;
};

/// Invalid integrator configuration (nonpositive step, ...).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Solution escaped the blow-up guard. Carries the refined escape bracket.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double t_escape, double bracket_lo,
              double bracket_hi)
      : Error(what),
        t_escape(t_escape),
        bracket_lo(bracket_lo),
        bracket_hi(bracket_hi) {}
  double t_escape;
  double bracket_lo;
  double bracket_hi;
};

/// The flow's first variation became numerically singular along the way.
class IllConditionedFlowError : public Error {
 public:
  IllConditionedFlowError(const std::string& what, double t,
                          double condition_estimate)
      : Error(what), t(t), condition_estimate(condition_estimate) {}
  double t;
  double condition_estimate;
};

/// The lift denominator crossed zero before the requested end time.
/// Carries the grid pair bracketing the zero and the refined boundary.
class PoleCrossedError : public Error {
 public:
  PoleCrossedError(const std::string& what, double bracket_lo,
                   double bracket_hi, double boundary)
      : Error(what),
        bracket_lo(bracket_lo),
        bracket_hi(bracket_hi),
        boundary(boundary) {}
  double bracket_lo;
  double bracket_hi;
  double boundary;
};

/// Fractional-linear denominator vanishes at the evaluation point.
class PoleError : public Error {
 public:
  explicit PoleError(const std::string& what) : Error(what) {}
};

/// Input document violates its schema. Names the offending field.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

/// Filesystem failure (unreadable input, unwritable output path).
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace varjet
