#pragma once

#include <stdexcept>
#include <string>

namespace qfluid {

enum class Err {
  non_positive_density,
  gamma_one,
  dimension_mismatch,
  unresolved_field,
  bad_resolution,
  domain_mismatch,
  too_many_modes,
  positivity_lost,
  cfl_violation,
  fixed_point_diverged,
  bound_violated,
  audit_failed,
  window_empty,
  unsupported_kind,
  grid_uncovered,
  horizon_exceeded,
  seam_mismatch,
  empty_candidates,
  mixed_initial_data,
  parse_error,
  validation_error,
  io_error,
};

inline const char* to_string(Err e) {
  switch (e) {
    case Err::non_positive_density: return "NonPositiveDensity";
    case Err::gamma_one:            return "GammaOne";
    case Err::dimension_mismatch:   return "DimensionMismatch";
    case Err::unresolved_field:     return "UnresolvedField";
    case Err::bad_resolution:       return "BadResolution";
    case Err::domain_mismatch:      return "DomainMismatch";
    case Err::too_many_modes:       return "TooManyModes";
    case Err::positivity_lost:      return "PositivityLost";
    case Err::cfl_violation:        return "CFLViolation";
    case Err::fixed_point_diverged: return "FixedPointDiverged";
    case Err::bound_violated:       return "BoundViolated";
    case Err::audit_failed:         return "AuditFailed";
    case Err::window_empty:         return "WindowEmpty";
    case Err::unsupported_kind:     return "UnsupportedKind";
    case Err::grid_uncovered:       return "GridUncovered";
    case Err::horizon_exceeded:     return "HorizonExceeded";
    case Err::seam_mismatch:        return "SeamMismatch";
    case Err::empty_candidates:     return "EmptyCandidates";
    case Err::mixed_initial_data:   return "MixedInitialData";
    case Err::parse_error:          return "ParseError";
    case Err::validation_error:     return "ValidationError";
    case Err::io_error:             return "IoError";
  }
  return "UnknownError";
}

class Exception : public std::runtime_error {
 public:
  Exception(Err code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}
  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) {
  throw Exception(code, msg);
}

inline void require(bool ok, Err code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

}  // namespace qfluid
