#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trimlab {

enum class ErrorKind {
  invalid_parameter,
  dimension_mismatch,
  grid_mismatch,
  epsilon_too_large,
  irregular_drift,
  infeasible_mass,
  active_set_cycle,
  horizon_exceeded,
  rate_overflow,
  empty_population,
  clip_mass_exceeded,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace trimlab
