#pragma once

#include <stdexcept>
#include <string>

namespace elgof {

enum class ErrorCode {
  invalid_argument,
  hull_violation,
  non_convergence,
  singular,
  separation,
  too_many_excluded,
  side_count,
  nothing_to_calibrate,
  replicate_failures,
  file_not_found,
  bad_input,
  unknown_family,
};

/// Every failure raised by the library carries a code so front ends can map
/// it to a distinct exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace elgof
