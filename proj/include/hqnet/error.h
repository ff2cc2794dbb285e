#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hqnet {

enum class ErrorCode {
  grid_too_coarse,
  division_by_zero,
  domain_error,
  probability_overflow,
  zero_distance,
  eigen_failure,
  combinatorial_overflow,
  config_invalid,
  window_overflow,
  unsorted_stream,
  insufficient_statistics,
  model_inconsistent,
  io_error,
  metadata_mismatch,
};

std::string_view to_string(ErrorCode code);

// Single exception type; callers branch on code() rather than on subclasses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hqnet
