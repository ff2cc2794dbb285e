#include "hqnet/error.h"

namespace hqnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::grid_too_coarse: return "GridTooCoarse";
    case ErrorCode::division_by_zero: return "DivisionByZero";
    case ErrorCode::domain_error: return "DomainError";
    case ErrorCode::probability_overflow: return "ProbabilityOverflow";
    case ErrorCode::zero_distance: return "ZeroDistance";
    case ErrorCode::eigen_failure: return "EigenFailure";
    case ErrorCode::combinatorial_overflow: return "CombinatorialOverflow";
    case ErrorCode::config_invalid: return "ConfigInvalid";
    case ErrorCode::window_overflow: return "WindowOverflow";
    case ErrorCode::unsorted_stream: return "UnsortedStream";
    case ErrorCode::insufficient_statistics: return "InsufficientStatistics";
    case ErrorCode::model_inconsistent: return "ModelInconsistent";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::metadata_mismatch: return "MetadataMismatch";
  }
  return "Unknown";
}

}  // namespace hqnet
