#pragma once

#include <stdexcept>
#include <string>

namespace lelab {

// Failure taxonomy shared by every module. Input-validation codes map to CLI
// exit code 2, numerical failures to exit code 1.
enum class ErrorCode {
  invalid_range,
  nonconvergent_tail,
  singular_matrix,
  no_convergence,
  degenerate_window,
  exponent_out_of_range,
  bracket_not_found,
  tail_not_resolved,
  index_out_of_range,
  coincident_points,
  inside_hole,
  outside_ball,
  mesh_too_coarse,
  under_resolved_mesh,
  consistency_failure,
  converged_to_zero,
  newton_divergence,
  invalid_config,
  io_failure,
};

constexpr const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_range: return "invalid-range";
    case ErrorCode::nonconvergent_tail: return "nonconvergent-tail";
    case ErrorCode::singular_matrix: return "singular-matrix";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::degenerate_window: return "degenerate-window";
    case ErrorCode::exponent_out_of_range: return "exponent-out-of-range";
    case ErrorCode::bracket_not_found: return "bracket-not-found";
    case ErrorCode::tail_not_resolved: return "tail-not-resolved";
    case ErrorCode::index_out_of_range: return "index-out-of-range";
    case ErrorCode::coincident_points: return "coincident-points";
    case ErrorCode::inside_hole: return "inside-hole";
    case ErrorCode::outside_ball: return "outside-ball";
    case ErrorCode::mesh_too_coarse: return "mesh-too-coarse";
    case ErrorCode::under_resolved_mesh: return "under-resolved-mesh";
    case ErrorCode::consistency_failure: return "consistency-failure";
    case ErrorCode::converged_to_zero: return "converged-to-zero";
    case ErrorCode::newton_divergence: return "newton-divergence";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::io_failure: return "io-failure";
  }
  return "unknown";
}

// Whether a failure is the caller's fault (bad input) rather than numerical.
constexpr bool is_input_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_range:
    case ErrorCode::exponent_out_of_range:
    case ErrorCode::index_out_of_range:
    case ErrorCode::coincident_points:
    case ErrorCode::inside_hole:
    case ErrorCode::outside_ball:
    case ErrorCode::degenerate_window:
    case ErrorCode::invalid_config:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace lelab
