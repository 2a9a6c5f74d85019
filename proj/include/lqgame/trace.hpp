#pragma once

#include "lqgame/errors.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lqgame {

struct IterationRecord {
  int iteration = 0;  // 1-based: record s describes the step producing Q^(s)
  std::vector<double> q_step_norm;
  std::vector<double> gain_distance;    // ||K~_i - K_{i,o}||_F
  std::vector<double> spectral_radius;  // of A_i - B_i K~_i; NaN when unknown
  double wall_clock_seconds = 0.0;
};

enum class RunStatus { kConverged, kMaxIterations, kError };

std::string_view to_string(RunStatus status);

struct IterationTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::kError;
  std::vector<std::string> warnings;

  int iterations() const { return static_cast<int>(records.size()); }
};

// Raised when an iterative inverse solver exhausts its budget. The partial
// trace is attached.
class MaxIterationsError : public GameError {
 public:
  MaxIterationsError(const std::string& message, IterationTrace trace)
      : GameError(ErrorCode::kMaxIterations, message), trace_(std::move(trace)) {}

  const IterationTrace& trace() const noexcept { return trace_; }

 private:
  IterationTrace trace_;
};

}  // namespace lqgame
