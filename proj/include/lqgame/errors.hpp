#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lqgame {

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kUnstableClosedLoop,
  kIllConditioned,
  kNoConvergence,
  kMaxIterations,
  kDivergenceRisk,
  kDivergentTrajectory,
  kInsufficientData,
  kPersistenceOfExcitation,
  kNotPositiveDefinite,
  kConfigError,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Base of every error raised by the library. Carries a machine-readable code
// next to the human-readable message.
class GameError : public std::runtime_error {
 public:
  GameError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DimensionMismatch : public GameError {
 public:
  DimensionMismatch(const std::string& message,
                    std::optional<std::size_t> player = std::nullopt)
      : GameError(ErrorCode::kDimensionMismatch, message), player_(player) {}

  // Offending player, when the mismatch is attributable to one.
  std::optional<std::size_t> player() const noexcept { return player_; }

 private:
  std::optional<std::size_t> player_;
};

class UnstableClosedLoop : public GameError {
 public:
  UnstableClosedLoop(const std::string& message, double spectral_radius)
      : GameError(ErrorCode::kUnstableClosedLoop, message),
        spectral_radius_(spectral_radius) {}

  double spectral_radius() const noexcept { return spectral_radius_; }

 private:
  double spectral_radius_;
};

class IllConditioned : public GameError {
 public:
  IllConditioned(const std::string& message, double condition_number)
      : GameError(ErrorCode::kIllConditioned, message),
        condition_number_(condition_number) {}

  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

}  // namespace lqgame
