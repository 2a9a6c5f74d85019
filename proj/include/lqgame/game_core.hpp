#pragma once

#include "lqgame/errors.hpp"
#include "lqgame/types.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace lqgame {

// Strict stability margin: |lambda| < 1 - kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-12;

// A - sum_j B_j K_j over all players, or over all players except `exclude`
// (the matrix A_i seen by player i when the others are fixed).
Matrix closed_loop(const GameDynamics& dyn, const FeedbackProfile& prof,
                   std::optional<std::size_t> exclude = std::nullopt);

struct StabilityReport {
  bool stable = false;
  double spectral_radius = 0.0;
};

StabilityReport is_stabilizing(const GameDynamics& dyn, const FeedbackProfile& prof);

// Solves F^T P F - P + M = 0 by dense Kronecker vectorization.
// Throws UnstableClosedLoop when rho(F) >= 1 - kStabilityMargin.
Matrix solve_stein(const Matrix& F, const Matrix& M);

// Q_i + sum_j K_j^T R_ij K_j - P_i + F^T P_i F with F the full closed loop.
Matrix gare_residual(const Game& game, const FeedbackProfile& prof, const Matrix& P,
                     std::size_t player);

// K_i = (R_ii + B_i^T P_i B_i)^{-1} B_i^T P_i (A - sum_{j != i} B_j K_j).
// `others` is a full profile; its entry for `player` is ignored.
Matrix best_response_gain(const GameDynamics& dyn, const Matrix& R_ii, const Matrix& P,
                          const FeedbackProfile& others, std::size_t player);

// Truncated sum over t = 0..horizon of x^T Q_i x + sum_j u_j^T R_ij u_j along
// the closed loop started at x0.
std::vector<double> evaluate_cost(const Game& game, const FeedbackProfile& prof,
                                  const Vector& x0, long horizon);

struct NeCertificate {
  bool certified = false;
  std::vector<double> residual_norm;   // ||GARE residual||_F
  std::vector<double> residual_bound;  // 1e-6 * max(1, ||P_i||_F)
  std::vector<double> gain_error;      // ||best response - K_i||_F
  ValueSolution values;
};

inline constexpr double kCertGainTol = 1e-6;

// Certifies `prof` as a Nash equilibrium: P_i from the Stein equation on the
// full closed loop, small GARE residuals and best responses reproducing K_i.
// Throws UnstableClosedLoop for non-stabilizing profiles.
NeCertificate certify_ne(const Game& game, const FeedbackProfile& prof,
                         double gain_tol = kCertGainTol);

struct ForwardOptions {
  double tol = 1e-12;
  int max_iterations = 10000;
};

struct ForwardSolution {
  FeedbackProfile profile;
  ValueSolution values;
  int iterations = 0;
};

class NoConvergence : public GameError {
 public:
  NoConvergence(const std::string& message, ForwardSolution last)
      : GameError(ErrorCode::kNoConvergence, message), last_(std::move(last)) {}

  const ForwardSolution& last_iterate() const noexcept { return last_; }

 private:
  ForwardSolution last_;
};

// Lyapunov iterations: Stein solve per player on the current closed loop, then
// simultaneous best-response update, until max |K change| < tol.
ForwardSolution solve_forward_ne(const Game& game, const FeedbackProfile& initial,
                                 const ForwardOptions& options = {});

// A stabilizing starting profile: the zero profile when A is already stable,
// otherwise the centralized LQR gain for the stacked inputs (Q = I, R = I),
// split row-wise among the players.
FeedbackProfile stabilizing_profile(const GameDynamics& dyn);

}  // namespace lqgame
