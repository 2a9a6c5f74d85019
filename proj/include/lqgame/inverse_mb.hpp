#pragma once

#include "lqgame/trace.hpp"
#include "lqgame/types.hpp"

#include <vector>

namespace lqgame {

// State after step s of the model-based inverse iteration.
struct MbIterationState {
  int s = 0;
  std::vector<Matrix> Q;        // Q_i^(s)
  std::vector<Matrix> P;        // P_i^(s) (empty before the first step)
  std::vector<Matrix> delta;    // delta_i = K~_i - K_{i,o}
  std::vector<Matrix> Delta;    // delta_i^T (R_ii + B_i^T P_i B_i) delta_i
  std::vector<Matrix> Ktilde;
  std::vector<double> q_step_norm;
  std::vector<bool> frozen;
  // Players whose Q_i^(0) + sum_j K_{j,o}^T R_ij K_{j,o} was only PSD and got
  // 1e-12 I added to Q_i^(0).
  std::vector<bool> jitter_applied;

  static MbIterationState initial(const InverseProblem& problem);
};

// One sweep over all players: Stein solve for P_i^(s+1) on A_i - B_i K_{i,o}
// with Q_i^(s) + sum_j K_{j,o}^T R_ij K_{j,o}, then
// Q_i^(s+1) = Q_i^(s) + alpha_i Delta_i^(s+1).
MbIterationState mb_step(const InverseProblem& problem, const MbIterationState& state);

struct MbResult {
  CostParameters costs;  // recovered Q with the fixed R table
  ValueSolution values;
  FeedbackProfile gains;  // K~_i from the last P
  IterationTrace trace;
  std::vector<bool> jitter_applied;
};

// Runs mb_step until every player has ||Q_i^(s+1) - Q_i^(s)||_F <= rho_i.
// Throws UnstableClosedLoop up front if some A_i - B_i K_{i,o} is not Schur,
// and MaxIterationsError (trace attached) when the budget runs out or the
// iterates stop being finite.
MbResult mb_run(const InverseProblem& problem);

struct ValueEquationResiduals {
  // Q_i + sum_j K_{j,o}^T R_ij K_{j,o} - P_i + (A_i - B_i K_{i,o})^T P_i (..)
  std::vector<double> observed_gain;
  // Q_i + sum_{j!=i} K_{j,o}^T R_ij K_{j,o} + K_i^T R_ii K_i - P_i
  //     + (A_i - B_i K_i)^T P_i (A_i - B_i K_i)
  std::vector<double> recovered_gain;
};

ValueEquationResiduals value_equation_residuals(const InverseProblem& problem, const CostParameters& costs,
                               const ValueSolution& values, const FeedbackProfile& gains);

}  // namespace lqgame
