#pragma once

#include "lqgame/types.hpp"

#include <vector>

namespace lqgame {

// Builds (Q', R') with R'_ij = new_R[i][j] for j != i, R'_ii = R_ii and
//   Q'_i = Q_i + sum_{j != i} K_{j,o}^T (R_ij - R'_ij) K_{j,o}.
// Diagonal entries of new_R are ignored. With require_psd, a non-PSD Q'_i
// raises NotPositiveDefinite.
CostParameters generate_equivalent(const CostParameters& base, const FeedbackProfile& observed,
                                   const std::vector<std::vector<Matrix>>& new_R,
                                   bool require_psd = false);

struct VerifyOptions {
  double value_tol = 1e-9;
  double gain_tol = 1e-8;
  // When false only the shared-equilibrium condition is checked.
  bool require_same_value = true;
};

struct EquivalenceReport {
  bool equivalent = false;
  std::vector<double> value_difference;  // ||P_i - P'_i||_F
  std::vector<double> gain_error_first;  // ||best response - K_{i,o}||_F
  std::vector<double> gain_error_second;
};

EquivalenceReport verify_equivalent(const Game& first, const Game& second,
                                    const FeedbackProfile& observed,
                                    const VerifyOptions& options = {});

}  // namespace lqgame
