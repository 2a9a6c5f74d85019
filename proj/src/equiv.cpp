#include "lqgame/equiv.hpp"

#include "lqgame/errors.hpp"
#include "lqgame/game_core.hpp"
#include "lqgame/linalg.hpp"

#include <string>

namespace lqgame {

namespace {

Matrix stage_weight(const Game& game, const FeedbackProfile& prof, std::size_t i) {
  Matrix M = game.costs.Q[i];
  for (std::size_t j = 0; j < prof.players(); ++j) {
    M += prof.K[j].transpose() * game.costs.R[i][j] * prof.K[j];
  }
  return linalg::symmetrize(M);
}

bool same_plant(const GameDynamics& a, const GameDynamics& b) {
  if (a.players() != b.players() || a.A() != b.A()) return false;
  for (std::size_t i = 0; i < a.players(); ++i) {
    if (a.B(i) != b.B(i)) return false;
  }
  return true;
}

}  // namespace

CostParameters generate_equivalent(const CostParameters& base, const FeedbackProfile& observed,
                                   const std::vector<std::vector<Matrix>>& new_R,
                                   bool require_psd) {
  const std::size_t N = base.players();
  if (observed.players() != N || base.R.size() != N || new_R.size() != N) {
    throw DimensionMismatch("costs, gains and replacement R table disagree on player count");
  }
  CostParameters out = base;
  for (std::size_t i = 0; i < N; ++i) {
    if (new_R[i].size() != N || base.R[i].size() != N) {
      throw DimensionMismatch("R table row has the wrong length", i);
    }
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      const Matrix& Rn = new_R[i][j];
      if (Rn.rows() != base.R[i][j].rows() || Rn.cols() != base.R[i][j].cols()) {
        throw DimensionMismatch("replacement R_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                    " has the wrong size",
                                i);
      }
      if (!linalg::is_symmetric(Rn)) {
        throw GameError(ErrorCode::kInvalidArgument,
                        "replacement R_" + std::to_string(i + 1) + std::to_string(j + 1) +
                            " is not symmetric");
      }
      const Matrix& K = observed.K[j];
      out.Q[i] += K.transpose() * (base.R[i][j] - Rn) * K;
      out.R[i][j] = Rn;
    }
    out.Q[i] = linalg::symmetrize(out.Q[i]);
    if (require_psd && !linalg::is_psd(out.Q[i])) {
      throw GameError(ErrorCode::kNotPositiveDefinite,
                      "equivalent Q_" + std::to_string(i + 1) + " is not positive semidefinite");
    }
  }
  return out;
}

EquivalenceReport verify_equivalent(const Game& first, const Game& second,
                                    const FeedbackProfile& observed,
                                    const VerifyOptions& options) {
  if (!same_plant(first.dynamics, second.dynamics)) {
    throw GameError(ErrorCode::kInvalidArgument,
                    "equivalence is only defined for games on the same plant");
  }
  const auto& dyn = first.dynamics;
  observed.check(dyn);
  first.costs.check_shapes(dyn);
  second.costs.check_shapes(dyn);
  const auto stab = is_stabilizing(dyn, observed);
  if (!stab.stable) {
    throw UnstableClosedLoop("observed profile is not stabilizing", stab.spectral_radius);
  }

  const Matrix F = closed_loop(dyn, observed);
  EquivalenceReport report;
  report.equivalent = true;
  for (std::size_t i = 0; i < dyn.players(); ++i) {
    const Matrix P1 = solve_stein(F, stage_weight(first, observed, i));
    const Matrix P2 = solve_stein(F, stage_weight(second, observed, i));
    const Matrix K1 = best_response_gain(dyn, first.costs.R[i][i], P1, observed, i);
    const Matrix K2 = best_response_gain(dyn, second.costs.R[i][i], P2, observed, i);
    report.value_difference.push_back((P1 - P2).norm());
    report.gain_error_first.push_back((K1 - observed.K[i]).norm());
    report.gain_error_second.push_back((K2 - observed.K[i]).norm());
    const bool ok = report.gain_error_first.back() <= options.gain_tol &&
                    report.gain_error_second.back() <= options.gain_tol &&
                    (!options.require_same_value ||
                     report.value_difference.back() <= options.value_tol);
    report.equivalent = report.equivalent && ok;
  }
  return report;
}

}  // namespace lqgame
