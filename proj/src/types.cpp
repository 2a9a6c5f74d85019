#include "lqgame/types.hpp"

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"
#include "lqgame/trace.hpp"

#include <string>

namespace lqgame {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kMaxIterations: return "MaxIterations";
    case ErrorCode::kDivergenceRisk: return "DivergenceRisk";
    case ErrorCode::kDivergentTrajectory: return "DivergentTrajectory";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kPersistenceOfExcitation: return "PersistenceOfExcitation";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::kConverged: return "Converged";
    case RunStatus::kMaxIterations: return "MaxIterations";
    case RunStatus::kError: return "Error";
  }
  return "Unknown";
}

namespace {

std::string dims(const Matrix& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

void require_square(const Matrix& M, Eigen::Index size, const std::string& what,
                    std::optional<std::size_t> player) {
  if (M.rows() != size || M.cols() != size) {
    throw DimensionMismatch(what + " must be " + std::to_string(size) + "x" +
                                std::to_string(size) + ", got " + dims(M),
                            player);
  }
}

void check_cost_values(const CostParameters& costs, bool allow_indefinite_cross) {
  const std::size_t N = costs.players();
  for (std::size_t i = 0; i < N; ++i) {
    const auto tag = " of player " + std::to_string(i + 1);
    if (!linalg::is_symmetric(costs.Q[i])) {
      throw GameError(ErrorCode::kInvalidArgument, "Q" + tag + " is not symmetric");
    }
    if (!linalg::is_psd(costs.Q[i])) {
      throw GameError(ErrorCode::kNotPositiveDefinite, "Q" + tag + " is not PSD");
    }
    for (std::size_t j = 0; j < N; ++j) {
      const Matrix& R = costs.R[i][j];
      const auto name = "R_" + std::to_string(i + 1) + std::to_string(j + 1);
      if (!linalg::is_symmetric(R)) {
        throw GameError(ErrorCode::kInvalidArgument, name + " is not symmetric");
      }
      if (i == j) {
        if (!linalg::is_pd(R)) {
          throw GameError(ErrorCode::kNotPositiveDefinite, name + " is not positive definite");
        }
      } else if (!allow_indefinite_cross && !linalg::is_psd(R)) {
        throw GameError(ErrorCode::kNotPositiveDefinite, name + " is not PSD");
      }
    }
  }
}

void check_r_table(const std::vector<std::vector<Matrix>>& R, std::size_t N,
                   const std::vector<Eigen::Index>& input_dims) {
  if (R.size() != N) {
    throw DimensionMismatch("R table has " + std::to_string(R.size()) + " rows, expected " +
                            std::to_string(N));
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (R[i].size() != N) {
      throw DimensionMismatch("R table row " + std::to_string(i + 1) + " has wrong length", i);
    }
    for (std::size_t j = 0; j < N; ++j) {
      require_square(R[i][j], input_dims[j],
                     "R_" + std::to_string(i + 1) + std::to_string(j + 1), j);
    }
  }
}

}  // namespace

GameDynamics::GameDynamics(Matrix A, std::vector<Matrix> B) : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) {
    throw DimensionMismatch("A must be square and non-empty, got " + dims(A_));
  }
  if (B_.empty()) {
    throw DimensionMismatch("a game needs at least one player");
  }
  for (std::size_t i = 0; i < B_.size(); ++i) {
    if (B_[i].rows() != A_.rows() || B_[i].cols() < 1) {
      throw DimensionMismatch("B_" + std::to_string(i + 1) + " must have " +
                                  std::to_string(A_.rows()) + " rows and >= 1 column, got " +
                                  dims(B_[i]),
                              i);
    }
  }
}

void CostParameters::check_shapes(const GameDynamics& dyn) const {
  const std::size_t N = dyn.players();
  if (Q.size() != N) {
    throw DimensionMismatch("expected " + std::to_string(N) + " Q matrices, got " +
                            std::to_string(Q.size()));
  }
  const auto n = static_cast<Eigen::Index>(dyn.state_dim());
  std::vector<Eigen::Index> m(N);
  for (std::size_t i = 0; i < N; ++i) {
    require_square(Q[i], n, "Q_" + std::to_string(i + 1), i);
    m[i] = static_cast<Eigen::Index>(dyn.input_dim(i));
  }
  check_r_table(R, N, m);
}

void CostParameters::validate(const GameDynamics& dyn, bool allow_indefinite_cross) const {
  check_shapes(dyn);
  check_cost_values(*this, allow_indefinite_cross);
}

void CostParameters::validate_standalone(bool allow_indefinite_cross) const {
  const std::size_t N = Q.size();
  if (N == 0) throw DimensionMismatch("no players");
  const Eigen::Index n = Q[0].rows();
  std::vector<Eigen::Index> m(N);
  if (R.size() != N) throw DimensionMismatch("R table size does not match Q list");
  for (std::size_t i = 0; i < N; ++i) {
    require_square(Q[i], n, "Q_" + std::to_string(i + 1), i);
    if (R[i].size() != N) throw DimensionMismatch("R table is not N x N", i);
    m[i] = R[i][i].rows();
  }
  check_r_table(R, N, m);
  check_cost_values(*this, allow_indefinite_cross);
}

void FeedbackProfile::check(const GameDynamics& dyn) const {
  if (K.size() != dyn.players()) {
    throw DimensionMismatch("profile has " + std::to_string(K.size()) + " gains, game has " +
                            std::to_string(dyn.players()) + " players");
  }
  for (std::size_t i = 0; i < K.size(); ++i) {
    if (K[i].rows() != static_cast<Eigen::Index>(dyn.input_dim(i)) ||
        K[i].cols() != static_cast<Eigen::Index>(dyn.state_dim())) {
      throw DimensionMismatch("K_" + std::to_string(i + 1) + " must be " +
                                  std::to_string(dyn.input_dim(i)) + "x" +
                                  std::to_string(dyn.state_dim()) + ", got " + dims(K[i]),
                              i);
    }
  }
}

FeedbackProfile FeedbackProfile::zeros(const GameDynamics& dyn) {
  FeedbackProfile prof;
  for (std::size_t i = 0; i < dyn.players(); ++i) {
    prof.K.push_back(Matrix::Zero(static_cast<Eigen::Index>(dyn.input_dim(i)),
                                  static_cast<Eigen::Index>(dyn.state_dim())));
  }
  return prof;
}

void InverseSettings::validate() const {
  const std::size_t N = players();
  if (N == 0) throw GameError(ErrorCode::kInvalidArgument, "no players in inverse settings");
  if (alpha.size() != N || rho.size() != N) {
    throw DimensionMismatch("alpha and rho need one entry per player");
  }
  CostParameters probe{Q0, fixed_R};
  probe.validate_standalone();
  for (std::size_t i = 0; i < N; ++i) {
    if (!(alpha[i] > 0.0)) {
      throw GameError(ErrorCode::kInvalidArgument,
                      "alpha_" + std::to_string(i + 1) + " must be positive");
    }
    if (!(rho[i] > 0.0)) {
      throw GameError(ErrorCode::kInvalidArgument,
                      "rho_" + std::to_string(i + 1) + " must be positive");
    }
  }
  if (max_iterations < 1) {
    throw GameError(ErrorCode::kInvalidArgument, "max_iterations must be positive");
  }
}

InverseSettings InverseSettings::uniform(std::vector<std::vector<Matrix>> fixed_R,
                                         std::size_t state_dim, double q0_scale, double alpha,
                                         double rho) {
  InverseSettings s;
  const std::size_t N = fixed_R.size();
  const auto n = static_cast<Eigen::Index>(state_dim);
  s.fixed_R = std::move(fixed_R);
  s.Q0.assign(N, q0_scale * Matrix::Identity(n, n));
  s.alpha.assign(N, alpha);
  s.rho.assign(N, rho);
  return s;
}

void InverseProblem::validate() const {
  observed.check(dynamics);
  settings.validate();
  if (settings.players() != dynamics.players()) {
    throw DimensionMismatch("inverse settings and dynamics disagree on the player count");
  }
  CostParameters probe{settings.Q0, settings.fixed_R};
  probe.check_shapes(dynamics);
}

}  // namespace lqgame
