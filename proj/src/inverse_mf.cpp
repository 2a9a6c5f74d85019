#include "lqgame/inverse_mf.hpp"

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

// Nothing in this file may see the plant matrices: every quantity comes from
// logged states and inputs, the observed gains and the cost settings.

namespace lqgame {

namespace {

constexpr double kDivergedNorm = 1e100;

std::string player_tag(std::size_t i) { return "player " + std::to_string(i + 1); }

Matrix state_features(const Trajectory& traj) {
  const auto n = static_cast<int>(traj.states.front().size());
  Matrix Theta(static_cast<Eigen::Index>(traj.length()), linalg::svec_size(n));
  for (std::size_t k = 0; k < traj.length(); ++k) {
    Theta.row(static_cast<Eigen::Index>(k)) = linalg::quadratic_features(traj.states[k]).transpose();
  }
  return Theta;
}

// Stage cost of the excited player along the logged samples, with Q_s in
// place of the unknown state weight.
Vector stage_targets(const Trajectory& traj, const Matrix& Q_s, std::span<const Matrix> R_row,
                     const FeedbackProfile& observed, std::size_t player) {
  Matrix W = Q_s;
  for (std::size_t j = 0; j < observed.K.size(); ++j) {
    if (j == player) continue;
    W += observed.K[j].transpose() * R_row[j] * observed.K[j];
  }
  W = linalg::symmetrize(W);
  const Matrix& R_ii = R_row[player];
  Vector Phi(static_cast<Eigen::Index>(traj.length()));
  for (std::size_t k = 0; k < traj.length(); ++k) {
    const Vector& x = traj.states[k];
    const Vector& u = traj.inputs[k];
    Phi(static_cast<Eigen::Index>(k)) = x.dot(W * x) + u.dot(R_ii * u);
  }
  return Phi;
}

void require_kernel_rows(std::size_t rows, int n, int m, std::size_t player) {
  const auto needed = static_cast<std::size_t>(h_unknowns(n, m));
  if (rows < needed) {
    throw GameError(ErrorCode::kInsufficientData,
                    player_tag(player) + ": " + std::to_string(rows) + " samples for " +
                        std::to_string(needed) + " kernel unknowns");
  }
}

void require_excitation(const Matrix& Psi, std::size_t player) {
  const double cond = linalg::gram_condition(Psi);
  if (!(cond <= kPeConditionLimit)) {
    throw GameError(ErrorCode::kPersistenceOfExcitation,
                    player_tag(player) + ": kernel regressors are not persistently exciting "
                                         "(cond = " + std::to_string(cond) + ")");
  }
}

void require_state_rows(const Matrix& Theta, std::size_t player) {
  const auto needed = static_cast<Eigen::Index>(Theta.cols());
  if (Theta.rows() < needed) {
    throw GameError(ErrorCode::kInsufficientData,
                    player_tag(player) + ": too few samples for the state-weight fit");
  }
  const double cond = linalg::gram_condition(Theta);
  if (!(cond <= kPeConditionLimit)) {
    throw IllConditioned(player_tag(player) + ": state samples do not determine Q", cond);
  }
}

}  // namespace

QFunctionKernel::QFunctionKernel(Matrix H, int state_dim) : H_(std::move(H)), n_(state_dim) {
  if (H_.rows() != H_.cols() || n_ < 1 || H_.rows() <= n_) {
    throw DimensionMismatch("kernel must be square with state and input blocks");
  }
}

Matrix QFunctionKernel::gain() const {
  const Matrix Huu = uu();
  if (!linalg::is_pd(Huu)) {
    throw GameError(ErrorCode::kNotPositiveDefinite,
                    "H_uu is not positive definite; the regression is corrupted (too much noise "
                    "or too little excitation)");
  }
  return linalg::solve(Huu, ux(), "kernel gain");
}

RegressionBatch build_h_regression(const Trajectory& traj, const Matrix& Q_s,
                                   std::span<const Matrix> R_row,
                                   const FeedbackProfile& observed, std::size_t player) {
  traj.check_shape();
  if (player >= observed.K.size() || R_row.size() != observed.K.size()) {
    throw DimensionMismatch("player index or R row does not match the gain profile", player);
  }
  const auto n = static_cast<int>(traj.states.front().size());
  const auto m = static_cast<int>(traj.inputs.front().size());
  if (Q_s.rows() != n || Q_s.cols() != n) throw DimensionMismatch("Q_s has wrong size", player);
  require_kernel_rows(traj.length(), n, m, player);

  RegressionBatch batch;
  batch.Psi = kernel_regressors(traj, observed.K[player], traj.length());
  require_excitation(batch.Psi, player);
  batch.Phi = stage_targets(traj, Q_s, R_row, observed, player);
  batch.Theta = state_features(traj);
  return batch;
}

HSolve solve_h(const RegressionBatch& batch, int state_dim) {
  const Matrix& Psi = batch.Psi;
  if (Psi.rows() != batch.Phi.size()) throw DimensionMismatch("Psi and Phi row counts differ");
  const double cond = linalg::gram_condition(Psi);
  if (!(cond <= kPeConditionLimit)) {
    throw IllConditioned("kernel regression is rank deficient or badly conditioned", cond);
  }
  int dim = 0;
  while (linalg::svec_size(dim) < Psi.cols()) ++dim;
  if (linalg::svec_size(dim) != Psi.cols()) throw DimensionMismatch("Psi has a non-triangular width");

  const Vector h = Psi.colPivHouseholderQr().solve(batch.Phi);
  Matrix H = linalg::symmetrize(linalg::unsvec(h, dim));
  HSolve out{QFunctionKernel(std::move(H), state_dim), (Psi * h - batch.Phi).norm()};
  return out;
}

Matrix delta_from_h(const QFunctionKernel& H, const Matrix& K_observed) {
  const Matrix d = H.gain() - K_observed;
  return linalg::symmetrize(d.transpose() * H.uu() * d);
}

Matrix update_q_lsq(const Trajectory& traj, const Matrix& Q_s, const Matrix& Delta,
                    double alpha) {
  traj.check_shape();
  const Matrix Theta = state_features(traj);
  require_state_rows(Theta, traj.excited_player);
  const Vector eta = Theta * linalg::svec(linalg::symmetrize(Q_s + alpha * Delta));
  const Vector q = Theta.colPivHouseholderQr().solve(eta);
  return linalg::symmetrize(linalg::unsvec(q, static_cast<int>(Q_s.rows())));
}

MfResult mf_run(const FeedbackProfile& observed, std::span<const Trajectory> data,
                const InverseSettings& settings, const MfOptions& options) {
  settings.validate();
  const std::size_t N = observed.K.size();
  if (N == 0) throw GameError(ErrorCode::kInvalidArgument, "no players");
  if (settings.Q0.size() != N || data.size() != N) {
    throw DimensionMismatch("need one trajectory and one Q0 per player");
  }
  const auto n = static_cast<int>(observed.K.front().cols());

  struct PlayerData {
    const Trajectory* traj = nullptr;
    Eigen::ColPivHouseholderQR<Matrix> psi_qr;
    Eigen::ColPivHouseholderQR<Matrix> theta_qr;
    Matrix Theta;
  };
  std::vector<PlayerData> pd(N);
  for (const auto& traj : data) {
    if (traj.excited_player >= N || pd[traj.excited_player].traj != nullptr) {
      throw GameError(ErrorCode::kInvalidArgument,
                      "need exactly one trajectory excited by each player");
    }
    pd[traj.excited_player].traj = &traj;
  }
  for (std::size_t i = 0; i < N; ++i) {
    const Trajectory& traj = *pd[i].traj;
    traj.check_shape();
    const auto m = static_cast<int>(observed.K[i].rows());
    if (traj.states.front().size() != n || traj.inputs.front().size() != m ||
        observed.K[i].cols() != n) {
      throw DimensionMismatch("trajectory does not match the observed gain", i);
    }
    if (settings.fixed_R[i].size() != N || settings.Q0[i].rows() != n) {
      throw DimensionMismatch("cost settings do not match the gain profile", i);
    }
    require_kernel_rows(traj.length(), n, m, i);
    const Matrix Psi = kernel_regressors(traj, observed.K[i], traj.length());
    require_excitation(Psi, i);
    pd[i].psi_qr.compute(Psi);
    pd[i].Theta = state_features(traj);
    require_state_rows(pd[i].Theta, i);
    pd[i].theta_qr.compute(pd[i].Theta);
  }

  std::vector<Matrix> Q = settings.Q0;
  std::vector<std::optional<QFunctionKernel>> kernels(N);
  std::vector<Matrix> gains(N);
  std::vector<bool> frozen(N, false);
  MfResult result;
  IterationTrace& trace = result.trace;
  for (std::size_t i = 0; i < N; ++i) {
    if (settings.alpha[i] > 1.0) {
      trace.warnings.push_back("alpha_" + std::to_string(i + 1) +
                               " > 1: update is no longer a convex combination");
    }
  }
  if (options.record_history) result.q_history.push_back(Q);

  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 1; s <= settings.max_iterations; ++s) {
    IterationRecord rec;
    rec.iteration = s;
    rec.q_step_norm.assign(N, 0.0);
    rec.gain_distance.assign(N, 0.0);
    rec.spectral_radius.assign(N, std::numeric_limits<double>::quiet_NaN());
    bool all_done = true;
    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) {
      if (frozen[i]) {
        rec.gain_distance[i] = (gains[i] - observed.K[i]).norm();
        continue;
      }
      const Trajectory& traj = *pd[i].traj;
      const std::span<const Matrix> R_row(settings.fixed_R[i]);
      const Vector Phi = stage_targets(traj, Q[i], R_row, observed, i);
      const Vector h = pd[i].psi_qr.solve(Phi);
      QFunctionKernel kernel(linalg::symmetrize(linalg::unsvec(h, static_cast<int>(
                                 n + observed.K[i].rows()))),
                             n);
      gains[i] = kernel.gain();
      const Matrix Delta = delta_from_h(kernel, observed.K[i]);
      const Vector eta = pd[i].Theta * linalg::svec(linalg::symmetrize(
                                             Q[i] + settings.alpha[i] * Delta));
      Matrix next = linalg::symmetrize(linalg::unsvec(pd[i].theta_qr.solve(eta), n));

      rec.q_step_norm[i] = (next - Q[i]).norm();
      rec.gain_distance[i] = (gains[i] - observed.K[i]).norm();
      const double qn = next.norm();
      finite = finite && std::isfinite(qn) && qn < kDivergedNorm;
      Q[i] = std::move(next);
      kernels[i] = std::move(kernel);

      const bool done = rec.q_step_norm[i] <= settings.rho[i];
      if (done && settings.freeze_converged) frozen[i] = true;
      all_done = all_done && done;
    }
    rec.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.records.push_back(std::move(rec));
    if (options.record_history) {
      result.q_history.push_back(Q);
      std::vector<QFunctionKernel> ks;
      for (const auto& k : kernels) ks.push_back(*k);
      result.kernel_history.push_back(std::move(ks));
    }

    if (!finite) {
      trace.status = RunStatus::kError;
      throw MaxIterationsError("Q iterates diverged at iteration " + std::to_string(s),
                               std::move(trace));
    }
    if (all_done) {
      trace.status = RunStatus::kConverged;
      result.costs = CostParameters{Q, settings.fixed_R};
      for (auto& k : kernels) result.kernels.push_back(std::move(*k));
      result.gains = FeedbackProfile{gains};
      return result;
    }
  }
  trace.status = RunStatus::kMaxIterations;
  throw MaxIterationsError("no convergence within " + std::to_string(settings.max_iterations) +
                               " iterations",
                           std::move(trace));
}

}  // namespace lqgame
