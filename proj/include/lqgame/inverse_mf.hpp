#pragma once

#include "lqgame/trace.hpp"
#include "lqgame/traj_sim.hpp"
#include "lqgame/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace lqgame {

// Symmetric (n+m) x (n+m) kernel of the Q-function
//   x_bar^T H x_bar with x_bar = (x, u_i).
class QFunctionKernel {
 public:
  QFunctionKernel(Matrix H, int state_dim);

  const Matrix& H() const { return H_; }
  int state_dim() const { return n_; }
  int input_dim() const { return static_cast<int>(H_.rows()) - n_; }

  Matrix xx() const { return H_.topLeftCorner(n_, n_); }
  Matrix xu() const { return H_.topRightCorner(n_, input_dim()); }
  Matrix ux() const { return H_.bottomLeftCorner(input_dim(), n_); }
  Matrix uu() const { return H_.bottomRightCorner(input_dim(), input_dim()); }

  // (H_uu)^{-1} H_ux.
  Matrix gain() const;

 private:
  Matrix H_;
  int n_;
};

struct RegressionBatch {
  Matrix Psi;       // rows: features(x_bar(k)) - features(x_bar'(k+1))
  Vector Phi;       // stage-cost targets
  Matrix Theta;     // rows: features(x(k))
  Vector EtaStack;  // Q-update targets

  std::size_t sample_count() const { return static_cast<std::size_t>(Psi.rows()); }
};

// Regression for the kernel of `player` at the current Q_s. `R_row` is row i
// of the fixed R table. x_bar'(k+1) pairs x(k+1) with the target-policy input
// -K_{i,o} x(k+1). Throws InsufficientData or a persistence-of-excitation error.
RegressionBatch build_h_regression(const Trajectory& traj, const Matrix& Q_s,
                                   std::span<const Matrix> R_row,
                                   const FeedbackProfile& observed, std::size_t player);

struct HSolve {
  QFunctionKernel kernel;
  double residual_norm = 0.0;
};

HSolve solve_h(const RegressionBatch& batch, int state_dim);

// (H_uu^{-1} H_ux - K_o)^T H_uu (H_uu^{-1} H_ux - K_o).
Matrix delta_from_h(const QFunctionKernel& H, const Matrix& K_observed);

// Least-squares fit of Q_{s+1} from x(k)^T (Q_s + alpha Delta) x(k).
Matrix update_q_lsq(const Trajectory& traj, const Matrix& Q_s, const Matrix& Delta,
                    double alpha);

struct MfOptions {
  // Store Q^(s) and H^(s) for every iteration (used for cross-checks).
  bool record_history = false;
};

struct MfResult {
  CostParameters costs;
  std::vector<QFunctionKernel> kernels;
  FeedbackProfile gains;
  IterationTrace trace;
  std::vector<std::vector<Matrix>> q_history;
  std::vector<std::vector<QFunctionKernel>> kernel_history;
};

// Model-free inverse iteration. Reads only the trajectories, the observed
// gains and the cost settings; never the plant.
MfResult mf_run(const FeedbackProfile& observed, std::span<const Trajectory> data,
                const InverseSettings& settings, const MfOptions& options = {});

}  // namespace lqgame
