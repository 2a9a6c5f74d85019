#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace lqgame {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Plant x(k+1) = A x(k) + sum_j B_j u_j(k).
class GameDynamics {
 public:
  GameDynamics(Matrix A, std::vector<Matrix> B);

  const Matrix& A() const { return A_; }
  const Matrix& B(std::size_t player) const { return B_.at(player); }
  const std::vector<Matrix>& B() const { return B_; }

  std::size_t state_dim() const { return static_cast<std::size_t>(A_.rows()); }
  std::size_t players() const { return B_.size(); }
  std::size_t input_dim(std::size_t player) const {
    return static_cast<std::size_t>(B_.at(player).cols());
  }

 private:
  Matrix A_;
  std::vector<Matrix> B_;
};

// Per-player state weights Q_i and the N x N table of input weights R_ij
// (R[i][j] weighs u_j in player i's stage cost).
struct CostParameters {
  std::vector<Matrix> Q;
  std::vector<std::vector<Matrix>> R;

  std::size_t players() const { return Q.size(); }

  // Shapes only: Q_i is n x n, R_ij is m_j x m_j.
  void check_shapes(const GameDynamics& dyn) const;
  // Shapes plus symmetry/definiteness. R_ij for j != i may be indefinite when
  // allow_indefinite_cross is set (equivalent-game generation relaxes it).
  void validate(const GameDynamics& dyn, bool allow_indefinite_cross = false) const;
  // Same checks without a plant; dimensions inferred from Q and R_ii.
  void validate_standalone(bool allow_indefinite_cross = false) const;
};

struct FeedbackProfile {
  std::vector<Matrix> K;

  std::size_t players() const { return K.size(); }
  void check(const GameDynamics& dyn) const;

  static FeedbackProfile zeros(const GameDynamics& dyn);
};

struct ValueSolution {
  std::vector<Matrix> P;
};

struct Game {
  GameDynamics dynamics;
  CostParameters costs;
};

// Settings shared by the model-based and model-free inverse solvers.
struct InverseSettings {
  std::vector<std::vector<Matrix>> fixed_R;
  std::vector<Matrix> Q0;
  std::vector<double> alpha;
  std::vector<double> rho;
  int max_iterations = 10000;
  bool freeze_converged = false;

  std::size_t players() const { return Q0.size(); }
  // Validates Q0 (symmetric PSD), fixed_R, alpha > 0 and rho > 0.
  void validate() const;

  // Q0 = scale * I for every player; alpha and rho broadcast.
  static InverseSettings uniform(std::vector<std::vector<Matrix>> fixed_R,
                                 std::size_t state_dim, double q0_scale = 0.1,
                                 double alpha = 1.0, double rho = 1e-3);
};

struct InverseProblem {
  GameDynamics dynamics;
  FeedbackProfile observed;
  InverseSettings settings;

  void validate() const;
};

}  // namespace lqgame
