#pragma once

// Shared fixtures and independent reference computations for the tests. The
// reference routines here deliberately avoid the library's solvers.

#include "lqgame/game_core.hpp"
#include "lqgame/types.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <vector>

namespace lqgame::testing {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix M(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) M(r, c++) = v;
    ++r;
  }
  return M;
}

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline double max_abs(const Matrix& M) { return M.cwiseAbs().maxCoeff(); }

// Runs `fn` and returns the code of the GameError it raised, if any.
template <class Fn>
std::optional<ErrorCode> error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const GameError& e) {
    return e.code();
  }
  return std::nullopt;
}

// Four-player game with an open-loop unstable plant and scalar inputs.
struct FourPlayerFixture {
  GameDynamics dyn;
  CostParameters true_costs;
  FeedbackProfile observed;
  std::vector<std::vector<Matrix>> fixed_R;
  std::vector<Matrix> reference_Q;
  std::vector<Matrix> reference_P;
  std::vector<Matrix> reference_K;
};

inline FourPlayerFixture four_player() {
  GameDynamics dyn(mat({{1.1, 0.09983}, {-0.09983, 0.995}}),
                   {mat({{0.2097}, {0.08984}}), mat({{0.2147}, {0.2895}}),
                    mat({{0.2097}, {0.1897}}), mat({{0.2}, {0.1}})});
  const Matrix z = scalar(0.0);
  const Matrix o = scalar(1.0);
  CostParameters costs{
      {mat({{5, 0}, {0, 7}}), mat({{10, 0}, {0, 3}}), mat({{3, 0}, {0, 1}}), mat({{1, 0}, {0, 1}})},
      {{o, o, z, o}, {z, o, o, z}, {o, z, o, z}, {z, z, z, o}}};
  FeedbackProfile observed{{mat({{2.2058, -0.6285}}), mat({{0.3693, 1.1207}}),
                            mat({{0.3216, 0.1016}}), mat({{0.1883, -0.0226}})}};
  std::vector<std::vector<Matrix>> fixed_R{{scalar(2), z, z, z},
                                           {z, scalar(0.5), z, z},
                                           {z, z, scalar(1), z},
                                           {z, z, z, scalar(4)}};
  return {std::move(dyn),
          std::move(costs),
          std::move(observed),
          std::move(fixed_R),
          {mat({{19.2252, -1.2966}, {-1.2966, 0.2215}}), mat({{3.6298, 1.1197}, {1.1197, 0.5718}}),
           mat({{2.8970, 0.5067}, {0.5067, 0.0996}}), mat({{5.5080, -0.1665}, {-0.1665, 0.0212}})},
          {mat({{41.7888, -8.2424}, {-8.2424, 2.7042}}), mat({{4.9813, 0.6768}, {0.6768, 2.3762}}),
           mat({{3.4643, 0.6572}, {0.6572, 0.1779}}), mat({{7.3840, -0.4517}, {-0.4517, 0.0901}})},
          {mat({{2.1898, -0.6298}}), mat({{0.3543, 1.1193}}), mat({{0.3058, 0.1002}}),
           mat({{0.1731, -0.0236}})}};
}

inline InverseProblem four_player_problem(double q0_scale = 0.1, double alpha = 1.0) {
  auto fx = four_player();
  return {fx.dyn, fx.observed, InverseSettings::uniform(fx.fixed_R, 2, q0_scale, alpha, 1e-3)};
}

// Two-player game on a stable plant, used for the data-driven solver.
struct TwoPlayerFixture {
  GameDynamics dyn;
  CostParameters true_costs;
  FeedbackProfile observed;
  std::vector<std::vector<Matrix>> fixed_R;
  std::vector<Matrix> reference_H;
  std::vector<Matrix> reference_Q;
  std::vector<Matrix> reference_K;
};

inline TwoPlayerFixture two_player() {
  const Matrix o = scalar(1.0);
  return {GameDynamics(mat({{0.77, 0.36}, {0, 0.85}}), {mat({{0.15}, {0.43}}), mat({{0.17}, {0.31}})}),
          CostParameters{{mat({{5, 0}, {0, 10}}), 3.0 * Matrix::Identity(2, 2)},
                         {{scalar(3), o}, {o, scalar(4)}}},
          FeedbackProfile{{mat({{0.1953, 0.9638}}), mat({{0.1839, 0.2254}})}},
          {{o, o}, {o, o}},
          {mat({{0.7478, 1.7403, 0.3901}, {1.7403, 6.6114, 1.9877}, {0.3901, 1.9877, 2.1069}}),
           mat({{1.0220, 1.1011, 0.4393}, {1.1011, 2.6281, 0.5886}, {0.4393, 0.5886, 2.5689}})},
          {mat({{0.4444, 0.9810}, {0.9810, 2.9255}}), mat({{0.5495, 0.5454}, {0.5454, 1.0222}})},
          {mat({{0.1851, 0.9434}}), mat({{0.1710, 0.2291}})}};
}

// Sum_{k < terms} (F^T)^k M F^k.
inline Matrix series_stein(const Matrix& F, const Matrix& M, int terms = 500) {
  Matrix P = Matrix::Zero(M.rows(), M.cols());
  Matrix term = M;
  for (int k = 0; k < terms; ++k) {
    P += term;
    term = F.transpose() * term * F;
  }
  return P;
}

// Series summed until the next term is negligible (capped at max_terms).
inline Matrix series_stein_converged(const Matrix& F, const Matrix& M, long max_terms = 2000000) {
  Matrix P = Matrix::Zero(M.rows(), M.cols());
  Matrix term = M;
  for (long k = 0; k < max_terms; ++k) {
    P += term;
    if (term.norm() <= 1e-18 * P.norm()) break;
    term = F.transpose() * term * F;
  }
  return P;
}

// Stabilizing DARE solution by Riccati value iteration from X = Q.
inline Matrix dare_by_iteration(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                                int iterations = 20000) {
  Matrix X = Q;
  for (int k = 0; k < iterations; ++k) {
    const Matrix G = R + B.transpose() * X * B;
    const Matrix next =
        A.transpose() * X * A -
        A.transpose() * X * B * G.ldlt().solve(B.transpose() * X * A) + Q;
    if ((next - X).norm() < 1e-14 * std::max(1.0, X.norm())) return next;
    X = next;
  }
  return X;
}

// Kernel of player i's Q-function for the value kernel P built from the plant:
// [[W + A_i^T P A_i, A_i^T P B_i], [B_i^T P A_i, R_ii + B_i^T P B_i]] with
// W = Q_i + sum_{j != i} K_j^T R_ij K_j.
inline Matrix plant_kernel(const Matrix& A_i, const Matrix& B_i, const Matrix& P, const Matrix& W,
                           const Matrix& R_ii) {
  const auto n = A_i.rows();
  const auto m = B_i.cols();
  Matrix H(n + m, n + m);
  H.topLeftCorner(n, n) = W + A_i.transpose() * P * A_i;
  H.topRightCorner(n, m) = A_i.transpose() * P * B_i;
  H.bottomLeftCorner(m, n) = B_i.transpose() * P * A_i;
  H.bottomRightCorner(m, m) = R_ii + B_i.transpose() * P * B_i;
  return H;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double shift) {
  std::normal_distribution<double> normal;
  Matrix M(n, n);
  for (Eigen::Index a = 0; a < M.size(); ++a) M.data()[a] = normal(rng);
  return M * M.transpose() + shift * Matrix::Identity(n, n);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> normal;
  Matrix M(r, c);
  for (Eigen::Index a = 0; a < M.size(); ++a) M.data()[a] = normal(rng);
  return M;
}

// Random stable matrix with spectral radius `radius`.
inline Matrix random_stable(std::mt19937_64& rng, Eigen::Index n, double radius) {
  Matrix F = random_matrix(rng, n, n);
  const double r = F.eigenvalues().cwiseAbs().maxCoeff();
  return r > 0 ? Matrix(F * (radius / r)) : F;
}

struct RandomGame {
  Game game;
  FeedbackProfile ne;
};

// Two-player game with n in {2, 3}, m_i in {1, 2}; plant spectral radius in
// [0.5, 1.2]; Q_i = M M^T + 0.1 I, R_ii = M M^T + 0.5 I, R_ij = M M^T. The
// equilibrium comes from the forward solver; draws whose forward solve fails
// return nullopt.
inline std::optional<RandomGame> random_game(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 1);
  std::uniform_real_distribution<double> radius(0.5, 1.2);
  const Eigen::Index n = 2 + pick(rng);
  const std::vector<Eigen::Index> m{1 + pick(rng), 1 + pick(rng)};
  const Matrix A = random_stable(rng, n, radius(rng));
  std::vector<Matrix> B{random_matrix(rng, n, m[0]), random_matrix(rng, n, m[1])};
  CostParameters costs;
  costs.R.assign(2, std::vector<Matrix>(2));
  for (std::size_t i = 0; i < 2; ++i) {
    costs.Q.push_back(random_spd(rng, n, 0.1));
    for (std::size_t j = 0; j < 2; ++j) {
      costs.R[i][j] = random_spd(rng, m[j], i == j ? 0.5 : 0.0);
    }
  }
  try {
    GameDynamics dyn(A, B);
    Game game{dyn, costs};
    const auto sol = solve_forward_ne(game, stabilizing_profile(dyn));
    return RandomGame{std::move(game), sol.profile};
  } catch (const GameError&) {
    return std::nullopt;
  }
}

}  // namespace lqgame::testing
