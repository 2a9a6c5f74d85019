#include "lqgame/game_core.hpp"

#include "lqgame/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lqgame {

namespace {

std::string player_tag(std::size_t i) { return "player " + std::to_string(i + 1); }

Matrix stage_weight(const Game& game, const FeedbackProfile& prof, std::size_t i) {
  Matrix M = game.costs.Q[i];
  for (std::size_t j = 0; j < prof.players(); ++j) {
    M += prof.K[j].transpose() * game.costs.R[i][j] * prof.K[j];
  }
  return linalg::symmetrize(M);
}

}  // namespace

Matrix closed_loop(const GameDynamics& dyn, const FeedbackProfile& prof,
                   std::optional<std::size_t> exclude) {
  prof.check(dyn);
  if (exclude && *exclude >= dyn.players()) {
    throw DimensionMismatch("excluded player index out of range", exclude);
  }
  Matrix F = dyn.A();
  for (std::size_t j = 0; j < dyn.players(); ++j) {
    if (exclude && *exclude == j) continue;
    F -= dyn.B(j) * prof.K[j];
  }
  return F;
}

StabilityReport is_stabilizing(const GameDynamics& dyn, const FeedbackProfile& prof) {
  const double radius = linalg::spectral_radius(closed_loop(dyn, prof));
  return {radius < 1.0 - kStabilityMargin, radius};
}

Matrix solve_stein(const Matrix& F, const Matrix& M) {
  if (F.rows() != F.cols() || M.rows() != F.rows() || M.cols() != F.cols()) {
    throw DimensionMismatch("solve_stein: F and M must be square of the same size");
  }
  const double radius = linalg::spectral_radius(F);
  if (!(radius < 1.0 - kStabilityMargin)) {
    throw UnstableClosedLoop("Stein equation needs a Schur-stable transition matrix; spectral "
                             "radius is " + std::to_string(radius),
                             radius);
  }
  const Eigen::Index n = F.rows();
  // (I - F^T kron F^T) vec(P) = vec(M), column-major vec.
  Matrix L = Matrix::Identity(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double fji = F(j, i);
      if (fji == 0.0) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
          L(i * n + k, j * n + l) -= fji * F(l, k);
        }
      }
    }
  }
  const Matrix Ms = linalg::symmetrize(M);
  const Vector rhs = Eigen::Map<const Vector>(Ms.data(), n * n);
  const Vector p = linalg::solve(L, rhs, "Stein equation");
  return linalg::symmetrize(Eigen::Map<const Matrix>(p.data(), n, n));
}

Matrix gare_residual(const Game& game, const FeedbackProfile& prof, const Matrix& P,
                     std::size_t player) {
  const Matrix F = closed_loop(game.dynamics, prof);
  return stage_weight(game, prof, player) - P + F.transpose() * P * F;
}

Matrix best_response_gain(const GameDynamics& dyn, const Matrix& R_ii, const Matrix& P,
                          const FeedbackProfile& others, std::size_t player) {
  const Matrix A_i = closed_loop(dyn, others, player);
  const Matrix& B = dyn.B(player);
  const Matrix normal = R_ii + B.transpose() * P * B;
  return linalg::solve(normal, B.transpose() * P * A_i, "best response of " + player_tag(player));
}

std::vector<double> evaluate_cost(const Game& game, const FeedbackProfile& prof,
                                  const Vector& x0, long horizon) {
  game.costs.check_shapes(game.dynamics);
  if (x0.size() != static_cast<Eigen::Index>(game.dynamics.state_dim())) {
    throw DimensionMismatch("initial state has wrong dimension");
  }
  if (horizon < 0) throw GameError(ErrorCode::kInvalidArgument, "horizon must be >= 0");
  const Matrix F = closed_loop(game.dynamics, prof);
  if (horizon > 1000000 && !(linalg::spectral_radius(F) < 1.0 - kStabilityMargin)) {
    throw GameError(ErrorCode::kDivergenceRisk,
                    "refusing a horizon above 1e6 on a non-stabilizing profile");
  }
  const std::size_t N = game.dynamics.players();
  std::vector<double> cost(N, 0.0);
  Vector x = x0;
  std::vector<Vector> u(N);
  for (long t = 0; t <= horizon; ++t) {
    for (std::size_t j = 0; j < N; ++j) u[j] = -prof.K[j] * x;
    for (std::size_t i = 0; i < N; ++i) {
      double c = x.dot(game.costs.Q[i] * x);
      for (std::size_t j = 0; j < N; ++j) c += u[j].dot(game.costs.R[i][j] * u[j]);
      cost[i] += c;
    }
    x = F * x;
  }
  return cost;
}

NeCertificate certify_ne(const Game& game, const FeedbackProfile& prof, double gain_tol) {
  game.costs.check_shapes(game.dynamics);
  const Matrix F = closed_loop(game.dynamics, prof);
  NeCertificate cert;
  cert.certified = true;
  for (std::size_t i = 0; i < game.dynamics.players(); ++i) {
    Matrix P = solve_stein(F, stage_weight(game, prof, i));
    const Matrix residual = gare_residual(game, prof, P, i);
    const Matrix K = best_response_gain(game.dynamics, game.costs.R[i][i], P, prof, i);
    cert.residual_norm.push_back(residual.norm());
    cert.residual_bound.push_back(1e-6 * std::max(1.0, P.norm()));
    cert.gain_error.push_back((K - prof.K[i]).norm());
    cert.certified = cert.certified && cert.residual_norm.back() <= cert.residual_bound.back() &&
                     cert.gain_error.back() <= gain_tol;
    cert.values.P.push_back(std::move(P));
  }
  return cert;
}

ForwardSolution solve_forward_ne(const Game& game, const FeedbackProfile& initial,
                                 const ForwardOptions& options) {
  game.costs.check_shapes(game.dynamics);
  const auto start = is_stabilizing(game.dynamics, initial);
  if (!start.stable) {
    throw UnstableClosedLoop("forward solve needs a stabilizing initial profile; spectral "
                             "radius is " + std::to_string(start.spectral_radius),
                             start.spectral_radius);
  }
  const std::size_t N = game.dynamics.players();
  ForwardSolution current{initial, {}, 0};

  auto values_for = [&](const FeedbackProfile& prof) {
    const Matrix F = closed_loop(game.dynamics, prof);
    ValueSolution v;
    for (std::size_t i = 0; i < N; ++i) v.P.push_back(solve_stein(F, stage_weight(game, prof, i)));
    return v;
  };

  for (int it = 1; it <= options.max_iterations; ++it) {
    try {
      current.values = values_for(current.profile);
    } catch (const UnstableClosedLoop&) {
      throw NoConvergence("Lyapunov iterations left the stabilizing set at iteration " +
                              std::to_string(it),
                          current);
    }
    FeedbackProfile next;
    double change = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      next.K.push_back(best_response_gain(game.dynamics, game.costs.R[i][i], current.values.P[i],
                                          current.profile, i));
      change = std::max(change, (next.K[i] - current.profile.K[i]).cwiseAbs().maxCoeff());
    }
    current.profile = std::move(next);
    current.iterations = it;
    if (!std::isfinite(change)) break;
    if (change < options.tol) {
      try {
        current.values = values_for(current.profile);
      } catch (const UnstableClosedLoop&) {
        throw NoConvergence("converged profile is not stabilizing", current);
      }
      return current;
    }
  }
  throw NoConvergence("Lyapunov iterations did not converge in " +
                          std::to_string(options.max_iterations) + " iterations",
                      current);
}

FeedbackProfile stabilizing_profile(const GameDynamics& dyn) {
  const Matrix& A = dyn.A();
  if (linalg::spectral_radius(A) < 1.0 - kStabilityMargin) return FeedbackProfile::zeros(dyn);

  const Eigen::Index n = A.rows();
  Eigen::Index m = 0;
  for (const auto& B : dyn.B()) m += B.cols();
  Matrix B(n, m);
  Eigen::Index col = 0;
  for (const auto& Bi : dyn.B()) {
    B.middleCols(col, Bi.cols()) = Bi;
    col += Bi.cols();
  }
  const Matrix Q = Matrix::Identity(n, n);
  const Matrix R = Matrix::Identity(m, m);

  // Riccati recursion to the stabilizing DARE solution.
  Matrix X = Q;
  for (int it = 0; it < 100000; ++it) {
    const Matrix BtX = B.transpose() * X;
    const Matrix gain = linalg::solve(R + BtX * B, BtX * A, "centralized Riccati recursion");
    Matrix next = linalg::symmetrize(A.transpose() * X * A - A.transpose() * X * B * gain + Q);
    const double change = (next - X).norm();
    X = std::move(next);
    if (change <= 1e-12 * std::max(1.0, X.norm())) break;
  }
  const Matrix BtX = B.transpose() * X;
  const Matrix K = linalg::solve(R + BtX * B, BtX * A, "centralized LQR gain");

  FeedbackProfile prof;
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < dyn.players(); ++i) {
    const auto mi = static_cast<Eigen::Index>(dyn.input_dim(i));
    prof.K.push_back(K.middleRows(row, mi));
    row += mi;
  }
  const auto report = is_stabilizing(dyn, prof);
  if (!report.stable) {
    throw UnstableClosedLoop("could not find a stabilizing profile; the plant may not be "
                             "stabilizable",
                             report.spectral_radius);
  }
  return prof;
}

}  // namespace lqgame
