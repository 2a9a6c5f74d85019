#include "lqgame/inverse_mb.hpp"

#include "lqgame/game_core.hpp"
#include "lqgame/linalg.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace lqgame {

namespace {

constexpr double kJitter = 1e-12;
constexpr double kDivergedNorm = 1e100;

// Q_i + sum_j K_{j,o}^T R_ij K_{j,o}, optionally skipping j = i.
Matrix weighted_gains(const InverseProblem& problem, const Matrix& Q, std::size_t i,
                      bool include_self) {
  Matrix M = Q;
  const auto& K = problem.observed.K;
  for (std::size_t j = 0; j < K.size(); ++j) {
    if (!include_self && j == i) continue;
    M += K[j].transpose() * problem.settings.fixed_R[i][j] * K[j];
  }
  return linalg::symmetrize(M);
}

}  // namespace

MbIterationState MbIterationState::initial(const InverseProblem& problem) {
  const std::size_t N = problem.dynamics.players();
  const auto n = static_cast<Eigen::Index>(problem.dynamics.state_dim());
  MbIterationState state;
  state.Q = problem.settings.Q0;
  state.frozen.assign(N, false);
  state.jitter_applied.assign(N, false);
  state.q_step_norm.assign(N, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < N; ++i) {
    const Matrix M = weighted_gains(problem, state.Q[i], i, true);
    if (!(linalg::min_eigenvalue(M) > kJitter)) {
      state.Q[i] += kJitter * Matrix::Identity(n, n);
      state.jitter_applied[i] = true;
    }
  }
  return state;
}

MbIterationState mb_step(const InverseProblem& problem, const MbIterationState& state) {
  const auto& dyn = problem.dynamics;
  const auto& Ko = problem.observed.K;
  const std::size_t N = dyn.players();
  const Matrix F = closed_loop(dyn, problem.observed);

  MbIterationState next = state;
  next.s = state.s + 1;
  next.P.resize(N);
  next.delta.resize(N);
  next.Delta.resize(N);
  next.Ktilde.resize(N);
  next.q_step_norm.assign(N, 0.0);

  for (std::size_t i = 0; i < N; ++i) {
    if (state.frozen.size() == N && state.frozen[i]) continue;
    const Matrix& B = dyn.B(i);
    const Matrix& R_ii = problem.settings.fixed_R[i][i];
    const Matrix A_i = closed_loop(dyn, problem.observed, i);

    Matrix P = solve_stein(F, weighted_gains(problem, state.Q[i], i, true));
    const Matrix normal = R_ii + B.transpose() * P * B;
    Matrix Kt = linalg::solve(normal, B.transpose() * P * A_i,
                              "gain update of player " + std::to_string(i + 1));
    Matrix delta = Kt - Ko[i];
    Matrix Delta = linalg::symmetrize(delta.transpose() * normal * delta);
    const Matrix step = problem.settings.alpha[i] * Delta;

    next.Q[i] = linalg::symmetrize(state.Q[i] + step);
    next.q_step_norm[i] = step.norm();
    next.P[i] = std::move(P);
    next.Ktilde[i] = std::move(Kt);
    next.delta[i] = std::move(delta);
    next.Delta[i] = std::move(Delta);
  }
  return next;
}

MbResult mb_run(const InverseProblem& problem) {
  problem.validate();
  const auto& dyn = problem.dynamics;
  const std::size_t N = dyn.players();
  const auto& settings = problem.settings;

  const auto stability = is_stabilizing(dyn, problem.observed);
  if (!stability.stable) {
    throw UnstableClosedLoop("observed gains do not stabilize the plant (spectral radius " +
                                 std::to_string(stability.spectral_radius) + ")",
                             stability.spectral_radius);
  }

  IterationTrace trace;
  for (std::size_t i = 0; i < N; ++i) {
    if (settings.alpha[i] > 1.0) {
      trace.warnings.push_back("alpha_" + std::to_string(i + 1) +
                               " > 1: update is no longer a convex combination");
    }
  }

  MbIterationState state = MbIterationState::initial(problem);
  for (std::size_t i = 0; i < N; ++i) {
    if (state.jitter_applied[i]) {
      trace.warnings.push_back("added 1e-12 I to Q_" + std::to_string(i + 1) +
                               "^(0) to make the first Stein right-hand side definite");
    }
  }

  std::vector<Matrix> A_i(N);
  for (std::size_t i = 0; i < N; ++i) A_i[i] = closed_loop(dyn, problem.observed, i);

  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 1; s <= settings.max_iterations; ++s) {
    MbIterationState next = mb_step(problem, state);

    IterationRecord rec;
    rec.iteration = s;
    rec.q_step_norm = next.q_step_norm;
    bool all_done = true;
    bool finite = true;
    for (std::size_t i = 0; i < N; ++i) {
      rec.gain_distance.push_back((next.Ktilde[i] - problem.observed.K[i]).norm());
      rec.spectral_radius.push_back(
          linalg::spectral_radius(A_i[i] - dyn.B(i) * next.Ktilde[i]));
      const bool done = next.frozen[i] || next.q_step_norm[i] <= settings.rho[i];
      if (done && settings.freeze_converged) next.frozen[i] = true;
      all_done = all_done && done;
      const double qn = next.Q[i].norm();
      finite = finite && std::isfinite(qn) && qn < kDivergedNorm;
    }
    rec.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.records.push_back(std::move(rec));
    state = std::move(next);

    if (!finite) {
      trace.status = RunStatus::kError;
      throw MaxIterationsError("Q iterates diverged at iteration " + std::to_string(s),
                               std::move(trace));
    }
    if (all_done) {
      trace.status = RunStatus::kConverged;
      MbResult result;
      result.costs = CostParameters{state.Q, settings.fixed_R};
      result.values = ValueSolution{state.P};
      result.gains = FeedbackProfile{state.Ktilde};
      result.trace = std::move(trace);
      result.jitter_applied = state.jitter_applied;
      return result;
    }
  }
  trace.status = RunStatus::kMaxIterations;
  throw MaxIterationsError("no convergence within " + std::to_string(settings.max_iterations) +
                               " iterations",
                           std::move(trace));
}

ValueEquationResiduals value_equation_residuals(const InverseProblem& problem, const CostParameters& costs,
                               const ValueSolution& values, const FeedbackProfile& gains) {
  const auto& dyn = problem.dynamics;
  ValueEquationResiduals out;
  for (std::size_t i = 0; i < dyn.players(); ++i) {
    const Matrix A_i = closed_loop(dyn, problem.observed, i);
    const Matrix& P = values.P[i];
    const Matrix& R_ii = problem.settings.fixed_R[i][i];
    const Matrix& Ko = problem.observed.K[i];
    const Matrix& K = gains.K[i];

    const Matrix Fo = A_i - dyn.B(i) * Ko;
    const Matrix Fk = A_i - dyn.B(i) * K;
    const Matrix others = weighted_gains(problem, costs.Q[i], i, false);

    const Matrix r1 = others + Ko.transpose() * R_ii * Ko - P + Fo.transpose() * P * Fo;
    const Matrix r2 = others + K.transpose() * R_ii * K - P + Fk.transpose() * P * Fk;
    out.observed_gain.push_back(r1.norm());
    out.recovered_gain.push_back(r2.norm());
  }
  return out;
}

}  // namespace lqgame
