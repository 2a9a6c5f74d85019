#pragma once

#include "lqgame/types.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lqgame {

enum class NoiseKind { kSinusoidalSum, kGaussian, kDecaying };

struct NoiseConfig {
  NoiseKind kind = NoiseKind::kSinusoidalSum;
  double amplitude = 5e-5;
  int num_frequencies = 10000;
  std::uint64_t seed = 0;
  // Only used by kDecaying: sinusoidal sum scaled by exp(-decay_rate * k).
  double decay_rate = 0.01;

  void validate() const;
};

// Probing signal for one player. Frequencies are drawn once at construction
// from N(0, 1), independently per input channel, on a stream derived from
// (seed, stream). Evaluation is a pure function of k.
class ProbingNoise {
 public:
  ProbingNoise(const NoiseConfig& cfg, int channels, std::uint64_t stream);

  Vector operator()(long k) const;
  int channels() const { return channels_; }

 private:
  NoiseConfig cfg_;
  int channels_;
  std::uint64_t stream_;
  std::vector<std::vector<double>> omega_;  // [channel][frequency]
};

// One excited rollout: only `excited_player` carries probing noise.
struct Trajectory {
  std::vector<Vector> states;  // x(0..L)
  std::vector<Vector> inputs;  // u_i(0..L-1) of the excited player
  std::size_t excited_player = 0;

  std::size_t length() const { return inputs.size(); }
  void check_shape() const;
};

struct CollectOptions {
  // ||x(k)|| above bound_factor * max(1, ||x0||) raises DivergentTrajectory.
  double bound_factor = 1e3;
};

// Number of unknowns in player i's Q-function kernel.
inline int h_unknowns(int n, int m) { return (n + m) * (n + m + 1) / 2; }
// Default sample count: three times the largest kernel size.
std::size_t default_length(const GameDynamics& dyn);
Vector default_initial_state(std::size_t n);

// Simulates N trajectories; in trajectory i player i plays
// -K_{i,o} x + eps_i(k) and the others play exact -K_{j,o} x.
std::vector<Trajectory> collect_pairs(const GameDynamics& dyn, const FeedbackProfile& observed,
                                      const Vector& x0, std::size_t length,
                                      const NoiseConfig& cfg, const CollectOptions& options = {});

// Max over k of ||x(k+1) - A x(k) - sum_j B_j u_j(k)||, with u_j = -K_{j,o} x
// for j != excited player.
double dynamics_defect(const Trajectory& traj, const GameDynamics& dyn,
                       const FeedbackProfile& observed);

// Rows features(x(k), u_i(k)) - features(x(k+1), -K_{i,o} x(k+1)) for
// k = 0..rows-1.
Matrix kernel_regressors(const Trajectory& traj, const Matrix& K_observed, std::size_t rows);

// cond(Psi^T Psi) of the kernel regression built from `traj`, using the first
// `window` samples (all samples when unset). Regressor rows do not depend on
// cost weights, only on states, inputs and K_{i,o}.
inline constexpr double kPeConditionLimit = 1e10;
double pe_diagnostic(const Trajectory& traj, const Matrix& K_observed,
                     std::optional<std::size_t> window = std::nullopt);

// CSV: header "k,x_1..x_n,u_1..u_m"; the final row (k = L) has empty inputs.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is, std::size_t excited_player);

}  // namespace lqgame
