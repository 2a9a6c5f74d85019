#include "lqgame/traj_sim.hpp"

#include "lqgame/errors.hpp"
#include "lqgame/game_core.hpp"
#include "lqgame/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace lqgame {

namespace {

std::seed_seq make_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t channel,
                        std::uint64_t extra = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  return std::seed_seq{lo(seed), hi(seed), lo(stream), hi(stream),
                       lo(channel), lo(extra), hi(extra)};
}

Vector augmented(const Vector& x, const Vector& u) {
  Vector z(x.size() + u.size());
  z << x, u;
  return z;
}

}  // namespace

void NoiseConfig::validate() const {
  if (!(amplitude >= 0.0)) {
    throw GameError(ErrorCode::kInvalidArgument, "noise amplitude must be >= 0");
  }
  if (kind != NoiseKind::kGaussian && num_frequencies < 1) {
    throw GameError(ErrorCode::kInvalidArgument, "sinusoidal noise needs >= 1 frequency");
  }
  if (kind == NoiseKind::kDecaying && !(decay_rate >= 0.0)) {
    throw GameError(ErrorCode::kInvalidArgument, "decay rate must be >= 0");
  }
}

ProbingNoise::ProbingNoise(const NoiseConfig& cfg, int channels, std::uint64_t stream)
    : cfg_(cfg), channels_(channels), stream_(stream) {
  cfg_.validate();
  if (channels < 1) throw GameError(ErrorCode::kInvalidArgument, "noise needs >= 1 channel");
  if (cfg_.kind == NoiseKind::kGaussian) return;
  omega_.resize(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    auto seq = make_seed(cfg_.seed, stream_, static_cast<std::uint64_t>(c));
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& w = omega_[static_cast<std::size_t>(c)];
    w.resize(static_cast<std::size_t>(cfg_.num_frequencies));
    for (auto& v : w) v = normal(rng);
  }
}

Vector ProbingNoise::operator()(long k) const {
  Vector eps = Vector::Zero(channels_);
  if (cfg_.amplitude == 0.0) return eps;
  const double t = static_cast<double>(k);
  for (int c = 0; c < channels_; ++c) {
    if (cfg_.kind == NoiseKind::kGaussian) {
      auto seq = make_seed(cfg_.seed, stream_, static_cast<std::uint64_t>(c),
                           static_cast<std::uint64_t>(k));
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      eps(c) = cfg_.amplitude * normal(rng);
      continue;
    }
    double sum = 0.0;
    for (double w : omega_[static_cast<std::size_t>(c)]) sum += std::sin(w * t);
    eps(c) = cfg_.amplitude * sum;
    if (cfg_.kind == NoiseKind::kDecaying) eps(c) *= std::exp(-cfg_.decay_rate * t);
  }
  return eps;
}

void Trajectory::check_shape() const {
  if (states.size() != inputs.size() + 1) {
    throw DimensionMismatch("trajectory needs exactly one more state than inputs",
                            excited_player);
  }
  if (inputs.empty()) throw GameError(ErrorCode::kInsufficientData, "empty trajectory");
  const auto n = states.front().size();
  const auto m = inputs.front().size();
  for (const auto& x : states) {
    if (x.size() != n) throw DimensionMismatch("inconsistent state dimension", excited_player);
  }
  for (const auto& u : inputs) {
    if (u.size() != m) throw DimensionMismatch("inconsistent input dimension", excited_player);
  }
}

std::size_t default_length(const GameDynamics& dyn) {
  const auto n = static_cast<int>(dyn.state_dim());
  int largest = 0;
  for (std::size_t i = 0; i < dyn.players(); ++i) {
    largest = std::max(largest, h_unknowns(n, static_cast<int>(dyn.input_dim(i))));
  }
  return static_cast<std::size_t>(3 * largest);
}

Vector default_initial_state(std::size_t n) {
  const auto dim = static_cast<Eigen::Index>(n);
  return Vector::Ones(dim) / std::sqrt(static_cast<double>(n));
}

std::vector<Trajectory> collect_pairs(const GameDynamics& dyn, const FeedbackProfile& observed,
                                      const Vector& x0, std::size_t length,
                                      const NoiseConfig& cfg, const CollectOptions& options) {
  observed.check(dyn);
  cfg.validate();
  if (x0.size() != static_cast<Eigen::Index>(dyn.state_dim())) {
    throw DimensionMismatch("initial state has wrong dimension");
  }
  const std::size_t N = dyn.players();
  const double bound = options.bound_factor * std::max(1.0, x0.norm());

  std::vector<Trajectory> out;
  out.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const ProbingNoise noise(cfg, static_cast<int>(dyn.input_dim(i)), i);
    Trajectory traj;
    traj.excited_player = i;
    traj.states.reserve(length + 1);
    traj.inputs.reserve(length);
    traj.states.push_back(x0);
    for (std::size_t k = 0; k < length; ++k) {
      const Vector& x = traj.states.back();
      Vector next = dyn.A() * x;
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        next -= dyn.B(j) * (observed.K[j] * x);
      }
      Vector u = -observed.K[i] * x + noise(static_cast<long>(k));
      next += dyn.B(i) * u;
      traj.inputs.push_back(std::move(u));
      if (!(next.norm() <= bound)) {
        throw GameError(ErrorCode::kDivergentTrajectory,
                        "state norm left the bound " + std::to_string(bound) + " at k = " +
                            std::to_string(k + 1) + " in trajectory of player " +
                            std::to_string(i + 1));
      }
      traj.states.push_back(std::move(next));
    }
    out.push_back(std::move(traj));
  }
  return out;
}

double dynamics_defect(const Trajectory& traj, const GameDynamics& dyn,
                       const FeedbackProfile& observed) {
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.length(); ++k) {
    const Vector& x = traj.states[k];
    Vector pred = dyn.A() * x + dyn.B(traj.excited_player) * traj.inputs[k];
    for (std::size_t j = 0; j < dyn.players(); ++j) {
      if (j != traj.excited_player) pred -= dyn.B(j) * (observed.K[j] * x);
    }
    worst = std::max(worst, (traj.states[k + 1] - pred).norm());
  }
  return worst;
}

Matrix kernel_regressors(const Trajectory& traj, const Matrix& K_observed, std::size_t rows) {
  traj.check_shape();
  if (rows > traj.length()) {
    throw GameError(ErrorCode::kInsufficientData, "window longer than the trajectory");
  }
  const auto n = static_cast<int>(traj.states.front().size());
  const auto m = static_cast<int>(traj.inputs.front().size());
  if (K_observed.rows() != m || K_observed.cols() != n) {
    throw DimensionMismatch("observed gain does not match trajectory dimensions",
                            traj.excited_player);
  }
  Matrix Psi(static_cast<Eigen::Index>(rows), linalg::svec_size(n + m));
  for (std::size_t k = 0; k < rows; ++k) {
    const Vector& x1 = traj.states[k + 1];
    const Vector now = augmented(traj.states[k], traj.inputs[k]);
    const Vector next = augmented(x1, -K_observed * x1);
    Psi.row(static_cast<Eigen::Index>(k)) =
        (linalg::quadratic_features(now) - linalg::quadratic_features(next)).transpose();
  }
  return Psi;
}

double pe_diagnostic(const Trajectory& traj, const Matrix& K_observed,
                     std::optional<std::size_t> window) {
  traj.check_shape();
  const std::size_t rows = window.value_or(traj.length());
  const auto n = static_cast<int>(traj.states.front().size());
  const auto m = static_cast<int>(traj.inputs.front().size());
  if (rows < static_cast<std::size_t>(h_unknowns(n, m))) {
    throw GameError(ErrorCode::kInsufficientData,
                    "window of " + std::to_string(rows) + " samples is shorter than the " +
                        std::to_string(h_unknowns(n, m)) + " kernel unknowns");
  }
  return linalg::gram_condition(kernel_regressors(traj, K_observed, rows));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  traj.check_shape();
  const auto n = traj.states.front().size();
  const auto m = traj.inputs.front().size();
  os << "k";
  for (Eigen::Index a = 0; a < n; ++a) os << ",x_" << a + 1;
  for (Eigen::Index a = 0; a < m; ++a) os << ",u_" << a + 1;
  os << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << k;
    for (Eigen::Index a = 0; a < n; ++a) os << ',' << traj.states[k](a);
    for (Eigen::Index a = 0; a < m; ++a) {
      os << ',';
      if (k < traj.inputs.size()) os << traj.inputs[k](a);
    }
    os << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is, std::size_t excited_player) {
  std::string line;
  if (!std::getline(is, line)) throw GameError(ErrorCode::kIo, "empty trajectory CSV");
  int n = 0;
  int m = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      if (cell.rfind("x_", 0) == 0) ++n;
      if (cell.rfind("u_", 0) == 0) ++m;
    }
  }
  if (n == 0 || m == 0) {
    throw GameError(ErrorCode::kIo, "trajectory CSV header needs x_* and u_* columns");
  }
  Trajectory traj;
  traj.excited_player = excited_player;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() < static_cast<std::size_t>(1 + n)) {
      throw GameError(ErrorCode::kIo, "short row " + std::to_string(row) + " in trajectory CSV");
    }
    Vector x(n);
    try {
      for (int a = 0; a < n; ++a) x(a) = std::stod(cells[static_cast<std::size_t>(1 + a)]);
      traj.states.push_back(std::move(x));
      bool has_input = cells.size() >= static_cast<std::size_t>(1 + n + m);
      for (int a = 0; has_input && a < m; ++a) {
        auto& c = cells[static_cast<std::size_t>(1 + n + a)];
        if (c.empty() || c == "\r") has_input = false;
      }
      if (has_input) {
        Vector u(m);
        for (int a = 0; a < m; ++a) u(a) = std::stod(cells[static_cast<std::size_t>(1 + n + a)]);
        traj.inputs.push_back(std::move(u));
      }
    } catch (const std::logic_error&) {
      throw GameError(ErrorCode::kIo, "unparseable number in trajectory CSV row " +
                                          std::to_string(row));
    }
    ++row;
  }
  traj.check_shape();
  return traj;
}

}  // namespace lqgame
