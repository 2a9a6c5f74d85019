#pragma once

#include "lqgame/trace.hpp"
#include "lqgame/traj_sim.hpp"
#include "lqgame/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lqgame::io {

using Json = nlohmann::ordered_json;

// Raised for malformed or inconsistent configuration input.
class ConfigError : public GameError {
 public:
  explicit ConfigError(const std::string& message)
      : GameError(ErrorCode::kConfigError, message) {}
};

// {"rows": r, "cols": c, "data": [[...], ...]} with rows in order.
Json to_json(const Matrix& M);
Json to_json(const std::vector<Matrix>& Ms);
Json to_json(const std::vector<std::vector<Matrix>>& table);

// Accepts the object form above or a bare array of rows. `where` names the
// field in error messages.
Matrix matrix_from_json(const Json& j, std::string_view where);
std::vector<Matrix> matrices_from_json(const Json& j, std::string_view where);
std::vector<std::vector<Matrix>> table_from_json(const Json& j, std::string_view where);
Vector vector_from_json(const Json& j, std::string_view where);

// Game blocks carry "A", "B" and optionally "Q", "R".
Json dynamics_to_json(const GameDynamics& dyn);
GameDynamics dynamics_from_json(const Json& j);
Json game_to_json(const Game& game);
CostParameters costs_from_json(const Json& j);

Json profile_to_json(const FeedbackProfile& prof);
FeedbackProfile profile_from_json(const Json& j, std::string_view where);

// {"excited_player": i, "states": [[...], ...], "inputs": [[...], ...]} with
// one more state than inputs; excited_player is 0-based.
Json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const Json& j, std::size_t excited_player);

// Rows: iteration, q_step_norm_1..N, gain_distance_1..N, spectral_radius_1..N.
std::string trace_csv(const IterationTrace& trace, std::size_t players);

Json read_json_file(const std::filesystem::path& path);
// Writes `content` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace lqgame::io
