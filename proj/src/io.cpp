#include "lqgame/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lqgame::io {

namespace {

std::string field(std::string_view where, std::size_t index) {
  return std::string(where) + "[" + std::to_string(index) + "]";
}

double number_at(const Json& j, std::string_view where) {
  if (!j.is_number()) throw ConfigError(std::string(where) + " must be a number");
  return j.get<double>();
}

void write_number(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
  } else {
    os << v;
  }
}

}  // namespace

Json to_json(const Matrix& M) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    data.push_back(std::move(row));
  }
  return Json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

Json to_json(const std::vector<Matrix>& Ms) {
  Json out = Json::array();
  for (const auto& M : Ms) out.push_back(to_json(M));
  return out;
}

Json to_json(const std::vector<std::vector<Matrix>>& table) {
  Json out = Json::array();
  for (const auto& row : table) out.push_back(to_json(row));
  return out;
}

Matrix matrix_from_json(const Json& j, std::string_view where) {
  const Json* data = &j;
  std::optional<Eigen::Index> rows;
  std::optional<Eigen::Index> cols;
  if (j.is_object()) {
    if (!j.contains("data")) throw ConfigError(std::string(where) + " is missing \"data\"");
    data = &j.at("data");
    if (j.contains("rows")) rows = j.at("rows").get<Eigen::Index>();
    if (j.contains("cols")) cols = j.at("cols").get<Eigen::Index>();
  }
  if (!data->is_array() || data->empty()) {
    throw ConfigError(std::string(where) + " must be a non-empty array of rows");
  }
  const auto r = static_cast<Eigen::Index>(data->size());
  Eigen::Index c = -1;
  Matrix M;
  for (Eigen::Index a = 0; a < r; ++a) {
    const Json& row = (*data)[static_cast<std::size_t>(a)];
    if (!row.is_array() || row.empty()) {
      throw ConfigError(field(where, static_cast<std::size_t>(a)) + " must be a non-empty array");
    }
    if (c < 0) {
      c = static_cast<Eigen::Index>(row.size());
      M.resize(r, c);
    } else if (static_cast<Eigen::Index>(row.size()) != c) {
      throw ConfigError(std::string(where) + " is not rectangular");
    }
    for (Eigen::Index b = 0; b < c; ++b) {
      M(a, b) = number_at(row[static_cast<std::size_t>(b)],
                          field(field(where, static_cast<std::size_t>(a)),
                                static_cast<std::size_t>(b)));
    }
  }
  if ((rows && *rows != M.rows()) || (cols && *cols != M.cols())) {
    throw ConfigError(std::string(where) + ": declared dimensions disagree with the data");
  }
  return M;
}

std::vector<Matrix> matrices_from_json(const Json& j, std::string_view where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + " must be an array of matrices");
  std::vector<Matrix> out;
  for (std::size_t a = 0; a < j.size(); ++a) out.push_back(matrix_from_json(j[a], field(where, a)));
  return out;
}

std::vector<std::vector<Matrix>> table_from_json(const Json& j, std::string_view where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + " must be an array of rows");
  std::vector<std::vector<Matrix>> out;
  for (std::size_t a = 0; a < j.size(); ++a) out.push_back(matrices_from_json(j[a], field(where, a)));
  return out;
}

Vector vector_from_json(const Json& j, std::string_view where) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(where) + " must be a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t a = 0; a < j.size(); ++a) {
    v(static_cast<Eigen::Index>(a)) = number_at(j[a], field(where, a));
  }
  return v;
}

Json dynamics_to_json(const GameDynamics& dyn) {
  return Json{{"A", to_json(dyn.A())}, {"B", to_json(dyn.B())}};
}

GameDynamics dynamics_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("A") || !j.contains("B")) {
    throw ConfigError("game needs \"A\" and \"B\"");
  }
  try {
    return GameDynamics(matrix_from_json(j.at("A"), "game.A"), matrices_from_json(j.at("B"), "game.B"));
  } catch (const DimensionMismatch& e) {
    throw ConfigError(std::string("game: ") + e.what());
  }
}

Json game_to_json(const Game& game) {
  Json j = dynamics_to_json(game.dynamics);
  j["Q"] = to_json(game.costs.Q);
  j["R"] = to_json(game.costs.R);
  return j;
}

CostParameters costs_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("Q") || !j.contains("R")) {
    throw ConfigError("cost block needs \"Q\" and \"R\"");
  }
  return CostParameters{matrices_from_json(j.at("Q"), "Q"), table_from_json(j.at("R"), "R")};
}

Json profile_to_json(const FeedbackProfile& prof) { return Json{{"K", to_json(prof.K)}}; }

FeedbackProfile profile_from_json(const Json& j, std::string_view where) {
  if (!j.is_object() || !j.contains("K")) {
    throw ConfigError(std::string(where) + " needs \"K\"");
  }
  return FeedbackProfile{matrices_from_json(j.at("K"), std::string(where) + ".K")};
}

Json trajectory_to_json(const Trajectory& traj) {
  auto rows = [](const std::vector<Vector>& vs) {
    Json out = Json::array();
    for (const auto& v : vs) out.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return out;
  };
  return Json{{"excited_player", traj.excited_player},
              {"states", rows(traj.states)},
              {"inputs", rows(traj.inputs)}};
}

Trajectory trajectory_from_json(const Json& j, std::size_t excited_player) {
  if (!j.is_object() || !j.contains("states") || !j.contains("inputs")) {
    throw ConfigError("trajectory needs \"states\" and \"inputs\"");
  }
  Trajectory traj;
  traj.excited_player = excited_player;
  const Json& states = j.at("states");
  const Json& inputs = j.at("inputs");
  if (!states.is_array() || !inputs.is_array()) throw ConfigError("trajectory rows must be arrays");
  for (std::size_t k = 0; k < states.size(); ++k) {
    traj.states.push_back(vector_from_json(states[k], field("states", k)));
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    traj.inputs.push_back(vector_from_json(inputs[k], field("inputs", k)));
  }
  traj.check_shape();
  return traj;
}

std::string trace_csv(const IterationTrace& trace, std::size_t players) {
  std::ostringstream os;
  os << "iteration";
  for (const char* name : {"q_step_norm", "gain_distance", "spectral_radius"}) {
    for (std::size_t i = 0; i < players; ++i) os << ',' << name << '_' << i + 1;
  }
  os << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& rec : trace.records) {
    os << rec.iteration;
    for (const auto* column : {&rec.q_step_norm, &rec.gain_distance, &rec.spectral_radius}) {
      for (std::size_t i = 0; i < players; ++i) {
        os << ',';
        write_number(os, i < column->size() ? (*column)[i]
                                            : std::numeric_limits<double>::quiet_NaN());
      }
    }
    os << '\n';
  }
  return os.str();
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw GameError(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw GameError(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw GameError(ErrorCode::kIo, "cannot rename into " + path.string() + ": " + ec.message());
}

}  // namespace lqgame::io
