#include "lqgame/schema.hpp"
#include "lqgame/session.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace lqgame::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

const fs::path kData = fs::path(LQGAME_SOURCE_DIR) / "data";

class SessionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("lqgame_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  SessionRequest request(Mode mode, const fs::path& config, const std::string& out) const {
    SessionRequest r;
    r.mode = mode;
    r.config = io::read_json_file(config);
    r.base_dir = config.parent_path();
    r.out_dir = dir_ / out;
    return r;
  }

  fs::path write_config(const std::string& name, const Json& j) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

TEST_F(SessionTest, ModelBasedFixtureRuns) {
  const auto out = run_session(request(Mode::kInverseMb, kData / "sim1.json", "mb"));
  ASSERT_EQ(out.exit_code, exit_code::kOk) << out.message;
  const Json result = io::read_json_file(dir_ / "mb" / "result.json");
  EXPECT_EQ(result.at("status"), "Converged");
  const int iterations = result.at("iterations").get<int>();
  EXPECT_NEAR(iterations, 531, 60);
  EXPECT_EQ(line_count(dir_ / "mb" / "trace.csv"), static_cast<std::size_t>(iterations) + 1);
  EXPECT_EQ(result.at("game").at("Q").size(), 4u);
}

TEST_F(SessionTest, ModelFreeFixtureRunsAndIsReproducible) {
  const auto a = run_session(request(Mode::kInverseMf, kData / "sim2.json", "a"));
  const auto b = run_session(request(Mode::kInverseMf, kData / "sim2.json", "b"));
  ASSERT_EQ(a.exit_code, exit_code::kOk) << a.message;
  ASSERT_EQ(b.exit_code, exit_code::kOk) << b.message;
  EXPECT_NEAR(a.result.at("iterations").get<int>(), 183, 80);
  EXPECT_EQ(slurp(dir_ / "a" / "result.json"), slurp(dir_ / "b" / "result.json"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "trajectory_1.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "trajectory_2.csv"));
}

TEST_F(SessionTest, SeedOverrideChangesTheData) {
  auto r = request(Mode::kInverseMf, kData / "sim2.json", "s");
  r.seed = 77;
  const auto out = run_session(r);
  ASSERT_EQ(out.exit_code, exit_code::kOk) << out.message;
  EXPECT_EQ(out.result.at("seed").get<std::uint64_t>(), 77u);
}

TEST_F(SessionTest, ModelFreeRunsFromRecordedTrajectories) {
  ASSERT_EQ(run_session(request(Mode::kInverseMf, kData / "sim2.json", "sim")).exit_code,
            exit_code::kOk);
  Json cfg = io::read_json_file(kData / "sim2.json");
  cfg.erase("game");
  cfg.erase("output_dir");
  cfg["observed"] = io::read_json_file(dir_ / "sim" / "result.json").at("observed");
  cfg["data"] = Json{{"trajectories", {"sim/trajectory_1.csv", "sim/trajectory_2.csv"}}};
  auto r = request(Mode::kInverseMf, write_config("external.json", cfg), "ext");
  const auto out = run_session(r);
  ASSERT_EQ(out.exit_code, exit_code::kOk) << out.message;
  EXPECT_TRUE(out.result.at("certificate").is_null());
  const Json sim = io::read_json_file(dir_ / "sim" / "result.json");
  EXPECT_EQ(out.result.at("gains"), sim.at("gains"));
}

TEST_F(SessionTest, NonPositiveToleranceIsAConfigError) {
  Json cfg = io::read_json_file(kData / "sim1.json");
  cfg["inverse"]["rho"] = 0.0;
  const auto out = run_session(request(Mode::kInverseMb, write_config("bad.json", cfg), "bad"));
  EXPECT_EQ(out.exit_code, exit_code::kConfig);
  EXPECT_FALSE(fs::exists(dir_ / "bad" / "result.json"));
  EXPECT_FALSE(fs::exists(dir_ / "bad" / "trace.csv"));
  const Json err = io::read_json_file(dir_ / "bad" / "error.json");
  EXPECT_EQ(err.at("error").at("exit_code"), exit_code::kConfig);
}

TEST_F(SessionTest, UnknownKeysAndWrongModeAreRejected) {
  Json cfg = io::read_json_file(kData / "sim1.json");
  cfg["inverse"]["step"] = 2;
  EXPECT_EQ(run_session(request(Mode::kInverseMb, write_config("typo.json", cfg), "t")).exit_code,
            exit_code::kConfig);
  EXPECT_EQ(run_session(request(Mode::kInverseMf, kData / "sim1.json", "m")).exit_code,
            exit_code::kConfig);
}

TEST_F(SessionTest, ValidateOnlyWritesNothing) {
  auto r = request(Mode::kInverseMb, kData / "sim1.json", "v");
  r.validate_only = true;
  const auto out = run_session(r);
  EXPECT_EQ(out.exit_code, exit_code::kOk);
  EXPECT_FALSE(fs::exists(dir_ / "v"));
}

TEST_F(SessionTest, BudgetExhaustionWritesTheTrace) {
  Json cfg = io::read_json_file(kData / "sim1.json");
  cfg["inverse"]["max_iterations"] = 12;
  const auto out = run_session(request(Mode::kInverseMb, write_config("short.json", cfg), "short"));
  EXPECT_EQ(out.exit_code, exit_code::kNoConvergence);
  const Json err = io::read_json_file(dir_ / "short" / "error.json");
  EXPECT_EQ(err.at("iterations"), 12);
  EXPECT_EQ(line_count(dir_ / "short" / "trace.csv"), 13u);
}

TEST_F(SessionTest, OutputDirectoryPrecedence) {
  Json cfg = io::read_json_file(kData / "sim1.json");
  cfg["output_dir"] = "from_config";
  const fs::path config = write_config("dirs.json", cfg);
  SessionRequest r = request(Mode::kInverseMb, config, "unused");
  r.out_dir.reset();
  r.validate_only = true;
  EXPECT_EQ(run_session(r).out_dir, dir_ / "from_config");
  ::setenv(kOutDirEnv, (dir_ / "from_env").c_str(), 1);
  EXPECT_EQ(run_session(r).out_dir, dir_ / "from_env");
  r.out_dir = dir_ / "from_flag";
  EXPECT_EQ(run_session(r).out_dir, dir_ / "from_flag");
  ::unsetenv(kOutDirEnv);
}

TEST_F(SessionTest, RecoveredGameRoundTripsThroughEquivalence) {
  ASSERT_EQ(run_session(request(Mode::kInverseMb, kData / "sim1.json", "mb")).exit_code,
            exit_code::kOk);
  Json table = Json::array();
  for (int i = 0; i < 4; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 4; ++j) row.push_back(Json::array({Json::array({i == j ? 1.0 : 0.01})}));
    table.push_back(row);
  }
  const Json gen{{"mode", "equiv-gen"},
                 {"game", {{"from", "mb/result.json"}}},
                 {"observed", {{"from", "mb/result.json"}}},
                 {"equiv", {{"R_prime", table}}}};
  const auto g = run_session(request(Mode::kEquivGen, write_config("gen.json", gen), "gen"));
  ASSERT_EQ(g.exit_code, exit_code::kOk) << g.message;
  EXPECT_TRUE(g.result.at("value_invariant").get<bool>());

  Json check{{"mode", "verify"},
             {"game", {{"from", "mb/result.json"}}},
             {"other_game", {{"from", "gen/result.json"}}},
             {"observed", {{"from", "mb/result.json"}}},
             {"verify", {{"gain_tol", 0.05}}}};
  const auto v = run_session(request(Mode::kVerify, write_config("verify.json", check), "verify"));
  EXPECT_EQ(v.exit_code, exit_code::kOk) << v.message;

  check["other_game"] = {{"from", "mb/result.json"}};
  check["game"] = io::read_json_file(kData / "sim1.json").at("game");
  check["verify"] = {{"gain_tol", 1e-8}};
  const auto w = run_session(request(Mode::kVerify, write_config("verify2.json", check), "verify2"));
  EXPECT_EQ(w.exit_code, exit_code::kNotEquivalent);
}

TEST_F(SessionTest, ForwardSolveCertifiesItsProfile) {
  const Json two = io::read_json_file(kData / "sim2.json").at("game");
  const Json cfg{{"mode", "forward"}, {"game", two}};
  const auto out = run_session(request(Mode::kForward, write_config("fwd.json", cfg), "fwd"));
  ASSERT_EQ(out.exit_code, exit_code::kOk) << out.message;
  EXPECT_TRUE(out.result.at("certificate").at("certified").get<bool>());
}

TEST_F(SessionTest, UnstableObservationMapsToItsExitCode) {
  Json cfg = io::read_json_file(kData / "sim1.json");
  for (auto& K : cfg["observed"]["K"]) K = Json::array({Json::array({0.0, 0.0})});
  const auto out = run_session(request(Mode::kInverseMb, write_config("unstable.json", cfg), "u"));
  EXPECT_EQ(out.exit_code, exit_code::kUnstable);
}

TEST(ExitCodes, CoverEveryErrorKind) {
  EXPECT_EQ(exit_code_for(ErrorCode::kConfigError), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::kMaxIterations), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::kPersistenceOfExcitation), 4);
  EXPECT_EQ(exit_code_for(ErrorCode::kInsufficientData), 4);
  EXPECT_EQ(exit_code_for(ErrorCode::kUnstableClosedLoop), 5);
  EXPECT_EQ(exit_code_for(ErrorCode::kIllConditioned), 6);
  EXPECT_EQ(exit_code_for(ErrorCode::kIo), 1);
}

TEST(Schema, FixturesValidate) {
  for (const char* name : {"sim1.json", "sim2.json"}) {
    const auto errors = schema::validate(io::read_json_file(kData / name), schema::session_schema());
    EXPECT_TRUE(errors.empty()) << name << ": " << (errors.empty() ? "" : errors.front());
  }
}

TEST(Schema, EmbeddedCopyMatchesTheFile) {
  EXPECT_EQ(io::read_json_file(fs::path(LQGAME_SOURCE_DIR) / "schema" / "session.schema.json"),
            schema::session_schema());
}

TEST(Schema, KeywordsAreEnforced) {
  const Json s = Json::parse(R"({
    "type": "object",
    "required": ["a"],
    "additionalProperties": false,
    "properties": {
      "a": {"type": "number", "exclusiveMinimum": 0},
      "b": {"enum": ["x", "y"]},
      "c": {"type": "array", "items": {"type": "integer"}, "minItems": 2},
      "d": {"oneOf": [{"type": "string"}, {"$ref": "#/definitions/pos"}]}
    },
    "definitions": {"pos": {"type": "number", "minimum": 1}}
  })");
  EXPECT_TRUE(schema::validate(Json::parse(R"({"a": 1, "b": "x", "c": [1, 2], "d": 3})"), s).empty());
  EXPECT_FALSE(schema::validate(Json::parse(R"({"b": "x"})"), s).empty());
  EXPECT_FALSE(schema::validate(Json::parse(R"({"a": 0})"), s).empty());
  EXPECT_FALSE(schema::validate(Json::parse(R"({"a": 1, "b": "z"})"), s).empty());
  EXPECT_FALSE(schema::validate(Json::parse(R"({"a": 1, "c": [1.5, 2]})"), s).empty());
  EXPECT_FALSE(schema::validate(Json::parse(R"({"a": 1, "c": [1]})"), s).empty());
  EXPECT_FALSE(schema::validate(Json::parse(R"({"a": 1, "d": 0.5})"), s).empty());
  EXPECT_FALSE(schema::validate(Json::parse(R"({"a": 1, "e": 0})"), s).empty());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LQGAME_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Binary, ExitCodes) {
  const fs::path out = fs::temp_directory_path() / "lqgame_cli_binary";
  fs::remove_all(out);
  EXPECT_EQ(run_cli("inverse-mb --config " + (kData / "sim1.json").string() + " --out " +
                    out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "result.json"));
  EXPECT_EQ(run_cli("inverse-mb --config " + (kData / "sim1.json").string() + " --validate-only"), 0);
  EXPECT_EQ(run_cli("inverse-mb"), 2);
  EXPECT_EQ(run_cli("inverse-mb --config /nonexistent.json"), 2);
  EXPECT_EQ(run_cli("bogus-verb"), 2);
  fs::remove_all(out);
}

}  // namespace
}  // namespace lqgame::cli
