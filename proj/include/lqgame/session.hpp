#pragma once

#include "lqgame/errors.hpp"
#include "lqgame/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace lqgame::cli {

enum class Mode { kForward, kInverseMb, kInverseMf, kEquivGen, kVerify };

std::optional<Mode> parse_mode(std::string_view verb);
std::string_view to_string(Mode mode);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUnexpected = 1;
inline constexpr int kConfig = 2;
inline constexpr int kNoConvergence = 3;  // MaxIterations, NoConvergence
inline constexpr int kData = 4;           // persistence of excitation, too few samples
inline constexpr int kUnstable = 5;
inline constexpr int kNumerical = 6;
inline constexpr int kNotEquivalent = 7;
}  // namespace exit_code

int exit_code_for(ErrorCode code);

// Environment variable that overrides the configured output directory.
inline constexpr const char* kOutDirEnv = "LQGAME_OUT_DIR";

struct SessionRequest {
  Mode mode = Mode::kForward;
  io::Json config;
  // Relative paths inside the config ("from" references, trajectory files,
  // output_dir) resolve against this directory.
  std::filesystem::path base_dir = ".";
  std::optional<std::filesystem::path> out_dir;  // beats env and config
  std::optional<std::uint64_t> seed;             // beats the config seed
  bool validate_only = false;
};

struct SessionOutcome {
  int exit_code = exit_code::kOk;
  std::filesystem::path out_dir;
  std::string message;
  io::Json result;  // contents of result.json, or of error.json on failure
};

// Validates the config against the session schema, runs the requested mode
// and writes result.json (plus trace.csv and trajectory CSVs where they
// apply) or error.json into the output directory. Never throws for
// library errors; they become exit codes.
SessionOutcome run_session(const SessionRequest& request);

}  // namespace lqgame::cli
