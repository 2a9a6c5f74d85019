#include "lqgame/session.hpp"

#include "lqgame/equiv.hpp"
#include "lqgame/game_core.hpp"
#include "lqgame/inverse_mb.hpp"
#include "lqgame/inverse_mf.hpp"
#include "lqgame/schema.hpp"
#include "lqgame/traj_sim.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace lqgame::cli {

namespace {

namespace fs = std::filesystem;
using io::ConfigError;
using io::Json;

constexpr double kDefaultQ0Scale = 0.1;

// Runs `parse` and reports any library error it raises as a config error:
// while reading the config, a bad shape or value is the user's input at fault.
template <class F>
auto parsing(F&& parse) -> decltype(parse()) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const GameError& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(e.what());
  }
}

struct Context {
  const Json& config;
  fs::path base_dir;
  fs::path out_dir;
  std::uint64_t seed = 0;
  bool validate_only = false;
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, content
};

// Inline block, or {"from": path} naming a JSON file whose `keys` entry (the
// first one present) or whole body is used.
Json resolve_block(const Context& ctx, const char* name, std::initializer_list<const char*> keys) {
  const Json& block = ctx.config.at(name);
  if (!block.contains("from")) return block;
  const fs::path path = ctx.base_dir / block.at("from").get<std::string>();
  Json file = io::read_json_file(path);
  for (const char* key : keys) {
    if (file.is_object() && file.contains(key)) return file.at(key);
  }
  return file;
}

const Json& section(const Json& config, const char* name) {
  static const Json empty = Json::object();
  return config.contains(name) ? config.at(name) : empty;
}

template <class T>
T value_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

struct GameInput {
  GameDynamics dynamics;
  std::optional<CostParameters> costs;
};

GameInput read_game(const Context& ctx, const char* name, bool need_costs) {
  if (!ctx.config.contains(name)) throw ConfigError(std::string("missing \"") + name + "\"");
  return parsing([&] {
    const Json block = resolve_block(ctx, name, {"game"});
    GameInput in{io::dynamics_from_json(block), std::nullopt};
    const bool has_q = block.contains("Q");
    const bool has_r = block.contains("R");
    if (has_q != has_r) throw ConfigError(std::string(name) + " must give both Q and R or neither");
    if (has_q) {
      in.costs = io::costs_from_json(block);
      in.costs->validate(in.dynamics, true);
    } else if (need_costs) {
      throw ConfigError(std::string(name) + " needs Q and R for this mode");
    }
    return in;
  });
}

FeedbackProfile read_profile(const Context& ctx, const char* name,
                             std::initializer_list<const char*> keys,
                             const GameDynamics* dyn) {
  return parsing([&] {
    if (!ctx.config.contains(name)) throw ConfigError(std::string("missing \"") + name + "\"");
    FeedbackProfile prof = io::profile_from_json(resolve_block(ctx, name, keys), name);
    if (dyn != nullptr) prof.check(*dyn);
    return prof;
  });
}

std::vector<double> per_player(const Json& j, const char* key, std::size_t N, double fallback) {
  if (!j.contains(key)) return std::vector<double>(N, fallback);
  const Json& v = j.at(key);
  if (v.is_number()) return std::vector<double>(N, v.get<double>());
  if (v.size() != N) {
    throw ConfigError(std::string("inverse.") + key + " needs one entry per player");
  }
  return v.get<std::vector<double>>();
}

InverseSettings read_settings(const Context& ctx, const FeedbackProfile& observed,
                              const std::optional<CostParameters>& costs) {
  return parsing([&] {
    const Json& inv = section(ctx.config, "inverse");
    const std::size_t N = observed.players();
    if (N == 0) throw ConfigError("observed profile has no players");
    const auto n = observed.K.front().cols();

    InverseSettings s;
    if (inv.contains("R")) {
      s.fixed_R = io::table_from_json(inv.at("R"), "inverse.R");
    } else if (costs) {
      s.fixed_R = costs->R;
    } else {
      throw ConfigError("inverse.R (or game.R) is required for the inverse modes");
    }
    if (s.fixed_R.size() != N) throw ConfigError("inverse.R needs one row per player");
    for (std::size_t i = 0; i < N; ++i) {
      if (observed.K[i].cols() != n) throw ConfigError("observed gains disagree on state size");
      if (s.fixed_R[i].size() != N) throw ConfigError("inverse.R row has the wrong length");
      for (std::size_t j = 0; j < N; ++j) {
        const auto m = observed.K[j].rows();
        if (s.fixed_R[i][j].rows() != m || s.fixed_R[i][j].cols() != m) {
          throw ConfigError("inverse.R[" + std::to_string(i) + "][" + std::to_string(j) +
                            "] must be " + std::to_string(m) + "x" + std::to_string(m));
        }
      }
    }
    const Json q0 = inv.contains("Q0") ? inv.at("Q0") : Json(kDefaultQ0Scale);
    if (q0.is_number()) {
      s.Q0.assign(N, q0.get<double>() * Matrix::Identity(n, n));
    } else {
      s.Q0 = io::matrices_from_json(q0, "inverse.Q0");
      if (s.Q0.size() != N) throw ConfigError("inverse.Q0 needs one matrix per player");
      for (const auto& Q : s.Q0) {
        if (Q.rows() != n || Q.cols() != n) throw ConfigError("inverse.Q0 entries must be n x n");
      }
    }
    s.alpha = per_player(inv, "alpha", N, 1.0);
    s.rho = per_player(inv, "rho", N, 1e-3);
    s.max_iterations = value_or<int>(inv, "max_iterations", 10000);
    s.freeze_converged = value_or<bool>(inv, "freeze_converged", false);
    s.validate();
    return s;
  });
}

NoiseConfig read_noise(const Context& ctx) {
  const Json& noise = section(section(ctx.config, "data"), "noise");
  NoiseConfig cfg;
  const auto kind = value_or<std::string>(noise, "kind", "sinusoidal");
  cfg.kind = kind == "gaussian" ? NoiseKind::kGaussian
             : kind == "decaying" ? NoiseKind::kDecaying
                                  : NoiseKind::kSinusoidalSum;
  cfg.amplitude = value_or<double>(noise, "amplitude", cfg.amplitude);
  cfg.num_frequencies = value_or<int>(noise, "num_frequencies", cfg.num_frequencies);
  cfg.decay_rate = value_or<double>(noise, "decay_rate", cfg.decay_rate);
  cfg.seed = ctx.seed;
  parsing([&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

Json certificate_json(const NeCertificate& cert, double gain_tol) {
  Json players = Json::array();
  for (std::size_t i = 0; i < cert.residual_norm.size(); ++i) {
    players.push_back(Json{
        {"certified", cert.residual_norm[i] <= cert.residual_bound[i] &&
                          cert.gain_error[i] <= gain_tol},
        {"gare_residual", cert.residual_norm[i]},
        {"gain_error", cert.gain_error[i]}});
  }
  return Json{{"certified", cert.certified}, {"gain_tol", gain_tol}, {"players", players}};
}

Json final_residuals(const IterationTrace& trace) {
  if (trace.records.empty()) return Json::object();
  const auto& last = trace.records.back();
  return Json{{"q_step_norm", last.q_step_norm}, {"gain_distance", last.gain_distance}};
}

Json run_forward(Context& ctx) {
  const GameInput in = read_game(ctx, "game", true);
  const Game game{in.dynamics, *in.costs};
  const FeedbackProfile initial =
      ctx.config.contains("initial")
          ? read_profile(ctx, "initial", {"profile", "observed"}, &game.dynamics)
          : stabilizing_profile(game.dynamics);
  const Json& fwd = section(ctx.config, "forward");
  ForwardOptions options;
  options.tol = value_or<double>(fwd, "tol", options.tol);
  options.max_iterations = value_or<int>(fwd, "max_iterations", options.max_iterations);
  if (ctx.validate_only) return {};

  const ForwardSolution sol = solve_forward_ne(game, initial, options);
  const NeCertificate cert = certify_ne(game, sol.profile);
  return Json{{"mode", "forward"},
              {"status", to_string(RunStatus::kConverged)},
              {"iterations", sol.iterations},
              {"game", io::game_to_json(game)},
              {"profile", io::profile_to_json(sol.profile)},
              {"values", Json{{"P", io::to_json(sol.values.P)}}},
              {"certificate", certificate_json(cert, kCertGainTol)}};
}

Json run_inverse_mb(Context& ctx) {
  const GameInput in = read_game(ctx, "game", false);
  const FeedbackProfile observed = read_profile(ctx, "observed", {"observed"}, &in.dynamics);
  const InverseSettings settings = read_settings(ctx, observed, in.costs);
  const InverseProblem problem{in.dynamics, observed, settings};
  parsing([&] {
    problem.validate();
    return 0;
  });
  if (ctx.validate_only) return {};

  const MbResult res = mb_run(problem);
  const Game recovered{in.dynamics, res.costs};
  const NeCertificate cert = certify_ne(recovered, observed);
  const ValueEquationResiduals residuals =
      value_equation_residuals(problem, res.costs, res.values, res.gains);
  ctx.extra_files.emplace_back("trace.csv", io::trace_csv(res.trace, observed.players()));
  return Json{{"mode", "inverse-mb"},
              {"status", to_string(res.trace.status)},
              {"iterations", res.trace.iterations()},
              {"game", io::game_to_json(recovered)},
              {"observed", io::profile_to_json(observed)},
              {"values", Json{{"P", io::to_json(res.values.P)}}},
              {"gains", io::profile_to_json(res.gains)},
              {"final_residuals", final_residuals(res.trace)},
              {"value_equation_residuals",
               Json{{"observed_gain", residuals.observed_gain},
                    {"recovered_gain", residuals.recovered_gain}}},
              {"certificate", certificate_json(cert, kCertGainTol)},
              {"warnings", res.trace.warnings}};
}

std::string trajectory_text(const Trajectory& traj) {
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  return os.str();
}

Json run_inverse_mf(Context& ctx) {
  const Json& data = section(ctx.config, "data");
  const bool external = data.contains("trajectories");
  std::optional<GameInput> plant;
  if (ctx.config.contains("game")) {
    plant = read_game(ctx, "game", false);
  } else if (!external) {
    throw ConfigError("inverse-mf needs either \"game\" to simulate data or data.trajectories");
  }
  const FeedbackProfile observed =
      read_profile(ctx, "observed", {"observed"}, plant ? &plant->dynamics : nullptr);
  const InverseSettings settings =
      read_settings(ctx, observed, plant ? plant->costs : std::nullopt);
  const NoiseConfig noise = read_noise(ctx);
  const std::size_t N = observed.players();
  const auto n = static_cast<std::size_t>(observed.K.front().cols());

  std::vector<Trajectory> trajs;
  std::size_t length = 0;
  Vector x0;
  if (external) {
    const auto files = data.at("trajectories").get<std::vector<std::string>>();
    if (files.size() != N) throw ConfigError("data.trajectories needs one file per player");
    for (std::size_t i = 0; i < N; ++i) {
      const fs::path path = ctx.base_dir / files[i];
      if (path.extension() == ".json") {
        trajs.push_back(parsing([&] { return io::trajectory_from_json(io::read_json_file(path), i); }));
        continue;
      }
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open trajectory file " + path.string());
      trajs.push_back(parsing([&] { return read_trajectory_csv(in, i); }));
    }
  } else {
    length = data.contains("length") ? data.at("length").get<std::size_t>()
                                     : default_length(plant->dynamics);
    x0 = data.contains("x0") ? parsing([&] { return io::vector_from_json(data.at("x0"), "data.x0"); })
                             : default_initial_state(n);
    if (static_cast<std::size_t>(x0.size()) != n) throw ConfigError("data.x0 has the wrong size");
  }
  if (ctx.validate_only) return {};

  if (!external) {
    CollectOptions copt;
    copt.bound_factor = value_or<double>(data, "bound_factor", copt.bound_factor);
    trajs = collect_pairs(plant->dynamics, observed, x0, length, noise, copt);
    for (const auto& t : trajs) {
      ctx.extra_files.emplace_back("trajectory_" + std::to_string(t.excited_player + 1) + ".csv",
                                   trajectory_text(t));
    }
  }

  std::vector<double> pe;
  for (std::size_t i = 0; i < N; ++i) {
    const auto m = static_cast<int>(observed.K[i].rows());
    pe.push_back(trajs[i].length() >= static_cast<std::size_t>(h_unknowns(static_cast<int>(n), m))
                     ? pe_diagnostic(trajs[i], observed.K[i])
                     : std::numeric_limits<double>::infinity());
  }

  const MfResult res = mf_run(observed, trajs, settings);
  ctx.extra_files.emplace_back("trace.csv", io::trace_csv(res.trace, N));

  Json kernels = Json::array();
  for (const auto& k : res.kernels) kernels.push_back(io::to_json(k.H()));
  Json out{{"mode", "inverse-mf"},
           {"status", to_string(res.trace.status)},
           {"iterations", res.trace.iterations()},
           {"seed", ctx.seed},
           {"samples", trajs.front().length()}};
  if (plant) {
    const Game recovered{plant->dynamics, res.costs};
    out["game"] = io::game_to_json(recovered);
  } else {
    out["costs"] = Json{{"Q", io::to_json(res.costs.Q)}, {"R", io::to_json(res.costs.R)}};
  }
  out["observed"] = io::profile_to_json(observed);
  out["kernels"] = Json{{"H", kernels}};
  out["gains"] = io::profile_to_json(res.gains);
  out["final_residuals"] = final_residuals(res.trace);
  out["pe_condition"] = pe;
  if (plant) {
    const NeCertificate cert = certify_ne(Game{plant->dynamics, res.costs}, observed);
    out["certificate"] = certificate_json(cert, kCertGainTol);
  } else {
    out["certificate"] = nullptr;
  }
  out["warnings"] = res.trace.warnings;
  return out;
}

Json report_json(const EquivalenceReport& r) {
  return Json{{"equivalent", r.equivalent},
              {"value_difference", r.value_difference},
              {"gain_error_first", r.gain_error_first},
              {"gain_error_second", r.gain_error_second}};
}

Json run_equiv_gen(Context& ctx) {
  const GameInput in = read_game(ctx, "game", true);
  const FeedbackProfile observed = read_profile(ctx, "observed", {"observed"}, &in.dynamics);
  const Json& eq = section(ctx.config, "equiv");
  if (!eq.contains("R_prime")) throw ConfigError("equiv.R_prime is required for equiv-gen");
  const auto new_R = parsing([&] { return io::table_from_json(eq.at("R_prime"), "equiv.R_prime"); });
  const bool require_psd = value_or<bool>(eq, "require_psd", false);
  if (ctx.validate_only) {
    parsing([&] { return generate_equivalent(*in.costs, observed, new_R, false); });
    return {};
  }

  const CostParameters primed = generate_equivalent(*in.costs, observed, new_R, require_psd);
  const Game base{in.dynamics, *in.costs};
  const Game other{in.dynamics, primed};
  VerifyOptions options;
  options.require_same_value = true;
  options.gain_tol = std::numeric_limits<double>::infinity();
  const EquivalenceReport report = verify_equivalent(base, other, observed, options);
  return Json{{"mode", "equiv-gen"},
              {"status", "generated"},
              {"game", io::game_to_json(other)},
              {"observed", io::profile_to_json(observed)},
              {"value_invariant", report.equivalent},
              {"report", report_json(report)}};
}

Json run_verify(Context& ctx, int& exit_status) {
  const GameInput first = read_game(ctx, "game", true);
  if (!ctx.config.contains("other_game")) throw ConfigError("verify needs \"other_game\"");
  const GameInput second = read_game(ctx, "other_game", true);
  const FeedbackProfile observed = read_profile(ctx, "observed", {"observed"}, &first.dynamics);
  const Json& v = section(ctx.config, "verify");
  VerifyOptions options;
  options.value_tol = value_or<double>(v, "value_tol", options.value_tol);
  options.gain_tol = value_or<double>(v, "gain_tol", options.gain_tol);
  options.require_same_value = value_or<bool>(v, "require_same_value", options.require_same_value);
  if (ctx.validate_only) return {};

  const EquivalenceReport report = verify_equivalent(Game{first.dynamics, *first.costs},
                                                     Game{second.dynamics, *second.costs},
                                                     observed, options);
  if (!report.equivalent) exit_status = exit_code::kNotEquivalent;
  return Json{{"mode", "verify"},
              {"status", report.equivalent ? "equivalent" : "not-equivalent"},
              {"options",
               Json{{"value_tol", options.value_tol},
                    {"gain_tol", options.gain_tol},
                    {"require_same_value", options.require_same_value}}},
              {"report", report_json(report)}};
}

fs::path resolve_out_dir(const SessionRequest& request) {
  if (request.out_dir) return *request.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  if (request.config.is_object() && request.config.contains("output_dir") &&
      request.config.at("output_dir").is_string()) {
    return request.base_dir / request.config.at("output_dir").get<std::string>();
  }
  return "lqgame_out";
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::optional<Mode> parse_mode(std::string_view verb) {
  if (verb == "forward") return Mode::kForward;
  if (verb == "inverse-mb") return Mode::kInverseMb;
  if (verb == "inverse-mf") return Mode::kInverseMf;
  if (verb == "equiv-gen") return Mode::kEquivGen;
  if (verb == "verify") return Mode::kVerify;
  return std::nullopt;
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kForward: return "forward";
    case Mode::kInverseMb: return "inverse-mb";
    case Mode::kInverseMf: return "inverse-mf";
    case Mode::kEquivGen: return "equiv-gen";
    case Mode::kVerify: return "verify";
  }
  return "unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidArgument:
      return exit_code::kConfig;
    case ErrorCode::kMaxIterations:
    case ErrorCode::kNoConvergence:
      return exit_code::kNoConvergence;
    case ErrorCode::kPersistenceOfExcitation:
    case ErrorCode::kInsufficientData:
      return exit_code::kData;
    case ErrorCode::kUnstableClosedLoop:
      return exit_code::kUnstable;
    case ErrorCode::kIllConditioned:
    case ErrorCode::kDivergenceRisk:
    case ErrorCode::kDivergentTrajectory:
    case ErrorCode::kNotPositiveDefinite:
      return exit_code::kNumerical;
    case ErrorCode::kIo:
      return exit_code::kUnexpected;
  }
  return exit_code::kUnexpected;
}

SessionOutcome run_session(const SessionRequest& request) {
  SessionOutcome outcome;
  outcome.out_dir = resolve_out_dir(request);
  Context ctx{request.config, request.base_dir, outcome.out_dir, 0, request.validate_only, {}};

  auto fail = [&](int code, std::string_view kind, const std::string& message,
                  const IterationTrace* trace) {
    outcome.exit_code = code;
    outcome.message = message;
    outcome.result = Json{{"mode", to_string(request.mode)},
                          {"error", Json{{"code", kind}, {"exit_code", code}, {"message", message}}}};
    if (trace != nullptr) outcome.result["iterations"] = trace->iterations();
    if (request.validate_only) return;
    try {
      io::write_file_atomic(outcome.out_dir / "error.json", dump(outcome.result));
      if (trace != nullptr && !trace->records.empty()) {
        const std::size_t players = trace->records.front().q_step_norm.size();
        io::write_file_atomic(outcome.out_dir / "trace.csv", io::trace_csv(*trace, players));
      }
    } catch (const std::exception& e) {
      outcome.message += std::string(" (and the error artifact could not be written: ") + e.what() + ")";
    }
  };

  try {
    const auto errors = schema::validate(request.config, schema::session_schema());
    if (!errors.empty()) {
      std::string msg = "config does not match the session schema:";
      for (const auto& e : errors) msg += "\n  " + e;
      throw ConfigError(msg);
    }
    if (request.config.contains("mode") &&
        request.config.at("mode").get<std::string>() != to_string(request.mode)) {
      throw ConfigError("config is for mode \"" + request.config.at("mode").get<std::string>() +
                        "\" but the verb is \"" + std::string(to_string(request.mode)) + "\"");
    }
    ctx.seed = request.seed ? *request.seed : value_or<std::uint64_t>(request.config, "seed", 0);

    int status = exit_code::kOk;
    Json result;
    switch (request.mode) {
      case Mode::kForward: result = run_forward(ctx); break;
      case Mode::kInverseMb: result = run_inverse_mb(ctx); break;
      case Mode::kInverseMf: result = run_inverse_mf(ctx); break;
      case Mode::kEquivGen: result = run_equiv_gen(ctx); break;
      case Mode::kVerify: result = run_verify(ctx, status); break;
    }
    if (request.validate_only) {
      outcome.message = "config is valid";
      return outcome;
    }
    outcome.exit_code = status;
    outcome.result = std::move(result);
    for (const auto& [name, content] : ctx.extra_files) {
      io::write_file_atomic(outcome.out_dir / name, content);
    }
    io::write_file_atomic(outcome.out_dir / "result.json", dump(outcome.result));
    outcome.message = std::string(to_string(request.mode)) + " finished; results in " +
                      outcome.out_dir.string();
  } catch (const MaxIterationsError& e) {
    fail(exit_code_for(e.code()), to_string(e.code()), e.what(), &e.trace());
  } catch (const GameError& e) {
    fail(exit_code_for(e.code()), to_string(e.code()), e.what(), nullptr);
  } catch (const std::exception& e) {
    fail(exit_code::kUnexpected, "Unexpected", e.what(), nullptr);
  }
  return outcome;
}

}  // namespace lqgame::cli
