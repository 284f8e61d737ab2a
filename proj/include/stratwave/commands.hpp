#pragma once

// Config-driven batch commands behind the CLI and the C API.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratwave/serialize.hpp"

namespace stratwave {

/// Everything a command needs to work on one state.
struct Session {
  std::shared_ptr<const LayerProfiles> profiles1, profiles2;
  PhysicalParams physics;
  std::optional<LaminarFlow> flow;  // set for laminar and manufactured sources
  FlowState state;
  BernoulliMaps maps;
  GravityRefs refs;
  std::vector<std::string> warnings;
};

/// Builds the state named by config["state"]["source"] ("laminar", "manufactured" or "file";
/// default "laminar"). Relative file paths resolve against base_dir.
Session load_session(const Json& config, const std::string& base_dir = ".");

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides every seed in the config
  int threads = 1;
};

struct RunResult {
  int exit_code = 0;                // 0 success, 2 config validation, 3 numerical failure
  std::string message;              // error text or a one-line summary
  std::vector<std::string> outputs; // files written, relative to the output directory
};

const std::vector<std::string>& command_names();

/// Runs `command` on an already-parsed config. Never throws.
RunResult run_command(const std::string& command, const Json& config, const std::string& out_dir,
                      const RunOptions& options, const std::string& base_dir = ".");

/// Reads and parses the config file first (unreadable or malformed -> exit 2).
RunResult run_command_file(const std::string& command, const std::string& config_path, const std::string& out_dir,
                           const RunOptions& options);

int exit_code_for(ErrorCode code) noexcept;

}  // namespace stratwave
