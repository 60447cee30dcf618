#pragma once

// Subcommands of the `sbpinn` executable.

#include "sbpinn/config.hpp"
#include "sbpinn/diffnet.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace sbpinn {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2 };

struct CommandContext {
    RunConfig config;
    std::optional<std::filesystem::path> checkpoint;
    std::ostream* log = nullptr;
};

int cmd_train(const CommandContext& ctx);
int cmd_export_fields(const CommandContext& ctx);
int cmd_verify(const CommandContext& ctx);
int cmd_simulate(const CommandContext& ctx);

/// Full argument parsing and dispatch; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace sbpinn
