#pragma once

#include "uxprobe/config.hpp"
#include "uxprobe/session.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace uxprobe::pipeline {

/// Stable CLI exit codes (documented public contract).
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitFailure = 2;
inline constexpr int kExitBudgetExhausted = 3;

struct RunResult {
    int exit_code = kExitConfigError;
    std::optional<session::TerminalStatus> status;
    std::string terminal_reason;
    std::filesystem::path log_path;
    std::filesystem::path report_json;
    std::filesystem::path report_md;
};

/// Full pipeline: roadmap -> checklist -> loop -> SUS -> report. The session
/// log is written (and kept) even when the run fails; the exit code maps the
/// terminal status (0 success, 2 failure, 3 budget exhausted) with 1 reserved
/// for configuration/infrastructure errors.
RunResult run_session(const config::Config& cfg, std::ostream& diag);

/// Deterministic end-to-end replay of a fixture directory.
RunResult replay_fixture(const std::filesystem::path& fixture_dir,
                         const std::filesystem::path& out_dir, std::ostream& diag);

/// Recompute metrics from a session log, verify stored values, print a
/// summary. Returns 0, kExitConfigError on a corrupt log, or kExitFailure
/// when stored and recomputed values drift.
int score_session(const std::filesystem::path& log_path, std::ostream& out, std::ostream& diag,
                  bool salvage = false);

/// Regenerate report.json/report.md from a stored session log, synthesizing
/// SUS (rule-based) if the log predates synthesis.
int report_from_log(const std::filesystem::path& log_path, const std::filesystem::path& out_dir,
                    const std::filesystem::path& remedies_path, std::ostream& diag);

}  // namespace uxprobe::pipeline
