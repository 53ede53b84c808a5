#pragma once

#include "uxprobe/session.hpp"
#include "uxprobe/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace uxprobe::report {

/// The machine-readable report document. The human-readable rendering is a
/// pure function of this document, so every figure it shows exists here.
struct UxReport {
    nlohmann::json doc;
};

/// Remedy text per friction tag, loaded from an asset file; falls back to
/// the built-in table for tags the asset does not cover.
std::map<std::string, std::string> load_remedies(const std::filesystem::path& path);

/// Assemble the report for a terminated, SUS-synthesized session. Throws
/// ValidationError when SUS is missing (run synthesis first).
UxReport generate_report(const session::SessionLog& log,
                         const std::vector<synthesis::FrictionPoint>& friction,
                         const std::map<std::string, std::string>& remedies);

/// Render the Markdown narrative from the machine document only.
std::string render_markdown(const nlohmann::json& doc);

/// Write report.json and report.md atomically into `out_dir`.
void write_report(const UxReport& report, const std::filesystem::path& out_dir);

}  // namespace uxprobe::report
