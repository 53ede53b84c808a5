#pragma once

#include "uxprobe/gateway.hpp"
#include "uxprobe/prompts.hpp"
#include "uxprobe/session.hpp"

#include <string>
#include <vector>

namespace uxprobe::checklist {

struct UpdateOptions {
    /// When set, an update must change exactly one item; by default zero-change
    /// updates are also accepted (some actions affect no outcome state).
    bool strict_single_update = false;
    /// When set, completed/failed items may move again (off by default).
    bool allow_reversal = false;
};

/// Parse a model reply carrying a checklist ({"items":[{text,status}...]});
/// code fences around the JSON are tolerated. Throws ParseError /
/// ValidationError.
session::Checklist parse_checklist_reply(const std::string& model_text);

/// Validate `proposed` as the successor of `current`: same item texts in the
/// same order, at most one status change (exactly one in strict mode), and a
/// legal lifecycle transition. Throws ValidationError with the offending
/// indices.
void validate_update(const session::Checklist& current, const session::Checklist& proposed,
                     const UpdateOptions& options = {});

/// Apply a proposed update after validation; returns the accepted snapshot.
session::Checklist apply_checklist_update(const session::Checklist& current,
                                          const session::Checklist& proposed,
                                          const UpdateOptions& options = {});

/// Ask the checklist engine to decompose the task; model output failing the
/// structural validators is re-prompted with diagnostics up to `retry_budget`
/// extra attempts, after which the session must not start.
session::Checklist generate_checklist(const session::TaskSpec& task,
                                      gateway::ModelGateway& gateway,
                                      const prompts::PromptLibrary& prompts, int retry_budget);

/// Ask the checklist engine for the post-action snapshot. On persistent
/// invalid output the current checklist is kept unchanged and a warning is
/// appended to `warnings`.
session::Checklist propose_update(const session::Checklist& current,
                                  const std::string& step_context,
                                  gateway::ModelGateway& gateway,
                                  const prompts::PromptLibrary& prompts, int retry_budget,
                                  const UpdateOptions& options, std::vector<std::string>& warnings,
                                  std::string* raw_reply = nullptr);

}  // namespace uxprobe::checklist
