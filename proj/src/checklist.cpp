#include "uxprobe/checklist.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/util.hpp"

#include <nlohmann/json.hpp>

namespace uxprobe::checklist {

using nlohmann::json;
using session::Checklist;

namespace {

/// Models often wrap JSON in markdown fences; strip them before parsing.
std::string strip_fences(const std::string& text) {
    std::string t = util::trim(text);
    if (t.rfind("```", 0) == 0) {
        std::size_t first_nl = t.find('\n');
        std::size_t last_fence = t.rfind("```");
        if (first_nl != std::string::npos && last_fence > first_nl) {
            t = util::trim(t.substr(first_nl + 1, last_fence - first_nl - 1));
        }
    }
    return t;
}

}  // namespace

Checklist parse_checklist_reply(const std::string& model_text) {
    json j;
    try {
        j = json::parse(strip_fences(model_text));
    } catch (const json::exception& e) {
        throw ParseError("checklist reply is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object() || !j.contains("items")) {
        throw ParseError("checklist reply must be an object with an 'items' array");
    }
    Checklist c;
    for (const auto& item : j.at("items")) {
        session::ChecklistItem ci;
        if (item.is_string()) {
            ci.text = item.get<std::string>();
            ci.status = session::ChecklistStatus::pending;
        } else {
            ci.text = item.at("text").get<std::string>();
            ci.status = session::checklist_status_from_label(item.at("status").get<std::string>());
        }
        c.items.push_back(std::move(ci));
    }
    return c;
}

void validate_update(const Checklist& current, const Checklist& proposed,
                     const UpdateOptions& options) {
    std::vector<std::size_t> delta = session::checklist_status_delta(current, proposed);
    if (delta.size() > 1) {
        std::string idx;
        for (std::size_t i : delta) idx += (idx.empty() ? "" : ", ") + std::to_string(i + 1);
        throw ValidationError("update changes " + std::to_string(delta.size()) +
                              " items (items " + idx + "); at most one may change per action");
    }
    if (options.strict_single_update && delta.empty()) {
        throw ValidationError("strict mode: update must change exactly one item");
    }
    for (std::size_t i : delta) {
        session::ChecklistStatus from = current.items[i].status;
        session::ChecklistStatus to = proposed.items[i].status;
        if (!session::is_legal_transition(from, to) && !options.allow_reversal) {
            throw ValidationError(
                "illegal transition on item " + std::to_string(i + 1) + ": " +
                std::string(session::checklist_status_label(from)) + " -> " +
                std::string(session::checklist_status_label(to)));
        }
    }
}

Checklist apply_checklist_update(const Checklist& current, const Checklist& proposed,
                                 const UpdateOptions& options) {
    validate_update(current, proposed, options);
    return proposed;
}

Checklist generate_checklist(const session::TaskSpec& task, gateway::ModelGateway& gw,
                             const prompts::PromptLibrary& prompts, int retry_budget) {
    task.validate();
    std::string diagnostics;
    for (int attempt = 0; attempt <= retry_budget; ++attempt) {
        gateway::PromptBundle bundle;
        bundle.system = prompts.raw("checklist_generate");
        bundle.user = "TASK: " + task.task_description + "\nTARGET SITE: " + task.target_url;
        if (!diagnostics.empty()) {
            bundle.user += "\n\nYour previous reply was invalid: " + diagnostics +
                           "\nReply again, following the output format exactly.";
        }
        std::string reply = gw.complete(gateway::Role::checklist, bundle);
        try {
            Checklist c = parse_checklist_reply(reply);
            session::validate_checklist(c, /*require_all_pending=*/true);
            return c;
        } catch (const Error& e) {
            diagnostics = e.what();
        }
    }
    throw ValidationError("checklist generation failed after " + std::to_string(retry_budget + 1) +
                          " attempts: " + diagnostics);
}

Checklist propose_update(const Checklist& current, const std::string& step_context,
                         gateway::ModelGateway& gw, const prompts::PromptLibrary& prompts,
                         int retry_budget, const UpdateOptions& options,
                         std::vector<std::string>& warnings, std::string* raw_reply) {
    std::string diagnostics;
    for (int attempt = 0; attempt <= retry_budget; ++attempt) {
        gateway::PromptBundle bundle;
        bundle.system = prompts.raw("checklist_update");
        json current_json = session::checklist_to_json(current);
        bundle.user = "CURRENT CHECKLIST:\n" + current_json.dump(2) + "\n\n" + step_context;
        if (!diagnostics.empty()) {
            bundle.user += "\n\nYour previous reply was invalid: " + diagnostics +
                           "\nReply again with the full checklist.";
        }
        std::string reply = gw.complete(gateway::Role::checklist, bundle);
        if (raw_reply) *raw_reply = reply;
        try {
            Checklist proposed = parse_checklist_reply(reply);
            return apply_checklist_update(current, proposed, options);
        } catch (const Error& e) {
            diagnostics = e.what();
        }
    }
    warnings.push_back("checklist update rejected after " + std::to_string(retry_budget + 1) +
                       " attempts (" + diagnostics + "); checklist kept unchanged");
    return current;
}

}  // namespace uxprobe::checklist
