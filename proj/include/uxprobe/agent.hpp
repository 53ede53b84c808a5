#pragma once

#include "uxprobe/actions.hpp"
#include "uxprobe/browser.hpp"
#include "uxprobe/checklist.hpp"
#include "uxprobe/gateway.hpp"
#include "uxprobe/grounding.hpp"
#include "uxprobe/prompts.hpp"
#include "uxprobe/session.hpp"
#include "uxprobe/util.hpp"

#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uxprobe::agent {

// -- roadmap (pre-execution planning) -----------------------------------------

struct EipRoadmap {
    std::vector<std::string> sentences;  // 2..4 when present; empty = degraded

    bool empty() const { return sentences.empty(); }
    std::string render() const;
};

struct SearchResult {
    std::string title;
    std::string url;
    std::string snippet;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    virtual std::vector<SearchResult> search(const std::string& query) = 0;
};

/// Replays canned results from a fixture file; the desk-scale stand-in for a
/// live web search backend.
class FixtureSearchProvider final : public SearchProvider {
public:
    static FixtureSearchProvider from_file(const std::filesystem::path& path);
    explicit FixtureSearchProvider(std::vector<SearchResult> results)
        : results_(std::move(results)) {}
    std::vector<SearchResult> search(const std::string& query) override;

private:
    std::vector<SearchResult> results_;
};

/// Parse a roadmap reply ({"sentences":[...]} or plain numbered lines).
EipRoadmap parse_roadmap_reply(const std::string& model_text);

/// Run the pre-execution planning pass. Roadmaps are advisory: on search or
/// gateway failure the session proceeds with an empty roadmap and a warning.
/// Replies with too many sentences are re-prompted, then truncated to four.
EipRoadmap plan_roadmap(const session::TaskSpec& task, SearchProvider* search,
                        gateway::ModelGateway& gateway, const prompts::PromptLibrary& prompts,
                        int retry_budget, std::vector<std::string>& warnings);

// -- per-step decision ----------------------------------------------------------

struct Decision {
    std::string think_aloud;
    Action action;
};

/// Parse a decision reply: JSON {"think_aloud","action"} or the labeled
/// plain-text fallback (THINK:/ACTION: lines). Throws on malformed input,
/// empty think-aloud, GOTO, or out-of-range coordinates.
Decision parse_decision_reply(const std::string& model_text);

/// Parse an assessment reply (JSON with the four 1-7 scores, notes, tags).
session::StepAssessment parse_assessment_reply(const std::string& model_text);

/// Context-sensitive validation: pointer actions must not land on a
/// select-role element (the select action must be used), and select tags
/// must resolve. Throws ValidationError with re-prompt guidance.
void validate_action_against_observation(const Action& action,
                                         const grounding::Observation& obs);

// -- policy gate -----------------------------------------------------------------

/// If the policy prohibits login and the observation shows a credential UI
/// (password-type input, or an element labeled sign in / log in), returns
/// the mandated Terminate(failure, "login prohibited") replacement.
std::optional<Action> policy_override(const grounding::Observation& obs,
                                      const session::PolicyFlags& policy);

/// Pass-through enforcement wrapper: returns the (possibly replaced) action.
Action enforce_policy(const grounding::Observation& obs, const Action& action,
                      const session::PolicyFlags& policy);

// -- loop detection ---------------------------------------------------------------

enum class LoopVerdict { ok, warn, brk };

class LoopDetector {
public:
    LoopDetector(int warn_threshold, int break_threshold, int quantize_units)
        : warn_(warn_threshold), break_(break_threshold), quantize_(quantize_units) {}

    /// Feed the next action; counts consecutive identical signatures.
    LoopVerdict check(const Action& action);
    int consecutive() const { return count_; }

private:
    int warn_;
    int break_;
    int quantize_;
    std::string last_signature_;
    int count_ = 0;
};

// -- adaptive memory ---------------------------------------------------------------

/// Sliding window of recent records plus a rolling one-sentence-per-step
/// summary of everything older.
class AgentMemory {
public:
    explicit AgentMemory(std::size_t window_capacity) : capacity_(window_capacity) {}

    void push(const session::ActionRecord& record);
    /// Fold the oldest window entry into the summary (used for both window
    /// overflow and context-budget pressure).
    bool compress_oldest();

    std::size_t window_size() const { return window_.size(); }
    const std::string& summary() const { return summary_; }
    std::string render() const;

private:
    std::size_t capacity_;
    std::deque<session::ActionRecord> window_;
    std::string summary_;
};

// -- the closed loop ----------------------------------------------------------------

struct AgentOptions {
    int step_budget = 40;
    int memory_window = 5;
    int loop_warn_threshold = 3;
    int loop_break_threshold = 5;
    int loop_quantize_units = 20;
    int reprompt_budget = 2;
    checklist::UpdateOptions checklist;
};

struct StepResult {
    session::ActionRecord record;
    bool terminated = false;
    session::TerminalStatus terminal_status = session::TerminalStatus::failure;
    std::string terminal_reason;
};

/// Observe -> decide -> enforce -> act -> assess -> update -> append, strictly
/// sequential within a session. Gateway and driver calls are synchronous.
class AgentLoop {
public:
    AgentLoop(browser::Driver& driver, gateway::ModelGateway& gateway,
              const prompts::PromptLibrary& prompts, util::Clock& clock, AgentOptions options,
              std::filesystem::path observation_dir);

    /// Run the full loop, appending records through `writer`. Returns the
    /// terminal status (success / failure / budget_exhausted).
    std::pair<session::TerminalStatus, std::string> run(session::SessionWriter& writer,
                                                        const session::TaskSpec& task,
                                                        const EipRoadmap& roadmap,
                                                        session::Checklist checklist_state);

private:
    grounding::Observation observe();
    Decision decide(const grounding::Observation& obs, const session::Checklist& checklist_state,
                    const EipRoadmap& roadmap, const session::TaskSpec& task, int step_index,
                    std::string& raw_text);
    session::StepAssessment assess(const grounding::Observation& obs, const Decision& decision,
                                   const session::ActionOutcome& outcome, std::int64_t latency_ms,
                                   int step_index, std::string& raw_text);
    std::string store_observation(const grounding::Observation& obs,
                                  const browser::Snapshot& snap);

    browser::Driver& driver_;
    gateway::ModelGateway& gateway_;
    const prompts::PromptLibrary& prompts_;
    util::Clock& clock_;
    AgentOptions options_;
    std::filesystem::path observation_dir_;
    AgentMemory memory_;
    LoopDetector loop_detector_;
    std::string pending_note_;  // loop warnings injected into the next prompt
    std::string last_screenshot_;
    std::string last_screenshot_mime_;
};

}  // namespace uxprobe::agent
