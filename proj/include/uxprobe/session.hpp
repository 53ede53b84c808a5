#pragma once

#include "uxprobe/actions.hpp"
#include "uxprobe/metrics.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace uxprobe::session {

// -- task ---------------------------------------------------------------------

struct PolicyFlags {
    bool login_prohibited = true;
};

struct TaskSpec {
    std::string target_url;
    std::string task_description;
    std::string persona_profile;  // optional, empty when absent
    PolicyFlags policy;

    /// Throws ValidationError on a malformed URL or empty description.
    void validate() const;
};

// -- checklist ----------------------------------------------------------------

enum class ChecklistStatus { pending, in_progress, completed, failed };

std::string_view checklist_status_label(ChecklistStatus s);

/// Strict parse: only the four lowercase status strings are accepted.
ChecklistStatus checklist_status_from_label(std::string_view s);

struct ChecklistItem {
    std::string text;
    ChecklistStatus status = ChecklistStatus::pending;

    bool operator==(const ChecklistItem&) const = default;
};

struct Checklist {
    std::vector<ChecklistItem> items;

    bool operator==(const Checklist&) const = default;
};

inline constexpr std::size_t kChecklistMinItems = 2;
inline constexpr std::size_t kChecklistMaxItems = 6;
inline constexpr std::size_t kChecklistMaxWords = 10;

/// Legal lifecycle moves: pending may open or close; in_progress may close.
/// Completed/failed items never change again (no resurrection). A status is
/// always allowed to stay put.
bool is_legal_transition(ChecklistStatus from, ChecklistStatus to);

/// Structural validation: 2..6 items, each item non-empty and <= 10 words.
/// When `require_all_pending` is set every status must be `pending` (used for
/// freshly generated checklists). Throws ValidationError naming the item.
void validate_checklist(const Checklist& c, bool require_all_pending);

/// Index positions (0-based) whose status differs between two snapshots.
/// Throws ValidationError if item texts differ.
std::vector<std::size_t> checklist_status_delta(const Checklist& before, const Checklist& after);

// -- per-step data --------------------------------------------------------------

enum class FrictionTag {
    waiting,
    searching,
    retrying,
    scrolling,
    confusion,
    error,
    ambiguity,
    uncertainty
};

std::string_view friction_tag_label(FrictionTag t);
FrictionTag friction_tag_from_label(std::string_view s);

struct StepAssessment {
    metrics::SeqRating seq = metrics::SeqRating::of(4);
    int efficiency = 4;
    int clarity = 4;
    int confidence = 4;
    std::string efficiency_note;
    std::string clarity_note;
    std::string confidence_note;
    std::set<FrictionTag> friction_tags;

    void validate() const;  // all four scores in [1,7]
};

enum class OutcomeStatus { applied, rejected, failed };

std::string_view outcome_status_label(OutcomeStatus s);
OutcomeStatus outcome_status_from_label(std::string_view s);

struct ActionOutcome {
    OutcomeStatus status = OutcomeStatus::applied;
    std::string reason;
    bool state_changed = false;
};

/// Descriptor of the element an action landed on, kept inline so friction
/// mapping works from the log alone.
struct TargetDescriptor {
    int tag_id = 0;
    std::string role;
    std::string label;
};

struct ActionRecord {
    int step_index = 0;  // 1-based, consecutive
    std::string think_aloud;
    Action action;
    ActionOutcome outcome;
    std::optional<TargetDescriptor> target;
    StepAssessment assessment;
    std::string observation_ref;
    Checklist checklist_after;
    std::int64_t timestamp_ms = 0;  // UTC epoch milliseconds
    std::int64_t latency_ms = 0;
    std::vector<std::string> warnings;  // loop warnings, checklist fallbacks, ...
    std::string raw_decision;           // archived model text
    std::string raw_assessment;
    std::string raw_checklist;
};

// -- session -----------------------------------------------------------------

enum class TerminalStatus { success, failure, budget_exhausted };

std::string_view terminal_status_label(TerminalStatus s);
TerminalStatus terminal_status_from_label(std::string_view s);

struct EngineConfig {
    std::string reasoning;
    std::string ux;
    std::string checklist;
};

struct SessionHeader {
    int schema_version = 1;
    std::string session_id;
    std::int64_t created_ms = 0;
    TaskSpec task;
    EngineConfig engines;
    std::vector<std::string> roadmap;  // empty = degraded / not planned
    Checklist checklist_initial;
    int viewport_width = 1280;
    int viewport_height = 800;
    std::string prompt_set_hash;
};

struct SusResult {
    metrics::SusResponses responses = metrics::SusResponses::from_items(
        std::vector<int>{3, 3, 3, 3, 3, 3, 3, 3, 3, 3});
    metrics::SusScore score = metrics::SusScore::from_milli(0);
    metrics::CgsGrade grade{metrics::Grade::F, 0, 14};
    std::string mode;  // "model", "rule_based", or "rule_based_fallback"
};

struct GatewayCallMeta {
    std::string role;
    std::string request_digest;
    std::string response_digest;
    std::int64_t latency_ms = 0;
    int attempts = 1;
    std::size_t prompt_chars = 0;
};

struct SessionLog {
    SessionHeader header;
    std::vector<ActionRecord> records;
    std::optional<TerminalStatus> terminal_status;
    std::string terminal_reason;
    std::optional<SusResult> sus;
    std::vector<GatewayCallMeta> gateway_calls;

    bool terminated() const { return terminal_status.has_value(); }
    std::vector<metrics::SeqRating> seq_series() const;

    /// Full structural validation (index continuity, checklist deltas,
    /// transition legality, terminal/sus presence rules).
    void validate() const;
};

/// Validate that `record` may extend `log` (consecutive index, <= 1 checklist
/// status change against the previous snapshot, legal transition). Throws
/// IntegrityError.
void validate_append(const SessionLog& log, const ActionRecord& record);

// -- serialization ---------------------------------------------------------------

nlohmann::json record_to_json(const ActionRecord& r);
ActionRecord record_from_json(const nlohmann::json& j);
nlohmann::json header_to_json(const SessionHeader& h);
SessionHeader header_from_json(const nlohmann::json& j);
nlohmann::json checklist_to_json(const Checklist& c);
Checklist checklist_from_json(const nlohmann::json& j);
nlohmann::json assessment_to_json(const StepAssessment& a);
StepAssessment assessment_from_json(const nlohmann::json& j);
nlohmann::json sus_result_to_json(const SusResult& s);
SusResult sus_result_from_json(const nlohmann::json& j);

/// Append-only line-delimited writer. Every line is flushed before the call
/// returns, so a crash never loses an acknowledged record.
class SessionWriter {
public:
    SessionWriter(const std::filesystem::path& path, SessionHeader header);

    void append(ActionRecord record);
    void write_terminal(TerminalStatus status, const std::string& reason);
    void write_sus(SusResult sus);
    void write_gateway_call(GatewayCallMeta meta);

    const SessionLog& log() const { return log_; }
    const std::filesystem::path& path() const { return path_; }

private:
    void write_line(const nlohmann::json& j);

    std::filesystem::path path_;
    std::ofstream out_;
    SessionLog log_;
};

/// Load and fully validate a session file. In salvage mode a truncated or
/// unparseable FINAL line is dropped with a warning pushed to `warnings`;
/// in strict mode any bad line raises ParseError with its line number.
SessionLog load_session(const std::filesystem::path& path, bool salvage = false,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace uxprobe::session
