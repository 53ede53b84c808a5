#include "uxprobe/session.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace uxprobe::session {

using nlohmann::json;

// -- task ---------------------------------------------------------------------

void TaskSpec::validate() const {
    if (!util::is_absolute_url(target_url)) {
        throw ValidationError("target_url is not a valid absolute URL: '" + target_url + "'");
    }
    if (util::trim(task_description).empty()) {
        throw ValidationError("task_description must be non-empty");
    }
}

// -- checklist ----------------------------------------------------------------

std::string_view checklist_status_label(ChecklistStatus s) {
    switch (s) {
        case ChecklistStatus::pending: return "pending";
        case ChecklistStatus::in_progress: return "in_progress";
        case ChecklistStatus::completed: return "completed";
        case ChecklistStatus::failed: return "failed";
    }
    return "pending";
}

ChecklistStatus checklist_status_from_label(std::string_view s) {
    if (s == "pending") return ChecklistStatus::pending;
    if (s == "in_progress") return ChecklistStatus::in_progress;
    if (s == "completed") return ChecklistStatus::completed;
    if (s == "failed") return ChecklistStatus::failed;
    throw ValidationError("invalid checklist status '" + std::string(s) +
                          "' (must be lowercase: pending, in_progress, completed, failed)");
}

bool is_legal_transition(ChecklistStatus from, ChecklistStatus to) {
    if (from == to) return true;
    switch (from) {
        case ChecklistStatus::pending:
            return to == ChecklistStatus::in_progress || to == ChecklistStatus::completed ||
                   to == ChecklistStatus::failed;
        case ChecklistStatus::in_progress:
            return to == ChecklistStatus::completed || to == ChecklistStatus::failed;
        case ChecklistStatus::completed:
        case ChecklistStatus::failed:
            return false;
    }
    return false;
}

void validate_checklist(const Checklist& c, bool require_all_pending) {
    if (c.items.size() < kChecklistMinItems || c.items.size() > kChecklistMaxItems) {
        throw ValidationError("checklist must have between 2 and 6 items, got " +
                              std::to_string(c.items.size()));
    }
    for (std::size_t i = 0; i < c.items.size(); ++i) {
        const ChecklistItem& item = c.items[i];
        if (util::trim(item.text).empty()) {
            throw ValidationError("checklist item " + std::to_string(i + 1) + " is empty");
        }
        std::size_t words = util::word_count(item.text);
        if (words > kChecklistMaxWords) {
            throw ValidationError("checklist item " + std::to_string(i + 1) + " has " +
                                  std::to_string(words) + " words (max 10): '" + item.text + "'");
        }
        if (require_all_pending && item.status != ChecklistStatus::pending) {
            throw ValidationError("checklist item " + std::to_string(i + 1) +
                                  " must start as 'pending'");
        }
    }
}

std::vector<std::size_t> checklist_status_delta(const Checklist& before, const Checklist& after) {
    if (before.items.size() != after.items.size()) {
        throw ValidationError("checklist item count changed from " +
                              std::to_string(before.items.size()) + " to " +
                              std::to_string(after.items.size()));
    }
    std::vector<std::size_t> changed;
    for (std::size_t i = 0; i < before.items.size(); ++i) {
        if (before.items[i].text != after.items[i].text) {
            throw ValidationError("checklist item " + std::to_string(i + 1) +
                                  " text changed (item texts are immutable)");
        }
        if (before.items[i].status != after.items[i].status) changed.push_back(i);
    }
    return changed;
}

// -- per-step data ---------------------------------------------------------------

std::string_view friction_tag_label(FrictionTag t) {
    switch (t) {
        case FrictionTag::waiting: return "waiting";
        case FrictionTag::searching: return "searching";
        case FrictionTag::retrying: return "retrying";
        case FrictionTag::scrolling: return "scrolling";
        case FrictionTag::confusion: return "confusion";
        case FrictionTag::error: return "error";
        case FrictionTag::ambiguity: return "ambiguity";
        case FrictionTag::uncertainty: return "uncertainty";
    }
    return "confusion";
}

FrictionTag friction_tag_from_label(std::string_view s) {
    if (s == "waiting") return FrictionTag::waiting;
    if (s == "searching") return FrictionTag::searching;
    if (s == "retrying") return FrictionTag::retrying;
    if (s == "scrolling") return FrictionTag::scrolling;
    if (s == "confusion") return FrictionTag::confusion;
    if (s == "error") return FrictionTag::error;
    if (s == "ambiguity") return FrictionTag::ambiguity;
    if (s == "uncertainty") return FrictionTag::uncertainty;
    throw ValidationError("unknown friction tag '" + std::string(s) + "'");
}

void StepAssessment::validate() const {
    auto check = [](int v, const char* name) {
        if (v < 1 || v > 7) {
            throw ValidationError(std::string(name) + " score out of range [1,7]: " +
                                  std::to_string(v));
        }
    };
    check(seq.value(), "seq");
    check(efficiency, "efficiency");
    check(clarity, "clarity");
    check(confidence, "confidence");
}

std::string_view outcome_status_label(OutcomeStatus s) {
    switch (s) {
        case OutcomeStatus::applied: return "applied";
        case OutcomeStatus::rejected: return "rejected";
        case OutcomeStatus::failed: return "failed";
    }
    return "applied";
}

OutcomeStatus outcome_status_from_label(std::string_view s) {
    if (s == "applied") return OutcomeStatus::applied;
    if (s == "rejected") return OutcomeStatus::rejected;
    if (s == "failed") return OutcomeStatus::failed;
    throw ValidationError("unknown outcome status '" + std::string(s) + "'");
}

std::string_view terminal_status_label(TerminalStatus s) {
    switch (s) {
        case TerminalStatus::success: return "success";
        case TerminalStatus::failure: return "failure";
        case TerminalStatus::budget_exhausted: return "budget_exhausted";
    }
    return "failure";
}

TerminalStatus terminal_status_from_label(std::string_view s) {
    if (s == "success") return TerminalStatus::success;
    if (s == "failure") return TerminalStatus::failure;
    if (s == "budget_exhausted") return TerminalStatus::budget_exhausted;
    throw ValidationError("unknown terminal status '" + std::string(s) + "'");
}

// -- session ---------------------------------------------------------------------

std::vector<metrics::SeqRating> SessionLog::seq_series() const {
    std::vector<metrics::SeqRating> out;
    out.reserve(records.size());
    for (const ActionRecord& r : records) out.push_back(r.assessment.seq);
    return out;
}

void validate_append(const SessionLog& log, const ActionRecord& record) {
    int expected = static_cast<int>(log.records.size()) + 1;
    if (record.step_index != expected) {
        throw IntegrityError("record step_index " + std::to_string(record.step_index) +
                             " does not follow previous index " +
                             std::to_string(expected - 1));
    }
    const Checklist& prev =
        log.records.empty() ? log.header.checklist_initial : log.records.back().checklist_after;
    std::vector<std::size_t> delta;
    try {
        delta = checklist_status_delta(prev, record.checklist_after);
    } catch (const ValidationError& e) {
        throw IntegrityError(std::string("checklist snapshot invalid at step ") +
                             std::to_string(record.step_index) + ": " + e.what());
    }
    if (delta.size() > 1) {
        std::string idx;
        for (std::size_t i : delta) idx += (idx.empty() ? "" : ", ") + std::to_string(i + 1);
        throw IntegrityError("checklist changed " + std::to_string(delta.size()) +
                             " items in one step (items " + idx + "); at most one is allowed");
    }
    for (std::size_t i : delta) {
        ChecklistStatus from = prev.items[i].status;
        ChecklistStatus to = record.checklist_after.items[i].status;
        if (!is_legal_transition(from, to)) {
            throw IntegrityError("illegal checklist transition on item " + std::to_string(i + 1) +
                                 ": " + std::string(checklist_status_label(from)) + " -> " +
                                 std::string(checklist_status_label(to)));
        }
    }
    record.assessment.validate();
}

void SessionLog::validate() const {
    header.task.validate();
    if (!header.roadmap.empty() &&
        (header.roadmap.size() < 2 || header.roadmap.size() > 4)) {
        throw ValidationError("roadmap must have 2-4 sentences when present, got " +
                              std::to_string(header.roadmap.size()));
    }
    validate_checklist(header.checklist_initial, /*require_all_pending=*/false);
    SessionLog probe;
    probe.header = header;
    for (const ActionRecord& r : records) {
        validate_append(probe, r);
        probe.records.push_back(r);
    }
    if (terminated() && records.empty()) {
        throw ValidationError("terminated session has no records");
    }
    if (sus.has_value() && !terminated()) {
        throw ValidationError("sus present on a session with no terminal status");
    }
}

// -- serialization -----------------------------------------------------------------

json checklist_to_json(const Checklist& c) {
    json items = json::array();
    for (const ChecklistItem& item : c.items) {
        items.push_back(json{{"text", item.text},
                             {"status", std::string(checklist_status_label(item.status))}});
    }
    return items;
}

Checklist checklist_from_json(const json& j) {
    if (!j.is_array()) throw ValidationError("checklist must be an array");
    Checklist c;
    for (const auto& item : j) {
        ChecklistItem ci;
        ci.text = item.at("text").get<std::string>();
        ci.status = checklist_status_from_label(item.at("status").get<std::string>());
        c.items.push_back(std::move(ci));
    }
    return c;
}

json assessment_to_json(const StepAssessment& a) {
    json tags = json::array();
    for (FrictionTag t : a.friction_tags) tags.push_back(std::string(friction_tag_label(t)));
    return json{{"seq", a.seq.value()},
                {"efficiency", a.efficiency},
                {"efficiency_note", a.efficiency_note},
                {"clarity", a.clarity},
                {"clarity_note", a.clarity_note},
                {"confidence", a.confidence},
                {"confidence_note", a.confidence_note},
                {"friction_tags", std::move(tags)}};
}

StepAssessment assessment_from_json(const json& j) {
    StepAssessment a;
    a.seq = metrics::SeqRating::of(j.at("seq").get<int>());
    a.efficiency = j.at("efficiency").get<int>();
    a.clarity = j.at("clarity").get<int>();
    a.confidence = j.at("confidence").get<int>();
    a.efficiency_note = j.value("efficiency_note", std::string{});
    a.clarity_note = j.value("clarity_note", std::string{});
    a.confidence_note = j.value("confidence_note", std::string{});
    if (j.contains("friction_tags")) {
        for (const auto& t : j.at("friction_tags")) {
            a.friction_tags.insert(friction_tag_from_label(t.get<std::string>()));
        }
    }
    a.validate();
    return a;
}

json record_to_json(const ActionRecord& r) {
    json out{{"type", "record"},
             {"step_index", r.step_index},
             {"timestamp", util::iso8601_ms(r.timestamp_ms)},
             {"timestamp_ms", r.timestamp_ms},
             {"latency_ms", r.latency_ms},
             {"think_aloud", r.think_aloud},
             {"action", action_to_grammar(r.action)},
             {"outcome",
              json{{"status", std::string(outcome_status_label(r.outcome.status))},
                   {"reason", r.outcome.reason},
                   {"state_changed", r.outcome.state_changed}}},
             {"assessment", assessment_to_json(r.assessment)},
             {"observation_ref", r.observation_ref},
             {"checklist_after", checklist_to_json(r.checklist_after)}};
    if (r.target.has_value()) {
        out["target"] = json{{"tag_id", r.target->tag_id},
                             {"role", r.target->role},
                             {"label", r.target->label}};
    }
    if (!r.warnings.empty()) out["warnings"] = r.warnings;
    json raw;
    if (!r.raw_decision.empty()) raw["decision"] = r.raw_decision;
    if (!r.raw_assessment.empty()) raw["assessment"] = r.raw_assessment;
    if (!r.raw_checklist.empty()) raw["checklist"] = r.raw_checklist;
    if (!raw.is_null()) out["raw"] = std::move(raw);
    return out;
}

ActionRecord record_from_json(const json& j) {
    ActionRecord r;
    r.step_index = j.at("step_index").get<int>();
    r.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    r.latency_ms = j.at("latency_ms").get<std::int64_t>();
    if (r.latency_ms < 0) throw ValidationError("latency_ms must be non-negative");
    r.think_aloud = j.at("think_aloud").get<std::string>();
    r.action = parse_action(j.at("action").get<std::string>());
    const json& o = j.at("outcome");
    r.outcome.status = outcome_status_from_label(o.at("status").get<std::string>());
    r.outcome.reason = o.value("reason", std::string{});
    r.outcome.state_changed = o.value("state_changed", false);
    r.assessment = assessment_from_json(j.at("assessment"));
    r.observation_ref = j.at("observation_ref").get<std::string>();
    r.checklist_after = checklist_from_json(j.at("checklist_after"));
    if (j.contains("target")) {
        TargetDescriptor t;
        t.tag_id = j.at("target").value("tag_id", 0);
        t.role = j.at("target").value("role", std::string{});
        t.label = j.at("target").value("label", std::string{});
        r.target = std::move(t);
    }
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("raw")) {
        r.raw_decision = j.at("raw").value("decision", std::string{});
        r.raw_assessment = j.at("raw").value("assessment", std::string{});
        r.raw_checklist = j.at("raw").value("checklist", std::string{});
    }
    return r;
}

json header_to_json(const SessionHeader& h) {
    return json{{"type", "header"},
                {"schema_version", h.schema_version},
                {"session_id", h.session_id},
                {"created", util::iso8601_ms(h.created_ms)},
                {"created_ms", h.created_ms},
                {"task",
                 json{{"url", h.task.target_url},
                      {"description", h.task.task_description},
                      {"persona", h.task.persona_profile},
                      {"login_prohibited", h.task.policy.login_prohibited}}},
                {"engines",
                 json{{"reasoning", h.engines.reasoning},
                      {"ux", h.engines.ux},
                      {"checklist", h.engines.checklist}}},
                {"roadmap", h.roadmap},
                {"checklist_initial", checklist_to_json(h.checklist_initial)},
                {"viewport", {h.viewport_width, h.viewport_height}},
                {"prompt_set_hash", h.prompt_set_hash}};
}

SessionHeader header_from_json(const json& j) {
    SessionHeader h;
    h.schema_version = j.at("schema_version").get<int>();
    if (h.schema_version != 1) {
        throw ValidationError("unsupported session schema version " +
                              std::to_string(h.schema_version));
    }
    h.session_id = j.at("session_id").get<std::string>();
    h.created_ms = j.at("created_ms").get<std::int64_t>();
    const json& t = j.at("task");
    h.task.target_url = t.at("url").get<std::string>();
    h.task.task_description = t.at("description").get<std::string>();
    h.task.persona_profile = t.value("persona", std::string{});
    h.task.policy.login_prohibited = t.value("login_prohibited", true);
    const json& e = j.at("engines");
    h.engines.reasoning = e.at("reasoning").get<std::string>();
    h.engines.ux = e.at("ux").get<std::string>();
    h.engines.checklist = e.at("checklist").get<std::string>();
    h.roadmap = j.value("roadmap", std::vector<std::string>{});
    h.checklist_initial = checklist_from_json(j.at("checklist_initial"));
    h.viewport_width = j.at("viewport").at(0).get<int>();
    h.viewport_height = j.at("viewport").at(1).get<int>();
    if (h.viewport_width <= 0 || h.viewport_height <= 0) {
        throw ValidationError("viewport dimensions must be positive");
    }
    h.prompt_set_hash = j.value("prompt_set_hash", std::string{});
    return h;
}

json sus_result_to_json(const SusResult& s) {
    return json{{"type", "sus"},
                {"items", s.responses.items()},
                {"score", s.score.value()},
                {"grade", std::string(s.grade.label())},
                {"percentile", {s.grade.percentile_lo, s.grade.percentile_hi}},
                {"mode", s.mode}};
}

SusResult sus_result_from_json(const json& j) {
    SusResult s;
    s.responses = metrics::SusResponses::from_items(j.at("items").get<std::vector<int>>());
    s.score = metrics::SusScore::from_value(j.at("score").get<double>());
    s.grade = metrics::grade_sus(s.score);
    if (j.at("grade").get<std::string>() != s.grade.label()) {
        throw ValidationError("stored grade '" + j.at("grade").get<std::string>() +
                              "' does not match score " + util::format_fixed(s.score.value(), 1));
    }
    s.mode = j.value("mode", std::string{});
    return s;
}

// -- writer -------------------------------------------------------------------------

SessionWriter::SessionWriter(const std::filesystem::path& path, SessionHeader header)
    : path_(path) {
    header.task.validate();
    validate_checklist(header.checklist_initial, /*require_all_pending=*/false);
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw ConfigError("cannot open session log for writing: " + path.string());
    log_.header = std::move(header);
    write_line(header_to_json(log_.header));
}

void SessionWriter::write_line(const json& j) {
    out_ << j.dump() << "\n";
    out_.flush();
    if (!out_) throw ConfigError("failed writing session log: " + path_.string());
}

void SessionWriter::append(ActionRecord record) {
    validate_append(log_, record);
    write_line(record_to_json(record));
    log_.records.push_back(std::move(record));
}

void SessionWriter::write_terminal(TerminalStatus status, const std::string& reason) {
    if (log_.terminal_status.has_value()) throw IntegrityError("session already terminated");
    write_line(json{{"type", "terminal"},
                    {"status", std::string(terminal_status_label(status))},
                    {"reason", reason}});
    log_.terminal_status = status;
    log_.terminal_reason = reason;
}

void SessionWriter::write_sus(SusResult sus) {
    if (!log_.terminal_status.has_value()) {
        throw IntegrityError("cannot record SUS before the session terminates");
    }
    write_line(sus_result_to_json(sus));
    log_.sus = std::move(sus);
}

void SessionWriter::write_gateway_call(GatewayCallMeta meta) {
    write_line(json{{"type", "gateway_call"},
                    {"role", meta.role},
                    {"request_digest", meta.request_digest},
                    {"response_digest", meta.response_digest},
                    {"latency_ms", meta.latency_ms},
                    {"attempts", meta.attempts},
                    {"prompt_chars", meta.prompt_chars}});
    log_.gateway_calls.push_back(std::move(meta));
}

// -- loader ----------------------------------------------------------------------

SessionLog load_session(const std::filesystem::path& path, bool salvage,
                        std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open session log: " + path.string());

    SessionLog log;
    bool have_header = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            bool at_eof = in.peek() == std::char_traits<char>::eof();
            if (salvage && at_eof) {
                if (warnings) {
                    warnings->push_back("line " + std::to_string(line_no) +
                                        ": dropped unparseable final line");
                }
                break;
            }
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        try {
            std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header) throw ValidationError("duplicate header line");
                log.header = header_from_json(j);
                have_header = true;
            } else if (type == "record") {
                if (!have_header) throw ValidationError("record before header");
                ActionRecord r = record_from_json(j);
                validate_append(log, r);
                log.records.push_back(std::move(r));
            } else if (type == "terminal") {
                if (!have_header) throw ValidationError("terminal before header");
                log.terminal_status =
                    terminal_status_from_label(j.at("status").get<std::string>());
                log.terminal_reason = j.value("reason", std::string{});
            } else if (type == "sus") {
                log.sus = sus_result_from_json(j);
            } else if (type == "gateway_call") {
                GatewayCallMeta m;
                m.role = j.value("role", std::string{});
                m.request_digest = j.value("request_digest", std::string{});
                m.response_digest = j.value("response_digest", std::string{});
                m.latency_ms = j.value("latency_ms", std::int64_t{0});
                m.attempts = j.value("attempts", 1);
                m.prompt_chars = j.value("prompt_chars", std::size_t{0});
                log.gateway_calls.push_back(std::move(m));
            } else {
                throw ValidationError("unknown line type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
        } catch (const Error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    if (!have_header) throw ParseError("session log has no header line", 1);
    log.validate();
    return log;
}

}  // namespace uxprobe::session
