#include "uxprobe/agent.hpp"

#include "uxprobe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace uxprobe::agent {

using grounding::Observation;
using nlohmann::json;
using session::ActionRecord;
using session::StepAssessment;

namespace {

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

// -- roadmap -----------------------------------------------------------------

std::string EipRoadmap::render() const {
    std::string out;
    for (const std::string& s : sentences) {
        if (!out.empty()) out += " ";
        out += s;
    }
    return out;
}

FixtureSearchProvider FixtureSearchProvider::from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw FixtureError("cannot parse search fixture " + path.string() + ": " + e.what());
    }
    std::vector<SearchResult> results;
    for (const auto& r : j.at("results")) {
        results.push_back(SearchResult{r.value("title", std::string{}),
                                       r.value("url", std::string{}),
                                       r.value("snippet", std::string{})});
    }
    return FixtureSearchProvider(std::move(results));
}

std::vector<SearchResult> FixtureSearchProvider::search(const std::string&) { return results_; }

EipRoadmap parse_roadmap_reply(const std::string& model_text) {
    std::string t = strip_fences(model_text);
    EipRoadmap roadmap;
    try {
        json j = json::parse(t);
        for (const auto& s : j.at("sentences")) {
            std::string sentence = util::trim(s.get<std::string>());
            if (!sentence.empty()) roadmap.sentences.push_back(sentence);
        }
        return roadmap;
    } catch (const json::exception&) {
        // Plain-text fallback: one sentence per non-empty line, numbering and
        // bullets stripped.
        for (const std::string& raw_line : util::split(t, '\n')) {
            std::string line = util::trim(raw_line);
            while (!line.empty() && (std::isdigit(static_cast<unsigned char>(line[0])) ||
                                     line[0] == '.' || line[0] == ')' || line[0] == '-' ||
                                     line[0] == '*')) {
                line.erase(line.begin());
            }
            line = util::trim(line);
            if (!line.empty()) roadmap.sentences.push_back(line);
        }
        if (roadmap.sentences.empty()) {
            throw ParseError("roadmap reply contains no sentences");
        }
        return roadmap;
    }
}

EipRoadmap plan_roadmap(const session::TaskSpec& task, SearchProvider* search,
                        gateway::ModelGateway& gw, const prompts::PromptLibrary& prompts,
                        int retry_budget, std::vector<std::string>& warnings) {
    if (search == nullptr) {
        warnings.push_back("no search provider configured; proceeding without a roadmap");
        return EipRoadmap{};
    }
    std::vector<SearchResult> results;
    try {
        results = search->search(task.target_url + " help documentation user guide " +
                                 task.task_description);
    } catch (const std::exception& e) {
        warnings.push_back(std::string("search failed (") + e.what() +
                           "); proceeding without a roadmap");
        return EipRoadmap{};
    }
    if (results.empty()) {
        warnings.push_back("search returned no results; proceeding without a roadmap");
        return EipRoadmap{};
    }

    std::ostringstream results_text;
    for (const SearchResult& r : results) {
        results_text << "- " << r.title << " (" << r.url << "): " << r.snippet << "\n";
    }

    std::string diagnostics;
    EipRoadmap last_parsed;
    for (int attempt = 0; attempt <= retry_budget; ++attempt) {
        gateway::PromptBundle bundle;
        bundle.system = prompts.raw("eip_search");
        bundle.user = "TASK: " + task.task_description + "\nTARGET SITE: " + task.target_url +
                      "\n\nSEARCH RESULTS:\n" + results_text.str();
        if (!diagnostics.empty()) {
            bundle.user += "\nYour previous reply was invalid: " + diagnostics +
                           "\nReply again with 2-4 imperative sentences.";
        }
        std::string reply;
        try {
            reply = gw.complete(gateway::Role::reasoning, bundle);
        } catch (const Error& e) {
            warnings.push_back(std::string("roadmap planning failed (") + e.what() +
                               "); proceeding without a roadmap");
            return EipRoadmap{};
        }
        try {
            EipRoadmap roadmap = parse_roadmap_reply(reply);
            last_parsed = roadmap;
            if (roadmap.sentences.size() >= 2 && roadmap.sentences.size() <= 4) return roadmap;
            diagnostics = "expected 2-4 sentences, got " +
                          std::to_string(roadmap.sentences.size());
        } catch (const Error& e) {
            diagnostics = e.what();
        }
    }
    if (last_parsed.sentences.size() > 4) {
        last_parsed.sentences.resize(4);
        warnings.push_back("roadmap still too long after retries; truncated to 4 sentences");
        return last_parsed;
    }
    warnings.push_back("roadmap invalid after retries (" + diagnostics +
                       "); proceeding without a roadmap");
    return EipRoadmap{};
}

// -- decision / assessment parsing ------------------------------------------------

Decision parse_decision_reply(const std::string& model_text) {
    std::string t = strip_fences(model_text);
    std::string think;
    std::string action_text;
    bool parsed = false;
    try {
        json j = json::parse(t);
        if (j.is_object() && j.contains("action")) {
            think = j.value("think_aloud", std::string{});
            action_text = j.at("action").get<std::string>();
            parsed = true;
        }
    } catch (const json::exception&) {
        // fall through to the labeled-lines grammar
    }
    if (!parsed) {
        for (const std::string& raw_line : util::split(t, '\n')) {
            std::string line = util::trim(raw_line);
            if (util::starts_with_ci(line, "THINK:")) {
                think = util::trim(line.substr(6));
            } else if (util::starts_with_ci(line, "ACTION:")) {
                action_text = util::trim(line.substr(7));
            }
        }
        if (action_text.empty()) {
            throw ParseError("decision reply has no action (expected JSON with an 'action' "
                             "field or a line starting with ACTION:)");
        }
    }
    if (util::trim(think).empty()) {
        throw ParseError("think-aloud text must be non-empty");
    }
    Decision d;
    d.think_aloud = util::trim(think);
    d.action = parse_action(action_text);
    return d;
}

StepAssessment parse_assessment_reply(const std::string& model_text) {
    std::string t = strip_fences(model_text);
    json j;
    try {
        j = json::parse(t);
    } catch (const json::exception& e) {
        throw ParseError("assessment reply is not valid JSON: " + std::string(e.what()));
    }
    StepAssessment a = session::assessment_from_json(j);
    return a;
}

void validate_action_against_observation(const Action& action, const Observation& obs) {
    if (const auto* sel = std::get_if<SelectAction>(&action)) {
        const grounding::GroundedElement* el = grounding::element_by_tag(obs, sel->tag_id);
        if (el == nullptr) {
            throw ValidationError("select tag " + std::to_string(sel->tag_id) +
                                  " does not exist in the current observation");
        }
        if (el->role != grounding::ElementRole::select_box) {
            throw ValidationError("select targets tag " + std::to_string(sel->tag_id) +
                                  " which is a " + std::string(grounding::role_label(el->role)) +
                                  ", not a dropdown");
        }
        return;
    }
    NormPoint at{};
    bool pointer = false;
    if (const auto* c = std::get_if<ClickAction>(&action)) {
        at = c->at;
        pointer = true;
    } else if (const auto* t = std::get_if<TypeAction>(&action)) {
        at = t->at;
        pointer = true;
    }
    if (!pointer) return;
    const grounding::GroundedElement* el = grounding::element_at(obs, at);
    if (el != nullptr && el->role == grounding::ElementRole::select_box &&
        std::holds_alternative<ClickAction>(action)) {
        throw ValidationError("element [" + std::to_string(el->tag_id) + "] \"" + el->label +
                              "\" is a dropdown; use select(" + std::to_string(el->tag_id) +
                              ", \"option\") instead of click");
    }
}

// -- policy gate ---------------------------------------------------------------------

namespace {

bool label_matches_login(const std::string& label) {
    std::string norm = util::collapse_ws(util::to_lower(label));
    for (char& c : norm) {
        if (c == '-' || c == '_') c = ' ';
    }
    if (norm.find("sign in") != std::string::npos) return true;
    if (norm.find("log in") != std::string::npos) return true;
    // Whole-word "login"/"signin" (common single-token spellings).
    std::string padded = " " + norm + " ";
    if (padded.find(" login ") != std::string::npos) return true;
    if (padded.find(" signin ") != std::string::npos) return true;
    return false;
}

}  // namespace

std::optional<Action> policy_override(const Observation& obs, const session::PolicyFlags& policy) {
    if (!policy.login_prohibited) return std::nullopt;
    for (const grounding::GroundedElement& el : obs.elements) {
        bool password_input =
            el.role == grounding::ElementRole::input && el.input_type == "password";
        if (password_input || label_matches_login(el.label)) {
            return Action{TerminateAction{TerminateStatus::failure, "login prohibited"}};
        }
    }
    return std::nullopt;
}

Action enforce_policy(const Observation& obs, const Action& action,
                      const session::PolicyFlags& policy) {
    std::optional<Action> replacement = policy_override(obs, policy);
    return replacement.has_value() ? *replacement : action;
}

// -- loop detection --------------------------------------------------------------------

LoopVerdict LoopDetector::check(const Action& action) {
    std::string sig = action_signature(action, quantize_);
    if (sig == last_signature_) {
        ++count_;
    } else {
        last_signature_ = sig;
        count_ = 1;
    }
    if (count_ >= break_) return LoopVerdict::brk;
    if (count_ >= warn_) return LoopVerdict::warn;
    return LoopVerdict::ok;
}

// -- memory -------------------------------------------------------------------------------

void AgentMemory::push(const session::ActionRecord& record) {
    window_.push_back(record);
    while (window_.size() > capacity_) compress_oldest();
}

bool AgentMemory::compress_oldest() {
    if (window_.empty()) return false;
    const ActionRecord& r = window_.front();
    std::ostringstream line;
    line << "Step " << r.step_index << ": " << action_to_grammar(r.action) << " -> "
         << session::outcome_status_label(r.outcome.status)
         << (r.outcome.state_changed ? "" : " (no visible change)") << ", SEQ "
         << r.assessment.seq.value() << ".";
    if (!summary_.empty()) summary_ += " ";
    summary_ += line.str();
    window_.pop_front();
    return true;
}

std::string AgentMemory::render() const {
    std::ostringstream out;
    if (!summary_.empty()) {
        out << "Earlier steps (condensed): " << summary_ << "\n";
    }
    for (const ActionRecord& r : window_) {
        out << "Step " << r.step_index << ": thought \"" << r.think_aloud << "\"; did "
            << action_to_grammar(r.action) << "; outcome "
            << session::outcome_status_label(r.outcome.status)
            << (r.outcome.state_changed ? " (page changed)" : " (no visible change)") << "; SEQ "
            << r.assessment.seq.value() << ".\n";
    }
    if (summary_.empty() && window_.empty()) out << "(no previous steps)\n";
    return out.str();
}

// -- the loop -------------------------------------------------------------------------------

AgentLoop::AgentLoop(browser::Driver& driver, gateway::ModelGateway& gateway,
                     const prompts::PromptLibrary& prompts, util::Clock& clock,
                     AgentOptions options, std::filesystem::path observation_dir)
    : driver_(driver),
      gateway_(gateway),
      prompts_(prompts),
      clock_(clock),
      options_(options),
      observation_dir_(std::move(observation_dir)),
      memory_(static_cast<std::size_t>(options.memory_window)),
      loop_detector_(options.loop_warn_threshold, options.loop_break_threshold,
                     options.loop_quantize_units) {}

std::string AgentLoop::store_observation(const Observation& obs, const browser::Snapshot& snap) {
    json doc = grounding::observation_to_json(obs);
    std::string content = doc.dump();
    std::string ref = "obs-" + util::sha1_hex(content + "\x1f" + snap.screenshot);
    std::filesystem::create_directories(observation_dir_);
    util::atomic_write_file(observation_dir_ / (ref + ".json"), content);
    util::atomic_write_file(observation_dir_ / (ref + ".shot"), snap.screenshot);
    return ref;
}

grounding::Observation AgentLoop::observe() {
    browser::Snapshot snap;
    try {
        snap = driver_.snapshot();
    } catch (const DriverError&) {
        snap = driver_.snapshot();  // one retry; a second failure propagates
    }
    Observation obs = grounding::ground_observation(snap.page, snap.viewport, snap.scroll_offset,
                                                    /*screenshot_ref=*/"");
    std::string ref = store_observation(obs, snap);
    obs.screenshot_ref = ref;
    // Re-store with the ref embedded so the sidecar is self-describing.
    util::atomic_write_file(observation_dir_ / (ref + ".json"),
                            grounding::observation_to_json(obs).dump());
    last_screenshot_ = snap.screenshot;
    last_screenshot_mime_ = snap.screenshot_mime;
    return obs;
}

Decision AgentLoop::decide(const Observation& obs, const session::Checklist& checklist_state,
                           const EipRoadmap& roadmap, const session::TaskSpec& task,
                           int step_index, std::string& raw_text) {
    std::string diagnostics;
    for (int attempt = 0; attempt <= options_.reprompt_budget; ++attempt) {
        gateway::PromptBundle bundle;
        bundle.system = prompts_.raw("core_system");

        auto build_user = [&]() {
            std::ostringstream user;
            user << "TASK: " << task.task_description << "\nTARGET SITE: " << task.target_url
                 << "\nPERSONA: "
                 << (task.persona_profile.empty() ? "general user" : task.persona_profile)
                 << "\nSTEP: " << step_index << " of at most " << options_.step_budget << "\n";
            if (task.policy.login_prohibited) {
                user << "\n" << prompts_.raw("policy_constraints") << "\n";
            }
            user << "\nROADMAP: " << (roadmap.empty() ? "(none)" : roadmap.render())
                 << "\n\nCHECKLIST:\n" << session::checklist_to_json(checklist_state).dump(2)
                 << "\n\nMEMORY:\n" << memory_.render() << "\nPAGE: " << obs.page_url
                 << "\nELEMENTS (tag table for the screenshot):\n"
                 << grounding::render_element_table(obs);
            if (!pending_note_.empty()) user << "\nNOTE: " << pending_note_ << "\n";
            if (!diagnostics.empty()) {
                user << "\nYour previous reply was invalid: " << diagnostics
                     << "\nReply again following the output format exactly.\n";
            }
            return user.str();
        };
        bundle.user = build_user();

        // Compress memory instead of overflowing the gateway's context budget;
        // the gateway itself never truncates.
        while (bundle.text_chars() > gateway_.context_budget_chars() && memory_.compress_oldest()) {
            bundle.user = build_user();
        }
        if (!last_screenshot_.empty()) {
            bundle.image = gateway::ImageAttachment{last_screenshot_mime_, last_screenshot_};
        }

        std::string reply = gateway_.complete(gateway::Role::reasoning, bundle);
        raw_text = reply;
        try {
            Decision d = parse_decision_reply(reply);
            validate_action_against_observation(d.action, obs);
            pending_note_.clear();
            return d;
        } catch (const Error& e) {
            diagnostics = e.what();
        }
    }
    throw GatewayError("model output invalid");
}

session::StepAssessment AgentLoop::assess(const Observation& obs, const Decision& decision,
                                          const session::ActionOutcome& outcome,
                                          std::int64_t latency_ms, int step_index,
                                          std::string& raw_text) {
    std::string diagnostics;
    for (int attempt = 0; attempt <= options_.reprompt_budget; ++attempt) {
        gateway::PromptBundle bundle;
        bundle.system = prompts_.raw("step_eval");
        std::ostringstream user;
        user << "STEP " << step_index << "\nTHINK ALOUD: " << decision.think_aloud
             << "\nACTION: " << action_to_grammar(decision.action)
             << "\nOUTCOME: " << session::outcome_status_label(outcome.status);
        if (!outcome.reason.empty()) user << " (" << outcome.reason << ")";
        user << (outcome.state_changed ? "; the page responded" : "; no visible page change")
             << "\nSETTLE TIME: " << latency_ms << " ms\nPAGE: " << obs.page_url << "\n";
        if (!diagnostics.empty()) {
            user << "\nYour previous reply was invalid: " << diagnostics
                 << "\nReply again following the output format exactly.\n";
        }
        bundle.user = user.str();
        std::string reply = gateway_.complete(gateway::Role::ux, bundle);
        raw_text = reply;
        try {
            return parse_assessment_reply(reply);
        } catch (const Error& e) {
            diagnostics = e.what();
        }
    }
    throw GatewayError("model output invalid");
}

std::pair<session::TerminalStatus, std::string> AgentLoop::run(
    session::SessionWriter& writer, const session::TaskSpec& task, const EipRoadmap& roadmap,
    session::Checklist checklist_state) {
    driver_.open(task.target_url);

    for (int step = 1; step <= options_.step_budget; ++step) {
        Observation obs = observe();

        std::string raw_decision;
        Decision decision = decide(obs, checklist_state, roadmap, task, step, raw_decision);

        std::vector<std::string> warnings;

        // Policy gate: a detected credential UI overrides whatever was decided.
        Action action = decision.action;
        std::optional<Action> policy_action = policy_override(obs, task.policy);
        if (policy_action.has_value() && !is_terminate(action)) {
            action = *policy_action;
            warnings.push_back("policy gate replaced the decided action");
        }

        // Loop guard.
        if (!is_terminate(action)) {
            LoopVerdict verdict = loop_detector_.check(action);
            if (verdict == LoopVerdict::brk) {
                action = TerminateAction{TerminateStatus::failure, "repetitive loop detected"};
                warnings.push_back("loop breaker replaced the decided action");
            } else if (verdict == LoopVerdict::warn) {
                pending_note_ =
                    "You have repeated the same action " +
                    std::to_string(loop_detector_.consecutive()) +
                    " times with no progress. Try a different element or approach.";
                warnings.push_back("loop warning raised");
            }
        }

        // Resolve the acted-on element for the record and for select dispatch.
        std::optional<session::TargetDescriptor> target;
        std::string target_handle;
        {
            const grounding::GroundedElement* el = nullptr;
            if (const auto* sel = std::get_if<SelectAction>(&action)) {
                el = grounding::element_by_tag(obs, sel->tag_id);
            } else if (const auto* c = std::get_if<ClickAction>(&action)) {
                el = grounding::element_at(obs, c->at);
            } else if (const auto* t = std::get_if<TypeAction>(&action)) {
                el = grounding::element_at(obs, t->at);
            } else if (const auto* h = std::get_if<HoverAction>(&action)) {
                el = grounding::element_at(obs, h->at);
            }
            if (el != nullptr) {
                target = session::TargetDescriptor{
                    el->tag_id, std::string(grounding::role_label(el->role)), el->label};
                target_handle = el->handle;
            }
        }

        // Act.
        session::ActionOutcome outcome;
        std::int64_t latency_ms = 0;
        if (is_terminate(action)) {
            outcome.status = session::OutcomeStatus::applied;
            outcome.state_changed = false;
        } else {
            browser::DispatchOutcome dispatched = driver_.act(action, target_handle);
            outcome.status = dispatched.applied() ? session::OutcomeStatus::applied
                                                  : session::OutcomeStatus::failed;
            outcome.reason = dispatched.reason;
            outcome.state_changed = dispatched.state_changed;
            latency_ms = dispatched.latency_ms;
        }

        // Assess — after the action, so the scores can reflect the outcome.
        Decision acted = decision;
        acted.action = action;
        std::string raw_assessment;
        session::StepAssessment assessment =
            assess(obs, acted, outcome, latency_ms, step, raw_assessment);

        // Checklist update.
        std::ostringstream step_context;
        step_context << "ACTION JUST PERFORMED: " << action_to_grammar(action)
                     << "\nOUTCOME: " << session::outcome_status_label(outcome.status)
                     << (outcome.state_changed ? "; the page responded" : "; no visible page change")
                     << "\nPAGE NOW: " << obs.page_url;
        std::string raw_checklist;
        session::Checklist updated = checklist::propose_update(
            checklist_state, step_context.str(), gateway_, prompts_, options_.reprompt_budget,
            options_.checklist, warnings, &raw_checklist);

        // Append the record; the writer enforces index continuity and the
        // one-item checklist delta before anything else may proceed.
        session::ActionRecord record;
        record.step_index = step;
        record.think_aloud = decision.think_aloud;
        record.action = action;
        record.outcome = outcome;
        record.target = target;
        record.assessment = assessment;
        record.observation_ref = obs.screenshot_ref;
        record.checklist_after = updated;
        record.timestamp_ms = clock_.now_ms();
        record.latency_ms = latency_ms;
        record.warnings = warnings;
        record.raw_decision = raw_decision;
        record.raw_assessment = raw_assessment;
        record.raw_checklist = raw_checklist;
        writer.append(record);

        checklist_state = std::move(updated);
        memory_.push(writer.log().records.back());

        if (const auto* term = std::get_if<TerminateAction>(&action)) {
            session::TerminalStatus status = term->status == TerminateStatus::success
                                                 ? session::TerminalStatus::success
                                                 : session::TerminalStatus::failure;
            return {status, term->reason};
        }
    }
    return {session::TerminalStatus::budget_exhausted,
            "step budget (" + std::to_string(options_.step_budget) + ") exhausted"};
}

}  // namespace uxprobe::agent
