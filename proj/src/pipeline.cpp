#include "uxprobe/pipeline.hpp"

#include "uxprobe/agent.hpp"
#include "uxprobe/browser.hpp"
#include "uxprobe/cdp.hpp"
#include "uxprobe/checklist.hpp"
#include "uxprobe/errors.hpp"
#include "uxprobe/gateway.hpp"
#include "uxprobe/report.hpp"
#include "uxprobe/synthesis.hpp"
#include "uxprobe/util.hpp"

#include <memory>
#include <ostream>
#include <sstream>

namespace uxprobe::pipeline {

using config::Config;

namespace {

std::string diag_prefix(const Error& e) {
    return std::string("[uxprobe:") + e.category() + "] " + e.what();
}

struct Stack {
    std::unique_ptr<util::Clock> clock;
    std::unique_ptr<browser::Driver> driver;
    std::unique_ptr<gateway::ModelGateway> gateway;
    std::unique_ptr<agent::SearchProvider> search;
    prompts::PromptLibrary prompts;
    session::EngineConfig engines;
};

Stack build_stack(const Config& cfg) {
    Stack s;
    // Replays and sim runs use the deterministic clock so logs and reports
    // are byte-stable across invocations.
    bool deterministic = cfg.driver.kind == "sim" && cfg.gateway.kind == "scripted";
    if (deterministic) {
        s.clock = std::make_unique<util::DeterministicClock>(0, 1000);
    } else {
        s.clock = std::make_unique<util::SystemClock>();
    }

    grounding::Viewport vp{cfg.driver.viewport_width, cfg.driver.viewport_height};
    if (cfg.driver.kind == "sim") {
        s.driver = browser::SimBrowser::from_fixture_file(cfg.driver.pages_fixture, *s.clock, vp);
    } else {
        cdp::CdpOptions opts;
        opts.endpoint = cfg.driver.cdp_endpoint;
        opts.viewport = vp;
        opts.navigation_timeout_ms = cfg.driver.navigation_timeout_ms;
        s.driver = std::make_unique<cdp::CdpBrowser>(opts);
    }

    if (cfg.gateway.kind == "scripted") {
        s.gateway = std::make_unique<gateway::ScriptedGateway>(
            gateway::ScriptedGateway::from_file(cfg.gateway.responses_fixture));
        std::string tag = "scripted:" + cfg.gateway.responses_fixture.filename().string();
        s.engines = session::EngineConfig{tag, tag, tag};
    } else {
        s.gateway = std::make_unique<gateway::HttpGateway>(cfg.gateway.http, *s.clock);
        s.engines = session::EngineConfig{cfg.gateway.http.reasoning.model,
                                          cfg.gateway.http.ux.model,
                                          cfg.gateway.http.checklist.model};
    }
    s.gateway->set_context_budget_chars(cfg.gateway.context_budget_chars);

    if (cfg.search.kind == "fixture") {
        s.search = std::make_unique<agent::FixtureSearchProvider>(
            agent::FixtureSearchProvider::from_file(cfg.search.results_fixture));
    }

    s.prompts = prompts::PromptLibrary::load(cfg.prompts_dir);
    return s;
}

std::string derive_session_id(const Config& cfg, util::Clock& clock) {
    if (!cfg.session_id.empty()) return cfg.session_id;
    std::ostringstream id;
    id << "sess-" << clock.now_ms();
    return id.str();
}

}  // namespace

RunResult run_session(const Config& cfg, std::ostream& diag) {
    RunResult result;
    try {
        cfg.validate();
    } catch (const Error& e) {
        diag << diag_prefix(e) << "\n";
        result.exit_code = kExitConfigError;
        return result;
    }

    try {
        Stack stack = build_stack(cfg);
        std::filesystem::create_directories(cfg.out_dir);

        // Pre-execution planning (advisory; never blocks the session).
        std::vector<std::string> warnings;
        agent::EipRoadmap roadmap = agent::plan_roadmap(cfg.task, stack.search.get(),
                                                        *stack.gateway, stack.prompts,
                                                        cfg.agent.reprompt_budget, warnings);
        for (const std::string& w : warnings) diag << "[uxprobe:warn] " << w << "\n";

        // Task decomposition; failure here means the session never starts.
        session::Checklist initial;
        try {
            initial = checklist::generate_checklist(cfg.task, *stack.gateway, stack.prompts,
                                                    cfg.agent.reprompt_budget);
        } catch (const Error& e) {
            diag << diag_prefix(e) << "\n";
            result.exit_code = kExitConfigError;
            return result;
        }

        session::SessionHeader header;
        header.session_id = derive_session_id(cfg, *stack.clock);
        header.created_ms = stack.clock->now_ms();
        header.task = cfg.task;
        header.engines = stack.engines;
        header.roadmap = roadmap.sentences;
        header.checklist_initial = initial;
        header.viewport_width = cfg.driver.viewport_width;
        header.viewport_height = cfg.driver.viewport_height;
        header.prompt_set_hash = stack.prompts.set_hash();

        result.log_path = cfg.out_dir / "session.jsonl";
        session::SessionWriter writer(result.log_path, header);
        stack.gateway->set_recorder([&writer](const gateway::CallMeta& meta) {
            writer.write_gateway_call(session::GatewayCallMeta{
                meta.role, meta.request_digest, meta.response_digest, meta.latency_ms,
                meta.attempts, meta.prompt_chars});
        });

        agent::AgentLoop loop(*stack.driver, *stack.gateway, stack.prompts, *stack.clock,
                              cfg.agent, cfg.out_dir / "observations");
        session::TerminalStatus status;
        std::string reason;
        try {
            auto [st, rs] = loop.run(writer, cfg.task, roadmap, initial);
            status = st;
            reason = rs;
        } catch (const Error& e) {
            // Aborted mid-loop (model output invalid at step 1, gateway fatal,
            // driver gone). The log stays on disk, unterminated.
            diag << diag_prefix(e) << "\n";
            if (!writer.log().records.empty()) {
                writer.write_terminal(session::TerminalStatus::failure, e.what());
                result.status = session::TerminalStatus::failure;
                result.terminal_reason = e.what();
                result.exit_code = kExitFailure;
            } else {
                result.exit_code = kExitConfigError;
            }
            return result;
        }
        writer.write_terminal(status, reason);
        result.status = status;
        result.terminal_reason = reason;

        // Post-task synthesis and reporting.
        synthesis::SynthesisOptions syn;
        syn.use_model = cfg.synthesis.mode == "model";
        syn.trim_outliers = cfg.synthesis.trim_outliers;
        syn.retry_budget = cfg.agent.reprompt_budget;
        session::SusResult sus =
            synthesis::synthesize_sus(writer.log(), stack.gateway.get(), &stack.prompts, syn);
        if (sus.mode == "rule_based_fallback") {
            diag << "[uxprobe:warn] model-backed SUS synthesis failed; fell back to the "
                    "rule-based mapping\n";
        }
        writer.write_sus(sus);

        auto friction = synthesis::build_friction_map(writer.log());
        auto remedies = report::load_remedies(cfg.remedies_path);
        report::UxReport rep = report::generate_report(writer.log(), friction, remedies);
        report::write_report(rep, cfg.out_dir);
        result.report_json = cfg.out_dir / "report.json";
        result.report_md = cfg.out_dir / "report.md";

        // Replays consume their whole response fixture; leftovers mean the
        // fixture and the session diverged.
        if (auto* scripted = dynamic_cast<gateway::ScriptedGateway*>(stack.gateway.get())) {
            if (scripted->remaining() != 0) {
                throw FixtureError("fixture overrun: " + std::to_string(scripted->remaining()) +
                                   " scripted responses left unconsumed after call index " +
                                   std::to_string(scripted->consumed() - 1));
            }
        }

        switch (status) {
            case session::TerminalStatus::success: result.exit_code = kExitSuccess; break;
            case session::TerminalStatus::failure: result.exit_code = kExitFailure; break;
            case session::TerminalStatus::budget_exhausted:
                result.exit_code = kExitBudgetExhausted;
                break;
        }
        return result;
    } catch (const Error& e) {
        diag << diag_prefix(e) << "\n";
        result.exit_code = kExitConfigError;
        return result;
    } catch (const std::exception& e) {
        diag << "[uxprobe:error] " << e.what() << "\n";
        result.exit_code = kExitConfigError;
        return result;
    }
}

RunResult replay_fixture(const std::filesystem::path& fixture_dir,
                         const std::filesystem::path& out_dir, std::ostream& diag) {
    RunResult result;
    Config cfg;
    try {
        cfg = config::load_fixture_dir(fixture_dir);
    } catch (const Error& e) {
        diag << diag_prefix(e) << "\n";
        result.exit_code = kExitConfigError;
        return result;
    }
    cfg.out_dir = out_dir;
    return run_session(cfg, diag);
}

int score_session(const std::filesystem::path& log_path, std::ostream& out, std::ostream& diag,
                  bool salvage) {
    session::SessionLog log;
    std::vector<std::string> warnings;
    try {
        log = session::load_session(log_path, salvage, &warnings);
    } catch (const ParseError& e) {
        diag << "[uxprobe:parse] " << e.what() << "\n";
        return kExitConfigError;
    } catch (const Error& e) {
        diag << diag_prefix(e) << "\n";
        return kExitConfigError;
    }
    for (const std::string& w : warnings) diag << "[uxprobe:warn] " << w << "\n";

    if (log.records.empty()) {
        diag << "[uxprobe:validation] session has no records to score\n";
        return kExitConfigError;
    }
    metrics::SeqSummary summary = metrics::aggregate_seq(log.seq_series());
    out << "session: " << log.header.session_id << "\n";
    out << "steps: " << summary.count << "\n";
    out << "seq mean: " << util::format_fixed(summary.mean, 2) << "\n";
    out << "seq min: " << summary.min.value() << "\n";
    out << "good experience: " << (summary.good_experience ? "yes" : "no") << "\n";
    out << "friction steps:";
    for (std::size_t i : summary.friction_steps) out << " " << i;
    out << "\n";

    bool drift = false;
    if (log.sus.has_value()) {
        metrics::SusScore recomputed = metrics::compute_sus(log.sus->responses);
        out << "sus: " << util::format_fixed(log.sus->score.value(), 1) << "\n";
        out << "grade: " << log.sus->grade.label() << "\n";
        if (recomputed.milli() != log.sus->score.milli()) {
            diag << "[uxprobe:drift] stored SUS score "
                 << util::format_fixed(log.sus->score.value(), 1)
                 << " does not match the score recomputed from its items ("
                 << util::format_fixed(recomputed.value(), 1) << ")\n";
            drift = true;
        }
        metrics::CgsGrade regraded = metrics::grade_sus(recomputed);
        if (!(regraded == log.sus->grade)) {
            diag << "[uxprobe:drift] stored grade " << log.sus->grade.label()
                 << " does not match recomputed grade " << regraded.label() << "\n";
            drift = true;
        }
        if (log.sus->mode == "rule_based" || log.sus->mode == "rule_based_fallback") {
            metrics::SusResponses resynth = synthesis::rule_based_sus(log);
            if (!(resynth.items() == log.sus->responses.items())) {
                diag << "[uxprobe:drift] stored SUS items do not match the rule-based mapping "
                        "recomputed from the step assessments\n";
                drift = true;
            }
        }
    } else {
        out << "sus: (not synthesized)\n";
    }
    if (drift) {
        diag << "[uxprobe:drift] stored and recomputed metrics disagree; the log may have been "
                "edited\n";
        return kExitFailure;
    }
    return kExitSuccess;
}

int report_from_log(const std::filesystem::path& log_path, const std::filesystem::path& out_dir,
                    const std::filesystem::path& remedies_path, std::ostream& diag) {
    try {
        session::SessionLog log = session::load_session(log_path);
        if (!log.terminated()) {
            throw ValidationError("session is not terminated; nothing to report");
        }
        if (!log.sus.has_value()) {
            diag << "[uxprobe:warn] log has no SUS result; synthesizing with the rule-based "
                    "mapping\n";
            synthesis::SynthesisOptions syn;
            log.sus = synthesis::synthesize_sus(log, nullptr, nullptr, syn);
        }
        auto friction = synthesis::build_friction_map(log);
        auto remedies = report::load_remedies(remedies_path);
        report::UxReport rep = report::generate_report(log, friction, remedies);
        report::write_report(rep, out_dir);
        return kExitSuccess;
    } catch (const Error& e) {
        diag << diag_prefix(e) << "\n";
        return kExitConfigError;
    }
}

}  // namespace uxprobe::pipeline
