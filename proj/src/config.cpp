#include "uxprobe/config.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/util.hpp"

#include <nlohmann/json.hpp>

namespace uxprobe::config {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base / p;
}

gateway::RoleEndpoint role_endpoint_from_json(const json& j) {
    gateway::RoleEndpoint ep;
    ep.endpoint = j.value("endpoint", std::string{});
    ep.model = j.value("model", std::string{});
    ep.api_key_env = j.value("api_key_env", std::string{});
    return ep;
}

void apply_common(Config& cfg, const json& j, const std::filesystem::path& base) {
    if (j.contains("task")) {
        const json& t = j.at("task");
        cfg.task.target_url = t.value("url", cfg.task.target_url);
        cfg.task.task_description = t.value("task", cfg.task.task_description);
        cfg.task.persona_profile = t.value("persona", cfg.task.persona_profile);
        cfg.task.policy.login_prohibited =
            t.value("login_prohibited", cfg.task.policy.login_prohibited);
    }
    if (j.contains("driver")) {
        const json& d = j.at("driver");
        cfg.driver.kind = d.value("kind", cfg.driver.kind);
        if (d.contains("pages")) cfg.driver.pages_fixture = resolve(base, d.at("pages").get<std::string>());
        cfg.driver.cdp_endpoint = d.value("endpoint", cfg.driver.cdp_endpoint);
        if (d.contains("viewport")) {
            cfg.driver.viewport_width = d.at("viewport").at(0).get<int>();
            cfg.driver.viewport_height = d.at("viewport").at(1).get<int>();
        }
        cfg.driver.navigation_timeout_ms =
            d.value("navigation_timeout_ms", cfg.driver.navigation_timeout_ms);
    }
    if (j.contains("gateway")) {
        const json& g = j.at("gateway");
        cfg.gateway.kind = g.value("kind", cfg.gateway.kind);
        if (g.contains("responses")) {
            cfg.gateway.responses_fixture = resolve(base, g.at("responses").get<std::string>());
        }
        if (g.contains("roles")) {
            const json& r = g.at("roles");
            if (r.contains("reasoning"))
                cfg.gateway.http.reasoning = role_endpoint_from_json(r.at("reasoning"));
            if (r.contains("ux")) cfg.gateway.http.ux = role_endpoint_from_json(r.at("ux"));
            if (r.contains("checklist"))
                cfg.gateway.http.checklist = role_endpoint_from_json(r.at("checklist"));
        }
        cfg.gateway.http.timeout_ms = g.value("timeout_ms", cfg.gateway.http.timeout_ms);
        cfg.gateway.http.retry_budget = g.value("retry_budget", cfg.gateway.http.retry_budget);
        cfg.gateway.http.backoff_base_ms =
            g.value("backoff_base_ms", cfg.gateway.http.backoff_base_ms);
        cfg.gateway.http.jitter_seed = g.value("seed", cfg.gateway.http.jitter_seed);
        cfg.gateway.context_budget_chars =
            g.value("context_budget_chars", cfg.gateway.context_budget_chars);
    }
    if (j.contains("search")) {
        const json& s = j.at("search");
        cfg.search.kind = s.value("kind", cfg.search.kind);
        if (s.contains("results")) cfg.search.results_fixture = resolve(base, s.at("results").get<std::string>());
    }
    if (j.contains("synthesis")) {
        const json& s = j.at("synthesis");
        cfg.synthesis.mode = s.value("mode", cfg.synthesis.mode);
        cfg.synthesis.trim_outliers = s.value("trim_outliers", cfg.synthesis.trim_outliers);
    }
    if (j.contains("agent")) {
        const json& a = j.at("agent");
        cfg.agent.step_budget = a.value("step_budget", cfg.agent.step_budget);
        cfg.agent.memory_window = a.value("memory_window", cfg.agent.memory_window);
        cfg.agent.loop_warn_threshold = a.value("loop_warn", cfg.agent.loop_warn_threshold);
        cfg.agent.loop_break_threshold = a.value("loop_break", cfg.agent.loop_break_threshold);
        cfg.agent.loop_quantize_units = a.value("quantize_units", cfg.agent.loop_quantize_units);
        cfg.agent.reprompt_budget = a.value("reprompt_budget", cfg.agent.reprompt_budget);
        cfg.agent.checklist.strict_single_update =
            a.value("checklist_strict", cfg.agent.checklist.strict_single_update);
        cfg.agent.checklist.allow_reversal =
            a.value("checklist_allow_reversal", cfg.agent.checklist.allow_reversal);
    }
    if (j.contains("prompts_dir")) cfg.prompts_dir = resolve(base, j.at("prompts_dir").get<std::string>());
    if (j.contains("remedies")) cfg.remedies_path = resolve(base, j.at("remedies").get<std::string>());
    if (j.contains("out_dir")) cfg.out_dir = resolve(base, j.at("out_dir").get<std::string>());
    if (j.contains("session_id")) cfg.session_id = j.at("session_id").get<std::string>();
}

}  // namespace

void Config::validate() const {
    task.validate();
    if (driver.kind != "sim" && driver.kind != "cdp") {
        throw ConfigError("driver.kind must be 'sim' or 'cdp', got '" + driver.kind + "'");
    }
    if (driver.kind == "sim" && driver.pages_fixture.empty()) {
        throw ConfigError("driver.kind is 'sim' but no page-graph fixture is configured");
    }
    if (gateway.kind != "scripted" && gateway.kind != "http") {
        throw ConfigError("gateway.kind must be 'scripted' or 'http', got '" + gateway.kind + "'");
    }
    if (gateway.kind == "scripted" && gateway.responses_fixture.empty()) {
        throw ConfigError("gateway.kind is 'scripted' but no responses fixture is configured");
    }
    if (gateway.kind == "http") {
        for (const auto* ep : {&gateway.http.reasoning, &gateway.http.ux, &gateway.http.checklist}) {
            if (ep->endpoint.empty() || ep->model.empty()) {
                throw ConfigError("gateway.kind is 'http' but a role endpoint/model is missing");
            }
            if (!ep->api_key_env.empty() && std::getenv(ep->api_key_env.c_str()) == nullptr) {
                throw ConfigError("API key environment variable " + ep->api_key_env +
                                  " is not set");
            }
        }
    }
    if (search.kind != "none" && search.kind != "fixture") {
        throw ConfigError("search.kind must be 'none' or 'fixture', got '" + search.kind + "'");
    }
    if (synthesis.mode != "rule_based" && synthesis.mode != "model") {
        throw ConfigError("synthesis.mode must be 'rule_based' or 'model', got '" +
                          synthesis.mode + "'");
    }
    if (agent.step_budget < 1) throw ConfigError("agent.step_budget must be at least 1");
    if (prompts_dir.empty()) throw ConfigError("prompts_dir is not configured");
}

Config load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    Config cfg;
    apply_common(cfg, j, path.parent_path());
    return cfg;
}

Config load_fixture_dir(const std::filesystem::path& dir) {
    std::filesystem::path manifest = dir / "fixture.json";
    json j;
    try {
        j = json::parse(util::read_file(manifest));
    } catch (const json::exception& e) {
        throw FixtureError("cannot parse fixture manifest " + manifest.string() + ": " + e.what());
    }
    Config cfg;
    apply_common(cfg, j, dir);
    // Replay fixtures are closed worlds: sim driver + scripted gateway.
    cfg.driver.kind = "sim";
    cfg.gateway.kind = "scripted";
    if (cfg.driver.pages_fixture.empty()) cfg.driver.pages_fixture = dir / "pages.json";
    if (cfg.gateway.responses_fixture.empty()) {
        cfg.gateway.responses_fixture = dir / "responses.json";
    }
    if (cfg.search.kind == "fixture" && cfg.search.results_fixture.empty()) {
        cfg.search.results_fixture = dir / "search.json";
    }
    if (cfg.session_id.empty()) {
        cfg.session_id = "replay-" + dir.filename().string();
    }
    return cfg;
}

}  // namespace uxprobe::config
