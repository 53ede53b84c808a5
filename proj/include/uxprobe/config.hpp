#pragma once

#include "uxprobe/agent.hpp"
#include "uxprobe/gateway.hpp"
#include "uxprobe/session.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace uxprobe::config {

struct DriverConfig {
    std::string kind = "sim";  // "sim" or "cdp"
    std::filesystem::path pages_fixture;  // sim page graph
    std::string cdp_endpoint = "http://127.0.0.1:9222";
    int viewport_width = 1280;
    int viewport_height = 800;
    int navigation_timeout_ms = 30000;
};

struct GatewayConfig {
    std::string kind = "scripted";  // "scripted" or "http"
    std::filesystem::path responses_fixture;
    gateway::HttpGatewayOptions http;
    std::size_t context_budget_chars = 240000;
};

struct SearchConfig {
    std::string kind = "none";  // "none" or "fixture"
    std::filesystem::path results_fixture;
};

struct SynthesisConfig {
    std::string mode = "rule_based";  // "rule_based" or "model"
    bool trim_outliers = false;
};

struct Config {
    session::TaskSpec task;
    DriverConfig driver;
    GatewayConfig gateway;
    SearchConfig search;
    SynthesisConfig synthesis;
    agent::AgentOptions agent;
    std::filesystem::path prompts_dir;
    std::filesystem::path remedies_path;
    std::filesystem::path out_dir = "out";
    std::string session_id;  // empty = derived (timestamp for run, name for replay)

    void validate() const;
};

/// Load a config file (JSON). Relative fixture paths resolve against the
/// config file's directory.
Config load_config(const std::filesystem::path& path);

/// Interpret a replay fixture directory: fixture.json names the task, page
/// graph, scripted responses, optional search results, and option overrides.
Config load_fixture_dir(const std::filesystem::path& dir);

}  // namespace uxprobe::config
