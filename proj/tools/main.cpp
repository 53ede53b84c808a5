#include "uxprobe/config.hpp"
#include "uxprobe/errors.hpp"
#include "uxprobe/pipeline.hpp"

#include <CLI11.hpp>

#include <future>
#include <iostream>
#include <vector>

namespace {

int cmd_run(const std::string& config_path, const std::string& url, const std::string& task,
            const std::string& out_dir) {
    try {
        uxprobe::config::Config cfg = uxprobe::config::load_config(config_path);
        if (!url.empty()) cfg.task.target_url = url;
        if (!task.empty()) cfg.task.task_description = task;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        uxprobe::pipeline::RunResult r = uxprobe::pipeline::run_session(cfg, std::cerr);
        if (r.status.has_value()) {
            std::cout << "terminal: " << uxprobe::session::terminal_status_label(*r.status);
            if (!r.terminal_reason.empty()) std::cout << " (" << r.terminal_reason << ")";
            std::cout << "\nlog: " << r.log_path.string() << "\n";
            if (!r.report_json.empty()) {
                std::cout << "report: " << r.report_json.string() << "\n";
            }
        }
        return r.exit_code;
    } catch (const uxprobe::Error& e) {
        std::cerr << "[uxprobe:" << e.category() << "] " << e.what() << "\n";
        return uxprobe::pipeline::kExitConfigError;
    }
}

int cmd_replay(const std::vector<std::string>& fixtures, const std::string& out_dir,
               int parallel) {
    if (fixtures.size() == 1 && parallel <= 1) {
        uxprobe::pipeline::RunResult r =
            uxprobe::pipeline::replay_fixture(fixtures[0], out_dir, std::cerr);
        if (r.status.has_value()) {
            std::cout << "terminal: " << uxprobe::session::terminal_status_label(*r.status);
            if (!r.terminal_reason.empty()) std::cout << " (" << r.terminal_reason << ")";
            std::cout << "\nlog: " << r.log_path.string() << "\n";
        }
        return r.exit_code;
    }
    // Independent sessions, per-fixture output directories, bounded fan-out.
    int worst = 0;
    std::vector<std::future<int>> running;
    std::vector<std::string> pending(fixtures.rbegin(), fixtures.rend());
    auto drain = [&]() {
        for (auto& f : running) worst = std::max(worst, f.get());
        running.clear();
    };
    while (!pending.empty()) {
        std::filesystem::path dir = pending.back();
        pending.pop_back();
        std::filesystem::path sub = std::filesystem::path(out_dir) / dir.filename();
        running.push_back(std::async(std::launch::async, [dir, sub]() {
            std::ostringstream diag;
            uxprobe::pipeline::RunResult r = uxprobe::pipeline::replay_fixture(dir, sub, diag);
            std::cerr << diag.str();
            return r.exit_code;
        }));
        if (running.size() >= static_cast<std::size_t>(std::max(1, parallel))) drain();
    }
    drain();
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uxprobe: autonomous usability evaluation sessions over a scripted or live "
                 "browser, scored with SEQ and SUS"};
    app.require_subcommand(1);

    std::string config_path, url, task, out_dir, session_path;
    std::vector<std::string> fixture_dirs;
    int parallel = 1;
    bool salvage = false;
    std::string remedies_path;

    CLI::App* run = app.add_subcommand("run", "Run a full evaluation session from a config file");
    run->add_option("--config", config_path, "Config file (JSON)")->required();
    run->add_option("--url", url, "Override the task's target URL");
    run->add_option("--task", task, "Override the task description");
    run->add_option("--out", out_dir, "Output directory (log, observations, report)");

    CLI::App* replay = app.add_subcommand("replay", "Deterministically replay fixture sessions");
    replay->add_option("--fixture", fixture_dirs, "Fixture directory (repeatable)")
        ->required()
        ->expected(-1);
    replay->add_option("--out", out_dir, "Output directory")->required();
    replay->add_option("--parallel", parallel, "Run up to N fixtures concurrently");

    CLI::App* score = app.add_subcommand("score", "Recompute and verify metrics from a session log");
    score->add_option("--session", session_path, "Session log (.jsonl)")->required();
    score->add_flag("--salvage", salvage, "Recover records before a truncated final line");

    CLI::App* report = app.add_subcommand("report", "Regenerate the report from a session log");
    report->add_option("--session", session_path, "Session log (.jsonl)")->required();
    report->add_option("--out", out_dir, "Output directory")->required();
    report->add_option("--remedies", remedies_path, "Remedy table asset (JSON)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, url, task, out_dir);
    if (replay->parsed()) return cmd_replay(fixture_dirs, out_dir, parallel);
    if (score->parsed()) {
        return uxprobe::pipeline::score_session(session_path, std::cout, std::cerr, salvage);
    }
    if (report->parsed()) {
        return uxprobe::pipeline::report_from_log(session_path, out_dir, remedies_path, std::cerr);
    }
    return uxprobe::pipeline::kExitConfigError;
}
