#include "uxprobe/report.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/metrics.hpp"
#include "uxprobe/util.hpp"

#include <cmath>
#include <sstream>

namespace uxprobe::report {

using metrics::StepClass;
using nlohmann::json;
using session::ActionRecord;
using session::SessionLog;

std::map<std::string, std::string> load_remedies(const std::filesystem::path& path) {
    std::map<std::string, std::string> remedies;
    for (int t = 0; t < 8; ++t) {
        auto tag = static_cast<session::FrictionTag>(t);
        remedies[std::string(session::friction_tag_label(tag))] =
            synthesis::advice_for_tag(tag).remedy;
    }
    if (!path.empty() && std::filesystem::exists(path)) {
        json j = json::parse(util::read_file(path));
        for (const auto& [k, v] : j.at("remedies").items()) {
            remedies[k] = v.get<std::string>();
        }
    }
    return remedies;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

json tags_to_json(const std::set<session::FrictionTag>& tags) {
    json out = json::array();
    for (session::FrictionTag t : tags) out.push_back(std::string(session::friction_tag_label(t)));
    return out;
}

}  // namespace

UxReport generate_report(const SessionLog& log,
                         const std::vector<synthesis::FrictionPoint>& friction,
                         const std::map<std::string, std::string>& remedies) {
    if (!log.terminated()) {
        throw ValidationError("cannot generate a report for an unterminated session");
    }
    if (!log.sus.has_value()) {
        throw ValidationError("session has no SUS result; run synthesis first");
    }
    metrics::SeqSummary summary = metrics::aggregate_seq(log.seq_series());

    json steps = json::array();
    for (const ActionRecord& r : log.records) {
        StepClass cls = metrics::classify_step(r.assessment.seq);
        json step{{"index", r.step_index},
                  {"action", action_to_grammar(r.action)},
                  {"seq", r.assessment.seq.value()},
                  {"efficiency", r.assessment.efficiency},
                  {"clarity", r.assessment.clarity},
                  {"confidence", r.assessment.confidence},
                  {"class", std::string(metrics::step_class_label(cls))},
                  {"tags", tags_to_json(r.assessment.friction_tags)},
                  {"latency_ms", r.latency_ms}};
        if (r.target.has_value()) {
            step["element"] = r.target->role + " \"" + r.target->label + "\"";
        }
        steps.push_back(std::move(step));
    }

    json friction_map = json::array();
    json recommendations = json::array();
    for (const synthesis::FrictionPoint& p : friction) {
        friction_map.push_back(json{{"step", p.step_index},
                                    {"seq", p.seq.value()},
                                    {"tags", tags_to_json(p.tags)},
                                    {"element", p.element_descriptor},
                                    {"excerpt", p.think_aloud_excerpt},
                                    {"diagnosis", p.diagnosis}});
        std::string tag = p.tags.empty()
                              ? "confusion"
                              : std::string(session::friction_tag_label(
                                    synthesis::dominant_tag(p.tags)));
        auto it = remedies.find(tag);
        std::string remedy = it == remedies.end() ? "review this interaction" : it->second;
        recommendations.push_back("At step " + std::to_string(p.step_index) + ", " +
                                  p.element_descriptor + ": " + tag + " - consider " + remedy +
                                  ".");
    }

    const session::SusResult& sus = *log.sus;
    UxReport report;
    report.doc = json{
        {"schema_version", 1},
        {"session",
         json{{"id", log.header.session_id},
              {"terminal_status",
               std::string(session::terminal_status_label(*log.terminal_status))},
              {"terminal_reason", log.terminal_reason},
              {"step_count", log.records.size()}}},
        {"task",
         json{{"url", log.header.task.target_url},
              {"description", log.header.task.task_description}}},
        {"engines",
         json{{"reasoning", log.header.engines.reasoning},
              {"ux", log.header.engines.ux},
              {"checklist", log.header.engines.checklist}}},
        {"seq",
         json{{"mean", summary.mean},
              {"mean_2dp", round2(summary.mean)},
              {"min", summary.min.value()},
              {"scale_max", 7},
              {"count", summary.count},
              {"good_experience", summary.good_experience},
              {"good_experience_threshold", metrics::kGoodExperienceMean},
              {"success_threshold", metrics::kSeqSuccessThreshold},
              {"friction_threshold", metrics::kSeqFrictionThreshold},
              {"friction_steps", summary.friction_steps},
              {"success_steps", summary.success_steps}}},
        {"steps", std::move(steps)},
        {"sus",
         json{{"score", sus.score.value()},
              {"scale_max", 100},
              {"grade", std::string(sus.grade.label())},
              {"percentile", {sus.grade.percentile_lo, sus.grade.percentile_hi}},
              {"items", sus.responses.items()},
              {"mode", sus.mode}}},
        {"friction_map", std::move(friction_map)},
        {"recommendations", std::move(recommendations)},
        {"checklist_final", session::checklist_to_json(log.records.back().checklist_after)},
        {"metadata",
         json{{"generator", "uxprobe"},
              {"report_of", log.header.session_id},
              {"prompt_set_hash", log.header.prompt_set_hash},
              {"viewport", {log.header.viewport_width, log.header.viewport_height}}}}};
    return report;
}

namespace {

/// Numbers printed into the Markdown are serialized exactly as nlohmann
/// serializes the corresponding JSON value, keeping the renderer lossless.
std::string num(const json& v) { return v.dump(); }

}  // namespace

std::string render_markdown(const json& doc) {
    std::ostringstream md;
    const json& sesh = doc.at("session");
    const json& task = doc.at("task");
    const json& seq = doc.at("seq");
    const json& sus = doc.at("sus");

    md << "# Usability Evaluation Report\n\n";
    md << "**Task:** " << task.at("description").get<std::string>() << "\n\n";
    md << "**Site:** " << task.at("url").get<std::string>() << "\n\n";
    md << "**Session:** `" << sesh.at("id").get<std::string>() << "` — terminated with status `"
       << sesh.at("terminal_status").get<std::string>() << "`";
    std::string reason = sesh.at("terminal_reason").get<std::string>();
    if (!reason.empty()) md << " (" << reason << ")";
    md << " after " << num(sesh.at("step_count")) << " steps.\n\n";

    md << "## Scores\n\n";
    md << "| Metric | Value |\n|---|---|\n";
    md << "| SUS score | " << num(sus.at("score")) << " / " << num(sus.at("scale_max"))
       << " |\n";
    md << "| Grade (curved grading scale) | " << sus.at("grade").get<std::string>() << " |\n";
    md << "| Percentile range | " << num(sus.at("percentile").at(0)) << "–"
       << num(sus.at("percentile").at(1)) << " |\n";
    md << "| Mean SEQ | " << num(seq.at("mean_2dp")) << " / " << num(seq.at("scale_max"))
       << " |\n";
    md << "| Min SEQ | " << num(seq.at("min")) << " |\n";
    md << "| Good experience (mean ≥ " << num(seq.at("good_experience_threshold")) << ") | "
       << (seq.at("good_experience").get<bool>() ? "yes" : "no") << " |\n\n";

    md << "## SEQ trajectory\n\n";
    md << "Step classes: success at SEQ ≥ " << num(seq.at("success_threshold"))
       << ", friction at SEQ ≤ " << num(seq.at("friction_threshold")) << ".\n\n";
    md << "| Step | Action | SEQ | Class | Tags |\n|---|---|---|---|---|\n";
    for (const json& step : doc.at("steps")) {
        md << "| " << num(step.at("index")) << " | `" << step.at("action").get<std::string>()
           << "` | " << num(step.at("seq")) << " | " << step.at("class").get<std::string>()
           << " | ";
        const json& tags = step.at("tags");
        for (std::size_t i = 0; i < tags.size(); ++i) {
            md << (i ? ", " : "") << tags.at(i).get<std::string>();
        }
        md << " |\n";
    }
    md << "\n";

    md << "## Friction map\n\n";
    const json& fmap = doc.at("friction_map");
    if (fmap.empty()) {
        md << "No friction detected: no step was rated at or below the friction threshold.\n\n";
    } else {
        for (const json& p : fmap) {
            md << "### Step " << num(p.at("step")) << " — " << p.at("element").get<std::string>()
               << " (SEQ " << num(p.at("seq")) << ")\n\n";
            md << "> " << p.at("excerpt").get<std::string>() << "\n\n";
            md << p.at("diagnosis").get<std::string>();
            const json& tags = p.at("tags");
            if (!tags.empty()) {
                md << " Tags: ";
                for (std::size_t i = 0; i < tags.size(); ++i) {
                    md << (i ? ", " : "") << tags.at(i).get<std::string>();
                }
                md << ".";
            }
            md << "\n\n";
        }
    }

    md << "## Recommendations\n\n";
    const json& recs = doc.at("recommendations");
    if (recs.empty()) {
        md << "No friction detected; no remediation suggested.\n";
    } else {
        for (const json& r : recs) {
            md << "- " << r.get<std::string>() << "\n";
        }
    }
    md << "\n## SUS item responses\n\n";
    md << "| Item | Response |\n|---|---|\n";
    const json& items = sus.at("items");
    for (std::size_t i = 0; i < items.size(); ++i) {
        md << "| Q" << (i + 1) << " | " << num(items.at(i)) << " |\n";
    }
    md << "\nSynthesis mode: `" << sus.at("mode").get<std::string>() << "`\n";
    return md.str();
}

void write_report(const UxReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    util::atomic_write_file(out_dir / "report.json", report.doc.dump(2) + "\n");
    util::atomic_write_file(out_dir / "report.md", render_markdown(report.doc));
}

}  // namespace uxprobe::report
