#include "uxprobe/synthesis.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace uxprobe::synthesis {

using metrics::SusResponses;
using nlohmann::json;
using session::ActionRecord;
using session::FrictionTag;
using session::SessionLog;

namespace {

struct MetricSums {
    long long seq = 0, eff = 0, cla = 0, con = 0;
    long long n = 0;
};

long long trimmed_sum(std::vector<int> values) {
    std::sort(values.begin(), values.end());
    long long sum = 0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
    return sum;
}

MetricSums collect(const SessionLog& log, bool trim) {
    if (log.records.empty()) throw ValidationError("no assessed steps");
    std::vector<int> seq, eff, cla, con;
    for (const ActionRecord& r : log.records) {
        seq.push_back(r.assessment.seq.value());
        eff.push_back(r.assessment.efficiency);
        cla.push_back(r.assessment.clarity);
        con.push_back(r.assessment.confidence);
    }
    MetricSums s;
    if (trim && seq.size() >= 3) {
        s.n = static_cast<long long>(seq.size()) - 2;
        s.seq = trimmed_sum(seq);
        s.eff = trimmed_sum(eff);
        s.cla = trimmed_sum(cla);
        s.con = trimmed_sum(con);
    } else {
        s.n = static_cast<long long>(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) {
            s.seq += seq[i];
            s.eff += eff[i];
            s.cla += cla[i];
            s.con += con[i];
        }
    }
    return s;
}

/// likert for mean sum/n: clamp(round_half_up(1 + 4(sum/n - 1)/6), 1, 5),
/// computed exactly as floor((5n + 4*sum) / 6n).
int likert(long long sum, long long n) {
    long long l = (5 * n + 4 * sum) / (6 * n);
    return static_cast<int>(std::clamp<long long>(l, 1, 5));
}

int negate_likert(int l) { return 6 - l; }

}  // namespace

SusResponses rule_based_sus(const SessionLog& log, bool trim_outliers) {
    MetricSums s = collect(log, trim_outliers);
    int l_seq = likert(s.seq, s.n);
    int l_eff = likert(s.eff, s.n);
    int l_cla = likert(s.cla, s.n);
    int l_con = likert(s.con, s.n);
    int l_min_cla_seq = likert(std::min(s.cla, s.seq), s.n);

    std::vector<int> items(10);
    items[0] = l_con;                          // 1: would use frequently
    items[1] = negate_likert(l_cla);           // 2: unnecessarily complex
    items[2] = l_seq;                          // 3: easy to use
    items[3] = negate_likert(l_seq);           // 4: would need support
    items[4] = l_cla;                          // 5: functions well integrated
    items[5] = negate_likert(l_min_cla_seq);   // 6: too much inconsistency
    items[6] = l_seq;                          // 7: most people learn quickly
    items[7] = negate_likert(l_eff);           // 8: cumbersome to use
    items[8] = l_con;                          // 9: felt confident
    items[9] = negate_likert(l_seq);           // 10: needed to learn a lot
    return SusResponses::from_items(items);
}

namespace {

SusResponses parse_sus_reply(const std::string& model_text) {
    std::string t = util::trim(model_text);
    if (t.rfind("```", 0) == 0) {
        std::size_t first_nl = t.find('\n');
        std::size_t last_fence = t.rfind("```");
        if (first_nl != std::string::npos && last_fence > first_nl) {
            t = util::trim(t.substr(first_nl + 1, last_fence - first_nl - 1));
        }
    }
    json j;
    try {
        j = json::parse(t);
    } catch (const json::exception& e) {
        throw ParseError("SUS reply is not valid JSON: " + std::string(e.what()));
    }
    return SusResponses::from_items(j.at("items").get<std::vector<int>>());
}

std::string render_session_for_sus(const SessionLog& log) {
    std::ostringstream out;
    out << "SESSION: " << log.header.task.task_description << "\nSITE: "
        << log.header.task.target_url << "\nTERMINAL: "
        << (log.terminal_status.has_value()
                ? std::string(session::terminal_status_label(*log.terminal_status))
                : std::string("unterminated"))
        << " (" << log.terminal_reason << ")\n\nSTEPS:\n";
    for (const ActionRecord& r : log.records) {
        out << "Step " << r.step_index << ": " << action_to_grammar(r.action)
            << " | seq=" << r.assessment.seq.value() << " efficiency=" << r.assessment.efficiency
            << " clarity=" << r.assessment.clarity << " confidence=" << r.assessment.confidence;
        if (!r.assessment.friction_tags.empty()) {
            out << " tags=";
            bool first = true;
            for (FrictionTag t : r.assessment.friction_tags) {
                out << (first ? "" : ",") << session::friction_tag_label(t);
                first = false;
            }
        }
        out << "\n  think aloud: " << r.think_aloud << "\n";
    }
    long long seq_sum = 0, eff_sum = 0, cla_sum = 0, con_sum = 0;
    for (const ActionRecord& r : log.records) {
        seq_sum += r.assessment.seq.value();
        eff_sum += r.assessment.efficiency;
        cla_sum += r.assessment.clarity;
        con_sum += r.assessment.confidence;
    }
    double n = static_cast<double>(log.records.size());
    out << "\nSESSION AVERAGES: seq=" << util::format_fixed(seq_sum / n, 2)
        << " efficiency=" << util::format_fixed(eff_sum / n, 2)
        << " clarity=" << util::format_fixed(cla_sum / n, 2)
        << " confidence=" << util::format_fixed(con_sum / n, 2) << "\n";
    return out.str();
}

}  // namespace

session::SusResult synthesize_sus(const SessionLog& log, gateway::ModelGateway* gw,
                                  const prompts::PromptLibrary* prompts,
                                  const SynthesisOptions& options) {
    if (!log.terminated()) {
        throw ValidationError("cannot synthesize SUS before the session terminates");
    }
    if (log.records.empty()) throw ValidationError("no assessed steps");

    session::SusResult result;
    if (options.use_model && gw != nullptr && prompts != nullptr) {
        std::string diagnostics;
        bool got = false;
        for (int attempt = 0; attempt <= options.retry_budget && !got; ++attempt) {
            gateway::PromptBundle bundle;
            bundle.system = prompts->raw("sus_synthesis");
            bundle.user = render_session_for_sus(log);
            if (!diagnostics.empty()) {
                bundle.user += "\nYour previous reply was invalid: " + diagnostics +
                               "\nReply again following the output format exactly.";
            }
            try {
                std::string reply = gw->complete(gateway::Role::ux, bundle);
                result.responses = parse_sus_reply(reply);
                result.mode = "model";
                got = true;
            } catch (const ParseError& e) {
                diagnostics = e.what();
            } catch (const ValidationError& e) {
                diagnostics = e.what();
            }
        }
        if (!got) {
            // Degraded but never blocking: fall back to the deterministic path.
            result.responses = rule_based_sus(log, options.trim_outliers);
            result.mode = "rule_based_fallback";
        }
    } else {
        result.responses = rule_based_sus(log, options.trim_outliers);
        result.mode = "rule_based";
    }
    result.score = metrics::compute_sus(result.responses);
    result.grade = metrics::grade_sus(result.score);
    return result;
}

FrictionTag dominant_tag(const std::set<FrictionTag>& tags) {
    static const FrictionTag priority[] = {
        FrictionTag::error,     FrictionTag::retrying,  FrictionTag::waiting,
        FrictionTag::confusion, FrictionTag::ambiguity, FrictionTag::uncertainty,
        FrictionTag::searching, FrictionTag::scrolling,
    };
    for (FrictionTag t : priority) {
        if (tags.count(t)) return t;
    }
    return FrictionTag::confusion;
}

TagAdvice advice_for_tag(FrictionTag tag) {
    switch (tag) {
        case FrictionTag::error:
            return {"The interface failed to respond or produced an error at this step.",
                    "surface failures with visible feedback and a recovery path"};
        case FrictionTag::retrying:
            return {"The user had to repeat the interaction to make progress.",
                    "make the control respond reliably on the first attempt"};
        case FrictionTag::waiting:
            return {"The user was left waiting without feedback.",
                    "add progress indication or reduce the response latency"};
        case FrictionTag::confusion:
            return {"The interface state did not match the user's expectation.",
                    "clarify the element's state and the effect of interacting with it"};
        case FrictionTag::ambiguity:
            return {"Multiple elements or outcomes looked equally plausible.",
                    "differentiate the options with clearer labels or affordances"};
        case FrictionTag::uncertainty:
            return {"The user could not tell whether the action had worked.",
                    "confirm the outcome with explicit visual feedback"};
        case FrictionTag::searching:
            return {"The user had to hunt for the control they needed.",
                    "expose the control where users expect it or improve its label"};
        case FrictionTag::scrolling:
            return {"Reaching the content required excessive scrolling.",
                    "raise key content or controls above the fold"};
    }
    return {"The step rated as difficult.", "review this interaction"};
}

std::vector<FrictionPoint> build_friction_map(const SessionLog& log) {
    std::vector<FrictionPoint> map;
    for (const ActionRecord& r : log.records) {
        if (metrics::classify_step(r.assessment.seq) != metrics::StepClass::friction) continue;
        FrictionPoint p;
        p.step_index = static_cast<std::size_t>(r.step_index);
        p.seq = r.assessment.seq;
        p.tags = r.assessment.friction_tags;
        p.think_aloud_excerpt = r.think_aloud;
        if (r.target.has_value()) {
            p.element_descriptor = r.target->role + " \"" + r.target->label + "\"";
        } else {
            p.element_descriptor = std::string(action_kind(r.action)) + " action";
        }
        if (!p.tags.empty()) {
            p.diagnosis = advice_for_tag(dominant_tag(p.tags)).diagnosis;
        } else {
            p.diagnosis = "Step rated difficult (SEQ " + std::to_string(r.assessment.seq.value()) +
                          ") without a specific friction tag.";
        }
        map.push_back(std::move(p));
    }
    return map;
}

}  // namespace uxprobe::synthesis
