#pragma once

#include "uxprobe/gateway.hpp"
#include "uxprobe/metrics.hpp"
#include "uxprobe/prompts.hpp"
#include "uxprobe/session.hpp"

#include <set>
#include <string>
#include <vector>

namespace uxprobe::synthesis {

/// One friction-class step correlated with its think-aloud evidence and the
/// implicated element.
struct FrictionPoint {
    std::size_t step_index = 0;
    metrics::SeqRating seq = metrics::SeqRating::of(1);
    std::set<session::FrictionTag> tags;
    std::string think_aloud_excerpt;
    std::string element_descriptor;  // e.g. `button "Accept All"`
    std::string diagnosis;
};

struct SynthesisOptions {
    bool use_model = false;     // rule-based unless a ux-role gateway is wanted
    bool trim_outliers = false; // drop one high + one low per metric when n >= 3
    int retry_budget = 2;
};

/// Deterministic SUS mapping from session micro-metric means (integer
/// arithmetic throughout, so results are bit-stable):
///   likert(m)  = clamp(round(1 + 4(m-1)/6), 1, 5)   for a 1..7 mean m
///   likert'(m) = 6 - likert(m)
/// items: 1,9 <- confidence; 3,7 <- seq; 5 <- clarity; 2 <- clarity';
/// 4,10 <- seq'; 8 <- efficiency'; 6 <- min(clarity, seq)'.
metrics::SusResponses rule_based_sus(const session::SessionLog& log, bool trim_outliers = false);

/// Synthesize the ten SUS items for a terminated session. The model-backed
/// path validates and re-prompts; when it exhausts its retries the result
/// falls back to the rule-based mapping with mode "rule_based_fallback".
session::SusResult synthesize_sus(const session::SessionLog& log,
                                  gateway::ModelGateway* gw,
                                  const prompts::PromptLibrary* prompts,
                                  const SynthesisOptions& options);

/// One FrictionPoint per friction-class step (SEQ <= 3), ordered by step.
/// Diagnoses come from the remedy table (rule-based, deterministic).
std::vector<FrictionPoint> build_friction_map(const session::SessionLog& log);

/// Tag priority used to pick the dominant friction tag for diagnoses and
/// recommendations (highest first).
session::FrictionTag dominant_tag(const std::set<session::FrictionTag>& tags);

/// Rule-based diagnosis / remedy strings for a friction tag (shipped as an
/// editable asset; these are the built-in defaults).
struct TagAdvice {
    std::string diagnosis;
    std::string remedy;
};
TagAdvice advice_for_tag(session::FrictionTag tag);

}  // namespace uxprobe::synthesis
