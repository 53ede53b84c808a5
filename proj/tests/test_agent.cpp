#include "uxprobe/agent.hpp"
#include "uxprobe/errors.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace uxprobe;
using namespace uxprobe::agent;
using grounding::ElementRole;
using grounding::GroundedElement;
using grounding::Observation;

namespace {

const prompts::PromptLibrary& prompt_lib() {
    static prompts::PromptLibrary lib =
        prompts::PromptLibrary::load(std::filesystem::path(UXPROBE_SOURCE_DIR) / "assets/prompts");
    return lib;
}

Observation obs_with(std::vector<GroundedElement> elements) {
    Observation obs;
    obs.viewport = {1280, 800};
    obs.page_url = "https://site.example/";
    int tag = 1;
    for (GroundedElement& el : elements) {
        el.tag_id = tag++;
        obs.elements.push_back(el);
    }
    return obs;
}

GroundedElement element(ElementRole role, const char* label, int x, int y, int w, int h,
                        const char* input_type = "") {
    GroundedElement el;
    el.role = role;
    el.label = label;
    el.input_type = input_type;
    el.bbox_norm = {x, y, w, h};
    return el;
}

session::TaskSpec task_spec() {
    session::TaskSpec t;
    t.target_url = "https://site.example/";
    t.task_description = "Do the thing";
    return t;
}

}  // namespace

// -- decision parsing --------------------------------------------------------

TEST_CASE("parse_decision_reply accepts the JSON wire shape") {
    Decision d = parse_decision_reply(
        R"({"think_aloud": "I see the search bar.", "action": "click(234, 550)"})");
    CHECK(d.think_aloud == "I see the search bar.");
    CHECK(std::get<ClickAction>(d.action).at.x == 234);
}

TEST_CASE("parse_decision_reply accepts fenced JSON and the labeled fallback") {
    Decision fenced = parse_decision_reply(
        "```json\n{\"think_aloud\": \"ok\", \"action\": \"scroll_bottom\"}\n```");
    CHECK(std::get<ScrollAction>(fenced.action).direction == ScrollDirection::to_bottom);

    Decision labeled = parse_decision_reply(
        "THINK: The footer probably has the link.\nACTION: scroll(down)");
    CHECK(labeled.think_aloud == "The footer probably has the link.");
    CHECK(std::get<ScrollAction>(labeled.action).direction == ScrollDirection::down);
}

TEST_CASE("parse_decision_reply rejects empty think-aloud and missing action") {
    CHECK_THROWS_WITH_AS(parse_decision_reply(R"({"think_aloud": "", "action": "click(1, 2)"})"),
                         doctest::Contains("think-aloud"), ParseError);
    CHECK_THROWS_AS(parse_decision_reply("just some prose with no action line"), ParseError);
}

TEST_CASE("parse_decision_reply propagates grammar rejections") {
    CHECK_THROWS_AS(
        parse_decision_reply(R"({"think_aloud": "x", "action": "goto(https://a.example)"})"),
        ParseError);
    CHECK_THROWS_AS(
        parse_decision_reply(R"({"think_aloud": "x", "action": "click(1200, 50)"})"),
        ValidationError);
}

TEST_CASE("validate_action_against_observation rejects click on a dropdown") {
    Observation obs = obs_with({element(ElementRole::select_box, "Group size", 100, 100, 200, 40)});
    CHECK_THROWS_WITH_AS(
        validate_action_against_observation(ClickAction{{150, 120}}, obs),
        doctest::Contains("use select"), ValidationError);
    CHECK_NOTHROW(validate_action_against_observation(SelectAction{1, "4"}, obs));
}

TEST_CASE("validate_action_against_observation rejects select on a non-dropdown") {
    Observation obs = obs_with({element(ElementRole::button, "Go", 0, 0, 50, 20)});
    CHECK_THROWS_WITH_AS(validate_action_against_observation(SelectAction{1, "x"}, obs),
                         doctest::Contains("not a dropdown"), ValidationError);
    CHECK_THROWS_WITH_AS(validate_action_against_observation(SelectAction{9, "x"}, obs),
                         doctest::Contains("does not exist"), ValidationError);
}

// -- assessment parsing --------------------------------------------------------

TEST_CASE("parse_assessment_reply reads the four scores, notes, and tags") {
    session::StepAssessment a = parse_assessment_reply(R"({
        "seq": 2, "efficiency": 1, "efficiency_note": "Took repeated attempts.",
        "clarity": 6, "clarity_note": "The cell looked clickable.",
        "confidence": 2, "confidence_note": "No idea if it registered.",
        "friction_tags": ["error", "retrying"]})");
    CHECK(a.seq.value() == 2);
    CHECK(a.efficiency == 1);
    CHECK(a.clarity == 6);
    CHECK(a.friction_tags.count(session::FrictionTag::error) == 1);
}

TEST_CASE("parse_assessment_reply rejects out-of-range scores and unknown tags") {
    CHECK_THROWS_AS(parse_assessment_reply(
                        R"({"seq": 9, "efficiency": 4, "clarity": 4, "confidence": 4})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_assessment_reply(R"({"seq": 4, "efficiency": 4, "clarity": 4,
                        "confidence": 4, "friction_tags": ["boredom"]})"),
                    ValidationError);
    CHECK_THROWS_AS(parse_assessment_reply("not json"), ParseError);
}

// -- policy gate ------------------------------------------------------------------

TEST_CASE("policy gate: password input forces terminate(failure, login prohibited)") {
    Observation obs = obs_with({element(ElementRole::input, "Password", 10, 10, 100, 30,
                                        "password")});
    auto forced = policy_override(obs, session::PolicyFlags{true});
    REQUIRE(forced.has_value());
    const auto& term = std::get<TerminateAction>(*forced);
    CHECK(term.status == TerminateStatus::failure);
    CHECK(term.reason == "login prohibited");
}

TEST_CASE("policy gate: sign-in / log-in labels trigger, case-insensitively") {
    for (const char* label : {"Sign In", "LOG IN", "Sign-in to continue", "Login"}) {
        Observation obs = obs_with({element(ElementRole::button, label, 0, 0, 50, 20)});
        CHECK(policy_override(obs, session::PolicyFlags{true}).has_value());
    }
    // Unrelated labels pass.
    for (const char* label : {"Logistics", "Singing lessons", "Accept All"}) {
        Observation obs = obs_with({element(ElementRole::button, label, 0, 0, 50, 20)});
        CHECK_FALSE(policy_override(obs, session::PolicyFlags{true}).has_value());
    }
}

TEST_CASE("policy gate disabled: login UI passes through") {
    Observation obs = obs_with({element(ElementRole::link, "Login", 0, 0, 50, 20)});
    Action a = ClickAction{{10, 10}};
    Action out = enforce_policy(obs, a, session::PolicyFlags{false});
    CHECK(out == a);
}

TEST_CASE("policy gate: cookie banner accept passes through") {
    Observation obs = obs_with({element(ElementRole::button, "Accept All", 780, 860, 160, 40)});
    Action a = ClickAction{{805, 876}};
    Action out = enforce_policy(obs, a, session::PolicyFlags{true});
    CHECK(out == a);
}

// -- loop detection -----------------------------------------------------------------

TEST_CASE("loop detector warns on the 3rd identical action and breaks on the 5th") {
    LoopDetector det(3, 5, 20);
    Action click = ClickAction{{500, 500}};
    CHECK(det.check(click) == LoopVerdict::ok);
    CHECK(det.check(click) == LoopVerdict::ok);
    CHECK(det.check(click) == LoopVerdict::warn);
    CHECK(det.check(click) == LoopVerdict::warn);
    CHECK(det.check(click) == LoopVerdict::brk);
}

TEST_CASE("loop detector: alternating distinct actions stay ok") {
    LoopDetector det(3, 5, 20);
    Action a = ClickAction{{100, 100}};
    Action b = ClickAction{{600, 600}};
    for (int i = 0; i < 10; ++i) {
        CHECK(det.check(a) == LoopVerdict::ok);
        CHECK(det.check(b) == LoopVerdict::ok);
    }
}

TEST_CASE("loop detector: nearby clicks within one quantization cell count as identical") {
    LoopDetector det(3, 5, 20);
    CHECK(det.check(ClickAction{{500, 500}}) == LoopVerdict::ok);
    CHECK(det.check(ClickAction{{503, 498}}) == LoopVerdict::ok);
    CHECK(det.check(ClickAction{{519, 501}}) == LoopVerdict::warn);
}

// -- memory -----------------------------------------------------------------------

namespace {

session::ActionRecord memory_record(int index, int seq) {
    session::ActionRecord r;
    r.step_index = index;
    r.think_aloud = "thought " + std::to_string(index);
    r.action = ClickAction{{index * 10, index * 10}};
    r.outcome = {session::OutcomeStatus::applied, "", true};
    session::StepAssessment a;
    a.seq = metrics::SeqRating::of(seq);
    a.efficiency = a.clarity = a.confidence = seq;
    r.assessment = a;
    return r;
}

}  // namespace

TEST_CASE("memory window folds overflow into the summary, oldest first") {
    AgentMemory mem(3);
    for (int i = 1; i <= 5; ++i) mem.push(memory_record(i, 6));
    CHECK(mem.window_size() == 3);
    CHECK(mem.summary().find("Step 1:") != std::string::npos);
    CHECK(mem.summary().find("Step 2:") != std::string::npos);
    CHECK(mem.summary().find("Step 3:") == std::string::npos);
    std::string rendered = mem.render();
    CHECK(rendered.find("thought 5") != std::string::npos);
    CHECK(rendered.find("Earlier steps") != std::string::npos);
    // Summary lines carry action, outcome, and the SEQ score.
    CHECK(mem.summary().find("click(10, 10)") != std::string::npos);
    CHECK(mem.summary().find("SEQ 6") != std::string::npos);
}

TEST_CASE("memory compress_oldest drains the window") {
    AgentMemory mem(5);
    mem.push(memory_record(1, 7));
    mem.push(memory_record(2, 7));
    CHECK(mem.compress_oldest());
    CHECK(mem.compress_oldest());
    CHECK_FALSE(mem.compress_oldest());
    CHECK(mem.window_size() == 0);
}

// -- roadmap ------------------------------------------------------------------------

namespace {

gateway::ScriptedGateway reasoning_replies(std::initializer_list<std::string> replies) {
    std::vector<gateway::ScriptedGateway::Entry> entries;
    for (const std::string& r : replies) entries.push_back({gateway::Role::reasoning, r});
    return gateway::ScriptedGateway(std::move(entries));
}

FixtureSearchProvider one_result() {
    return FixtureSearchProvider({{"Help center", "https://help.site.example/",
                                   "Guidelines live in the footer under Help."}});
}

}  // namespace

TEST_CASE("plan_roadmap returns a validated 2-4 sentence roadmap") {
    auto gw = reasoning_replies(
        {R"({"sentences": ["Scroll to the footer.", "Open the help section."]})"});
    auto search = one_result();
    std::vector<std::string> warnings;
    EipRoadmap r = plan_roadmap(task_spec(), &search, gw, prompt_lib(), 2, warnings);
    CHECK(r.sentences.size() == 2);
    CHECK(warnings.empty());
}

TEST_CASE("plan_roadmap: empty search results degrade to an empty roadmap") {
    auto gw = reasoning_replies({});
    FixtureSearchProvider search({});
    std::vector<std::string> warnings;
    EipRoadmap r = plan_roadmap(task_spec(), &search, gw, prompt_lib(), 2, warnings);
    CHECK(r.empty());
    REQUIRE(warnings.size() == 1);
    CHECK(gw.consumed() == 0);
}

TEST_CASE("plan_roadmap: no provider degrades to an empty roadmap") {
    auto gw = reasoning_replies({});
    std::vector<std::string> warnings;
    EipRoadmap r = plan_roadmap(task_spec(), nullptr, gw, prompt_lib(), 2, warnings);
    CHECK(r.empty());
    CHECK(warnings.size() == 1);
}

TEST_CASE("plan_roadmap: a 5-sentence reply is re-prompted then truncated to 4") {
    std::string five = R"({"sentences": ["One.", "Two.", "Three.", "Four.", "Five."]})";
    auto gw = reasoning_replies({five, five, five});
    auto search = one_result();
    std::vector<std::string> warnings;
    EipRoadmap r = plan_roadmap(task_spec(), &search, gw, prompt_lib(), 2, warnings);
    CHECK(r.sentences.size() == 4);
    CHECK(r.sentences[3] == "Four.");
    CHECK(gw.consumed() == 3);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("truncated") != std::string::npos);
}

TEST_CASE("plan_roadmap: gateway exhaustion degrades with a warning") {
    // Underrunning the scripted fixture raises, which plan_roadmap treats as
    // a gateway failure: warn and continue without a roadmap.
    auto gw = reasoning_replies({});
    auto search = one_result();
    std::vector<std::string> warnings;
    EipRoadmap r = plan_roadmap(task_spec(), &search, gw, prompt_lib(), 2, warnings);
    CHECK(r.empty());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("roadmap") != std::string::npos);
}

TEST_CASE("parse_roadmap_reply accepts numbered plain text") {
    EipRoadmap r = parse_roadmap_reply("1. Scroll to the footer.\n2) Open Help.\n- Check links.");
    CHECK(r.sentences.size() == 3);
    CHECK(r.sentences[0] == "Scroll to the footer.");
    CHECK(r.sentences[1] == "Open Help.");
}
