#include "uxprobe/errors.hpp"
#include "uxprobe/session.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <random>

using namespace uxprobe;
using namespace uxprobe::session;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / ("uxprobe_session_test_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

Checklist sample_checklist() {
    return Checklist{{{"Homepage loaded", ChecklistStatus::pending},
                      {"Help section visible", ChecklistStatus::pending},
                      {"Guidelines page discovered", ChecklistStatus::pending}}};
}

SessionHeader sample_header() {
    SessionHeader h;
    h.session_id = "test-session";
    h.created_ms = 1700000000000;
    h.task.target_url = "https://example.com/";
    h.task.task_description = "Find the submission guidelines";
    h.engines = {"scripted", "scripted", "scripted"};
    h.checklist_initial = sample_checklist();
    h.prompt_set_hash = "deadbeefdeadbeef";
    return h;
}

StepAssessment sample_assessment(int seq) {
    StepAssessment a;
    a.seq = metrics::SeqRating::of(seq);
    a.efficiency = 6;
    a.clarity = 5;
    a.confidence = 6;
    a.efficiency_note = "Quick and direct.";
    a.clarity_note = "Label was unambiguous.";
    a.confidence_note = "Sure of the outcome.";
    if (seq <= 3) a.friction_tags = {FrictionTag::error, FrictionTag::retrying};
    return a;
}

ActionRecord sample_record(int index, const Checklist& after, int seq = 7) {
    ActionRecord r;
    r.step_index = index;
    r.think_aloud = "I can see the button I need.";
    r.action = ClickAction{{500, 300}};
    r.outcome = {OutcomeStatus::applied, "", true};
    r.target = TargetDescriptor{1, "button", "Accept All"};
    r.assessment = sample_assessment(seq);
    r.observation_ref = "obs-0000";
    r.checklist_after = after;
    r.timestamp_ms = 1700000000000 + index * 1000;
    r.latency_ms = 120;
    return r;
}

}  // namespace

TEST_CASE("append_record enforces consecutive indices") {
    auto dir = temp_dir();
    SessionWriter w(dir / "s.jsonl", sample_header());
    Checklist c = sample_checklist();
    c.items[0].status = ChecklistStatus::in_progress;
    w.append(sample_record(1, c));
    CHECK(w.log().records.size() == 1);
    CHECK_THROWS_WITH_AS(w.append(sample_record(3, c)), doctest::Contains("step_index"),
                         IntegrityError);
}

TEST_CASE("append_record rejects multi-item checklist deltas") {
    auto dir = temp_dir();
    SessionWriter w(dir / "s.jsonl", sample_header());
    Checklist c = sample_checklist();
    c.items[0].status = ChecklistStatus::completed;
    c.items[1].status = ChecklistStatus::in_progress;
    CHECK_THROWS_WITH_AS(w.append(sample_record(1, c)), doctest::Contains("at most one"),
                         IntegrityError);
}

TEST_CASE("append_record rejects illegal transitions and text mutation") {
    auto dir = temp_dir();
    SessionWriter w(dir / "s.jsonl", sample_header());
    Checklist c = sample_checklist();
    c.items[0].status = ChecklistStatus::completed;
    w.append(sample_record(1, c));
    Checklist resurrect = c;
    resurrect.items[0].status = ChecklistStatus::pending;
    CHECK_THROWS_WITH_AS(w.append(sample_record(2, resurrect)),
                         doctest::Contains("illegal checklist transition"), IntegrityError);
    Checklist renamed = c;
    renamed.items[1].text = "Something else";
    CHECK_THROWS_AS(w.append(sample_record(2, renamed)), IntegrityError);
}

TEST_CASE("checklist transition table") {
    using S = ChecklistStatus;
    const S all[] = {S::pending, S::in_progress, S::completed, S::failed};
    auto legal = [](S from, S to) {
        if (from == to) return true;
        if (from == S::pending) return true;  // pending may go anywhere forward
        if (from == S::in_progress) return to == S::completed || to == S::failed;
        return false;  // completed/failed are terminal
    };
    for (S from : all) {
        for (S to : all) {
            bool expect = legal(from, to) &&
                          !(from == S::pending && to == S::pending && false);
            CHECK(is_legal_transition(from, to) == expect);
        }
    }
    // Spot checks straight from the rules.
    CHECK(is_legal_transition(S::pending, S::in_progress));
    CHECK(is_legal_transition(S::pending, S::completed));
    CHECK(is_legal_transition(S::pending, S::failed));
    CHECK(is_legal_transition(S::in_progress, S::completed));
    CHECK(is_legal_transition(S::in_progress, S::failed));
    CHECK_FALSE(is_legal_transition(S::completed, S::pending));
    CHECK_FALSE(is_legal_transition(S::completed, S::failed));
    CHECK_FALSE(is_legal_transition(S::failed, S::in_progress));
    CHECK_FALSE(is_legal_transition(S::in_progress, S::pending));
}

TEST_CASE("status parsing is strictly lowercase") {
    CHECK(checklist_status_from_label("pending") == ChecklistStatus::pending);
    CHECK_THROWS_WITH_AS(checklist_status_from_label("Pending"), doctest::Contains("lowercase"),
                         ValidationError);
    CHECK_THROWS_AS(checklist_status_from_label("IN_PROGRESS"), ValidationError);
    CHECK_THROWS_AS(checklist_status_from_label("done"), ValidationError);
}

TEST_CASE("checklist word-count validation") {
    Checklist c;
    c.items.push_back({"One two three four five six seven eight nine ten", ChecklistStatus::pending});
    c.items.push_back({"Hyphenated-compounds count-as one word each", ChecklistStatus::pending});
    CHECK_NOTHROW(validate_checklist(c, true));
    c.items.push_back(
        {"this item clearly has rather more than ten whole words total", ChecklistStatus::pending});
    CHECK_THROWS_WITH_AS(validate_checklist(c, true), doctest::Contains("item 3"), ValidationError);
}

TEST_CASE("checklist size bounds") {
    Checklist one{{{"Only item", ChecklistStatus::pending}}};
    CHECK_THROWS_WITH_AS(validate_checklist(one, true), doctest::Contains("between 2 and 6"),
                         ValidationError);
    Checklist seven;
    for (int i = 0; i < 7; ++i) seven.items.push_back({"Item " + std::to_string(i), ChecklistStatus::pending});
    CHECK_THROWS_AS(validate_checklist(seven, true), ValidationError);
}

TEST_CASE("task URL validation") {
    TaskSpec t;
    t.task_description = "do something";
    t.target_url = "https://example.com/path?q=1";
    CHECK_NOTHROW(t.validate());
    t.target_url = "example.com";
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t.target_url = "://nope";
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t.target_url = "https://spaces are bad.com";
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t.target_url = "https://ok.example/";
    t.task_description = "   ";
    CHECK_THROWS_AS(t.validate(), ValidationError);
}

TEST_CASE("save/load round-trip is the identity on generated logs") {
    std::mt19937 rng(8080);
    std::uniform_int_distribution<int> seq_dist(1, 7), len_dist(1, 12), flip(0, 3);
    for (int iter = 0; iter < 25; ++iter) {
        auto dir = temp_dir();
        auto path = dir / "round.jsonl";
        SessionHeader h = sample_header();
        h.session_id = "gen-" + std::to_string(iter);
        if (iter % 2 == 0) h.roadmap = {"Scroll to the footer.", "Open the help section."};
        SessionWriter w(path, h);
        Checklist current = h.checklist_initial;
        int steps = len_dist(rng);
        for (int i = 1; i <= steps; ++i) {
            // Occasionally advance one checklist item through a legal move.
            if (flip(rng) == 0) {
                for (auto& item : current.items) {
                    if (item.status == ChecklistStatus::pending) {
                        item.status = (flip(rng) == 1) ? ChecklistStatus::completed
                                                       : ChecklistStatus::in_progress;
                        break;
                    }
                    if (item.status == ChecklistStatus::in_progress) {
                        item.status = ChecklistStatus::completed;
                        break;
                    }
                }
            }
            ActionRecord r = sample_record(i, current, seq_dist(rng));
            if (i % 3 == 0) r.action = TypeAction{{10, 20}, "hello \"world\"\nline"};
            if (i % 4 == 1) r.warnings = {"loop warning raised"};
            w.append(r);
        }
        w.write_terminal(TerminalStatus::success, "done");
        SusResult sus;
        sus.responses = metrics::SusResponses::from_items(
            std::vector<int>{4, 2, 4, 2, 4, 2, 4, 2, 4, 2});
        sus.score = metrics::compute_sus(sus.responses);
        sus.grade = metrics::grade_sus(sus.score);
        sus.mode = "rule_based";
        w.write_sus(sus);

        SessionLog loaded = load_session(path);
        CHECK(loaded.records.size() == w.log().records.size());
        CHECK(loaded.header.session_id == h.session_id);
        CHECK(loaded.header.roadmap == h.roadmap);
        CHECK(loaded.terminal_status == TerminalStatus::success);
        REQUIRE(loaded.sus.has_value());
        CHECK(loaded.sus->score.milli() == sus.score.milli());
        for (std::size_t i = 0; i < loaded.records.size(); ++i) {
            const ActionRecord& a = loaded.records[i];
            const ActionRecord& b = w.log().records[i];
            CHECK(record_to_json(a).dump() == record_to_json(b).dump());
        }
        // Byte-level: saving the loaded log again reproduces the same lines.
        auto path2 = dir / "round2.jsonl";
        SessionWriter w2(path2, loaded.header);
        for (const ActionRecord& r : loaded.records) w2.append(r);
        w2.write_terminal(*loaded.terminal_status, loaded.terminal_reason);
        w2.write_sus(*loaded.sus);
        std::ifstream f1(path), f2(path2);
        std::string l1, l2;
        while (std::getline(f1, l1) && std::getline(f2, l2)) {
            if (l1.find("gateway_call") != std::string::npos) continue;
            CHECK(l1 == l2);
        }
        fs::remove_all(dir);
    }
}

TEST_CASE("load rejects a capitalized status with a field-naming error") {
    auto dir = temp_dir();
    auto path = dir / "bad.jsonl";
    SessionWriter w(path, sample_header());
    Checklist c = sample_checklist();
    c.items[0].status = ChecklistStatus::in_progress;
    w.append(sample_record(1, c));
    w.write_terminal(TerminalStatus::success, "ok");

    // Corrupt the status casing in the record line.
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    in.close();
    auto pos = content.find("\"in_progress\"");
    REQUIRE(pos != std::string::npos);
    content.replace(pos, 13, "\"In_progress\"");
    std::ofstream out(path, std::ios::trunc);
    out << content;
    out.close();

    CHECK_THROWS_WITH_AS(load_session(path), doctest::Contains("lowercase"), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("truncated final line: strict parse error with line number, salvage recovers") {
    auto dir = temp_dir();
    auto path = dir / "trunc.jsonl";
    SessionWriter w(path, sample_header());
    Checklist c = sample_checklist();
    c.items[0].status = ChecklistStatus::in_progress;
    w.append(sample_record(1, c));
    c.items[0].status = ChecklistStatus::completed;
    w.append(sample_record(2, c));

    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    in.close();
    // Chop the last line in half (drop the trailing newline too).
    content.resize(content.size() - (content.size() - content.rfind("\n", content.size() - 2)) / 2);
    std::ofstream out(path, std::ios::trunc);
    out << content;
    out.close();

    try {
        load_session(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::vector<std::string> warnings;
    SessionLog salvaged = load_session(path, /*salvage=*/true, &warnings);
    CHECK(salvaged.records.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("line 3") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("terminated session with zero records fails validation") {
    auto dir = temp_dir();
    auto path = dir / "empty.jsonl";
    SessionWriter w(path, sample_header());
    w.write_terminal(TerminalStatus::failure, "nothing happened");
    CHECK_THROWS_WITH_AS(load_session(path), doctest::Contains("no records"), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("sus line before terminal fails validation") {
    auto dir = temp_dir();
    auto path = dir / "sus_order.jsonl";
    {
        SessionWriter w(path, sample_header());
        Checklist c = sample_checklist();
        w.append(sample_record(1, c));
    }
    // Manually append a sus line with no terminal line.
    {
        SusResult sus;
        sus.responses =
            metrics::SusResponses::from_items(std::vector<int>{3, 3, 3, 3, 3, 3, 3, 3, 3, 3});
        sus.score = metrics::compute_sus(sus.responses);
        sus.grade = metrics::grade_sus(sus.score);
        sus.mode = "rule_based";
        std::ofstream out(path, std::ios::app);
        out << sus_result_to_json(sus).dump() << "\n";
    }
    CHECK_THROWS_AS(load_session(path), Error);
    fs::remove_all(dir);
}

TEST_CASE("friction tags parse from the closed vocabulary only") {
    CHECK(friction_tag_from_label("waiting") == FrictionTag::waiting);
    CHECK(friction_tag_from_label("uncertainty") == FrictionTag::uncertainty);
    CHECK_THROWS_AS(friction_tag_from_label("sadness"), ValidationError);
    CHECK_THROWS_AS(friction_tag_from_label("Waiting"), ValidationError);
}

TEST_CASE("assessment score bounds") {
    StepAssessment a = sample_assessment(7);
    CHECK_NOTHROW(a.validate());
    a.efficiency = 8;
    CHECK_THROWS_WITH_AS(a.validate(), doctest::Contains("efficiency"), ValidationError);
    a.efficiency = 0;
    CHECK_THROWS_AS(a.validate(), ValidationError);
}
