#include "uxprobe/actions.hpp"
#include "uxprobe/errors.hpp"

#include <doctest.h>

#include <random>

using namespace uxprobe;

TEST_CASE("parse_action handles the literal click example") {
    Action a = parse_action("click(234, 550)");
    auto* click = std::get_if<ClickAction>(&a);
    REQUIRE(click != nullptr);
    CHECK(click->at.x == 234);
    CHECK(click->at.y == 550);
}

TEST_CASE("parse_action rejects GOTO navigation") {
    CHECK_THROWS_WITH_AS(parse_action("goto(https://example.com)"),
                         doctest::Contains("not permitted"), ParseError);
    CHECK_THROWS_AS(parse_action("GOTO(\"https://example.com\")"), ParseError);
    CHECK_THROWS_AS(parse_action("navigate(\"https://example.com\")"), ParseError);
}

TEST_CASE("parse_action bounds checking") {
    CHECK_THROWS_WITH_AS(parse_action("click(1200, 50)"), doctest::Contains("1000x1000"),
                         ValidationError);
    CHECK_THROWS_AS(parse_action("hover(-5, 10)"), ValidationError);
    CHECK_THROWS_AS(parse_action("type(10, 1001, \"x\")"), ValidationError);
    CHECK_NOTHROW(parse_action("click(0, 0)"));
    CHECK_NOTHROW(parse_action("click(1000, 1000)"));
}

TEST_CASE("parse_action scroll forms") {
    CHECK(std::get<ScrollAction>(parse_action("scroll(up)")).direction == ScrollDirection::up);
    CHECK(std::get<ScrollAction>(parse_action("scroll(down)")).direction == ScrollDirection::down);
    CHECK(std::get<ScrollAction>(parse_action("scroll_bottom")).direction ==
          ScrollDirection::to_bottom);
    CHECK(std::get<ScrollAction>(parse_action("scroll(bottom)")).direction ==
          ScrollDirection::to_bottom);
    CHECK_THROWS_AS(parse_action("scroll(left)"), ParseError);
}

TEST_CASE("parse_action select and terminate") {
    Action sel = parse_action("select(3, \"4\")");
    CHECK(std::get<SelectAction>(sel).tag_id == 3);
    CHECK(std::get<SelectAction>(sel).option_label == "4");
    CHECK_THROWS_AS(parse_action("select(0, \"x\")"), ValidationError);

    Action term = parse_action("terminate(success, \"objectives met\")");
    CHECK(std::get<TerminateAction>(term).status == TerminateStatus::success);
    CHECK(std::get<TerminateAction>(term).reason == "objectives met");
    Action term2 = parse_action("terminate(failure, \"login prohibited\")");
    CHECK(std::get<TerminateAction>(term2).reason == "login prohibited");
    CHECK_THROWS_AS(parse_action("terminate(maybe, \"x\")"), ParseError);
}

TEST_CASE("parse_action type with escapes and whitespace tolerance") {
    Action t = parse_action("  TYPE( 12 ,34,  \"Brooks \\\"Camp\\\"\" ) ");
    auto& typed = std::get<TypeAction>(t);
    CHECK(typed.at.x == 12);
    CHECK(typed.at.y == 34);
    CHECK(typed.text == "Brooks \"Camp\"");
}

TEST_CASE("parse_action garbage") {
    CHECK_THROWS_AS(parse_action(""), ParseError);
    CHECK_THROWS_AS(parse_action("click"), ParseError);
    CHECK_THROWS_AS(parse_action("click(12)"), ParseError);
    CHECK_THROWS_AS(parse_action("click(12, 13) extra"), ParseError);
    CHECK_THROWS_AS(parse_action("frobnicate(1, 2)"), ParseError);
    CHECK_THROWS_AS(parse_action("type(1, 2, unquoted)"), ParseError);
}

TEST_CASE("grammar round-trip is the identity") {
    std::mt19937 rng(4242);
    std::uniform_int_distribution<int> coord(0, 1000);
    std::uniform_int_distribution<int> pick(0, 5);
    for (int i = 0; i < 500; ++i) {
        Action a;
        switch (pick(rng)) {
            case 0: a = ClickAction{{coord(rng), coord(rng)}}; break;
            case 1: a = HoverAction{{coord(rng), coord(rng)}}; break;
            case 2: a = TypeAction{{coord(rng), coord(rng)}, "text \"with\" quotes\\"}; break;
            case 3: a = ScrollAction{ScrollDirection::to_bottom}; break;
            case 4: a = SelectAction{1 + (coord(rng) % 30), "Option A"}; break;
            default: a = TerminateAction{TerminateStatus::failure, "reason, with comma"}; break;
        }
        Action back = parse_action(action_to_grammar(a));
        CHECK(back == a);
    }
}

TEST_CASE("random out-of-range pointer coordinates are always rejected") {
    std::mt19937 rng(77);
    std::uniform_int_distribution<int> bad(1001, 100000);
    std::uniform_int_distribution<int> good(0, 1000);
    std::uniform_int_distribution<int> which(0, 2);
    const char* verbs[] = {"click", "hover", "type"};
    for (int i = 0; i < 300; ++i) {
        int verb = which(rng);
        int x = good(rng), y = good(rng);
        if (i % 2 == 0) {
            x = bad(rng) * (i % 4 == 0 ? 1 : -1);
        } else {
            y = bad(rng) * (i % 4 == 1 ? 1 : -1);
        }
        std::string text = std::string(verbs[verb]) + "(" + std::to_string(x) + ", " +
                           std::to_string(y) + (verb == 2 ? ", \"x\")" : ")");
        CHECK_THROWS_AS(parse_action(text), ValidationError);
    }
}

TEST_CASE("action_signature quantizes coordinates") {
    Action a = ClickAction{{500, 500}};
    Action b = ClickAction{{519, 501}};   // same 20-unit cell
    Action c = ClickAction{{520, 500}};   // next cell over
    CHECK(action_signature(a, 20) == action_signature(b, 20));
    CHECK(action_signature(a, 20) != action_signature(c, 20));
    CHECK(action_signature(a, 20) != action_signature(Action{HoverAction{{500, 500}}}, 20));
}
