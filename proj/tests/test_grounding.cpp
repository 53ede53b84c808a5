#include "uxprobe/errors.hpp"
#include "uxprobe/grounding.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

using namespace uxprobe;
using namespace uxprobe::grounding;

TEST_CASE("normalize_point midpoint and origin are exact") {
    Viewport vp{1920, 1080};
    NormPoint mid = normalize_point(960, 540, vp);
    CHECK(mid.x == 500);
    CHECK(mid.y == 500);
    NormPoint origin = normalize_point(0, 0, vp);
    CHECK(origin.x == 0);
    CHECK(origin.y == 0);
    NormPoint corner = normalize_point(1920, 1080, vp);
    CHECK(corner.x == 1000);
    CHECK(corner.y == 1000);
}

TEST_CASE("normalize_point rejects a degenerate viewport") {
    CHECK_THROWS_AS(normalize_point(1, 1, Viewport{0, 100}), ValidationError);
    CHECK_THROWS_AS(denormalize_point(NormPoint{1, 1}, Viewport{100, -5}), ValidationError);
}

TEST_CASE("normalize/denormalize round-trip within one pixel") {
    // The +-1 px contract holds for extents below 3000 px (the integer error
    // is bounded by 0.5 + extent/2000); that covers every desktop viewport
    // the driver will report.
    std::mt19937 rng(31337);
    for (int i = 0; i < 1000; ++i) {
        std::uniform_int_distribution<int> wdist(200, 2560), hdist(200, 1440);
        Viewport vp{wdist(rng), hdist(rng)};
        std::uniform_int_distribution<int> xdist(0, vp.width), ydist(0, vp.height);
        int px = xdist(rng), py = ydist(rng);
        NormPoint n = normalize_point(px, py, vp);
        PixelPoint back = denormalize_point(n, vp);
        CHECK(std::abs(back.x - px) <= 1);
        CHECK(std::abs(back.y - py) <= 1);
    }
}

namespace {

RawElement make_el(ElementRole role, const char* label, double x, double y, double w, double h) {
    RawElement el;
    el.role = role;
    el.label = label;
    el.bbox = RectPx{x, y, w, h};
    return el;
}

}  // namespace

TEST_CASE("ground_observation identity viewport keeps pixel boxes") {
    RawPage page;
    page.url = "https://example.com/";
    page.elements.push_back(make_el(ElementRole::button, "Go", 100, 100, 200, 50));
    Observation obs = ground_observation(page, Viewport{1000, 1000}, {0, 0}, "shot");
    REQUIRE(obs.elements.size() == 1);
    CHECK(obs.elements[0].tag_id == 1);
    CHECK(obs.elements[0].bbox_norm == RectNorm{100, 100, 200, 50});
    CHECK_FALSE(obs.elements[0].occluded);
}

TEST_CASE("ground_observation orders top-to-bottom then left-to-right") {
    RawPage page;
    page.elements.push_back(make_el(ElementRole::button, "right", 300, 50, 40, 20));
    page.elements.push_back(make_el(ElementRole::button, "left", 100, 50, 40, 20));
    page.elements.push_back(make_el(ElementRole::button, "above", 200, 10, 40, 20));
    Observation obs = ground_observation(page, Viewport{1000, 1000}, {0, 0}, "s");
    REQUIRE(obs.elements.size() == 3);
    CHECK(obs.elements[0].label == "above");
    CHECK(obs.elements[1].label == "left");   // same row: smaller x first
    CHECK(obs.elements[2].label == "right");
    CHECK(obs.elements[0].tag_id == 1);
    CHECK(obs.elements[1].tag_id == 2);
    CHECK(obs.elements[2].tag_id == 3);
}

TEST_CASE("ground_observation filters invisible elements but keeps occluded ones") {
    RawPage page;
    page.elements.push_back(make_el(ElementRole::button, "offscreen", -500, -500, 40, 20));
    page.elements.push_back(make_el(ElementRole::button, "zero-area", 10, 10, 0, 0));
    page.elements.push_back(make_el(ElementRole::button, "covered", 100, 100, 50, 20));
    RawElement scrim = make_el(ElementRole::other, "backdrop", 0, 0, 1000, 1000);
    scrim.interactive = false;
    page.elements.push_back(scrim);
    page.elements.push_back(make_el(ElementRole::button, "dialog-ok", 400, 400, 80, 30));
    Observation obs = ground_observation(page, Viewport{1000, 1000}, {0, 0}, "s");
    REQUIRE(obs.elements.size() == 2);
    CHECK(obs.elements[0].label == "covered");
    CHECK(obs.elements[0].occluded);
    CHECK(obs.elements[1].label == "dialog-ok");
    CHECK_FALSE(obs.elements[1].occluded);
}

TEST_CASE("ground_observation empty page is a valid observation") {
    RawPage page;
    page.url = "https://blank.example/";
    Observation obs = ground_observation(page, Viewport{800, 600}, {0, 0}, "s");
    CHECK(obs.elements.empty());
    CHECK(obs.page_url == "https://blank.example/");
}

TEST_CASE("ground_observation is deterministic") {
    RawPage page;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> pos(0, 900);
    for (int i = 0; i < 40; ++i) {
        page.elements.push_back(
            make_el(ElementRole::link, "el", pos(rng), pos(rng), 50, 20));
    }
    Observation a = ground_observation(page, Viewport{1280, 800}, {0, 0}, "s");
    Observation b = ground_observation(page, Viewport{1280, 800}, {0, 0}, "s");
    CHECK(observation_to_json(a).dump() == observation_to_json(b).dump());
    // Tags are consecutive from 1.
    for (std::size_t i = 0; i < a.elements.size(); ++i) {
        CHECK(a.elements[i].tag_id == static_cast<int>(i + 1));
    }
}

TEST_CASE("bbox centers denormalize back inside the original pixel box") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> pos(0, 1200), sz(4, 300);
    for (int i = 0; i < 300; ++i) {
        Viewport vp{1280, 800};
        RawPage page;
        double x = pos(rng) * 0.9, y = pos(rng) * 0.6, w = sz(rng), h = sz(rng);
        page.elements.push_back(make_el(ElementRole::button, "b", x, y, w, h));
        Observation obs = ground_observation(page, vp, {0, 0}, "s");
        if (obs.elements.empty()) continue;  // fell outside the viewport
        const RectNorm& r = obs.elements[0].bbox_norm;
        PixelPoint center = denormalize_point(
            NormPoint{r.x + r.w / 2, r.y + r.h / 2}, vp);
        CHECK(center.x >= std::floor(x) - 1);
        CHECK(center.x <= std::ceil(x + w) + 1);
        CHECK(center.y >= std::floor(y) - 1);
        CHECK(center.y <= std::ceil(y + h) + 1);
    }
}

TEST_CASE("element_at picks the topmost hit and skips occluded elements") {
    RawPage page;
    page.elements.push_back(make_el(ElementRole::link, "base", 100, 100, 200, 200));
    page.elements.push_back(make_el(ElementRole::button, "floating", 150, 150, 50, 50));
    Observation obs = ground_observation(page, Viewport{1000, 1000}, {0, 0}, "s");
    const GroundedElement* hit = element_at(obs, NormPoint{160, 160});
    REQUIRE(hit != nullptr);
    CHECK(hit->label == "floating");
    const GroundedElement* edge = element_at(obs, NormPoint{110, 110});
    REQUIRE(edge != nullptr);
    CHECK(edge->label == "base");
    CHECK(element_at(obs, NormPoint{900, 900}) == nullptr);
}

TEST_CASE("observation JSON round-trip") {
    RawPage page;
    RawElement sel = make_el(ElementRole::select_box, "Group size", 10, 10, 80, 20);
    sel.options = {"2", "3", "4", "5"};
    sel.handle = "permit/3";
    page.elements.push_back(sel);
    page.url = "https://example.com/permit";
    Observation obs = ground_observation(page, Viewport{1280, 800}, {0, 16}, "obs-abc");
    Observation back = observation_from_json(observation_to_json(obs));
    CHECK(observation_to_json(back).dump() == observation_to_json(obs).dump());
    CHECK(back.elements[0].options == std::vector<std::string>{"2", "3", "4", "5"});
    CHECK(back.elements[0].handle == "permit/3");
}
