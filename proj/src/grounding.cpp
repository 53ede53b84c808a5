#include "uxprobe/grounding.hpp"

#include "uxprobe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace uxprobe::grounding {

std::string_view role_label(ElementRole r) {
    switch (r) {
        case ElementRole::button: return "button";
        case ElementRole::link: return "link";
        case ElementRole::input: return "input";
        case ElementRole::select_box: return "select";
        case ElementRole::checkbox: return "checkbox";
        case ElementRole::other: return "other";
    }
    return "other";
}

ElementRole role_from_label(std::string_view s) {
    if (s == "button") return ElementRole::button;
    if (s == "link") return ElementRole::link;
    if (s == "input") return ElementRole::input;
    if (s == "select") return ElementRole::select_box;
    if (s == "checkbox") return ElementRole::checkbox;
    if (s == "other") return ElementRole::other;
    throw ValidationError("unknown element role: " + std::string(s));
}

NormPoint normalize_point(double px, double py, Viewport viewport) {
    if (viewport.width <= 0 || viewport.height <= 0) {
        throw ValidationError("viewport dimensions must be positive");
    }
    auto to_norm = [](double v, int extent) {
        long n = std::lround(v * static_cast<double>(kNormSpace) / static_cast<double>(extent));
        return static_cast<int>(std::clamp<long>(n, 0, kNormSpace));
    };
    return NormPoint{to_norm(px, viewport.width), to_norm(py, viewport.height)};
}

PixelPoint denormalize_point(NormPoint p, Viewport viewport) {
    if (viewport.width <= 0 || viewport.height <= 0) {
        throw ValidationError("viewport dimensions must be positive");
    }
    auto to_px = [](int n, int extent) {
        return static_cast<int>(
            std::lround(static_cast<double>(n) * static_cast<double>(extent) / kNormSpace));
    };
    return PixelPoint{to_px(p.x, viewport.width), to_px(p.y, viewport.height)};
}

namespace {

bool fully_contains(const RectPx& outer, const RectPx& inner) {
    return outer.x <= inner.x && outer.y <= inner.y && outer.x + outer.w >= inner.x + inner.w &&
           outer.y + outer.h >= inner.y + inner.h;
}

double visible_area(const RectPx& r, Viewport vp) {
    double x0 = std::max(r.x, 0.0);
    double y0 = std::max(r.y, 0.0);
    double x1 = std::min(r.x + r.w, static_cast<double>(vp.width));
    double y1 = std::min(r.y + r.h, static_cast<double>(vp.height));
    if (x1 <= x0 || y1 <= y0) return 0.0;
    return (x1 - x0) * (y1 - y0);
}

RectNorm normalize_rect(const RectPx& r, Viewport vp) {
    NormPoint tl = normalize_point(r.x, r.y, vp);
    NormPoint br = normalize_point(r.x + r.w, r.y + r.h, vp);
    return RectNorm{tl.x, tl.y, br.x - tl.x, br.y - tl.y};
}

}  // namespace

Observation ground_observation(const RawPage& raw, Viewport viewport, PixelPoint scroll_offset,
                               const std::string& screenshot_ref) {
    if (viewport.width <= 0 || viewport.height <= 0) {
        throw ValidationError("viewport dimensions must be positive");
    }

    struct Candidate {
        const RawElement* el;
        int stack_index;
        bool occluded;
    };
    std::vector<Candidate> kept;
    for (std::size_t i = 0; i < raw.elements.size(); ++i) {
        const RawElement& el = raw.elements[i];
        if (!el.interactive) continue;
        if (visible_area(el.bbox, viewport) < 1.0) continue;
        bool occluded = false;
        for (std::size_t j = i + 1; j < raw.elements.size(); ++j) {
            if (fully_contains(raw.elements[j].bbox, el.bbox)) {
                occluded = true;
                break;
            }
        }
        kept.push_back(Candidate{&el, static_cast<int>(i), occluded});
    }

    std::stable_sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
        if (a.el->bbox.y != b.el->bbox.y) return a.el->bbox.y < b.el->bbox.y;
        return a.el->bbox.x < b.el->bbox.x;
    });

    Observation obs;
    obs.screenshot_ref = screenshot_ref;
    obs.viewport = viewport;
    obs.scroll_offset = scroll_offset;
    obs.page_url = raw.url;
    obs.elements.reserve(kept.size());
    int tag = 1;
    for (const Candidate& c : kept) {
        GroundedElement g;
        g.tag_id = tag++;
        g.role = c.el->role;
        g.label = c.el->label;
        g.input_type = c.el->input_type;
        g.bbox_norm = normalize_rect(c.el->bbox, viewport);
        g.occluded = c.occluded;
        g.options = c.el->options;
        g.handle = c.el->handle;
        g.stack_index = c.stack_index;
        obs.elements.push_back(std::move(g));
    }
    return obs;
}

const GroundedElement* element_at(const Observation& obs, NormPoint p) {
    const GroundedElement* best = nullptr;
    for (const GroundedElement& el : obs.elements) {
        if (el.occluded) continue;
        const RectNorm& r = el.bbox_norm;
        if (p.x < r.x || p.x > r.x + r.w || p.y < r.y || p.y > r.y + r.h) continue;
        if (!best || el.stack_index > best->stack_index) best = &el;
    }
    return best;
}

const GroundedElement* element_by_tag(const Observation& obs, int tag_id) {
    for (const GroundedElement& el : obs.elements) {
        if (el.tag_id == tag_id) return &el;
    }
    return nullptr;
}

std::string render_element_table(const Observation& obs) {
    std::ostringstream out;
    for (const GroundedElement& el : obs.elements) {
        out << "[" << el.tag_id << "] " << role_label(el.role) << " \"" << el.label << "\""
            << " bbox=(" << el.bbox_norm.x << "," << el.bbox_norm.y << "," << el.bbox_norm.w << ","
            << el.bbox_norm.h << ")";
        if (!el.options.empty()) {
            out << " options=[";
            for (std::size_t i = 0; i < el.options.size(); ++i) {
                if (i) out << ", ";
                out << "\"" << el.options[i] << "\"";
            }
            out << "]";
        }
        if (el.occluded) out << " (occluded)";
        out << "\n";
    }
    if (obs.elements.empty()) out << "(no interactive elements visible)\n";
    return out.str();
}

nlohmann::json observation_to_json(const Observation& obs) {
    nlohmann::json elems = nlohmann::json::array();
    for (const GroundedElement& el : obs.elements) {
        nlohmann::json e{{"tag_id", el.tag_id},
                         {"role", std::string(role_label(el.role))},
                         {"label", el.label},
                         {"bbox", {el.bbox_norm.x, el.bbox_norm.y, el.bbox_norm.w, el.bbox_norm.h}},
                         {"occluded", el.occluded},
                         {"stack_index", el.stack_index}};
        if (!el.input_type.empty()) e["input_type"] = el.input_type;
        if (!el.options.empty()) e["options"] = el.options;
        if (!el.handle.empty()) e["handle"] = el.handle;
        elems.push_back(std::move(e));
    }
    return nlohmann::json{{"schema_version", 1},
                          {"page_url", obs.page_url},
                          {"viewport", {obs.viewport.width, obs.viewport.height}},
                          {"scroll", {obs.scroll_offset.x, obs.scroll_offset.y}},
                          {"screenshot_ref", obs.screenshot_ref},
                          {"elements", std::move(elems)}};
}

Observation observation_from_json(const nlohmann::json& j) {
    Observation obs;
    obs.page_url = j.at("page_url").get<std::string>();
    obs.viewport = Viewport{j.at("viewport").at(0).get<int>(), j.at("viewport").at(1).get<int>()};
    obs.scroll_offset = PixelPoint{j.at("scroll").at(0).get<int>(), j.at("scroll").at(1).get<int>()};
    obs.screenshot_ref = j.at("screenshot_ref").get<std::string>();
    for (const auto& e : j.at("elements")) {
        GroundedElement g;
        g.tag_id = e.at("tag_id").get<int>();
        g.role = role_from_label(e.at("role").get<std::string>());
        g.label = e.at("label").get<std::string>();
        g.bbox_norm = RectNorm{e.at("bbox").at(0).get<int>(), e.at("bbox").at(1).get<int>(),
                               e.at("bbox").at(2).get<int>(), e.at("bbox").at(3).get<int>()};
        g.occluded = e.at("occluded").get<bool>();
        g.stack_index = e.value("stack_index", 0);
        g.input_type = e.value("input_type", std::string{});
        if (e.contains("options")) g.options = e.at("options").get<std::vector<std::string>>();
        g.handle = e.value("handle", std::string{});
        obs.elements.push_back(std::move(g));
    }
    return obs;
}

}  // namespace uxprobe::grounding
