#include "uxprobe/browser.hpp"

#include "uxprobe/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace uxprobe::browser {

using grounding::ElementRole;
using grounding::PixelPoint;
using grounding::RawElement;
using grounding::RawPage;
using grounding::Viewport;
using nlohmann::json;

namespace {

SimBehavior::Kind behavior_kind_from_label(std::string_view s) {
    if (s == "none") return SimBehavior::Kind::none;
    if (s == "navigate") return SimBehavior::Kind::navigate;
    if (s == "mutate") return SimBehavior::Kind::mutate;
    if (s == "dead") return SimBehavior::Kind::dead;
    if (s == "open_modal") return SimBehavior::Kind::open_modal;
    if (s == "close_modal") return SimBehavior::Kind::close_modal;
    if (s == "increment") return SimBehavior::Kind::increment;
    if (s == "select") return SimBehavior::Kind::select;
    throw FixtureError("unknown element behavior kind '" + std::string(s) + "'");
}

}  // namespace

std::vector<SimPage> parse_sim_pages(const std::string& json_text, std::string& start_page,
                                     std::map<std::string, std::string>& initial_state,
                                     Viewport& viewport) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw FixtureError(std::string("cannot parse page-graph fixture: ") + e.what());
    }
    int version = j.value("schema_version", 0);
    if (version != 1) {
        throw FixtureError("unsupported page-graph schema version " + std::to_string(version));
    }
    start_page = j.at("start_page").get<std::string>();
    if (j.contains("viewport")) {
        viewport = Viewport{j.at("viewport").at(0).get<int>(), j.at("viewport").at(1).get<int>()};
    }
    initial_state.clear();
    if (j.contains("state")) {
        for (const auto& [k, v] : j.at("state").items()) {
            initial_state[k] = v.get<std::string>();
        }
    }

    std::vector<SimPage> pages;
    for (const auto& pj : j.at("pages")) {
        SimPage page;
        page.id = pj.at("id").get<std::string>();
        page.url = pj.value("url", std::string{});
        page.modal = pj.value("modal", false);
        page.height = pj.value("height", 0.0);
        if (pj.contains("faults")) {
            const json& f = pj.at("faults");
            page.fault_unresponsive = f.value("unresponsive", false);
            page.fault_blocking_modal = f.value("blocking_modal", std::string{});
            if (f.contains("state_desync")) {
                page.fault_state_desync = f.at("state_desync").get<std::vector<std::string>>();
            }
        }
        for (const auto& ej : pj.at("elements")) {
            SimElement el;
            el.role = grounding::role_from_label(ej.value("role", std::string("other")));
            el.label = ej.value("label", std::string{});
            el.input_type = ej.value("input_type", std::string{});
            const auto& bb = ej.at("bbox");
            el.bbox = grounding::RectPx{bb.at(0).get<double>(), bb.at(1).get<double>(),
                                        bb.at(2).get<double>(), bb.at(3).get<double>()};
            if (ej.contains("options")) {
                el.options = ej.at("options").get<std::vector<std::string>>();
            }
            el.latency_ms = ej.value("latency_ms", std::int64_t{0});
            if (ej.contains("behavior")) {
                const json& bj = ej.at("behavior");
                el.behavior.kind = behavior_kind_from_label(bj.at("kind").get<std::string>());
                el.behavior.target = bj.value("target", std::string{});
                el.behavior.key = bj.value("key", std::string{});
                el.behavior.value = bj.value("value", std::string{});
                el.behavior.max = bj.value("max", 0);
            }
            page.elements.push_back(std::move(el));
        }
        pages.push_back(std::move(page));
    }

    // Every navigation/modal target must exist in the graph.
    auto known = [&pages](const std::string& id) {
        return std::any_of(pages.begin(), pages.end(),
                           [&id](const SimPage& p) { return p.id == id; });
    };
    if (!known(start_page)) throw FixtureError("start_page '" + start_page + "' not in page graph");
    for (const SimPage& p : pages) {
        if (!p.fault_blocking_modal.empty() && !known(p.fault_blocking_modal)) {
            throw FixtureError("page '" + p.id + "' opens unknown modal '" +
                               p.fault_blocking_modal + "'");
        }
        for (const SimElement& el : p.elements) {
            if ((el.behavior.kind == SimBehavior::Kind::navigate ||
                 el.behavior.kind == SimBehavior::Kind::open_modal) &&
                !known(el.behavior.target)) {
                throw FixtureError("element '" + el.label + "' on page '" + p.id +
                                   "' targets unknown page '" + el.behavior.target + "'");
            }
        }
    }
    return pages;
}

SimBrowser::SimBrowser(std::vector<SimPage> pages, std::string start_page,
                       std::map<std::string, std::string> initial_state, Viewport viewport,
                       util::Clock& clock)
    : pages_(std::move(pages)),
      start_page_(std::move(start_page)),
      initial_state_(std::move(initial_state)),
      viewport_(viewport),
      clock_(clock) {
    if (viewport_.width <= 0 || viewport_.height <= 0) {
        throw DriverError("sim viewport must be positive");
    }
    state_ = initial_state_;
    enter_page(start_page_);
}

std::unique_ptr<SimBrowser> SimBrowser::from_fixture_file(const std::filesystem::path& path,
                                                          util::Clock& clock,
                                                          Viewport viewport_override) {
    std::string start;
    std::map<std::string, std::string> state;
    Viewport vp{1280, 800};
    std::vector<SimPage> pages = parse_sim_pages(util::read_file(path), start, state, vp);
    if (viewport_override.width > 0 && viewport_override.height > 0) vp = viewport_override;
    return std::make_unique<SimBrowser>(std::move(pages), std::move(start), std::move(state), vp,
                                        clock);
}

Capabilities SimBrowser::capabilities() const {
    return Capabilities{true, true, true, true};
}

const SimPage& SimBrowser::page(const std::string& id) const {
    for (const SimPage& p : pages_) {
        if (p.id == id) return p;
    }
    throw DriverError("unknown sim page '" + id + "'");
}

void SimBrowser::enter_page(const std::string& id) {
    const SimPage& p = page(id);
    current_page_ = id;
    modal_stack_.clear();
    scroll_y_ = 0;
    stale_state_ = state_;  // desync-bound labels freeze at page entry
    if (!p.fault_blocking_modal.empty()) {
        modal_stack_.push_back(p.fault_blocking_modal);
    }
}

void SimBrowser::open(const std::string& url) {
    state_ = initial_state_;
    if (url.empty() || page(start_page_).url == url) {
        enter_page(start_page_);
        return;
    }
    for (const SimPage& p : pages_) {
        if (p.url == url) {
            enter_page(p.id);
            return;
        }
    }
    throw DriverError("fixture has no page for URL '" + url + "'");
}

std::string SimBrowser::render_label(const SimPage& pg, const std::string& label) const {
    std::string out = label;
    std::size_t pos = 0;
    while ((pos = out.find('{', pos)) != std::string::npos) {
        std::size_t end = out.find('}', pos);
        if (end == std::string::npos) break;
        std::string key = out.substr(pos + 1, end - pos - 1);
        bool stale = std::find(pg.fault_state_desync.begin(), pg.fault_state_desync.end(), key) !=
                     pg.fault_state_desync.end();
        const auto& source = stale ? stale_state_ : state_;
        auto it = source.find(key);
        std::string value = it == source.end() ? "" : it->second;
        out.replace(pos, end - pos + 1, value);
        pos += value.size();
    }
    return out;
}

std::string SimBrowser::handle_for(const SimPage& pg, const SimElement& el) const {
    auto idx = static_cast<std::size_t>(&el - pg.elements.data());
    return pg.id + "/" + std::to_string(idx);
}

const SimElement* SimBrowser::element_by_handle(const std::string& handle,
                                                const SimPage** owner) const {
    std::size_t slash = handle.rfind('/');
    if (slash == std::string::npos) return nullptr;
    std::string page_id = handle.substr(0, slash);
    std::size_t idx = std::stoul(handle.substr(slash + 1));
    for (const SimPage& p : pages_) {
        if (p.id == page_id && idx < p.elements.size()) {
            if (owner) *owner = &p;
            return &p.elements[idx];
        }
    }
    return nullptr;
}

SimBrowser::HitResult SimBrowser::hit_test(PixelPoint px) const {
    // Topmost modal first; its scrim swallows clicks outside its elements.
    for (auto it = modal_stack_.rbegin(); it != modal_stack_.rend(); ++it) {
        const SimPage& m = page(*it);
        for (auto el = m.elements.rbegin(); el != m.elements.rend(); ++el) {
            const auto& b = el->bbox;
            if (px.x >= b.x && px.x <= b.x + b.w && px.y >= b.y && px.y <= b.y + b.h) {
                return HitResult{&m, &*el};
            }
        }
        return HitResult{&m, nullptr};  // hit the scrim
    }
    const SimPage& p = page(current_page_);
    for (auto el = p.elements.rbegin(); el != p.elements.rend(); ++el) {
        double y = el->bbox.y - scroll_y_;
        if (px.x >= el->bbox.x && px.x <= el->bbox.x + el->bbox.w && px.y >= y &&
            px.y <= y + el->bbox.h) {
            return HitResult{&p, &*el};
        }
    }
    return HitResult{&p, nullptr};
}

std::uint64_t SimBrowser::state_hash() const {
    std::ostringstream canon;
    canon << current_page_ << "|scroll=" << static_cast<long long>(scroll_y_) << "|modals=";
    for (const std::string& m : modal_stack_) canon << m << ",";
    canon << "|state=";
    for (const auto& [k, v] : state_) canon << k << "=" << v << ";";
    return util::fnv1a64(canon.str());
}

DispatchOutcome SimBrowser::apply_behavior(const SimPage& owner, const SimElement& el,
                                           const Action& action) {
    DispatchOutcome out;
    out.latency_ms = el.latency_ms;
    if (owner.fault_unresponsive) return out;  // applied, nothing happens

    switch (el.behavior.kind) {
        case SimBehavior::Kind::none:
        case SimBehavior::Kind::dead:
            break;
        case SimBehavior::Kind::navigate:
            enter_page(el.behavior.target);
            break;
        case SimBehavior::Kind::open_modal:
            modal_stack_.push_back(el.behavior.target);
            break;
        case SimBehavior::Kind::close_modal:
            if (!modal_stack_.empty()) modal_stack_.pop_back();
            break;
        case SimBehavior::Kind::mutate: {
            std::string value = el.behavior.value;
            if (const auto* type_action = std::get_if<TypeAction>(&action)) {
                value = type_action->text;
            }
            if (!el.behavior.key.empty()) state_[el.behavior.key] = value;
            break;
        }
        case SimBehavior::Kind::increment: {
            int current = 0;
            auto it = state_.find(el.behavior.key);
            if (it != state_.end() && !it->second.empty()) current = std::stoi(it->second);
            int next = current + 1;
            if (el.behavior.max > 0 && next > el.behavior.max) break;  // capped: no change
            state_[el.behavior.key] = std::to_string(next);
            break;
        }
        case SimBehavior::Kind::select: {
            const auto* sel = std::get_if<SelectAction>(&action);
            if (sel == nullptr) break;  // clicking a dropdown does nothing
            if (std::find(el.options.begin(), el.options.end(), sel->option_label) ==
                el.options.end()) {
                out.status = DispatchOutcome::Status::failed;
                out.reason = "option '" + sel->option_label + "' not in the element's option list";
                return out;
            }
            if (!el.behavior.key.empty()) state_[el.behavior.key] = sel->option_label;
            break;
        }
    }
    return out;
}

DispatchOutcome SimBrowser::act(const Action& action, const std::string& target_handle) {
    std::uint64_t before = state_hash();
    DispatchOutcome out;

    if (std::holds_alternative<TerminateAction>(action)) {
        out.status = DispatchOutcome::Status::failed;
        out.reason = "terminate is not a dispatchable browser action";
        return out;
    }

    if (const auto* scroll = std::get_if<ScrollAction>(&action)) {
        const SimPage& p = page(current_page_);
        double content_h = std::max(p.height, static_cast<double>(viewport_.height));
        double max_scroll = content_h - viewport_.height;
        double step = viewport_.height * 0.8;
        switch (scroll->direction) {
            case ScrollDirection::up: scroll_y_ = std::max(0.0, scroll_y_ - step); break;
            case ScrollDirection::down: scroll_y_ = std::min(max_scroll, scroll_y_ + step); break;
            case ScrollDirection::to_bottom: scroll_y_ = max_scroll; break;
        }
    } else if (const auto* sel = std::get_if<SelectAction>(&action)) {
        const SimPage* owner = nullptr;
        const SimElement* el = element_by_handle(target_handle, &owner);
        if (el == nullptr) {
            out.status = DispatchOutcome::Status::failed;
            out.reason = "select target handle '" + target_handle + "' not found";
            return out;
        }
        out = apply_behavior(*owner, *el, Action{*sel});
    } else {
        NormPoint at{};
        if (const auto* c = std::get_if<ClickAction>(&action)) at = c->at;
        if (const auto* h = std::get_if<HoverAction>(&action)) at = h->at;
        if (const auto* t = std::get_if<TypeAction>(&action)) at = t->at;
        PixelPoint px = grounding::denormalize_point(at, viewport_);
        HitResult hit = hit_test(px);
        if (hit.element != nullptr && !std::holds_alternative<HoverAction>(action)) {
            out = apply_behavior(*hit.page, *hit.element, action);
        }
    }

    clock_.sleep_ms(out.latency_ms);
    out.state_changed = state_hash() != before;
    return out;
}

Snapshot SimBrowser::snapshot() {
    const SimPage& p = page(current_page_);
    Snapshot snap;
    snap.viewport = viewport_;
    snap.scroll_offset = PixelPoint{0, static_cast<int>(scroll_y_)};
    snap.page.url = p.url;

    bool modal_open = !modal_stack_.empty();
    for (const SimElement& el : p.elements) {
        RawElement raw;
        raw.role = el.role;
        raw.label = render_label(p, el.label);
        raw.input_type = el.input_type;
        raw.bbox = grounding::RectPx{el.bbox.x, el.bbox.y - scroll_y_, el.bbox.w, el.bbox.h};
        raw.options = el.options;
        raw.handle = handle_for(p, el);
        snap.page.elements.push_back(std::move(raw));
    }
    if (modal_open) {
        // Scrim covers the whole viewport so grounding flags the page beneath.
        RawElement scrim;
        scrim.role = ElementRole::other;
        scrim.label = "modal backdrop";
        scrim.bbox = grounding::RectPx{0, 0, static_cast<double>(viewport_.width),
                                       static_cast<double>(viewport_.height)};
        scrim.interactive = false;
        snap.page.elements.push_back(std::move(scrim));
        for (const std::string& mid : modal_stack_) {
            const SimPage& m = page(mid);
            for (const SimElement& el : m.elements) {
                RawElement raw;
                raw.role = el.role;
                raw.label = render_label(m, el.label);
                raw.input_type = el.input_type;
                raw.bbox = el.bbox;  // modals are viewport-fixed
                raw.options = el.options;
                raw.handle = handle_for(m, el);
                snap.page.elements.push_back(std::move(raw));
            }
        }
    }

    std::ostringstream shot;
    shot << "SIMSHOT v1\npage=" << current_page_ << "\nscroll=" << static_cast<long long>(scroll_y_)
         << "\nhash=" << std::hex << state_hash() << "\n";
    snap.screenshot = shot.str();
    snap.screenshot_mime = "text/plain";
    return snap;
}

}  // namespace uxprobe::browser
