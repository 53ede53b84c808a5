#pragma once

#include "uxprobe/actions.hpp"
#include "uxprobe/grounding.hpp"
#include "uxprobe/util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace uxprobe::browser {

struct Capabilities {
    bool can_screenshot = false;
    bool can_dump_elements = false;
    bool can_dispatch_input = false;
    bool can_select_option = false;
};

struct DispatchOutcome {
    enum class Status { applied, failed };
    Status status = Status::applied;
    std::string reason;
    bool state_changed = false;
    std::int64_t latency_ms = 0;

    bool applied() const { return status == Status::applied; }
};

struct Snapshot {
    grounding::RawPage page;
    std::string screenshot;
    std::string screenshot_mime;
    grounding::Viewport viewport;
    grounding::PixelPoint scroll_offset;
};

/// One driver serves one session; calls are serialized by the session loop.
class Driver {
public:
    virtual ~Driver() = default;

    virtual Capabilities capabilities() const = 0;

    /// Navigate to the session's entry URL and settle.
    virtual void open(const std::string& url) = 0;

    /// Dispatch a (pre-validated) action. Pointer actions are dispatched at
    /// denormalized pixel coordinates; select actions use `target_handle`
    /// (the grounded element's driver handle). The outcome reports whether
    /// the page state changed.
    virtual DispatchOutcome act(const Action& action, const std::string& target_handle) = 0;

    /// Capture the element dump and screenshot after a single quiescence
    /// wait, so coordinates match the image.
    virtual Snapshot snapshot() = 0;
};

// -- simulated browser ---------------------------------------------------------

/// Element behavior in the simulated page graph.
struct SimBehavior {
    enum class Kind { none, navigate, mutate, dead, open_modal, close_modal, increment, select };
    Kind kind = Kind::none;
    std::string target;  // page id for navigate/open_modal
    std::string key;     // state key for mutate/increment/select, and for typed text
    std::string value;   // value written by mutate clicks
    int max = 0;         // increment cap (0 = unbounded)
};

struct SimElement {
    grounding::ElementRole role = grounding::ElementRole::other;
    std::string label;          // may contain {state_key} bindings
    std::string input_type;
    grounding::RectPx bbox;     // page coordinates
    std::vector<std::string> options;
    SimBehavior behavior;
    std::int64_t latency_ms = 0;  // simulated settle time recorded on dispatch
};

struct SimPage {
    std::string id;
    std::string url;
    bool modal = false;   // modal pages overlay their opener and do not scroll
    double height = 0;    // content height; defaults to the viewport height
    std::vector<SimElement> elements;
    bool fault_unresponsive = false;          // every interaction on this page is dead
    std::string fault_blocking_modal;         // modal page id auto-opened on entry
    std::vector<std::string> fault_state_desync;  // keys rendered from stale state
};

/// Deterministic page-graph state machine: (fixture, action sequence) fully
/// determines the state trajectory and all hashes.
class SimBrowser final : public Driver {
public:
    SimBrowser(std::vector<SimPage> pages, std::string start_page,
               std::map<std::string, std::string> initial_state, grounding::Viewport viewport,
               util::Clock& clock);

    static std::unique_ptr<SimBrowser> from_fixture_file(const std::filesystem::path& path,
                                                         util::Clock& clock,
                                                         grounding::Viewport viewport_override = {});

    Capabilities capabilities() const override;
    void open(const std::string& url) override;
    DispatchOutcome act(const Action& action, const std::string& target_handle) override;
    Snapshot snapshot() override;

    /// Canonical hash over (page, scroll, modal stack, state variables).
    std::uint64_t state_hash() const;
    const std::string& current_page_id() const { return current_page_; }

private:
    const SimPage& page(const std::string& id) const;
    std::string render_label(const SimPage& page, const std::string& label) const;
    void enter_page(const std::string& id);
    DispatchOutcome apply_behavior(const SimPage& owner, const SimElement& el,
                                   const Action& action);

    struct HitResult {
        const SimPage* page = nullptr;
        const SimElement* element = nullptr;
    };
    HitResult hit_test(grounding::PixelPoint px) const;
    const SimElement* element_by_handle(const std::string& handle, const SimPage** owner) const;
    std::string handle_for(const SimPage& page, const SimElement& el) const;

    std::vector<SimPage> pages_;
    std::string start_page_;
    std::map<std::string, std::string> initial_state_;

    std::string current_page_;
    std::vector<std::string> modal_stack_;
    std::map<std::string, std::string> state_;
    std::map<std::string, std::string> stale_state_;  // snapshot for desync rendering
    double scroll_y_ = 0;
    grounding::Viewport viewport_;
    util::Clock& clock_;
};

/// Parse the declarative page-graph schema (see docs/fixtures.md).
std::vector<SimPage> parse_sim_pages(const std::string& json_text, std::string& start_page,
                                     std::map<std::string, std::string>& initial_state,
                                     grounding::Viewport& viewport);

}  // namespace uxprobe::browser
