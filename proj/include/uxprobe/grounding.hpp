#pragma once

#include "uxprobe/actions.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace uxprobe::grounding {

enum class ElementRole { button, link, input, select_box, checkbox, other };

std::string_view role_label(ElementRole r);
ElementRole role_from_label(std::string_view s);

struct Viewport {
    int width = 0;
    int height = 0;
    bool operator==(const Viewport&) const = default;
};

/// Pixel-space point (viewport coordinates, origin top-left).
struct PixelPoint {
    int x = 0;
    int y = 0;
    bool operator==(const PixelPoint&) const = default;
};

struct RectPx {
    double x = 0, y = 0, w = 0, h = 0;
};

struct RectNorm {
    int x = 0, y = 0, w = 0, h = 0;
    bool operator==(const RectNorm&) const = default;
};

/// One element as reported by a driver dump, in viewport-relative pixels.
/// Dump order is stacking order: later entries paint above earlier ones.
struct RawElement {
    ElementRole role = ElementRole::other;
    std::string label;
    std::string input_type;  // "password", "text", ... for inputs; empty otherwise
    RectPx bbox;
    std::vector<std::string> options;  // native option labels for selects
    bool interactive = true;           // non-interactive entries (e.g. modal scrims) only occlude
    std::string handle;                // driver-opaque id for targeted dispatch
};

struct RawPage {
    std::string url;
    std::vector<RawElement> elements;
};

/// A tagged interactive element in the normalized 1000x1000 space.
struct GroundedElement {
    int tag_id = 0;
    ElementRole role = ElementRole::other;
    std::string label;
    std::string input_type;
    RectNorm bbox_norm;
    bool occluded = false;
    std::vector<std::string> options;
    std::string handle;
    int stack_index = 0;  // position in the original dump (higher paints above)
};

struct Observation {
    std::string screenshot_ref;
    std::vector<GroundedElement> elements;
    Viewport viewport;
    PixelPoint scroll_offset;
    std::string page_url;
};

/// Map a viewport pixel to the 1000x1000 action space (nearest integer,
/// clamped). Throws ValidationError on a non-positive viewport.
NormPoint normalize_point(double px, double py, Viewport viewport);

/// Inverse mapping, nearest integer pixel.
PixelPoint denormalize_point(NormPoint p, Viewport viewport);

/// Filter, sort, and tag a raw element dump:
///  - keep interactive elements that intersect the viewport with >= 1 px^2
///    of area;
///  - flag (but keep) elements fully covered by a higher element;
///  - sort top-to-bottom then left-to-right and assign tags 1..N.
/// Deterministic: identical dumps produce identical observations.
Observation ground_observation(const RawPage& raw, Viewport viewport, PixelPoint scroll_offset,
                               const std::string& screenshot_ref);

/// Topmost non-occluded element whose normalized box contains `p`, if any.
const GroundedElement* element_at(const Observation& obs, NormPoint p);

const GroundedElement* element_by_tag(const Observation& obs, int tag_id);

/// Plain-text side table listing tagged elements for prompt injection.
std::string render_element_table(const Observation& obs);

nlohmann::json observation_to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);

}  // namespace uxprobe::grounding
