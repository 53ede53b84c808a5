#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace uxprobe {

/// Point in the normalized 1000x1000 action space, origin top-left.
struct NormPoint {
    int x = 0;
    int y = 0;
    bool operator==(const NormPoint&) const = default;
};

inline constexpr int kNormSpace = 1000;

enum class ScrollDirection { up, down, to_bottom };

enum class TerminateStatus { success, failure };

struct ClickAction {
    NormPoint at;
    bool operator==(const ClickAction&) const = default;
};

struct HoverAction {
    NormPoint at;
    bool operator==(const HoverAction&) const = default;
};

struct TypeAction {
    NormPoint at;
    std::string text;
    bool operator==(const TypeAction&) const = default;
};

struct ScrollAction {
    ScrollDirection direction = ScrollDirection::down;
    bool operator==(const ScrollAction&) const = default;
};

/// Native dropdown choice; dropdowns are never opened by clicking.
struct SelectAction {
    int tag_id = 0;
    std::string option_label;
    bool operator==(const SelectAction&) const = default;
};

struct TerminateAction {
    TerminateStatus status = TerminateStatus::failure;
    std::string reason;
    bool operator==(const TerminateAction&) const = default;
};

using Action =
    std::variant<ClickAction, HoverAction, TypeAction, ScrollAction, SelectAction, TerminateAction>;

/// Render an action in the textual grammar, e.g. `click(234, 550)`.
std::string action_to_grammar(const Action& action);

/// Parse the textual action grammar:
///
///   click(x, y) | hover(x, y) | type(x, y, "text")
///   scroll(up) | scroll(down) | scroll(bottom) | scroll_bottom
///   select(tag_id, "option label")
///   terminate(success|failure, "reason")
///
/// Coordinates must be integers within the 1000x1000 screen space. `goto` is
/// recognized and rejected explicitly. Throws ParseError / ValidationError.
Action parse_action(std::string_view text);

/// Lowercase verb for an action ("click", "scroll", ...).
std::string_view action_kind(const Action& action);

/// Signature used by loop detection: verb plus coordinates quantized to a
/// grid of `quantize_units`, plus the select target when applicable.
std::string action_signature(const Action& action, int quantize_units);

bool is_terminate(const Action& action);

}  // namespace uxprobe
