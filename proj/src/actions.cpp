#include "uxprobe/actions.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/util.hpp"

#include <cctype>
#include <optional>
#include <sstream>
#include <vector>

namespace uxprobe {

namespace {

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

struct ArgCursor {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    void expect(char c, std::string_view what) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c) {
            throw ParseError("expected '" + std::string(1, c) + "' " + std::string(what) +
                             " in action: " + std::string(text));
        }
        ++pos;
    }

    bool consume_if(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    int parse_int() {
        skip_ws();
        std::size_t start = pos;
        if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start || (pos == start + 1 && !std::isdigit(static_cast<unsigned char>(text[start]))))
            throw ParseError("expected integer in action: " + std::string(text));
        return std::stoi(std::string(text.substr(start, pos - start)));
    }

    std::string parse_string() {
        skip_ws();
        if (pos >= text.size() || text[pos] != '"')
            throw ParseError("expected quoted string in action: " + std::string(text));
        ++pos;
        std::string out;
        while (pos < text.size() && text[pos] != '"') {
            if (text[pos] == '\\' && pos + 1 < text.size()) ++pos;
            out.push_back(text[pos]);
            ++pos;
        }
        if (pos >= text.size())
            throw ParseError("unterminated string in action: " + std::string(text));
        ++pos;  // closing quote
        return out;
    }

    std::string parse_word() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (pos == start) throw ParseError("expected word in action: " + std::string(text));
        return std::string(text.substr(start, pos - start));
    }
};

NormPoint checked_point(int x, int y, std::string_view verb) {
    if (x < 0 || x > kNormSpace || y < 0 || y > kNormSpace) {
        throw ValidationError(std::string(verb) + " coordinates (" + std::to_string(x) + ", " +
                              std::to_string(y) + ") outside the 1000x1000 screen space");
    }
    return NormPoint{x, y};
}

}  // namespace

std::string action_to_grammar(const Action& action) {
    std::ostringstream out;
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ClickAction>) {
                out << "click(" << a.at.x << ", " << a.at.y << ")";
            } else if constexpr (std::is_same_v<T, HoverAction>) {
                out << "hover(" << a.at.x << ", " << a.at.y << ")";
            } else if constexpr (std::is_same_v<T, TypeAction>) {
                out << "type(" << a.at.x << ", " << a.at.y << ", " << quote(a.text) << ")";
            } else if constexpr (std::is_same_v<T, ScrollAction>) {
                switch (a.direction) {
                    case ScrollDirection::up: out << "scroll(up)"; break;
                    case ScrollDirection::down: out << "scroll(down)"; break;
                    case ScrollDirection::to_bottom: out << "scroll_bottom"; break;
                }
            } else if constexpr (std::is_same_v<T, SelectAction>) {
                out << "select(" << a.tag_id << ", " << quote(a.option_label) << ")";
            } else if constexpr (std::is_same_v<T, TerminateAction>) {
                out << "terminate(" << (a.status == TerminateStatus::success ? "success" : "failure")
                    << ", " << quote(a.reason) << ")";
            }
        },
        action);
    return out.str();
}

Action parse_action(std::string_view raw) {
    std::string text = util::trim(raw);
    if (text.empty()) throw ParseError("empty action");

    // Verb runs up to '(' or end of string.
    std::size_t paren = text.find('(');
    std::string verb = util::to_lower(util::trim(text.substr(0, paren)));

    if (verb == "goto" || verb == "navigate" || verb == "go_to") {
        throw ParseError("GOTO-style URL navigation is not permitted; interact with on-page "
                         "elements instead");
    }
    if (verb == "scroll_bottom") {
        return ScrollAction{ScrollDirection::to_bottom};
    }

    if (paren == std::string::npos) {
        throw ParseError("unrecognized action: " + text);
    }
    ArgCursor args{text, paren + 1};

    auto finish = [&](Action a) {
        args.expect(')', "to close the argument list");
        if (!args.at_end()) throw ParseError("trailing characters after action: " + text);
        return a;
    };

    if (verb == "click" || verb == "hover") {
        int x = args.parse_int();
        args.expect(',', "between coordinates");
        int y = args.parse_int();
        NormPoint p = checked_point(x, y, verb);
        if (verb == "click") return finish(ClickAction{p});
        return finish(HoverAction{p});
    }
    if (verb == "type") {
        int x = args.parse_int();
        args.expect(',', "between coordinates");
        int y = args.parse_int();
        args.expect(',', "before the text argument");
        std::string s = args.parse_string();
        return finish(TypeAction{checked_point(x, y, verb), s});
    }
    if (verb == "scroll") {
        std::string dir = util::to_lower(args.parse_word());
        if (dir == "up") return finish(ScrollAction{ScrollDirection::up});
        if (dir == "down") return finish(ScrollAction{ScrollDirection::down});
        if (dir == "bottom" || dir == "to_bottom")
            return finish(ScrollAction{ScrollDirection::to_bottom});
        throw ParseError("unknown scroll direction '" + dir + "' (use up, down, or bottom)");
    }
    if (verb == "select") {
        int tag = args.parse_int();
        if (tag < 1) throw ValidationError("select tag_id must be positive, got " + std::to_string(tag));
        args.expect(',', "before the option label");
        std::string label = args.parse_string();
        return finish(SelectAction{tag, label});
    }
    if (verb == "terminate") {
        std::string status = util::to_lower(args.parse_word());
        TerminateStatus ts;
        if (status == "success") {
            ts = TerminateStatus::success;
        } else if (status == "failure") {
            ts = TerminateStatus::failure;
        } else {
            throw ParseError("terminate status must be success or failure, got '" + status + "'");
        }
        std::string reason;
        if (args.consume_if(',')) reason = args.parse_string();
        return finish(TerminateAction{ts, reason});
    }
    throw ParseError("unrecognized action verb '" + verb + "'");
}

std::string_view action_kind(const Action& action) {
    return std::visit(
        [](const auto& a) -> std::string_view {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ClickAction>) return "click";
            else if constexpr (std::is_same_v<T, HoverAction>) return "hover";
            else if constexpr (std::is_same_v<T, TypeAction>) return "type";
            else if constexpr (std::is_same_v<T, ScrollAction>) return "scroll";
            else if constexpr (std::is_same_v<T, SelectAction>) return "select";
            else return "terminate";
        },
        action);
}

std::string action_signature(const Action& action, int quantize_units) {
    int q = quantize_units > 0 ? quantize_units : 1;
    auto cell = [q](NormPoint p) {
        return std::to_string(p.x / q) + "," + std::to_string(p.y / q);
    };
    return std::visit(
        [&](const auto& a) -> std::string {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ClickAction>) return "click@" + cell(a.at);
            else if constexpr (std::is_same_v<T, HoverAction>) return "hover@" + cell(a.at);
            else if constexpr (std::is_same_v<T, TypeAction>) return "type@" + cell(a.at);
            else if constexpr (std::is_same_v<T, ScrollAction>) {
                switch (a.direction) {
                    case ScrollDirection::up: return "scroll:up";
                    case ScrollDirection::down: return "scroll:down";
                    default: return "scroll:bottom";
                }
            } else if constexpr (std::is_same_v<T, SelectAction>)
                return "select#" + std::to_string(a.tag_id) + ":" + a.option_label;
            else
                return "terminate";
        },
        action);
}

bool is_terminate(const Action& action) {
    return std::holds_alternative<TerminateAction>(action);
}

}  // namespace uxprobe
