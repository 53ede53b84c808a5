#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace uxprobe::util {

// -- hashing ----------------------------------------------------------------

/// 64-bit FNV-1a. Used for cheap deterministic state hashes.
std::uint64_t fnv1a64(std::string_view data);

/// SHA-1 digest as lowercase hex. Used for content-addressed observation
/// storage and the WebSocket handshake.
std::string sha1_hex(std::string_view data);

/// SHA-1 digest as raw 20 bytes.
std::string sha1_raw(std::string_view data);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view data);

// -- strings ----------------------------------------------------------------

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Collapse whitespace runs to single spaces and trim the ends.
std::string collapse_ws(std::string_view s);

/// Number of whitespace-separated words. Hyphenated compounds count as one.
std::size_t word_count(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Fixed-point decimal rendering, e.g. format_fixed(4.4286, 2) == "4.43".
std::string format_fixed(double value, int decimals);

// -- time -------------------------------------------------------------------

/// Milliseconds since the Unix epoch rendered as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string iso8601_ms(std::int64_t epoch_ms);

/// Wall/virtual clock seam. Simulated sessions use a DeterministicClock so
/// replays produce byte-identical logs.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_ms() override;
    void sleep_ms(std::int64_t ms) override;
};

/// Starts at a fixed origin and only advances via sleep_ms and a per-query
/// tick, so the timestamp sequence is a pure function of the call sequence.
class DeterministicClock final : public Clock {
public:
    explicit DeterministicClock(std::int64_t origin_ms = 0, std::int64_t tick_ms = 1)
        : now_(origin_ms), tick_(tick_ms) {}
    std::int64_t now_ms() override {
        std::int64_t t = now_;
        now_ += tick_;
        return t;
    }
    void sleep_ms(std::int64_t ms) override { now_ += ms; }

private:
    std::int64_t now_;
    std::int64_t tick_;
};

// -- filesystem ---------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);

/// Write via a sibling temp file and rename, so readers never observe a
/// half-written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// -- urls ---------------------------------------------------------------------

/// Syntactic check for an absolute URL: "<scheme>://<non-empty rest>" with a
/// well-formed scheme and no whitespace.
bool is_absolute_url(std::string_view url);

}  // namespace uxprobe::util
