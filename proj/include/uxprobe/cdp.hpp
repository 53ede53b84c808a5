#pragma once

#include "uxprobe/browser.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace uxprobe::cdp {

// -- WebSocket framing (RFC 6455), exposed for unit tests ----------------------

struct WsFrame {
    std::uint8_t opcode = 0x1;  // 0x1 text, 0x2 binary, 0x8 close, 0x9 ping, 0xA pong
    bool fin = true;
    std::string payload;
};

/// Encode one frame. Client frames must be masked with a 4-byte key.
std::string ws_encode_frame(const WsFrame& frame, bool mask, std::uint32_t mask_key);

/// Try to decode one frame from the head of `buffer`. Returns the frame and
/// sets `consumed`, or nullopt when more bytes are needed.
std::optional<WsFrame> ws_decode_frame(const std::string& buffer, std::size_t& consumed);

/// Sec-WebSocket-Accept value for a handshake key.
std::string ws_accept_key(const std::string& client_key);

// -- blocking WebSocket client over a local TCP socket --------------------------

class WsClient {
public:
    WsClient();
    ~WsClient();
    WsClient(const WsClient&) = delete;
    WsClient& operator=(const WsClient&) = delete;

    /// Connect and upgrade. `host` is an IP or name resolvable locally.
    void connect(const std::string& host, int port, const std::string& path, int timeout_ms);
    void send_text(const std::string& payload);
    /// Next text payload; transparently answers pings and reassembles
    /// fragmented messages. Throws DriverError on timeout or close.
    std::string recv_text(int timeout_ms);
    void close();
    bool connected() const { return fd_ >= 0; }

private:
    void send_raw(const std::string& bytes);
    bool fill_buffer(int timeout_ms);

    int fd_ = -1;
    std::string buffer_;
    std::uint64_t mask_state_;
};

// -- the driver -----------------------------------------------------------------

struct CdpOptions {
    std::string endpoint = "http://127.0.0.1:9222";  // DevTools HTTP endpoint
    grounding::Viewport viewport{1280, 800};
    int navigation_timeout_ms = 30000;
    int command_timeout_ms = 15000;
    int settle_ms = 300;    // quiescence: no DOM change for this long...
    int settle_cap_ms = 10000;  // ...capped here
};

/// Browser driver speaking the remote-debugging wire protocol over a local
/// socket. Optional component: nothing in the primary test suite requires a
/// running browser.
class CdpBrowser final : public browser::Driver {
public:
    explicit CdpBrowser(CdpOptions options);
    ~CdpBrowser() override;

    browser::Capabilities capabilities() const override;
    void open(const std::string& url) override;
    browser::DispatchOutcome act(const Action& action, const std::string& target_handle) override;
    browser::Snapshot snapshot() override;

private:
    void connect_if_needed();
    nlohmann::json send_command(const std::string& method, nlohmann::json params);
    std::string evaluate(const std::string& expression);
    std::string dom_hash();
    /// Wait until the DOM hash is stable for settle_ms (capped); returns the
    /// measured settle time.
    std::int64_t quiesce();

    CdpOptions options_;
    std::unique_ptr<WsClient> ws_;
    int next_id_ = 1;
};

}  // namespace uxprobe::cdp
