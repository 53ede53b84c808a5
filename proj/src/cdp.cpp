#include "uxprobe/cdp.hpp"

#include "uxprobe/errors.hpp"
#include "uxprobe/util.hpp"

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace uxprobe::cdp {

using nlohmann::json;

// -- framing -----------------------------------------------------------------

std::string ws_encode_frame(const WsFrame& frame, bool mask, std::uint32_t mask_key) {
    std::string out;
    out.push_back(static_cast<char>((frame.fin ? 0x80 : 0x00) | (frame.opcode & 0x0F)));
    std::size_t len = frame.payload.size();
    std::uint8_t mask_bit = mask ? 0x80 : 0x00;
    if (len < 126) {
        out.push_back(static_cast<char>(mask_bit | static_cast<std::uint8_t>(len)));
    } else if (len <= 0xFFFF) {
        out.push_back(static_cast<char>(mask_bit | 126));
        out.push_back(static_cast<char>((len >> 8) & 0xFF));
        out.push_back(static_cast<char>(len & 0xFF));
    } else {
        out.push_back(static_cast<char>(mask_bit | 127));
        for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((len >> (i * 8)) & 0xFF));
    }
    if (mask) {
        char key[4] = {static_cast<char>((mask_key >> 24) & 0xFF),
                       static_cast<char>((mask_key >> 16) & 0xFF),
                       static_cast<char>((mask_key >> 8) & 0xFF),
                       static_cast<char>(mask_key & 0xFF)};
        out.append(key, 4);
        for (std::size_t i = 0; i < len; ++i) {
            out.push_back(static_cast<char>(frame.payload[i] ^ key[i % 4]));
        }
    } else {
        out += frame.payload;
    }
    return out;
}

std::optional<WsFrame> ws_decode_frame(const std::string& buffer, std::size_t& consumed) {
    if (buffer.size() < 2) return std::nullopt;
    std::uint8_t b0 = static_cast<std::uint8_t>(buffer[0]);
    std::uint8_t b1 = static_cast<std::uint8_t>(buffer[1]);
    bool masked = (b1 & 0x80) != 0;
    std::uint64_t len = b1 & 0x7F;
    std::size_t pos = 2;
    if (len == 126) {
        if (buffer.size() < 4) return std::nullopt;
        len = (static_cast<std::uint8_t>(buffer[2]) << 8) | static_cast<std::uint8_t>(buffer[3]);
        pos = 4;
    } else if (len == 127) {
        if (buffer.size() < 10) return std::nullopt;
        len = 0;
        for (int i = 0; i < 8; ++i) {
            len = (len << 8) | static_cast<std::uint8_t>(buffer[2 + i]);
        }
        pos = 10;
    }
    char key[4] = {0, 0, 0, 0};
    if (masked) {
        if (buffer.size() < pos + 4) return std::nullopt;
        std::memcpy(key, buffer.data() + pos, 4);
        pos += 4;
    }
    if (buffer.size() < pos + len) return std::nullopt;
    WsFrame frame;
    frame.fin = (b0 & 0x80) != 0;
    frame.opcode = b0 & 0x0F;
    frame.payload.resize(static_cast<std::size_t>(len));
    for (std::size_t i = 0; i < len; ++i) {
        char c = buffer[pos + i];
        frame.payload[i] = masked ? static_cast<char>(c ^ key[i % 4]) : c;
    }
    consumed = pos + static_cast<std::size_t>(len);
    return frame;
}

std::string ws_accept_key(const std::string& client_key) {
    static const char* kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
    return util::base64_encode(util::sha1_raw(client_key + kGuid));
}

// -- socket client ---------------------------------------------------------------

WsClient::WsClient() : mask_state_(0x9E3779B97F4A7C15ULL) {}

WsClient::~WsClient() { close(); }

void WsClient::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    buffer_.clear();
}

void WsClient::send_raw(const std::string& bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, 0);
        if (n <= 0) throw DriverError("websocket send failed");
        sent += static_cast<std::size_t>(n);
    }
}

bool WsClient::fill_buffer(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    int r = ::poll(&pfd, 1, timeout_ms);
    if (r == 0) return false;
    if (r < 0) throw DriverError("websocket poll failed");
    char chunk[16384];
    ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) throw DriverError("websocket connection closed by peer");
    buffer_.append(chunk, static_cast<std::size_t>(n));
    return true;
}

void WsClient::connect(const std::string& host, int port, const std::string& path,
                       int timeout_ms) {
    close();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
        throw DriverError("cannot resolve websocket host " + host);
    }
    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) throw DriverError("cannot connect to websocket " + host + ":" + std::to_string(port));
    fd_ = fd;

    // Handshake key: deterministic per-connection nonce is fine for a local
    // debugging endpoint.
    mask_state_ ^= static_cast<std::uint64_t>(fd) * 0x100000001b3ULL;
    char nonce[16];
    for (int i = 0; i < 16; ++i) {
        mask_state_ ^= mask_state_ >> 12;
        mask_state_ ^= mask_state_ << 25;
        mask_state_ ^= mask_state_ >> 27;
        nonce[i] = static_cast<char>(mask_state_ & 0xFF);
    }
    std::string key = util::base64_encode(std::string(nonce, 16));
    std::string request = "GET " + path + " HTTP/1.1\r\nHost: " + host + ":" +
                          std::to_string(port) +
                          "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " +
                          key + "\r\nSec-WebSocket-Version: 13\r\n\r\n";
    send_raw(request);

    std::string expected_accept = ws_accept_key(key);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (buffer_.find("\r\n\r\n") == std::string::npos) {
        int remain = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          deadline - std::chrono::steady_clock::now())
                                          .count());
        if (remain <= 0 || !fill_buffer(remain)) {
            throw DriverError("websocket handshake timed out");
        }
    }
    std::size_t header_end = buffer_.find("\r\n\r\n");
    std::string headers = buffer_.substr(0, header_end);
    buffer_.erase(0, header_end + 4);
    if (headers.find("101") == std::string::npos) {
        throw DriverError("websocket upgrade refused: " + headers.substr(0, headers.find("\r\n")));
    }
    if (headers.find(expected_accept) == std::string::npos) {
        throw DriverError("websocket handshake accept key mismatch");
    }
}

void WsClient::send_text(const std::string& payload) {
    if (fd_ < 0) throw DriverError("websocket not connected");
    mask_state_ ^= mask_state_ >> 12;
    mask_state_ ^= mask_state_ << 25;
    mask_state_ ^= mask_state_ >> 27;
    auto mask_key = static_cast<std::uint32_t>(mask_state_ & 0xFFFFFFFFULL);
    WsFrame frame;
    frame.opcode = 0x1;
    frame.payload = payload;
    send_raw(ws_encode_frame(frame, /*mask=*/true, mask_key));
}

std::string WsClient::recv_text(int timeout_ms) {
    if (fd_ < 0) throw DriverError("websocket not connected");
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    std::string assembled;
    bool in_fragment = false;
    while (true) {
        std::size_t consumed = 0;
        std::optional<WsFrame> frame = ws_decode_frame(buffer_, consumed);
        if (frame.has_value()) {
            buffer_.erase(0, consumed);
            switch (frame->opcode) {
                case 0x1:  // text
                case 0x0:  // continuation
                    assembled += frame->payload;
                    in_fragment = !frame->fin;
                    if (frame->fin) return assembled;
                    break;
                case 0x9: {  // ping -> pong
                    WsFrame pong;
                    pong.opcode = 0xA;
                    pong.payload = frame->payload;
                    mask_state_ ^= mask_state_ >> 12;
                    mask_state_ ^= mask_state_ << 25;
                    mask_state_ ^= mask_state_ >> 27;
                    send_raw(ws_encode_frame(pong, true,
                                             static_cast<std::uint32_t>(mask_state_ & 0xFFFFFFFF)));
                    break;
                }
                case 0xA:  // pong: ignore
                    break;
                case 0x8:
                    close();
                    throw DriverError("websocket closed by peer");
                default:
                    // Binary frames are unexpected on a CDP socket; skip.
                    break;
            }
            continue;
        }
        (void)in_fragment;
        int remain = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          deadline - std::chrono::steady_clock::now())
                                          .count());
        if (remain <= 0 || !fill_buffer(remain)) {
            throw DriverError("timeout");
        }
    }
}

// -- dump/eval scripts --------------------------------------------------------------

namespace {

const char* kDumpScript = R"JS(
(() => {
  const roleOf = (el) => {
    const t = el.tagName.toLowerCase();
    if (t === 'a') return 'link';
    if (t === 'button') return 'button';
    if (t === 'select') return 'select';
    if (t === 'textarea') return 'input';
    if (t === 'input') {
      const ty = (el.type || 'text').toLowerCase();
      if (ty === 'checkbox' || ty === 'radio') return 'checkbox';
      if (ty === 'button' || ty === 'submit' || ty === 'reset') return 'button';
      return 'input';
    }
    const r = el.getAttribute('role');
    if (r === 'button') return 'button';
    if (r === 'link') return 'link';
    if (r === 'checkbox') return 'checkbox';
    return 'other';
  };
  const els = Array.from(document.querySelectorAll(
    'a,button,input,select,textarea,[role=button],[role=link],[role=checkbox],[onclick]'));
  let n = 0;
  const out = [];
  for (const el of els) {
    const r = el.getBoundingClientRect();
    if (r.width <= 0 || r.height <= 0) continue;
    const style = getComputedStyle(el);
    if (style.visibility === 'hidden' || style.display === 'none') continue;
    n += 1;
    el.setAttribute('data-uxprobe-handle', String(n));
    const label = (el.getAttribute('aria-label') || el.innerText || el.value ||
                   el.placeholder || el.getAttribute('title') || '').trim().slice(0, 120);
    out.push({
      role: roleOf(el),
      label: label,
      input_type: el.tagName.toLowerCase() === 'input' ? (el.type || 'text').toLowerCase() : '',
      bbox: [r.x, r.y, r.width, r.height],
      handle: String(n),
      options: el.tagName.toLowerCase() === 'select'
        ? Array.from(el.options).map(o => o.label || o.text) : []
    });
  }
  return JSON.stringify({url: location.href,
                         scroll: [window.scrollX, window.scrollY],
                         viewport: [window.innerWidth, window.innerHeight],
                         elements: out});
})()
)JS";

const char* kDomHashScript = R"JS(
(() => {
  const s = document.documentElement.outerHTML;
  let h = 2166136261 >>> 0;
  for (let i = 0; i < s.length; i++) {
    h = Math.imul(h ^ s.charCodeAt(i), 16777619) >>> 0;
  }
  return location.href + '#' + h.toString(16);
})()
)JS";

}  // namespace

// -- driver ---------------------------------------------------------------------------

CdpBrowser::CdpBrowser(CdpOptions options) : options_(std::move(options)) {}

CdpBrowser::~CdpBrowser() = default;

browser::Capabilities CdpBrowser::capabilities() const {
    return browser::Capabilities{true, true, true, true};
}

void CdpBrowser::connect_if_needed() {
    if (ws_ && ws_->connected()) return;
    httplib::Client http(options_.endpoint);
    http.set_connection_timeout(5, 0);
    auto res = http.Get("/json/list");
    if (!res || res->status != 200) {
        throw DriverError("cannot reach the browser debugging endpoint at " + options_.endpoint);
    }
    json targets = json::parse(res->body);
    std::string ws_url;
    for (const auto& t : targets) {
        if (t.value("type", std::string{}) == "page" && t.contains("webSocketDebuggerUrl")) {
            ws_url = t.at("webSocketDebuggerUrl").get<std::string>();
            break;
        }
    }
    if (ws_url.empty()) throw DriverError("no page target exposed by the browser");

    // ws://host:port/path
    std::size_t scheme = ws_url.find("://");
    std::size_t host_start = scheme + 3;
    std::size_t path_start = ws_url.find('/', host_start);
    std::string hostport = ws_url.substr(host_start, path_start - host_start);
    std::string path = ws_url.substr(path_start);
    std::size_t colon = hostport.rfind(':');
    std::string host = colon == std::string::npos ? hostport : hostport.substr(0, colon);
    int port = colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1));

    ws_ = std::make_unique<WsClient>();
    ws_->connect(host, port, path, options_.command_timeout_ms);
    send_command("Page.enable", json::object());
    send_command("Runtime.enable", json::object());
    send_command("Emulation.setDeviceMetricsOverride",
                 json{{"width", options_.viewport.width},
                      {"height", options_.viewport.height},
                      {"deviceScaleFactor", 1},
                      {"mobile", false}});
}

json CdpBrowser::send_command(const std::string& method, json params) {
    int id = next_id_++;
    json msg{{"id", id}, {"method", method}, {"params", std::move(params)}};
    ws_->send_text(msg.dump());
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(options_.command_timeout_ms);
    while (true) {
        int remain = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          deadline - std::chrono::steady_clock::now())
                                          .count());
        if (remain <= 0) throw DriverError("timeout waiting for " + method);
        json reply = json::parse(ws_->recv_text(remain));
        if (reply.contains("id") && reply.at("id").get<int>() == id) {
            if (reply.contains("error")) {
                throw DriverError(method + " failed: " + reply.at("error").dump());
            }
            return reply.value("result", json::object());
        }
        // Unsolicited events are dropped; quiescence is detected by hashing.
    }
}

std::string CdpBrowser::evaluate(const std::string& expression) {
    json result = send_command(
        "Runtime.evaluate",
        json{{"expression", expression}, {"returnByValue", true}, {"awaitPromise", false}});
    const json& value = result.at("result");
    if (value.value("type", std::string{}) != "string") {
        return value.contains("value") ? value.at("value").dump() : std::string{};
    }
    return value.at("value").get<std::string>();
}

std::string CdpBrowser::dom_hash() { return evaluate(kDomHashScript); }

std::int64_t CdpBrowser::quiesce() {
    auto start = std::chrono::steady_clock::now();
    std::string last = dom_hash();
    std::int64_t stable_since = 0;
    std::int64_t elapsed = 0;
    const int poll_ms = 100;
    while (true) {
        usleep(static_cast<useconds_t>(poll_ms) * 1000);
        elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        std::string now = dom_hash();
        if (now == last) {
            stable_since += poll_ms;
            if (stable_since >= options_.settle_ms) return elapsed;
        } else {
            stable_since = 0;
            last = now;
        }
        if (elapsed >= options_.settle_cap_ms) return elapsed;
    }
}

void CdpBrowser::open(const std::string& url) {
    connect_if_needed();
    send_command("Page.navigate", json{{"url", url}});
    quiesce();
}

browser::DispatchOutcome CdpBrowser::act(const Action& action, const std::string& target_handle) {
    connect_if_needed();
    browser::DispatchOutcome out;
    std::string before = dom_hash();
    try {
        if (const auto* sel = std::get_if<SelectAction>(&action)) {
            json label_json = sel->option_label;
            std::string script = "(() => {const el = document.querySelector('[data-uxprobe-handle=\"" +
                                 target_handle +
                                 "\"]'); if (!el || el.tagName.toLowerCase() !== 'select') return "
                                 "'no-select'; const opt = Array.from(el.options).find(o => "
                                 "(o.label || o.text) === " +
                                 label_json.dump() +
                                 "); if (!opt) return 'no-option'; el.value = opt.value; "
                                 "el.dispatchEvent(new Event('change', {bubbles: true})); return "
                                 "'ok';})()";
            std::string r = evaluate(script);
            if (r != "ok") {
                out.status = browser::DispatchOutcome::Status::failed;
                out.reason = r == "no-select" ? "select target not found" : "option not found";
                return out;
            }
        } else if (const auto* scroll = std::get_if<ScrollAction>(&action)) {
            switch (scroll->direction) {
                case ScrollDirection::up:
                    evaluate("window.scrollBy(0, -Math.round(window.innerHeight*0.8)), ''");
                    break;
                case ScrollDirection::down:
                    evaluate("window.scrollBy(0, Math.round(window.innerHeight*0.8)), ''");
                    break;
                case ScrollDirection::to_bottom:
                    evaluate("window.scrollTo(0, document.body.scrollHeight), ''");
                    break;
            }
        } else if (std::holds_alternative<TerminateAction>(action)) {
            out.status = browser::DispatchOutcome::Status::failed;
            out.reason = "terminate is not a dispatchable browser action";
            return out;
        } else {
            NormPoint at{};
            bool press = false;
            std::string text;
            if (const auto* c = std::get_if<ClickAction>(&action)) {
                at = c->at;
                press = true;
            } else if (const auto* h = std::get_if<HoverAction>(&action)) {
                at = h->at;
            } else if (const auto* t = std::get_if<TypeAction>(&action)) {
                at = t->at;
                press = true;
                text = t->text;
            }
            grounding::PixelPoint px = grounding::denormalize_point(at, options_.viewport);
            send_command("Input.dispatchMouseEvent", json{{"type", "mouseMoved"},
                                                          {"x", px.x},
                                                          {"y", px.y}});
            if (press) {
                send_command("Input.dispatchMouseEvent", json{{"type", "mousePressed"},
                                                              {"x", px.x},
                                                              {"y", px.y},
                                                              {"button", "left"},
                                                              {"clickCount", 1}});
                send_command("Input.dispatchMouseEvent", json{{"type", "mouseReleased"},
                                                              {"x", px.x},
                                                              {"y", px.y},
                                                              {"button", "left"},
                                                              {"clickCount", 1}});
            }
            if (!text.empty()) {
                send_command("Input.insertText", json{{"text", text}});
            }
        }
    } catch (const DriverError& e) {
        out.status = browser::DispatchOutcome::Status::failed;
        out.reason = std::string(e.what()).find("timeout") != std::string::npos ? "timeout"
                                                                                : e.what();
        return out;
    }
    out.latency_ms = quiesce();
    out.state_changed = dom_hash() != before;
    return out;
}

browser::Snapshot CdpBrowser::snapshot() {
    connect_if_needed();
    browser::Snapshot snap;
    std::string dump_text = evaluate(kDumpScript);
    json dump;
    try {
        dump = json::parse(dump_text);
    } catch (const json::exception& e) {
        throw DriverError(std::string("element dump failed: ") + e.what());
    }
    snap.page.url = dump.value("url", std::string{});
    snap.viewport = grounding::Viewport{dump.at("viewport").at(0).get<int>(),
                                        dump.at("viewport").at(1).get<int>()};
    snap.scroll_offset = grounding::PixelPoint{dump.at("scroll").at(0).get<int>(),
                                               dump.at("scroll").at(1).get<int>()};
    for (const auto& e : dump.at("elements")) {
        grounding::RawElement el;
        el.role = grounding::role_from_label(e.at("role").get<std::string>());
        el.label = e.at("label").get<std::string>();
        el.input_type = e.value("input_type", std::string{});
        el.bbox = grounding::RectPx{e.at("bbox").at(0).get<double>(),
                                    e.at("bbox").at(1).get<double>(),
                                    e.at("bbox").at(2).get<double>(),
                                    e.at("bbox").at(3).get<double>()};
        el.options = e.value("options", std::vector<std::string>{});
        el.handle = e.value("handle", std::string{});
        snap.page.elements.push_back(std::move(el));
    }
    json shot = send_command("Page.captureScreenshot", json{{"format", "png"}});
    snap.screenshot = util::base64_decode(shot.value("data", std::string{}));
    snap.screenshot_mime = "image/png";
    return snap;
}

}  // namespace uxprobe::cdp
