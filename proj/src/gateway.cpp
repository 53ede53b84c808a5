#include "uxprobe/gateway.hpp"

#include "uxprobe/errors.hpp"

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cstdlib>

namespace uxprobe::gateway {

using nlohmann::json;

std::string_view role_label(Role r) {
    switch (r) {
        case Role::reasoning: return "reasoning";
        case Role::ux: return "ux";
        case Role::checklist: return "checklist";
    }
    return "reasoning";
}

Role role_from_label(std::string_view s) {
    if (s == "reasoning") return Role::reasoning;
    if (s == "ux") return Role::ux;
    if (s == "checklist") return Role::checklist;
    throw ValidationError("unknown gateway role '" + std::string(s) + "'");
}

std::string ModelGateway::complete(Role role, const PromptBundle& bundle) {
    if (bundle.text_chars() > context_budget_chars_) {
        throw GatewayError("prompt bundle (" + std::to_string(bundle.text_chars()) +
                           " chars) exceeds the context budget (" +
                           std::to_string(context_budget_chars_) +
                           "); compress memory upstream instead of truncating");
    }
    CallMeta meta;
    meta.role = std::string(role_label(role));
    meta.prompt_chars = bundle.text_chars();
    meta.request_digest = util::sha1_hex(bundle.system + "\x1f" + bundle.user);
    std::string text = complete_impl(role, bundle, meta);
    meta.response_digest = util::sha1_hex(text);
    if (recorder_) recorder_(meta);
    return text;
}

// -- scripted -----------------------------------------------------------------

ScriptedGateway ScriptedGateway::from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw FixtureError("cannot parse scripted responses " + path.string() + ": " + e.what());
    }
    std::vector<Entry> entries;
    for (const auto& item : j.at("responses")) {
        Entry e;
        e.role = role_from_label(item.at("role").get<std::string>());
        if (item.contains("json")) {
            e.text = item.at("json").dump();
        } else {
            e.text = item.at("text").get<std::string>();
        }
        entries.push_back(std::move(e));
    }
    return ScriptedGateway(std::move(entries));
}

std::string ScriptedGateway::complete_impl(Role role, const PromptBundle&, CallMeta&) {
    if (next_ >= entries_.size()) {
        throw FixtureError("fixture underrun: call index " + std::to_string(next_) +
                           " requested role '" + std::string(role_label(role)) +
                           "' but only " + std::to_string(entries_.size()) +
                           " scripted responses exist");
    }
    const Entry& e = entries_[next_];
    if (e.role != role) {
        throw FixtureError("fixture divergence at call index " + std::to_string(next_) +
                           ": session requested role '" + std::string(role_label(role)) +
                           "' but fixture entry is for role '" +
                           std::string(role_label(e.role)) + "'");
    }
    ++next_;
    return e.text;
}

// -- http ---------------------------------------------------------------------

HttpGateway::HttpGateway(HttpGatewayOptions options, util::Clock& clock, Transport transport)
    : options_(std::move(options)),
      clock_(clock),
      transport_(transport ? std::move(transport) : Transport(http_post_transport)),
      jitter_state_(options_.jitter_seed) {}

const RoleEndpoint& HttpGateway::endpoint_for(Role role) const {
    switch (role) {
        case Role::reasoning: return options_.reasoning;
        case Role::ux: return options_.ux;
        case Role::checklist: return options_.checklist;
    }
    return options_.reasoning;
}

std::string HttpGateway::build_request_body(const std::string& model, const PromptBundle& bundle) {
    json messages = json::array();
    messages.push_back(json{{"role", "system"}, {"content", bundle.system}});
    if (bundle.image.has_value()) {
        json content = json::array();
        content.push_back(json{{"type", "text"}, {"text", bundle.user}});
        content.push_back(
            json{{"type", "image_url"},
                 {"image_url",
                  json{{"url", "data:" + bundle.image->mime + ";base64," +
                                   util::base64_encode(bundle.image->bytes)}}}});
        messages.push_back(json{{"role", "user"}, {"content", std::move(content)}});
    } else {
        messages.push_back(json{{"role", "user"}, {"content", bundle.user}});
    }
    return json{{"model", model}, {"messages", std::move(messages)}}.dump();
}

int HttpGateway::backoff_delay_ms(int attempt, int base_ms, int max_ms) {
    long long delay = base_ms;
    for (int i = 1; i < attempt; ++i) delay *= 2;
    return static_cast<int>(std::min<long long>(delay, max_ms));
}

std::string HttpGateway::complete_impl(Role role, const PromptBundle& bundle, CallMeta& meta) {
    const RoleEndpoint& ep = endpoint_for(role);
    if (ep.endpoint.empty() || ep.model.empty()) {
        throw ConfigError("role '" + std::string(role_label(role)) +
                          "' has no endpoint/model configured");
    }
    std::vector<std::pair<std::string, std::string>> headers;
    if (!ep.api_key_env.empty()) {
        const char* key = std::getenv(ep.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("environment variable " + ep.api_key_env +
                              " is not set (required for role '" +
                              std::string(role_label(role)) + "')");
        }
        headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }
    std::string body = build_request_body(ep.model, bundle);

    std::int64_t started = clock_.now_ms();
    std::string last_error;
    for (int attempt = 1; attempt <= options_.retry_budget; ++attempt) {
        meta.attempts = attempt;
        TransportResult res = transport_(ep.endpoint, body, headers, options_.timeout_ms);
        if (res.error.empty() && res.status == 200) {
            meta.latency_ms = clock_.now_ms() - started;
            try {
                json j = json::parse(res.body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                throw GatewayError("malformed completion response: " + std::string(e.what()));
            }
        }
        if (res.error.empty() && (res.status == 401 || res.status == 403)) {
            throw ConfigError("authentication failed (HTTP " + std::to_string(res.status) +
                              ") for role '" + std::string(role_label(role)) + "'");
        }
        bool transient = !res.error.empty() || res.status == 429 || res.status >= 500;
        last_error = !res.error.empty() ? res.error : ("HTTP " + std::to_string(res.status));
        if (!transient) {
            throw GatewayError("completion request rejected: " + last_error);
        }
        if (attempt < options_.retry_budget) {
            int delay = backoff_delay_ms(attempt, options_.backoff_base_ms, options_.backoff_max_ms);
            if (options_.jitter_seed != 0) {
                std::lock_guard<std::mutex> lock(mutex_);
                // xorshift64*: cheap seeded jitter in [0, delay/4].
                jitter_state_ ^= jitter_state_ >> 12;
                jitter_state_ ^= jitter_state_ << 25;
                jitter_state_ ^= jitter_state_ >> 27;
                delay += static_cast<int>((jitter_state_ * 0x2545F4914F6CDD1DULL) % (delay / 4 + 1));
            }
            clock_.sleep_ms(delay);
        }
    }
    meta.latency_ms = clock_.now_ms() - started;
    throw GatewayError("retry budget (" + std::to_string(options_.retry_budget) +
                       ") exhausted for role '" + std::string(role_label(role)) +
                       "': " + last_error);
}

TransportResult http_post_transport(const std::string& endpoint, const std::string& body,
                                    const std::vector<std::pair<std::string, std::string>>& headers,
                                    int timeout_ms) {
    std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        return TransportResult{0, {}, "invalid endpoint URL: " + endpoint};
    }
    std::size_t path_start = endpoint.find('/', scheme_end + 3);
    std::string origin =
        path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
        return TransportResult{0, {}, "transport failure: " + httplib::to_string(res.error())};
    }
    return TransportResult{res->status, res->body, {}};
}

}  // namespace uxprobe::gateway
