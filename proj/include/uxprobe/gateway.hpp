#pragma once

#include "uxprobe/util.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace uxprobe::gateway {

enum class Role { reasoning, ux, checklist };

std::string_view role_label(Role r);
Role role_from_label(std::string_view s);

struct ImageAttachment {
    std::string mime;
    std::string bytes;
};

struct PromptBundle {
    std::string system;
    std::string user;
    std::optional<ImageAttachment> image;

    std::size_t text_chars() const { return system.size() + user.size(); }
};

struct CallMeta {
    std::string role;
    std::string request_digest;
    std::string response_digest;
    std::int64_t latency_ms = 0;
    int attempts = 1;
    std::size_t prompt_chars = 0;
};

using CallRecorder = std::function<void(const CallMeta&)>;

/// Uniform access to the three engine roles. complete() returns the raw
/// model text; prompt bundles exceeding the context budget are rejected here
/// (callers compress memory upstream; this layer never truncates silently).
class ModelGateway {
public:
    virtual ~ModelGateway() = default;

    std::string complete(Role role, const PromptBundle& bundle);

    void set_recorder(CallRecorder recorder) { recorder_ = std::move(recorder); }
    void set_context_budget_chars(std::size_t budget) { context_budget_chars_ = budget; }
    std::size_t context_budget_chars() const { return context_budget_chars_; }

protected:
    virtual std::string complete_impl(Role role, const PromptBundle& bundle, CallMeta& meta) = 0;

private:
    CallRecorder recorder_;
    std::size_t context_budget_chars_ = 240000;
};

/// Deterministic replay backend: consumes an ordered list of role-tagged
/// responses. Any divergence between the requested role sequence and the
/// fixture order fails loudly with the call index.
class ScriptedGateway final : public ModelGateway {
public:
    struct Entry {
        Role role;
        std::string text;
    };

    explicit ScriptedGateway(std::vector<Entry> entries) : entries_(std::move(entries)) {}
    static ScriptedGateway from_file(const std::filesystem::path& path);

    std::size_t consumed() const { return next_; }
    std::size_t remaining() const { return entries_.size() - next_; }

protected:
    std::string complete_impl(Role role, const PromptBundle& bundle, CallMeta& meta) override;

private:
    std::vector<Entry> entries_;
    std::size_t next_ = 0;
};

// -- live HTTP backend -------------------------------------------------------

struct TransportResult {
    int status = 0;
    std::string body;
    std::string error;  // non-empty on a transport-level failure
};

/// Seam for tests: the real transport posts JSON over HTTP(S).
using Transport = std::function<TransportResult(const std::string& endpoint,
                                                const std::string& body,
                                                const std::vector<std::pair<std::string, std::string>>& headers,
                                                int timeout_ms)>;

struct RoleEndpoint {
    std::string endpoint;     // e.g. https://api.example.com/v1/chat/completions
    std::string model;
    std::string api_key_env;  // credentials come from the environment only
};

struct HttpGatewayOptions {
    RoleEndpoint reasoning;
    RoleEndpoint ux;
    RoleEndpoint checklist;
    int timeout_ms = 120000;
    int retry_budget = 3;
    int backoff_base_ms = 500;
    int backoff_max_ms = 30000;
    std::uint64_t jitter_seed = 0;  // 0 = no jitter (fully deterministic backoff)
};

/// Chat-completion client with exponential backoff on transient transport
/// failures. Auth failures are fatal config errors; exhausting the retry
/// budget raises a step-level GatewayError.
class HttpGateway final : public ModelGateway {
public:
    HttpGateway(HttpGatewayOptions options, util::Clock& clock, Transport transport = {});

    /// Request body in the chat-completions wire shape (exposed for tests).
    static std::string build_request_body(const std::string& model, const PromptBundle& bundle);

    /// Backoff delay before retry `attempt` (1-based), without jitter.
    static int backoff_delay_ms(int attempt, int base_ms, int max_ms);

protected:
    std::string complete_impl(Role role, const PromptBundle& bundle, CallMeta& meta) override;

private:
    const RoleEndpoint& endpoint_for(Role role) const;

    HttpGatewayOptions options_;
    util::Clock& clock_;
    Transport transport_;
    std::uint64_t jitter_state_;
    std::mutex mutex_;
};

/// Default HTTPS/HTTP transport built on cpp-httplib.
TransportResult http_post_transport(const std::string& endpoint, const std::string& body,
                                    const std::vector<std::pair<std::string, std::string>>& headers,
                                    int timeout_ms);

}  // namespace uxprobe::gateway
