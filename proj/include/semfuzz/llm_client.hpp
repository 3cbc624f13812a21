#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace semfuzz {

// Which pipeline stage a request belongs to; selects the configured
// endpoint and model.
enum class ModelRole { extract, group, instantiate, embed };

std::string to_string(ModelRole r);
ModelRole model_role_from_string(const std::string& s);

struct ModelParams {
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 2048;
};

struct ModelRequest {
    ModelRole role = ModelRole::extract;
    std::string prompt;  // chat prompt, or one input text for embed
    ModelParams params;
    std::string request_id;  // free-form tag, excluded from the archive key
};

struct EndpointConfig {
    std::string base_url;        // e.g. http://localhost:8000
    std::string model_name;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string api_key_env;     // env var holding the bearer token, optional
    // Token bucket; rate_per_second <= 0 disables throttling.
    double rate_per_second = 0.0;
    double burst = 1.0;
};

enum class ArchiveMode { live, record, replay };

std::string to_string(ArchiveMode m);
ArchiveMode archive_mode_from_string(const std::string& s);

// Stable content key covering everything that changes a model answer:
// role, model name, sampling params, and the prompt itself.
std::string request_key(const ModelRequest& req);

// Token bucket with an injectable clock so tests need no sleeping.
class TokenBucket {
public:
    TokenBucket(double rate_per_second, double burst);

    // Seconds the caller must wait before the next permit; 0 when a permit
    // was taken immediately. now_seconds is a monotonic timestamp.
    double acquire_delay(double now_seconds);

    bool enabled() const { return rate_ > 0.0; }

private:
    double rate_;
    double burst_;
    double tokens_;
    double last_refill_ = 0.0;
    bool primed_ = false;
};

// Single transport for all model interactions. Live mode talks to an
// OpenAI-compatible endpoint; record mode additionally persists
// (request key -> response) into the archive; replay mode answers purely
// from the archive and never touches the transport.
class ChatClient {
public:
    // Returns the raw completion text for one request.
    using ChatTransport = std::function<std::string(const ModelRequest&)>;
    // Returns one vector per input text.
    using EmbedTransport =
        std::function<std::vector<std::vector<double>>(const std::vector<std::string>&, const ModelParams&)>;

    ChatClient();

    void set_endpoint(ModelRole role, EndpointConfig cfg);
    const EndpointConfig* endpoint(ModelRole role) const;

    void set_archive(ArchiveMode mode, const std::string& path);
    ArchiveMode archive_mode() const { return mode_; }

    // Replaces the HTTP transport; used by tests and scripted campaigns.
    void set_chat_transport(ChatTransport t) { chat_transport_ = std::move(t); }
    void set_embed_transport(EmbedTransport t) { embed_transport_ = std::move(t); }

    void set_max_retries(int n) { max_retries_ = n; }
    void set_retry_backoff_ms(int ms) { retry_backoff_ms_ = ms; }

    // Fills params from the role's endpoint config.
    ModelRequest make_request(ModelRole role, std::string prompt) const;

    // Returns the first choice's text. Throws ReplayMiss in replay mode for
    // unseen requests and ModelError after bounded retries otherwise.
    std::string chat(const ModelRequest& req);

    // Batched embedding; all result vectors share one dimension.
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);

    std::size_t archive_size() const { return archive_.size(); }

private:
    ModelRequest make_request_unlocked(ModelRole role, std::string prompt) const;
    std::string http_chat(const ModelRequest& req);
    std::vector<std::vector<double>> http_embed(const std::vector<std::string>& texts,
                                                const ModelParams& params);
    std::string transport_chat(const ModelRequest& req);
    std::vector<std::vector<double>> transport_embed(const std::vector<std::string>& texts,
                                                     const ModelParams& params);
    void load_archive(const std::string& path);
    void append_archive_entry(const std::string& key, const std::string& kind,
                              const std::string& payload);
    void throttle(ModelRole role);

    std::map<ModelRole, EndpointConfig> endpoints_;
    ArchiveMode mode_ = ArchiveMode::live;
    std::string archive_path_;
    std::map<std::string, std::string> archive_;  // key -> payload (text or JSON vector batch)
    std::map<ModelRole, TokenBucket> buckets_;
    ChatTransport chat_transport_;
    EmbedTransport embed_transport_;
    int max_retries_ = 2;
    int retry_backoff_ms_ = 200;
    mutable std::mutex mutex_;
};

}  // namespace semfuzz
