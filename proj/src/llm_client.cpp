#include "semfuzz/llm_client.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

namespace semfuzz {

using nlohmann::json;

std::string to_string(ModelRole r) {
    switch (r) {
        case ModelRole::extract: return "extract";
        case ModelRole::group: return "group";
        case ModelRole::instantiate: return "instantiate";
        case ModelRole::embed: return "embed";
    }
    return "extract";
}

ModelRole model_role_from_string(const std::string& s) {
    if (s == "extract") return ModelRole::extract;
    if (s == "group") return ModelRole::group;
    if (s == "instantiate") return ModelRole::instantiate;
    if (s == "embed") return ModelRole::embed;
    throw ConfigError("unknown model role: " + s);
}

std::string to_string(ArchiveMode m) {
    switch (m) {
        case ArchiveMode::live: return "live";
        case ArchiveMode::record: return "record";
        case ArchiveMode::replay: return "replay";
    }
    return "live";
}

ArchiveMode archive_mode_from_string(const std::string& s) {
    if (s == "live") return ArchiveMode::live;
    if (s == "record") return ArchiveMode::record;
    if (s == "replay") return ArchiveMode::replay;
    throw ConfigError("unknown archive mode: " + s);
}

std::string request_key(const ModelRequest& req) {
    char params[64];
    std::snprintf(params, sizeof(params), "%.6g|%d", req.params.temperature,
                  req.params.max_tokens);
    std::string material = to_string(req.role);
    material += '|';
    material += req.params.model_name;
    material += '|';
    material += params;
    material += '|';
    material += req.prompt;
    return fnv1a64_hex(material);
}

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(burst < 1.0 ? 1.0 : burst), tokens_(burst_) {}

double TokenBucket::acquire_delay(double now_seconds) {
    if (rate_ <= 0.0) return 0.0;
    if (!primed_) {
        primed_ = true;
        last_refill_ = now_seconds;
        tokens_ = burst_;
    }
    if (now_seconds > last_refill_) {
        tokens_ += (now_seconds - last_refill_) * rate_;
        if (tokens_ > burst_) tokens_ = burst_;
        last_refill_ = now_seconds;
    }
    if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return 0.0;
    }
    // Reserve the next token; callers queue up with growing delays.
    double wait = (1.0 - tokens_) / rate_;
    tokens_ -= 1.0;
    return wait;
}

namespace {

// Splits "http://host:port/prefix" into the client target and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    std::size_t path_start = base_url.find(
        '/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

httplib::Headers auth_headers(const EndpointConfig& cfg) {
    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    return headers;
}

double monotonic_seconds() {
    auto now = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(now).count();
}

}  // namespace

ChatClient::ChatClient() = default;

void ChatClient::set_endpoint(ModelRole role, EndpointConfig cfg) {
    std::lock_guard lock(mutex_);
    buckets_.erase(role);
    if (cfg.rate_per_second > 0.0) {
        buckets_.emplace(role, TokenBucket(cfg.rate_per_second, cfg.burst));
    }
    endpoints_[role] = std::move(cfg);
}

const EndpointConfig* ChatClient::endpoint(ModelRole role) const {
    std::lock_guard lock(mutex_);
    auto it = endpoints_.find(role);
    return it == endpoints_.end() ? nullptr : &it->second;
}

void ChatClient::set_archive(ArchiveMode mode, const std::string& path) {
    std::lock_guard lock(mutex_);
    mode_ = mode;
    archive_path_ = path;
    archive_.clear();
    if (mode != ArchiveMode::live && !path.empty()) {
        std::ifstream probe(path);
        if (probe.good()) {
            probe.close();
            load_archive(path);
        } else if (mode == ArchiveMode::replay) {
            throw IoError("replay archive not readable: " + path);
        }
    }
}

ModelRequest ChatClient::make_request(ModelRole role, std::string prompt) const {
    ModelRequest req;
    req.role = role;
    req.prompt = std::move(prompt);
    if (const EndpointConfig* ep = endpoint(role)) {
        req.params.model_name = ep->model_name;
        req.params.temperature = ep->temperature;
        req.params.max_tokens = ep->max_tokens;
    }
    return req;
}

std::string ChatClient::chat(const ModelRequest& req) {
    const std::string key = request_key(req);
    {
        std::lock_guard lock(mutex_);
        auto it = archive_.find(key);
        if (it != archive_.end()) return it->second;
        if (mode_ == ArchiveMode::replay) throw ReplayMiss(key);
    }
    throttle(req.role);
    std::string text = transport_chat(req);
    if (mode_ == ArchiveMode::record) {
        std::lock_guard lock(mutex_);
        if (archive_.emplace(key, text).second) {
            append_archive_entry(key, "chat", text);
        }
    }
    return text;
}

std::vector<std::vector<double>> ChatClient::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out(texts.size());
    std::vector<std::size_t> missing;
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            ModelRequest probe = make_request_unlocked(ModelRole::embed, texts[i]);
            auto it = archive_.find(request_key(probe));
            if (it != archive_.end()) {
                out[i] = json::parse(it->second).get<std::vector<double>>();
            } else if (mode_ == ArchiveMode::replay) {
                throw ReplayMiss(request_key(probe));
            } else {
                missing.push_back(i);
            }
        }
    }
    if (missing.empty()) return out;

    std::vector<std::string> batch;
    batch.reserve(missing.size());
    for (std::size_t i : missing) batch.push_back(texts[i]);

    throttle(ModelRole::embed);
    ModelParams params = make_request(ModelRole::embed, "").params;
    std::vector<std::vector<double>> vecs = transport_embed(batch, params);
    if (vecs.size() != batch.size()) {
        throw ModelError("embedding endpoint returned " + std::to_string(vecs.size()) +
                         " vectors for " + std::to_string(batch.size()) + " inputs");
    }
    for (std::size_t j = 0; j < missing.size(); ++j) {
        out[missing[j]] = vecs[j];
        if (mode_ == ArchiveMode::record) {
            std::lock_guard lock(mutex_);
            ModelRequest probe = make_request_unlocked(ModelRole::embed, batch[j]);
            const std::string key = request_key(probe);
            const std::string payload = json(vecs[j]).dump();
            if (archive_.emplace(key, payload).second) {
                append_archive_entry(key, "embed", payload);
            }
        }
    }
    return out;
}

ModelRequest ChatClient::make_request_unlocked(ModelRole role, std::string prompt) const {
    ModelRequest req;
    req.role = role;
    req.prompt = std::move(prompt);
    auto it = endpoints_.find(role);
    if (it != endpoints_.end()) {
        req.params.model_name = it->second.model_name;
        req.params.temperature = it->second.temperature;
        req.params.max_tokens = it->second.max_tokens;
    }
    return req;
}

std::string ChatClient::transport_chat(const ModelRequest& req) {
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0 && retry_backoff_ms_ > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(retry_backoff_ms_ * attempt));
        }
        try {
            return chat_transport_ ? chat_transport_(req) : http_chat(req);
        } catch (const ModelError& e) {
            last_error = e.what();
        }
    }
    throw ModelError("chat failed after " + std::to_string(max_retries_ + 1) +
                     " attempts: " + last_error);
}

std::vector<std::vector<double>> ChatClient::transport_embed(
    const std::vector<std::string>& texts, const ModelParams& params) {
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0 && retry_backoff_ms_ > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(retry_backoff_ms_ * attempt));
        }
        try {
            return embed_transport_ ? embed_transport_(texts, params)
                                    : http_embed(texts, params);
        } catch (const ModelError& e) {
            last_error = e.what();
        }
    }
    throw ModelError("embed failed after " + std::to_string(max_retries_ + 1) +
                     " attempts: " + last_error);
}

std::string ChatClient::http_chat(const ModelRequest& req) {
    const EndpointConfig* ep = endpoint(req.role);
    if (!ep || ep->base_url.empty()) {
        throw ModelError("no endpoint configured for role " + to_string(req.role));
    }
    auto [target, prefix] = split_base_url(ep->base_url);
    httplib::Client client(target);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(300, 0);

    json body = {
        {"model", req.params.model_name},
        {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.params.temperature},
        {"max_tokens", req.params.max_tokens},
    };
    auto res = client.Post(prefix + "/v1/chat/completions", auth_headers(*ep),
                           body.dump(), "application/json");
    if (!res) {
        throw ModelError("chat request to " + ep->base_url +
                         " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ModelError("chat endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        json doc = json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed chat response: ") + e.what());
    }
}

std::vector<std::vector<double>> ChatClient::http_embed(
    const std::vector<std::string>& texts, const ModelParams& params) {
    const EndpointConfig* ep = endpoint(ModelRole::embed);
    if (!ep || ep->base_url.empty()) {
        throw ModelError("no endpoint configured for role embed");
    }
    auto [target, prefix] = split_base_url(ep->base_url);
    httplib::Client client(target);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(300, 0);

    json body = {{"model", params.model_name}, {"input", texts}};
    auto res = client.Post(prefix + "/v1/embeddings", auth_headers(*ep), body.dump(),
                           "application/json");
    if (!res) {
        throw ModelError("embedding request to " + ep->base_url +
                         " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ModelError("embedding endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        json doc = json::parse(res->body);
        std::vector<std::vector<double>> vecs(texts.size());
        for (const auto& item : doc.at("data")) {
            std::size_t index = item.at("index").get<std::size_t>();
            if (index >= vecs.size()) throw ModelError("embedding index out of range");
            vecs[index] = item.at("embedding").get<std::vector<double>>();
        }
        return vecs;
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed embedding response: ") + e.what());
    }
}

void ChatClient::load_archive(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open archive: " + path);
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        ++record;
        if (trim(line).empty()) continue;
        try {
            json doc = json::parse(line);
            archive_[doc.at("key").get<std::string>()] =
                doc.at("payload").get<std::string>();
        } catch (const json::exception& e) {
            throw FormatError(std::string("bad archive record: ") + e.what(), record);
        }
    }
}

void ChatClient::append_archive_entry(const std::string& key, const std::string& kind,
                                      const std::string& payload) {
    if (archive_path_.empty()) return;
    std::ofstream out(archive_path_, std::ios::app);
    if (!out) throw IoError("cannot append to archive: " + archive_path_);
    json doc = {{"key", key}, {"kind", kind}, {"payload", payload}};
    out << doc.dump() << '\n';
}

void ChatClient::throttle(ModelRole role) {
    double delay = 0.0;
    {
        std::lock_guard lock(mutex_);
        auto it = buckets_.find(role);
        if (it == buckets_.end()) return;
        delay = it->second.acquire_delay(monotonic_seconds());
    }
    if (delay > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
}

}  // namespace semfuzz
