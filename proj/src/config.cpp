#include "semfuzz/config.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <set>
#include <sstream>

namespace semfuzz {

using nlohmann::json;

CampaignConfig default_config() {
    CampaignConfig cfg;
    // Sampling temperatures per role: extraction wants faithful reads of
    // the artifact, completion and instantiation want diversity.
    EndpointConfig extract;
    extract.temperature = 0.2;
    EndpointConfig group;
    group.temperature = 0.8;
    EndpointConfig instantiate;
    instantiate.temperature = 0.8;
    EndpointConfig embed;
    embed.temperature = 0.0;
    cfg.models = {{"extract", extract},
                  {"group", group},
                  {"instantiate", instantiate},
                  {"embed", embed}};
    return cfg;
}

namespace {

// Strictness: any key outside the schema is an error, so a typoed knob
// fails the run instead of silently keeping its default.
void expect_keys(const json& obj, const std::set<std::string>& known,
                 const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for \"") + key + "\" in " + where);
    }
}

void parse_endpoint(const json& obj, EndpointConfig& ep, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    expect_keys(obj,
                {"base_url", "model_name", "temperature", "max_tokens", "api_key_env",
                 "rate_per_second", "burst"},
                where);
    read_field(obj, "base_url", ep.base_url, where);
    read_field(obj, "model_name", ep.model_name, where);
    read_field(obj, "temperature", ep.temperature, where);
    read_field(obj, "max_tokens", ep.max_tokens, where);
    read_field(obj, "api_key_env", ep.api_key_env, where);
    read_field(obj, "rate_per_second", ep.rate_per_second, where);
    read_field(obj, "burst", ep.burst, where);
    if (ep.max_tokens <= 0) throw ConfigError(where + ".max_tokens must be positive");
    if (ep.temperature < 0.0) throw ConfigError(where + ".temperature must be >= 0");
}

}  // namespace

CampaignConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");

    CampaignConfig cfg = default_config();
    expect_keys(doc,
                {"rng_seed", "pool_path", "archive", "models", "compiler", "coverage",
                 "fuzz", "retries"},
                "config");

    read_field(doc, "rng_seed", cfg.rng_seed, "config");
    read_field(doc, "pool_path", cfg.pool_path, "config");

    if (doc.contains("archive")) {
        const json& a = doc.at("archive");
        if (!a.is_object()) throw ConfigError("archive must be an object");
        expect_keys(a, {"mode", "path"}, "archive");
        std::string mode = to_string(cfg.archive_mode);
        read_field(a, "mode", mode, "archive");
        try {
            cfg.archive_mode = archive_mode_from_string(mode);
        } catch (const ConfigError&) {
            throw ConfigError("archive.mode must be live, record, or replay");
        }
        read_field(a, "path", cfg.archive_path, "archive");
        if (cfg.archive_mode != ArchiveMode::live && cfg.archive_path.empty()) {
            throw ConfigError("archive.path is required for record/replay");
        }
    }

    if (doc.contains("models")) {
        const json& models = doc.at("models");
        if (!models.is_object()) throw ConfigError("models must be an object");
        expect_keys(models, {"extract", "group", "instantiate", "embed"}, "models");
        for (const auto& [role, obj] : models.items()) {
            parse_endpoint(obj, cfg.models[role], "models." + role);
        }
    }

    if (doc.contains("compiler")) {
        const json& c = doc.at("compiler");
        if (!c.is_object()) throw ConfigError("compiler must be an object");
        expect_keys(c,
                    {"command", "flags", "timeout_seconds", "memory_limit_bytes",
                     "coverage_mode", "stderr_cap_bytes", "crash_patterns"},
                    "compiler");
        read_field(c, "command", cfg.compiler.command_template, "compiler");
        read_field(c, "flags", cfg.compiler.flags, "compiler");
        read_field(c, "timeout_seconds", cfg.compiler.timeout_seconds, "compiler");
        read_field(c, "memory_limit_bytes", cfg.compiler.memory_limit_bytes, "compiler");
        std::string mode = to_string(cfg.compiler.coverage_mode);
        read_field(c, "coverage_mode", mode, "compiler");
        cfg.compiler.coverage_mode = coverage_mode_from_string(mode);
        read_field(c, "stderr_cap_bytes", cfg.compiler.stderr_cap_bytes, "compiler");
        read_field(c, "crash_patterns", cfg.compiler.crash_patterns, "compiler");
        if (cfg.compiler.timeout_seconds <= 0.0) {
            throw ConfigError("compiler.timeout_seconds must be positive");
        }
    }

    if (doc.contains("coverage")) {
        const json& c = doc.at("coverage");
        if (!c.is_object()) throw ConfigError("coverage must be an object");
        expect_keys(c, {"bitmap_path", "report_command", "report_path"}, "coverage");
        read_field(c, "bitmap_path", cfg.coverage.bitmap_path, "coverage");
        read_field(c, "report_command", cfg.coverage.report_command, "coverage");
        read_field(c, "report_path", cfg.coverage.report_path, "coverage");
    }

    if (doc.contains("fuzz")) {
        const json& f = doc.at("fuzz");
        if (!f.is_object()) throw ConfigError("fuzz must be an object");
        expect_keys(f,
                    {"k", "target_group_size", "max_iterations",
                     "wall_clock_budget_seconds", "snapshot_every", "novel_queue_cap",
                     "campaign_dir", "keep_artifacts"},
                    "fuzz");
        read_field(f, "k", cfg.fuzz.k, "fuzz");
        read_field(f, "target_group_size", cfg.fuzz.target_group_size, "fuzz");
        read_field(f, "max_iterations", cfg.fuzz.max_iterations, "fuzz");
        read_field(f, "wall_clock_budget_seconds", cfg.fuzz.wall_clock_budget_seconds,
                   "fuzz");
        read_field(f, "snapshot_every", cfg.fuzz.snapshot_every, "fuzz");
        read_field(f, "novel_queue_cap", cfg.fuzz.novel_queue_cap, "fuzz");
        read_field(f, "campaign_dir", cfg.fuzz.campaign_dir, "fuzz");
        read_field(f, "keep_artifacts", cfg.fuzz.keep_artifacts, "fuzz");
    }

    if (doc.contains("retries")) {
        const json& r = doc.at("retries");
        if (!r.is_object()) throw ConfigError("retries must be an object");
        expect_keys(r, {"group", "instantiate"}, "retries");
        read_field(r, "group", cfg.group_retries, "retries");
        read_field(r, "instantiate", cfg.instantiate_retries, "retries");
        if (cfg.group_retries < 0 || cfg.instantiate_retries < 0) {
            throw ConfigError("retry counts must be >= 0");
        }
    }

    if (cfg.fuzz.k < 1) throw ConfigError("fuzz.k must be >= 1");
    if (cfg.fuzz.target_group_size < cfg.fuzz.k) {
        throw ConfigError("fuzz.target_group_size must be >= fuzz.k");
    }
    return cfg;
}

CampaignConfig load_config(const std::string& path) {
    return parse_config(read_file(path));
}

namespace {

std::string quote_list(const std::vector<std::string>& parts) {
    std::string out = "[";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += '"';
        out += parts[i];
        out += '"';
    }
    out += "]";
    return out;
}

}  // namespace

std::string explain_config(const CampaignConfig& cfg) {
    std::ostringstream out;
    out << "rng_seed = " << cfg.rng_seed << "\n";
    out << "pool_path = \"" << cfg.pool_path << "\"\n";
    out << "archive.mode = " << to_string(cfg.archive_mode) << "\n";
    out << "archive.path = \"" << cfg.archive_path << "\"\n";
    for (const auto& [role, ep] : cfg.models) {
        const std::string p = "models." + role + ".";
        out << p << "base_url = \"" << ep.base_url << "\"\n";
        out << p << "model_name = \"" << ep.model_name << "\"\n";
        out << p << "temperature = " << ep.temperature << "\n";
        out << p << "max_tokens = " << ep.max_tokens << "\n";
        out << p << "api_key_env = \"" << ep.api_key_env << "\"\n";
        out << p << "rate_per_second = " << ep.rate_per_second << "\n";
        out << p << "burst = " << ep.burst << "\n";
    }
    out << "compiler.command = " << quote_list(cfg.compiler.command_template) << "\n";
    out << "compiler.flags = " << quote_list(cfg.compiler.flags) << "\n";
    out << "compiler.timeout_seconds = " << cfg.compiler.timeout_seconds << "\n";
    out << "compiler.memory_limit_bytes = " << cfg.compiler.memory_limit_bytes << "\n";
    out << "compiler.coverage_mode = " << to_string(cfg.compiler.coverage_mode) << "\n";
    out << "compiler.stderr_cap_bytes = " << cfg.compiler.stderr_cap_bytes << "\n";
    out << "compiler.crash_patterns = " << quote_list(cfg.compiler.crash_patterns)
        << "\n";
    out << "coverage.bitmap_path = \"" << cfg.coverage.bitmap_path << "\"\n";
    out << "coverage.report_command = " << quote_list(cfg.coverage.report_command)
        << "\n";
    out << "coverage.report_path = \"" << cfg.coverage.report_path << "\"\n";
    out << "fuzz.k = " << cfg.fuzz.k << "\n";
    out << "fuzz.target_group_size = " << cfg.fuzz.target_group_size << "\n";
    out << "fuzz.max_iterations = " << cfg.fuzz.max_iterations << "\n";
    out << "fuzz.wall_clock_budget_seconds = " << cfg.fuzz.wall_clock_budget_seconds
        << "\n";
    out << "fuzz.snapshot_every = " << cfg.fuzz.snapshot_every << "\n";
    out << "fuzz.novel_queue_cap = " << cfg.fuzz.novel_queue_cap << "\n";
    out << "fuzz.campaign_dir = \"" << cfg.fuzz.campaign_dir << "\"\n";
    out << "fuzz.keep_artifacts = " << (cfg.fuzz.keep_artifacts ? "true" : "false")
        << "\n";
    out << "retries.group = " << cfg.group_retries << "\n";
    out << "retries.instantiate = " << cfg.instantiate_retries << "\n";
    return out.str();
}

}  // namespace semfuzz
