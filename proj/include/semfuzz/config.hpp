#pragma once

#include "semfuzz/compiler_harness.hpp"
#include "semfuzz/fuzz_loop.hpp"
#include "semfuzz/llm_client.hpp"

#include <map>
#include <string>

namespace semfuzz {

// Campaign configuration file. Parsing is strict: an unknown key anywhere
// raises ConfigError naming it, so typos fail fast instead of silently
// running with defaults.
struct CampaignConfig {
    // model endpoints by role name: "extract", "group", "instantiate", "embed"
    std::map<std::string, EndpointConfig> models;
    ArchiveMode archive_mode = ArchiveMode::live;
    std::string archive_path;

    CompilerConfig compiler;
    CoverageContext coverage;
    FuzzParams fuzz;

    std::string pool_path;      // feature pool to load at start / save at end
    int instantiate_retries = 2;
    int group_retries = 2;
    std::uint64_t rng_seed = 1;
};

CampaignConfig default_config();

// Parses a config JSON document / file. Missing keys keep their defaults;
// unknown keys, wrong types and out-of-range values throw ConfigError.
CampaignConfig parse_config(const std::string& json_text);
CampaignConfig load_config(const std::string& path);

// Human-readable dump of every knob with its effective value, one per
// line, for --explain-config.
std::string explain_config(const CampaignConfig& cfg);

}  // namespace semfuzz
