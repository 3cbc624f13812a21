#pragma once

#include "semfuzz/feature.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace semfuzz {

// Operator entry points behind the CLI. Each returns a process exit code:
//   0  success (including empty results)
//   1  usage, configuration, or data errors
//   2  fatal harness failure (compiler missing / not spawnable)
// and prints a human summary on `out`, diagnostics on `err`. Commands are
// non-interactive and write machine-readable files next to their outputs.

struct ExtractArgs {
    std::string config_path;   // optional; defaults apply when empty
    std::string fixtures_dir;  // offline artifact source
    std::string tracker_url;   // live artifact source (Bugzilla-style REST)
    std::string query;
    std::size_t limit = 100;
    std::string out_pool;      // feature pool, JSONL
    std::string out_groups;    // collected groups, JSONL; optional
};
int cmd_extract(const ExtractArgs& args, std::ostream& out, std::ostream& err);

struct TraindataArgs {
    std::string groups_path;  // collected groups, JSONL
    std::string out_path;     // prompt/completion pairs, JSONL
    std::uint64_t seed = 1;
};
int cmd_traindata(const TraindataArgs& args, std::ostream& out, std::ostream& err);

struct FuzzArgs {
    std::string config_path;
    bool resume = false;          // continue from <campaign_dir>/snapshot.json
    bool explain_config = false;  // print effective config and exit
};
int cmd_fuzz(const FuzzArgs& args, std::ostream& out, std::ostream& err);

struct TriageArgs {
    std::string campaign_dir;
};
int cmd_triage(const TriageArgs& args, std::ostream& out, std::ostream& err);

struct MetricsArgs {
    // Coherence over a group file (provider: deterministic hashed vectors,
    // or the configured embedding endpoint).
    std::string groups_path;
    std::string out_path;  // JSONL records; stdout when empty
    double tau = 0.95;
    std::size_t hash_dim = 256;
    bool use_endpoint = false;
    std::string config_path;

    // Overlap between two coverage-set files.
    std::string jaccard_a;
    std::string jaccard_b;
    std::string unit = "edge";
};
int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err);

// Group-file persistence shared by extract, traindata, and metrics:
// JSONL, one group per line.
void save_groups(const std::vector<FeatureGroup>& groups, const std::string& path);
std::vector<FeatureGroup> load_groups(const std::string& path);

}  // namespace semfuzz
