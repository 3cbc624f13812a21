#include "semfuzz/commands.hpp"

#include "semfuzz/config.hpp"
#include "semfuzz/coverage.hpp"
#include "semfuzz/errors.hpp"
#include "semfuzz/extraction.hpp"
#include "semfuzz/fuzz_loop.hpp"
#include "semfuzz/group_synthesis.hpp"
#include "semfuzz/metrics.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace semfuzz {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void save_groups(const std::vector<FeatureGroup>& groups, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const FeatureGroup& g : groups) {
        ordered_json rec;
        rec["source"] = to_string(g.source);
        rec["parent_bug"] = g.parent_bug ? json(*g.parent_bug) : json(nullptr);
        ordered_json members = ordered_json::array();
        for (const Feature& f : g.features) {
            members.push_back({{"id", f.id},
                               {"description", f.description},
                               {"witness", f.witness},
                               {"origin", f.origin.to_string()},
                               {"reward", f.reward}});
        }
        rec["features"] = std::move(members);
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

std::vector<FeatureGroup> load_groups(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");
    std::vector<FeatureGroup> groups;
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        ++record;
        if (trim(line).empty()) continue;
        try {
            json rec = json::parse(line);
            FeatureGroup g;
            g.source = group_source_from_string(rec.at("source").get<std::string>());
            if (!rec.at("parent_bug").is_null()) {
                g.parent_bug = rec.at("parent_bug").get<std::string>();
            }
            for (const json& m : rec.at("features")) {
                Feature f;
                f.id = m.at("id").get<std::string>();
                f.description = m.at("description").get<std::string>();
                f.witness = m.at("witness").get<std::string>();
                f.origin = FeatureOrigin::parse(m.at("origin").get<std::string>());
                f.reward = m.at("reward").get<std::uint64_t>();
                if (f.id != Feature::id_for(f.description)) {
                    throw IoError("feature id does not match its description");
                }
                g.add(std::move(f));
            }
            groups.push_back(std::move(g));
        } catch (const json::exception& e) {
            throw FormatError(std::string("malformed group record: ") + e.what(), record);
        } catch (const IoError& e) {
            throw FormatError(e.what(), record);
        }
    }
    return groups;
}

namespace {

void configure_client(ChatClient& client, const CampaignConfig& cfg) {
    for (const auto& [role, ep] : cfg.models) {
        client.set_endpoint(model_role_from_string(role), ep);
    }
    client.set_max_retries(cfg.group_retries);
    client.set_archive(cfg.archive_mode, cfg.archive_path);
}

CampaignConfig config_or_default(const std::string& path) {
    return path.empty() ? default_config() : load_config(path);
}

}  // namespace

int cmd_extract(const ExtractArgs& args, std::ostream& out, std::ostream& err) {
    try {
        if (args.out_pool.empty()) {
            err << "extract: an output pool path is required\n";
            return 1;
        }
        if (args.fixtures_dir.empty() == args.tracker_url.empty()) {
            err << "extract: exactly one of --fixtures / --tracker is required\n";
            return 1;
        }
        const CampaignConfig cfg = config_or_default(args.config_path);
        ChatClient client;
        configure_client(client, cfg);

        std::unique_ptr<ArtifactSource> source;
        if (!args.fixtures_dir.empty()) {
            source = std::make_unique<FixtureArtifactSource>(args.fixtures_dir);
        } else {
            source = std::make_unique<HttpArtifactSource>(args.tracker_url);
        }

        FeaturePool pool;
        std::vector<FeatureGroup> groups;
        const ExtractionStats stats = extract_features(*source, args.query, args.limit,
                                                       client, pool, &groups);
        pool.save(args.out_pool);
        if (!args.out_groups.empty()) save_groups(groups, args.out_groups);

        out << "bugs: " << stats.bugs << "\n"
            << "groups: " << stats.groups << "\n"
            << "features: " << stats.features << "\n"
            << "skipped: " << stats.skipped << "\n"
            << "parse_errors: " << stats.parse_errors << "\n"
            << "pool: " << pool.size() << " features -> " << args.out_pool << "\n";
        return 0;
    } catch (const Error& e) {
        err << "extract: " << e.what() << "\n";
        return 1;
    }
}

int cmd_traindata(const TraindataArgs& args, std::ostream& out, std::ostream& err) {
    try {
        if (args.groups_path.empty() || args.out_path.empty()) {
            err << "traindata: --groups and --out are required\n";
            return 1;
        }
        const std::vector<FeatureGroup> groups = load_groups(args.groups_path);
        Rng rng(args.seed);
        const TrainingDatasetStats stats =
            export_training_dataset(groups, args.out_path, rng);
        out << "groups_in: " << stats.groups_in << "\n"
            << "groups_skipped: " << stats.groups_skipped << "\n"
            << "pairs_out: " << stats.pairs_out << " -> " << args.out_path << "\n";
        return 0;
    } catch (const Error& e) {
        err << "traindata: " << e.what() << "\n";
        return 1;
    }
}

int cmd_fuzz(const FuzzArgs& args, std::ostream& out, std::ostream& err) {
    CampaignConfig cfg;
    try {
        if (args.config_path.empty()) {
            err << "fuzz: --config is required\n";
            return 1;
        }
        cfg = load_config(args.config_path);
        if (args.explain_config) {
            out << explain_config(cfg);
            return 0;
        }
    } catch (const Error& e) {
        err << "fuzz: " << e.what() << "\n";
        return 1;
    }

    try {
        ChatClient client;
        configure_client(client, cfg);

        CampaignState state;
        const std::string snapshot_path =
            cfg.fuzz.campaign_dir.empty()
                ? ""
                : (fs::path(cfg.fuzz.campaign_dir) / "snapshot.json").string();
        if (args.resume) {
            if (snapshot_path.empty()) {
                err << "fuzz: resume requires fuzz.campaign_dir\n";
                return 1;
            }
            state = load_snapshot(snapshot_path);
        } else {
            if (!cfg.pool_path.empty()) state.pool = FeaturePool::load(cfg.pool_path);
            state.rng = Rng(cfg.rng_seed);
            state.global_coverage.unit_kind =
                cfg.compiler.coverage_mode == CoverageMode::line_report
                    ? CoverageUnit::line
                    : CoverageUnit::edge;
        }

        ModelGroupCompleter completer(client);
        ModelInstantiator instantiator(client, cfg.instantiate_retries);
        CompilerHarness harness(cfg.compiler, cfg.coverage);

        const CampaignResult result =
            run_campaign(state, cfg.fuzz, completer, instantiator, harness);

        out << "iterations: " << state.stats.iterations << "\n"
            << "generated: " << state.stats.generated << "\n"
            << "valid: " << state.stats.valid << "\n"
            << "rejects: " << state.stats.rejects << "\n"
            << "crashes_unique: " << state.stats.crashes_unique << "\n"
            << "crashes_total: " << state.stats.crashes_total << "\n"
            << "hangs: " << state.stats.hangs << "\n"
            << "ooms: " << state.stats.ooms << "\n"
            << "model_failures: " << state.stats.model_failures << "\n"
            << "coverage_units: " << state.global_coverage.size() << "\n";
        if (!cfg.fuzz.campaign_dir.empty()) {
            out << "campaign: " << cfg.fuzz.campaign_dir << "\n";
        }
        (void)result;
        return 0;
    } catch (const HarnessError& e) {
        err << "fuzz: fatal: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "fuzz: " << e.what() << "\n";
        return 1;
    }
}

namespace {

struct TriageBucket {
    std::string kind;
    std::string key;
    std::uint64_t first_seen = 0;
    std::size_t count = 0;
    std::vector<std::string> command;
    std::string stderr_sample;
    std::string dir;
};

std::string first_lines(const std::string& text, std::size_t n) {
    std::string sample;
    std::size_t taken = 0;
    for (const std::string& line : split_lines(text)) {
        if (trim(line).empty()) continue;
        if (taken++ == n) break;
        sample += line;
        sample += '\n';
    }
    return sample;
}

}  // namespace

int cmd_triage(const TriageArgs& args, std::ostream& out, std::ostream& err) {
    try {
        if (!fs::is_directory(args.campaign_dir)) {
            err << "triage: campaign directory not found: " << args.campaign_dir << "\n";
            return 1;
        }
        std::vector<fs::path> iteration_dirs;
        for (const auto& entry : fs::directory_iterator(args.campaign_dir)) {
            if (entry.is_directory()) iteration_dirs.push_back(entry.path());
        }
        std::sort(iteration_dirs.begin(), iteration_dirs.end());

        std::map<std::pair<std::string, std::string>, TriageBucket> buckets;
        for (const fs::path& dir : iteration_dirs) {
            const fs::path rec_path = dir / "outcome.rec";
            std::error_code ec;
            if (!fs::exists(rec_path, ec) || ec) continue;
            json rec;
            try {
                rec = json::parse(read_file(rec_path.string()));
            } catch (const json::exception&) {
                continue;
            }
            if (!rec.contains("crash_kind")) continue;
            const std::string kind = rec.at("crash_kind").get<std::string>();
            const std::string key = rec.at("crash_key").get<std::string>();
            const std::uint64_t iter = std::stoull(dir.filename().string());
            auto [it, fresh] = buckets.try_emplace({kind, key});
            TriageBucket& b = it->second;
            ++b.count;
            if (fresh || iter < b.first_seen) {
                b.kind = kind;
                b.key = key;
                b.first_seen = iter;
                b.command = rec.value("command", std::vector<std::string>{});
                b.dir = dir.string();
                std::error_code sec;
                const fs::path stderr_path = dir / "stderr.txt";
                if (fs::exists(stderr_path, sec) && !sec) {
                    b.stderr_sample = first_lines(read_file(stderr_path.string()), 3);
                }
            }
        }

        ordered_json machine = ordered_json::array();
        if (buckets.empty()) {
            out << "no crashes recorded\n";
        }
        for (const auto& [bucket_key, b] : buckets) {
            out << b.kind << " " << b.key << "\n"
                << "  first seen: iteration " << b.first_seen << "\n"
                << "  occurrences: " << b.count << "\n";
            if (!b.command.empty()) {
                out << "  repro:";
                for (const std::string& part : b.command) out << " " << part;
                out << "\n";
            }
            if (!b.stderr_sample.empty()) {
                out << "  stderr: " << first_lines(b.stderr_sample, 1);
            }
            machine.push_back({{"kind", b.kind},
                               {"key", b.key},
                               {"first_seen", b.first_seen},
                               {"count", b.count},
                               {"command", b.command},
                               {"stderr_sample", b.stderr_sample},
                               {"dir", b.dir}});
        }
        write_file((fs::path(args.campaign_dir) / "triage.json").string(),
                   machine.dump(2) + "\n");
        return 0;
    } catch (const Error& e) {
        err << "triage: " << e.what() << "\n";
        return 1;
    }
}

int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const bool jaccard_mode = !args.jaccard_a.empty() || !args.jaccard_b.empty();
        const bool groups_mode = !args.groups_path.empty();
        if (jaccard_mode == groups_mode) {
            err << "metrics: exactly one of --groups / --jaccard-a+--jaccard-b is "
                   "required\n";
            return 1;
        }

        if (jaccard_mode) {
            if (args.jaccard_a.empty() || args.jaccard_b.empty()) {
                err << "metrics: both --jaccard-a and --jaccard-b are required\n";
                return 1;
            }
            const CoverageUnit unit = coverage_unit_from_string(args.unit);
            const CoverageMap a = load_coverage_set(args.jaccard_a, unit);
            const CoverageMap b = load_coverage_set(args.jaccard_b, unit);
            const JaccardResult j = jaccard(a, b);
            char line[160];
            std::snprintf(line, sizeof line,
                          "jaccard = %.6f (%.2f%%), |A| = %zu, |B| = %zu%s\n", j.value,
                          j.value * 100.0, a.size(), b.size(),
                          j.both_empty ? ", degenerate: both sets empty" : "");
            out << line;
            return 0;
        }

        std::unique_ptr<EmbeddingProvider> provider;
        ChatClient client;
        if (args.use_endpoint) {
            configure_client(client, config_or_default(args.config_path));
            provider = std::make_unique<ClientEmbeddingProvider>(client);
        } else {
            provider = std::make_unique<HashEmbeddingProvider>(args.hash_dim);
        }

        const std::vector<FeatureGroup> groups = load_groups(args.groups_path);
        std::ofstream file;
        if (!args.out_path.empty()) {
            file.open(args.out_path, std::ios::trunc);
            if (!file) throw IoError("cannot open " + args.out_path + " for writing");
        }
        std::ostream& sink = args.out_path.empty() ? out : file;

        std::size_t scored = 0, skipped = 0;
        for (const FeatureGroup& g : groups) {
            if (g.size() < 2) {
                ++skipped;
                continue;
            }
            const GroupCoherenceRecord rec = score_group(g, *provider, args.tau);
            ordered_json doc = {{"group_id", rec.group_id},
                                {"size", g.size()},
                                {"redundancy", rec.score.redundancy},
                                {"diameter", rec.score.diameter},
                                {"pair_count", rec.score.pair_count},
                                {"filtered_count", rec.score.filtered_count}};
            sink << doc.dump() << '\n';
            ++scored;
        }
        err << "scored: " << scored << ", skipped (size < 2): " << skipped << "\n";
        return 0;
    } catch (const Error& e) {
        err << "metrics: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace semfuzz
