#include "semfuzz/fuzz_loop.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/group_synthesis.hpp"
#include "semfuzz/metrics.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace semfuzz {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool CampaignState::operator==(const CampaignState& o) const {
    return pool == o.pool && novel == o.novel && global_coverage == o.global_coverage &&
           iteration == o.iteration && stats == o.stats &&
           crash_index == o.crash_index && coverage_curve == o.coverage_curve &&
           rng.state() == o.rng.state();
}

std::vector<Feature> select_seed_set(CampaignState& st, std::size_t k,
                                     std::size_t* novel_count) {
    if (st.pool.empty() && st.novel.empty()) throw EmptyPool();

    const std::uint64_t k_max = std::min<std::uint64_t>(k, st.novel.size());
    const std::uint64_t k_n = st.rng.uniform_int(0, k_max);

    std::vector<Feature> seeds;
    std::unordered_set<std::string> chosen;
    for (const std::string& id : st.novel.dequeue(k_n)) {
        if (const Feature* f = st.pool.find(id)) {
            seeds.push_back(*f);
            chosen.insert(id);
        }
    }
    if (novel_count) *novel_count = seeds.size();
    for (Feature& f : st.pool.sample_excluding(k - seeds.size(), chosen, st.rng)) {
        seeds.push_back(std::move(f));
    }
    if (seeds.empty()) throw EmptyPool();
    return seeds;
}

namespace {

std::string iteration_dir(const std::string& campaign_dir, std::uint64_t iteration) {
    char name[16];
    std::snprintf(name, sizeof name, "%06llu",
                  static_cast<unsigned long long>(iteration));
    return (fs::path(campaign_dir) / name).string();
}

void write_outcome_record(const std::string& dir, const CompileOutcome& outcome,
                          const std::optional<CrashSignature>& sig,
                          std::size_t cov_delta) {
    ordered_json rec;
    rec["status"] = to_string(outcome.status);
    rec["exit_code"] = outcome.exit_code;
    rec["signal"] = outcome.signal;
    rec["timed_out"] = outcome.timed_out;
    rec["stderr_truncated"] = outcome.stderr_truncated;
    rec["wall_time_seconds"] = outcome.wall_time_seconds;
    rec["command"] = outcome.command;
    if (sig) {
        rec["crash_kind"] = to_string(sig->kind);
        rec["crash_key"] = sig->key;
    }
    rec["cov_delta"] = cov_delta;
    write_file((fs::path(dir) / "outcome.rec").string(), rec.dump(2) + "\n");
}

void finalize_iteration(CampaignState& st, IterationReport& rep) {
    ++st.iteration;
    ++st.stats.iterations;
    rep.cov_total = st.global_coverage.size();
    st.coverage_curve.push_back({st.iteration, st.global_coverage.size()});
}

}  // namespace

IterationReport run_iteration(CampaignState& st, const FuzzParams& p,
                              GroupCompleter& completer, Instantiator& inst,
                              Harness& harness) {
    IterationReport rep;
    rep.iteration = st.iteration;

    std::size_t novel_count = 0;
    std::vector<Feature> seeds = select_seed_set(st, p.k, &novel_count);
    std::unordered_set<std::string> seed_ids;
    for (const Feature& f : seeds) {
        rep.seed_ids.push_back(f.id);
        seed_ids.insert(f.id);
    }
    rep.novel_ids.assign(rep.seed_ids.begin(),
                         rep.seed_ids.begin() + static_cast<std::ptrdiff_t>(novel_count));

    FeatureGroup group;
    try {
        group = completer.complete(seeds, p.target_group_size, st.iteration);
    } catch (const Error& e) {
        if (dynamic_cast<const HarnessError*>(&e)) throw;
        // Completion budget exhausted: counted, then fall back to a pure
        // random group so the loop never stalls on model flakiness.
        ++st.stats.model_failures;
        rep.model_failure = true;
        group = FeatureGroup{};
        group.source = GroupSource::random;
        for (Feature& f : st.pool.sample(p.target_group_size, st.rng)) {
            group.add(std::move(f));
        }
        if (group.size() == 0) {
            finalize_iteration(st, rep);
            return rep;
        }
    }
    rep.group_ids = group.ids();
    std::sort(rep.group_ids.begin(), rep.group_ids.end());

    SourceProgram program;
    try {
        program = inst.instantiate(group, st.iteration);
    } catch (const Error& e) {
        if (dynamic_cast<const HarnessError*>(&e)) throw;
        ++st.stats.model_failures;
        rep.model_failure = true;
        finalize_iteration(st, rep);
        return rep;
    }

    const std::string workdir =
        p.campaign_dir.empty() ? "" : iteration_dir(p.campaign_dir, st.iteration);
    CompileOutcome outcome = harness.compile(program, workdir);
    ++st.stats.generated;
    rep.status = outcome.status;
    switch (outcome.status) {
        case CompileStatus::Valid: ++st.stats.valid; break;
        case CompileStatus::Reject: ++st.stats.rejects; break;
        case CompileStatus::Hang: ++st.stats.hangs; break;
        case CompileStatus::Oom: ++st.stats.ooms; break;
        case CompileStatus::Crash: {
            ++st.stats.crashes_total;
            const CrashSignature sig = classify_crash(outcome);
            rep.signature = sig;
            const std::string bucket = to_string(sig.kind) + ":" + sig.key;
            if (st.crash_index.emplace(bucket, st.iteration).second) {
                ++st.stats.crashes_unique;
            }
            break;
        }
    }

    CoverageMap snap;
    try {
        snap = harness.coverage();
    } catch (const CoverageUnavailable&) {
        ++st.stats.coverage_failures;
        snap.unit_kind = st.global_coverage.unit_kind;
    }
    rep.cov_delta = merge_coverage(st.global_coverage, snap);

    if (rep.cov_delta > 0) {
        // Optimistic promotion: everything the completion added beyond the
        // seeds graduates into the pool and the novel queue, and the whole
        // group shares the credit.
        for (const Feature& f : group.features) {
            if (seed_ids.count(f.id)) continue;
            st.pool.insert(f);
            const bool capped =
                p.novel_queue_cap > 0 && st.novel.size() >= p.novel_queue_cap;
            if (!capped && st.novel.enqueue(f.id)) {
                rep.promoted_ids.push_back(f.id);
                ++st.stats.promotions;
            }
        }
        for (const Feature& f : group.features) {
            st.pool.add_reward(f.id);
        }
    }

    if (!workdir.empty()) {
        write_outcome_record(workdir, outcome, rep.signature, rep.cov_delta);
        if (!p.keep_artifacts && outcome.status != CompileStatus::Crash) {
            std::error_code ec;
            fs::remove_all(workdir, ec);
        }
    }

    finalize_iteration(st, rep);
    return rep;
}

namespace {

void write_campaign_report(const CampaignState& st,
                           const std::vector<IterationReport>& reports,
                           const std::string& dir) {
    const ValidityStats validity = campaign_validity_stats(reports);
    ordered_json doc;
    doc["iterations"] = st.stats.iterations;
    doc["stats"] = {
        {"generated", st.stats.generated},
        {"valid", st.stats.valid},
        {"rejects", st.stats.rejects},
        {"crashes_total", st.stats.crashes_total},
        {"crashes_unique", st.stats.crashes_unique},
        {"hangs", st.stats.hangs},
        {"ooms", st.stats.ooms},
        {"model_failures", st.stats.model_failures},
        {"coverage_failures", st.stats.coverage_failures},
        {"promotions", st.stats.promotions},
    };
    doc["validity"] = {
        {"valid_rate", validity.valid_rate},
        {"crash_on_valid", validity.crash_on_valid},
        {"crashes_counted_valid", validity.crashes_counted_valid},
    };
    doc["coverage_total"] = st.global_coverage.size();
    ordered_json curve = ordered_json::array();
    for (const CoveragePoint& pt : st.coverage_curve) {
        curve.push_back({pt.iteration, pt.covered});
    }
    doc["coverage_curve"] = std::move(curve);
    ordered_json crashes = ordered_json::array();
    for (const auto& [bucket, first_seen] : st.crash_index) {
        crashes.push_back({{"bucket", bucket}, {"first_seen", first_seen}});
    }
    doc["crash_buckets"] = std::move(crashes);
    write_file((fs::path(dir) / "report.json").string(), doc.dump(2) + "\n");

    std::string summary;
    summary += "iterations: " + std::to_string(st.stats.iterations) + "\n";
    summary += "generated: " + std::to_string(st.stats.generated) + "\n";
    summary += "valid: " + std::to_string(st.stats.valid) + "\n";
    summary += "rejects: " + std::to_string(st.stats.rejects) + "\n";
    summary += "crashes (unique/total): " + std::to_string(st.stats.crashes_unique) +
               "/" + std::to_string(st.stats.crashes_total) + "\n";
    summary += "hangs: " + std::to_string(st.stats.hangs) + "\n";
    summary += "ooms: " + std::to_string(st.stats.ooms) + "\n";
    summary += "model failures: " + std::to_string(st.stats.model_failures) + "\n";
    summary += "coverage units: " + std::to_string(st.global_coverage.size()) + "\n";
    char rate[64];
    std::snprintf(rate, sizeof rate, "valid rate: %.4f\n", validity.valid_rate);
    summary += rate;
    write_file((fs::path(dir) / "summary.txt").string(), summary);
}

}  // namespace

CampaignResult run_campaign(CampaignState& st, const FuzzParams& p,
                            GroupCompleter& completer, Instantiator& inst,
                            Harness& harness) {
    CampaignResult result;
    const bool has_iterations = p.max_iterations > 0;
    const bool has_wall_clock = p.wall_clock_budget_seconds > 0.0;
    const auto start = std::chrono::steady_clock::now();

    if (!p.campaign_dir.empty()) {
        std::error_code ec;
        fs::create_directories(p.campaign_dir, ec);
        if (ec) throw HarnessError("cannot create campaign dir " + p.campaign_dir);
    }
    const std::string snapshot_path =
        p.campaign_dir.empty() ? "" : (fs::path(p.campaign_dir) / "snapshot.json").string();

    if (!has_iterations && !has_wall_clock) {
        result.stats = st.stats;
        return result;
    }

    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    };

    while ((!has_iterations || st.iteration < p.max_iterations) &&
           (!has_wall_clock || elapsed() < p.wall_clock_budget_seconds)) {
        try {
            result.reports.push_back(run_iteration(st, p, completer, inst, harness));
        } catch (const HarnessError&) {
            if (!snapshot_path.empty()) save_snapshot(st, snapshot_path);
            throw;
        }
        if (!snapshot_path.empty() && p.snapshot_every > 0 &&
            st.iteration % p.snapshot_every == 0) {
            save_snapshot(st, snapshot_path);
        }
    }

    if (!snapshot_path.empty()) {
        save_snapshot(st, snapshot_path);
        write_campaign_report(st, result.reports, p.campaign_dir);
    }
    result.stats = st.stats;
    return result;
}

void save_snapshot(const CampaignState& st, const std::string& path) {
    ordered_json doc;
    doc["format"] = 1;
    doc["iteration"] = st.iteration;
    doc["rng_state"] = st.rng.state();

    ordered_json pool = ordered_json::array();
    for (const std::string& id : st.pool.insertion_log()) {
        const Feature& f = st.pool.at(id);
        pool.push_back({{"id", f.id},
                        {"description", f.description},
                        {"witness", f.witness},
                        {"origin", f.origin.to_string()},
                        {"reward", f.reward}});
    }
    doc["pool"] = std::move(pool);
    doc["novel"] = st.novel.snapshot();
    doc["coverage"] = {{"unit_kind", to_string(st.global_coverage.unit_kind)},
                       {"covered", st.global_coverage.sorted_units()}};
    doc["stats"] = {
        {"iterations", st.stats.iterations},
        {"generated", st.stats.generated},
        {"valid", st.stats.valid},
        {"rejects", st.stats.rejects},
        {"crashes_total", st.stats.crashes_total},
        {"crashes_unique", st.stats.crashes_unique},
        {"hangs", st.stats.hangs},
        {"ooms", st.stats.ooms},
        {"model_failures", st.stats.model_failures},
        {"coverage_failures", st.stats.coverage_failures},
        {"promotions", st.stats.promotions},
    };
    doc["crash_index"] = st.crash_index;
    ordered_json curve = ordered_json::array();
    for (const CoveragePoint& pt : st.coverage_curve) {
        curve.push_back({pt.iteration, pt.covered});
    }
    doc["curve"] = std::move(curve);

    write_file(path, doc.dump(2) + "\n");
}

CampaignState load_snapshot(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed snapshot: ") + e.what(), 1);
    }
    try {
        if (doc.at("format").get<int>() != 1) {
            throw IoError("unsupported snapshot format in " + path);
        }
        CampaignState st;
        st.iteration = doc.at("iteration").get<std::uint64_t>();
        st.rng.set_state(doc.at("rng_state").get<std::uint64_t>());
        for (const json& rec : doc.at("pool")) {
            Feature f;
            f.id = rec.at("id").get<std::string>();
            f.description = rec.at("description").get<std::string>();
            f.witness = rec.at("witness").get<std::string>();
            f.origin = FeatureOrigin::parse(rec.at("origin").get<std::string>());
            f.reward = rec.at("reward").get<std::uint64_t>();
            st.pool.insert(f);
        }
        st.novel.restore(doc.at("novel").get<std::vector<std::string>>());
        st.global_coverage.unit_kind =
            coverage_unit_from_string(doc.at("coverage").at("unit_kind").get<std::string>());
        for (const json& unit : doc.at("coverage").at("covered")) {
            st.global_coverage.covered.insert(unit.get<std::string>());
        }
        const json& stats = doc.at("stats");
        st.stats.iterations = stats.at("iterations").get<std::uint64_t>();
        st.stats.generated = stats.at("generated").get<std::uint64_t>();
        st.stats.valid = stats.at("valid").get<std::uint64_t>();
        st.stats.rejects = stats.at("rejects").get<std::uint64_t>();
        st.stats.crashes_total = stats.at("crashes_total").get<std::uint64_t>();
        st.stats.crashes_unique = stats.at("crashes_unique").get<std::uint64_t>();
        st.stats.hangs = stats.at("hangs").get<std::uint64_t>();
        st.stats.ooms = stats.at("ooms").get<std::uint64_t>();
        st.stats.model_failures = stats.at("model_failures").get<std::uint64_t>();
        st.stats.coverage_failures = stats.at("coverage_failures").get<std::uint64_t>();
        st.stats.promotions = stats.at("promotions").get<std::uint64_t>();
        st.crash_index =
            doc.at("crash_index").get<std::map<std::string, std::uint64_t>>();
        for (const json& pt : doc.at("curve")) {
            st.coverage_curve.push_back(
                {pt.at(0).get<std::uint64_t>(), pt.at(1).get<std::size_t>()});
        }
        return st;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed snapshot: ") + e.what(), 1);
    }
}

FeatureGroup ModelGroupCompleter::complete(const std::vector<Feature>& seed,
                                           std::size_t target_size,
                                           std::uint64_t iteration) {
    return complete_group(seed, target_size, client_, iteration);
}

SourceProgram ModelInstantiator::instantiate(const FeatureGroup& g,
                                             std::uint64_t iteration) {
    (void)iteration;
    return semfuzz::instantiate(g, client_, retries_);
}

CompileOutcome CompilerHarness::compile(const SourceProgram& prog,
                                        const std::string& workdir) {
    CompilerConfig cfg = cfg_;
    if (!workdir.empty()) cfg.workdir = workdir;
    return run_compile(prog, cfg);
}

CoverageMap CompilerHarness::coverage() { return measure_coverage(cov_, cfg_); }

}  // namespace semfuzz
