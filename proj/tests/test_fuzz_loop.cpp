#include <doctest.h>

#include "semfuzz/errors.hpp"
#include "semfuzz/fuzz_loop.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

using namespace semfuzz;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Feature mk(const std::string& desc) {
    return Feature::make(desc, "", FeatureOrigin::manual());
}

CampaignState fresh_state(std::size_t pool_features, std::uint64_t seed = 1) {
    CampaignState st;
    for (std::size_t i = 0; i < pool_features; ++i) {
        st.pool.insert(mk("The code should do thing " + std::to_string(i) + "."));
    }
    st.rng = Rng(seed);
    st.global_coverage.unit_kind = CoverageUnit::edge;
    return st;
}

// Completes groups by appending synthetic glue features.
struct GlueCompleter : GroupCompleter {
    int calls = 0;
    bool fail = false;
    FeatureGroup complete(const std::vector<Feature>& seed, std::size_t target_size,
                          std::uint64_t iteration) override {
        ++calls;
        if (fail) throw ModelError("completion refused");
        FeatureGroup g;
        g.source = GroupSource::synthesized;
        for (const Feature& f : seed) g.add(f);
        std::size_t n = 0;
        while (g.size() < target_size) {
            g.add(Feature::make("The code should glue " + std::to_string(iteration) +
                                    "-" + std::to_string(n++) + ".",
                                "", FeatureOrigin::glue(iteration)));
        }
        return g;
    }
};

struct EchoInstantiator : Instantiator {
    int calls = 0;
    bool fail = false;
    SourceProgram instantiate(const FeatureGroup& g, std::uint64_t) override {
        ++calls;
        if (fail) throw InstantiationFailed("no code");
        SourceProgram p;
        p.code = "int main() { return 0; }\n";
        p.group_id = group_content_id(g);
        return p;
    }
};

// Replays a fixed plan of outcomes and per-iteration coverage snapshots.
struct ScriptedHarness : Harness {
    struct Step {
        CompileStatus status = CompileStatus::Valid;
        std::vector<std::string> new_units;
        std::string stderr_text;
        int signal = 0;
    };
    std::vector<Step> plan;
    std::size_t cursor = 0;
    std::unordered_set<std::string> seen;
    bool coverage_throws = false;

    CompileOutcome compile(const SourceProgram&, const std::string& workdir) override {
        if (!workdir.empty()) fs::create_directories(workdir);
        const Step& step = plan.at(cursor++);
        CompileOutcome o;
        o.status = step.status;
        o.exit_code = step.status == CompileStatus::Valid ? 0 : 1;
        o.signal = step.signal;
        o.stderr_text = step.stderr_text;
        for (const std::string& u : step.new_units) seen.insert(u);
        return o;
    }
    CoverageMap coverage() override {
        if (coverage_throws) throw CoverageUnavailable("bitmap missing");
        CoverageMap m;
        m.unit_kind = CoverageUnit::edge;
        m.covered = seen;
        return m;
    }
};

ScriptedHarness::Step valid_step(std::vector<std::string> units) {
    return {CompileStatus::Valid, std::move(units), "", 0};
}

}  // namespace

TEST_CASE("select_seed_set draws k_n from the queue then fills from the pool") {
    CampaignState st = fresh_state(6);
    // queue two known features
    const std::string qa = st.pool.insertion_log()[0];
    const std::string qb = st.pool.insertion_log()[1];
    st.novel.enqueue(qa);
    st.novel.enqueue(qb);

    bool saw_novel = false;
    for (int i = 0; i < 40 && !saw_novel; ++i) {
        CampaignState trial = fresh_state(6, 1000 + i);
        trial.novel.enqueue(qa);
        trial.novel.enqueue(qb);
        std::size_t novel_count = 0;
        const auto seeds = select_seed_set(trial, 2, &novel_count);
        CHECK(seeds.size() == 2);
        std::set<std::string> ids;
        for (const auto& f : seeds) ids.insert(f.id);
        CHECK(ids.size() == 2);  // distinct
        if (novel_count > 0) {
            saw_novel = true;
            // dequeued seeds come first and left the queue
            CHECK(seeds[0].id == qa);
            CHECK_FALSE(trial.novel.contains(qa));
        }
    }
    CHECK(saw_novel);
}

TEST_CASE("k_n is uniform over 0..min(k, queue size)") {
    std::map<std::size_t, int> counts;
    CampaignState st = fresh_state(8);
    const std::string qa = st.pool.insertion_log()[0];
    const std::string qb = st.pool.insertion_log()[1];
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
        st.novel.enqueue(qa);
        st.novel.enqueue(qb);
        std::size_t novel_count = 0;
        select_seed_set(st, 2, &novel_count);
        counts[novel_count]++;
        // reset the queue for the next trial
        st.novel.dequeue(10);
    }
    // three outcomes, p = 1/3 each: 3 sigma ~ 141 around 3333
    for (std::size_t k_n : {0u, 1u, 2u}) {
        CHECK(counts[k_n] > 3333 - 142);
        CHECK(counts[k_n] < 3334 + 142);
    }
}

TEST_CASE("an empty novel queue still consumes one rng draw") {
    // the k_n draw happens unconditionally, so two states that differ only
    // in queue content stay stream-aligned
    CampaignState st = fresh_state(5, 42);
    Rng reference(42);
    (void)reference.uniform_int(0, 0);  // the k_n draw
    select_seed_set(st, 2);
    // after selection both rngs must agree: pool sampling consumed
    // identical draws from the same offset
    CampaignState st2 = fresh_state(5, 42);
    select_seed_set(st2, 2);
    CHECK(st.rng.state() == st2.rng.state());
}

TEST_CASE("select_seed_set throws EmptyPool when nothing is available") {
    CampaignState st;
    st.rng = Rng(1);
    CHECK_THROWS_AS(select_seed_set(st, 2), EmptyPool);
}

TEST_CASE("seeds from an exhausted pool can be fewer than k") {
    CampaignState st = fresh_state(1);
    const auto seeds = select_seed_set(st, 2);
    CHECK(seeds.size() == 1);
}

TEST_CASE("run_iteration promotes glue on coverage gain") {
    CampaignState st = fresh_state(4);
    FuzzParams p;
    p.k = 2;
    p.target_group_size = 4;

    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    harness.plan = {valid_step({"e1", "e2"})};

    const IterationReport rep = run_iteration(st, p, completer, inst, harness);
    CHECK(rep.iteration == 0);
    CHECK(rep.status == CompileStatus::Valid);
    CHECK(rep.cov_delta == 2);
    CHECK(rep.cov_total == 2);
    CHECK(rep.group_ids.size() == 4);
    CHECK(std::is_sorted(rep.group_ids.begin(), rep.group_ids.end()));

    // the two glue features joined pool and queue
    CHECK(rep.promoted_ids.size() == 2);
    for (const std::string& id : rep.promoted_ids) {
        CHECK(st.pool.contains(id));
        CHECK(st.novel.contains(id));
    }
    // seeds were not re-promoted
    for (const std::string& id : rep.seed_ids) {
        CHECK(std::find(rep.promoted_ids.begin(), rep.promoted_ids.end(), id) ==
              rep.promoted_ids.end());
    }
    // every group member was rewarded
    for (const std::string& id : rep.group_ids) CHECK(st.pool.at(id).reward == 1);

    CHECK(st.iteration == 1);
    CHECK(st.stats.iterations == 1);
    CHECK(st.stats.generated == 1);
    CHECK(st.stats.valid == 1);
    CHECK(st.stats.promotions == 2);
    REQUIRE(st.coverage_curve.size() == 1);
    CHECK(st.coverage_curve[0] == CoveragePoint{1, 2});
}

TEST_CASE("no promotion without coverage gain") {
    CampaignState st = fresh_state(4);
    FuzzParams p;

    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    harness.plan = {valid_step({"e1"}), valid_step({})};

    run_iteration(st, p, completer, inst, harness);
    const std::size_t pool_before = st.pool.size();
    std::map<std::string, double> rewards_before;
    for (const std::string& id : st.pool.insertion_log()) {
        rewards_before[id] = st.pool.at(id).reward;
    }
    const IterationReport rep = run_iteration(st, p, completer, inst, harness);
    CHECK(rep.cov_delta == 0);
    CHECK(rep.promoted_ids.empty());
    CHECK(st.pool.size() == pool_before);
    for (const auto& [id, reward] : rewards_before) {
        CHECK(st.pool.at(id).reward == reward);
    }
}

TEST_CASE("crashes are bucketed and deduplicated") {
    CampaignState st = fresh_state(4);
    FuzzParams p;

    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    const std::string ice =
        "x.c:1:1: internal compiler error: in fold, at fold-const.c:100\n";
    harness.plan = {
        {CompileStatus::Crash, {"a"}, ice, 11},
        {CompileStatus::Crash, {}, ice, 11},
        {CompileStatus::Crash, {}, "y.c:9:2: internal compiler error: in expand\n", 11},
    };

    const IterationReport r1 = run_iteration(st, p, completer, inst, harness);
    REQUIRE(r1.signature.has_value());
    CHECK(r1.signature->kind == CrashKind::InternalError);
    run_iteration(st, p, completer, inst, harness);
    run_iteration(st, p, completer, inst, harness);

    CHECK(st.stats.crashes_total == 3);
    CHECK(st.stats.crashes_unique == 2);
    CHECK(st.crash_index.size() == 2);
    // first_seen records the earliest iteration
    std::vector<std::uint64_t> seen;
    for (const auto& [key, iter] : st.crash_index) seen.push_back(iter);
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<std::uint64_t>{0, 2});
}

TEST_CASE("completion failure falls back to a random group") {
    CampaignState st = fresh_state(6);
    FuzzParams p;
    p.target_group_size = 3;

    GlueCompleter completer;
    completer.fail = true;
    EchoInstantiator inst;
    ScriptedHarness harness;
    harness.plan = {valid_step({"x"})};

    const IterationReport rep = run_iteration(st, p, completer, inst, harness);
    CHECK(rep.model_failure);
    CHECK(st.stats.model_failures == 1);
    // the iteration still ran a program drawn fresh from the pool
    CHECK(rep.status == CompileStatus::Valid);
    CHECK(rep.group_ids.size() == 3);
    CHECK(st.stats.generated == 1);
}

TEST_CASE("instantiation failure ends the iteration but not the campaign") {
    CampaignState st = fresh_state(4);
    FuzzParams p;

    GlueCompleter completer;
    EchoInstantiator inst;
    inst.fail = true;
    ScriptedHarness harness;  // never reached

    const IterationReport rep = run_iteration(st, p, completer, inst, harness);
    CHECK(rep.model_failure);
    CHECK_FALSE(rep.status.has_value());
    CHECK(st.stats.model_failures == 1);
    CHECK(st.stats.generated == 0);
    CHECK(st.iteration == 1);
    REQUIRE(st.coverage_curve.size() == 1);
    CHECK(st.coverage_curve[0].covered == 0);
}

TEST_CASE("harness errors abort the iteration loudly") {
    CampaignState st = fresh_state(4);
    FuzzParams p;
    GlueCompleter completer;
    EchoInstantiator inst;
    struct BrokenHarness : Harness {
        CompileOutcome compile(const SourceProgram&, const std::string&) override {
            throw HarnessError("compiler binary vanished");
        }
        CoverageMap coverage() override { return {}; }
    } harness;
    CHECK_THROWS_AS(run_iteration(st, p, completer, inst, harness), HarnessError);
}

TEST_CASE("coverage failure degrades to no feedback") {
    CampaignState st = fresh_state(4);
    FuzzParams p;
    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    harness.plan = {valid_step({"u1", "u2"})};
    harness.coverage_throws = true;

    const IterationReport rep = run_iteration(st, p, completer, inst, harness);
    CHECK(rep.cov_delta == 0);
    CHECK(rep.promoted_ids.empty());
    CHECK(st.stats.coverage_failures == 1);
    CHECK(st.stats.generated == 1);
}

TEST_CASE("novel queue cap blocks enqueue but not pool insertion or reward") {
    CampaignState st = fresh_state(2);
    FuzzParams p;
    p.k = 2;
    p.target_group_size = 4;
    p.novel_queue_cap = 1;

    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    harness.plan = {valid_step({"c1", "c2"})};

    const IterationReport rep = run_iteration(st, p, completer, inst, harness);
    // two glue features earned promotion but only one queue slot existed
    CHECK(st.novel.size() == 1);
    CHECK(rep.promoted_ids.size() == 1);
    std::size_t glue_in_pool = 0;
    for (const std::string& id : rep.group_ids) {
        if (st.pool.contains(id)) {
            CHECK(st.pool.at(id).reward == 1);
            ++glue_in_pool;
        }
    }
    CHECK(glue_in_pool == 4);  // all glue entered the pool regardless
}

TEST_CASE("run_campaign honors the absolute iteration budget") {
    const fs::path dir =
        fs::temp_directory_path() / ("semfuzz_campaign_" + std::to_string(::getpid()));
    fs::remove_all(dir);

    CampaignState st = fresh_state(4);
    FuzzParams p;
    p.max_iterations = 5;
    p.snapshot_every = 2;
    p.campaign_dir = dir.string();

    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    for (int i = 0; i < 5; ++i) {
        harness.plan.push_back(valid_step({"edge" + std::to_string(i)}));
    }

    const CampaignResult result = run_campaign(st, p, completer, inst, harness);
    CHECK(result.reports.size() == 5);
    CHECK(st.iteration == 5);
    CHECK(result.stats == st.stats);
    CHECK(fs::exists(dir / "snapshot.json"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "summary.txt"));

    // coverage curve is monotone
    for (std::size_t i = 1; i < st.coverage_curve.size(); ++i) {
        CHECK(st.coverage_curve[i].covered >= st.coverage_curve[i - 1].covered);
    }

    SUBCASE("a resumed campaign runs only the remainder") {
        CampaignState resumed = load_snapshot((dir / "snapshot.json").string());
        CHECK(resumed == st);
        FuzzParams p2 = p;
        p2.max_iterations = 7;
        ScriptedHarness harness2;
        harness2.seen = harness.seen;
        harness2.plan = {valid_step({"r1"}), valid_step({"r2"})};
        const CampaignResult more = run_campaign(resumed, p2, completer, inst, harness2);
        CHECK(more.reports.size() == 2);
        CHECK(resumed.iteration == 7);
    }

    SUBCASE("an exhausted budget runs nothing") {
        FuzzParams p3 = p;
        p3.max_iterations = 5;
        ScriptedHarness idle;
        const CampaignResult none = run_campaign(st, p3, completer, inst, idle);
        CHECK(none.reports.empty());
        CHECK(st.iteration == 5);
    }

    fs::remove_all(dir);
}

TEST_CASE("a zero budget runs nothing") {
    CampaignState st = fresh_state(3);
    FuzzParams p;  // both budgets zero
    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    const CampaignResult result = run_campaign(st, p, completer, inst, harness);
    CHECK(result.reports.empty());
    CHECK(st.iteration == 0);
    CHECK(completer.calls == 0);
}

TEST_CASE("report.json summarizes the campaign") {
    const fs::path dir =
        fs::temp_directory_path() / ("semfuzz_report_" + std::to_string(::getpid()));
    fs::remove_all(dir);

    CampaignState st = fresh_state(4);
    FuzzParams p;
    p.max_iterations = 3;
    p.campaign_dir = dir.string();

    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    harness.plan = {
        valid_step({"a"}),
        {CompileStatus::Reject, {}, "error: bad\n", 0},
        {CompileStatus::Crash, {"b"}, "internal compiler error: boom\n", 11},
    };
    run_campaign(st, p, completer, inst, harness);

    const json doc = json::parse(read_file((dir / "report.json").string()));
    CHECK(doc.at("iterations") == 3);
    CHECK(doc.at("stats").at("valid") == 1);
    CHECK(doc.at("stats").at("rejects") == 1);
    CHECK(doc.at("stats").at("crashes_total") == 1);
    CHECK(doc.at("coverage_total") == 2);
    CHECK(doc.at("coverage_curve").size() == 3);
    REQUIRE(doc.at("crash_buckets").size() == 1);
    CHECK(doc.at("crash_buckets")[0].at("first_seen") == 2);
    CHECK(doc.at("validity").contains("valid_rate"));
    fs::remove_all(dir);
}

TEST_CASE("keep_artifacts=false prunes non-crash directories") {
    const fs::path dir =
        fs::temp_directory_path() / ("semfuzz_prune_" + std::to_string(::getpid()));
    fs::remove_all(dir);

    CampaignState st = fresh_state(4);
    FuzzParams p;
    p.max_iterations = 2;
    p.campaign_dir = dir.string();
    p.keep_artifacts = false;

    GlueCompleter completer;
    EchoInstantiator inst;
    ScriptedHarness harness;
    harness.plan = {
        valid_step({"a"}),
        {CompileStatus::Crash, {}, "internal compiler error: kept\n", 11},
    };
    run_campaign(st, p, completer, inst, harness);
    CHECK_FALSE(fs::exists(dir / "000000"));
    CHECK(fs::exists(dir / "000001"));
    fs::remove_all(dir);
}

TEST_CASE("snapshot round trip is field-exact") {
    CampaignState st = fresh_state(5, 99);
    st.novel.enqueue(st.pool.insertion_log()[2]);
    st.novel.enqueue(st.pool.insertion_log()[0]);
    st.global_coverage.covered = {"1", "7", "19"};
    st.iteration = 12;
    st.stats.iterations = 12;
    st.stats.valid = 7;
    st.stats.crashes_total = 2;
    st.stats.crashes_unique = 1;
    st.crash_index["InternalError:internal compiler error: in fold"] = 4;
    st.coverage_curve = {{1, 1}, {2, 3}};
    st.rng.next();
    st.pool.add_reward(st.pool.insertion_log()[1], 3);

    const std::string path =
        (fs::temp_directory_path() / "semfuzz_snapshot_rt.json").string();
    save_snapshot(st, path);
    const CampaignState back = load_snapshot(path);
    CHECK(back == st);
    CHECK(back.pool.insertion_log() == st.pool.insertion_log());
    CHECK(back.rng.state() == st.rng.state());
    std::remove(path.c_str());
}

TEST_CASE("load_snapshot rejects malformed input") {
    const std::string path =
        (fs::temp_directory_path() / "semfuzz_snapshot_bad.json").string();
    write_file(path, "{\"format\": 1}");
    CHECK_THROWS_AS(load_snapshot(path), FormatError);
    write_file(path, "{\"format\": 99}");
    CHECK_THROWS_AS(load_snapshot(path), IoError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_snapshot(path), IoError);
}

TEST_CASE("model adapters wire the chat client into the loop seams") {
    ChatClient client;
    client.set_retry_backoff_ms(0);
    client.set_chat_transport([](const ModelRequest& req) -> std::string {
        if (req.prompt.find("[Task]\nComplete the feature group") == 0 ||
            req.prompt.find("propose up to") != std::string::npos) {
            return "1. The code should glue things together.\n";
        }
        return "```c\nint main() { return 0; }\n```";
    });

    ModelGroupCompleter completer(client);
    const FeatureGroup g =
        completer.complete({mk("The code should seed.")}, 2, 5);
    CHECK(g.size() == 2);

    ModelInstantiator inst(client, 1);
    const SourceProgram prog = inst.instantiate(g, 5);
    CHECK(prog.code == "int main() { return 0; }\n");
}
