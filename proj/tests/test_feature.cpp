#include <doctest.h>

#include "semfuzz/errors.hpp"
#include "semfuzz/feature.hpp"
#include "semfuzz/util.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

using namespace semfuzz;

namespace {

Feature mk(const std::string& desc, const std::string& witness = "") {
    return Feature::make(desc, witness, FeatureOrigin::manual());
}

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("feature id is the digest of the normalized description") {
    const Feature f = mk("  The code   should use\tnested loops. ");
    CHECK(f.description == "The code should use nested loops.");
    CHECK(f.id == fnv1a64_hex("The code should use nested loops."));
    CHECK(f.id == Feature::id_for("The code\nshould use nested loops."));
}

TEST_CASE("witness does not affect the id") {
    const Feature a = mk("The code should recurse.", "int f(){return f();}");
    const Feature b = mk("The code should recurse.", "void g(){g();}");
    CHECK(a.id == b.id);
    CHECK(a.witness != b.witness);
}

TEST_CASE("empty or whitespace-only description throws") {
    CHECK_THROWS_AS(mk(""), EmptyDescription);
    CHECK_THROWS_AS(mk("  \t\n "), EmptyDescription);
}

TEST_CASE("origin string round trip") {
    const FeatureOrigin e = FeatureOrigin::extracted("gcc-12345");
    const FeatureOrigin g = FeatureOrigin::glue(42);
    const FeatureOrigin m = FeatureOrigin::manual();
    CHECK(FeatureOrigin::parse(e.to_string()) == e);
    CHECK(FeatureOrigin::parse(g.to_string()) == g);
    CHECK(FeatureOrigin::parse(m.to_string()) == m);
    CHECK_THROWS_AS(FeatureOrigin::parse("nonsense"), IoError);
}

TEST_CASE("group add dedups by id") {
    FeatureGroup g;
    CHECK(g.add(mk("The code should use a union.", "w1")));
    CHECK_FALSE(g.add(mk("The code  should use a union.", "w2")));
    CHECK(g.add(mk("The code should take the address of a label.")));
    CHECK(g.size() == 2);
    CHECK(g.contains(Feature::id_for("The code should use a union.")));
}

TEST_CASE("sorted_by_id is ascending and complete") {
    FeatureGroup g;
    g.add(mk("zeta"));
    g.add(mk("alpha"));
    g.add(mk("mu"));
    const auto sorted = g.sorted_by_id();
    REQUIRE(sorted.size() == 3);
    CHECK(sorted[0]->id < sorted[1]->id);
    CHECK(sorted[1]->id < sorted[2]->id);
}

TEST_CASE("group ids preserve member order") {
    FeatureGroup g;
    g.add(mk("first"));
    g.add(mk("second"));
    const auto ids = g.ids();
    REQUIRE(ids.size() == 2);
    CHECK(ids[0] == Feature::id_for("first"));
    CHECK(ids[1] == Feature::id_for("second"));
}

TEST_CASE("pool insert dedups and keeps the first record") {
    FeaturePool pool;
    Feature a = mk("The code should overflow an int.", "a");
    Feature b = mk("The code should overflow an int.", "b");
    CHECK(pool.insert(a));
    CHECK_FALSE(pool.insert(b));
    CHECK(pool.size() == 1);
    CHECK(pool.at(a.id).witness == "a");
    CHECK(pool.find("no-such-id") == nullptr);
    CHECK_THROWS_AS(pool.at("no-such-id"), Error);
}

TEST_CASE("add_reward accumulates and ignores unknown ids") {
    FeaturePool pool;
    const Feature f = mk("The code should shift by a variable amount.");
    pool.insert(f);
    pool.add_reward(f.id);
    pool.add_reward(f.id, 3);
    pool.add_reward("missing");
    CHECK(pool.at(f.id).reward == 4);
}

TEST_CASE("sample returns min(n, size) distinct features") {
    FeaturePool pool;
    for (int i = 0; i < 5; ++i) pool.insert(mk("feature number " + std::to_string(i)));
    Rng rng(7);
    const auto got = pool.sample(3, rng);
    CHECK(got.size() == 3);
    std::set<std::string> ids;
    for (const auto& f : got) ids.insert(f.id);
    CHECK(ids.size() == 3);
    Rng rng2(9);
    CHECK(pool.sample(99, rng2).size() == 5);
    Rng rng3(9);
    CHECK(FeaturePool{}.sample(2, rng3).empty());
}

TEST_CASE("sample is deterministic for a fixed rng state") {
    FeaturePool pool;
    for (int i = 0; i < 8; ++i) pool.insert(mk("det feature " + std::to_string(i)));
    Rng a(123), b(123);
    const auto ga = pool.sample(4, a);
    const auto gb = pool.sample(4, b);
    REQUIRE(ga.size() == gb.size());
    for (std::size_t i = 0; i < ga.size(); ++i) CHECK(ga[i].id == gb[i].id);
}

TEST_CASE("sample_excluding never returns excluded ids") {
    FeaturePool pool;
    std::unordered_set<std::string> exclude;
    for (int i = 0; i < 6; ++i) {
        const Feature f = mk("excl feature " + std::to_string(i));
        pool.insert(f);
        if (i < 3) exclude.insert(f.id);
    }
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto got = pool.sample_excluding(3, exclude, rng);
        CHECK(got.size() == 3);
        for (const auto& f : got) CHECK(exclude.count(f.id) == 0);
    }
    SUBCASE("shrinks when fewer candidates remain") {
        Rng r(1);
        CHECK(pool.sample_excluding(5, exclude, r).size() == 3);
    }
}

TEST_CASE("sample is approximately uniform") {
    FeaturePool pool;
    std::vector<std::string> ids;
    for (int i = 0; i < 3; ++i) {
        const Feature f = mk("uniform feature " + std::to_string(i));
        pool.insert(f);
        ids.push_back(f.id);
    }
    Rng rng(2024);
    std::map<std::string, int> counts;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) counts[pool.sample(1, rng)[0].id]++;
    // binomial p = 1/3: sigma = sqrt(n p (1-p)) ~ 47.1, allow 3 sigma
    for (const auto& id : ids) {
        CHECK(counts[id] > 3333 - 142);
        CHECK(counts[id] < 3334 + 142);
    }
}

TEST_CASE("pool save/load round trip") {
    FeaturePool pool;
    pool.insert(Feature::make("The code should use a VLA.", "int a[n];",
                              FeatureOrigin::extracted("gcc-100")));
    pool.insert(Feature::make("The code should fold constants.", "",
                              FeatureOrigin::glue(3)));
    pool.add_reward(Feature::id_for("The code should use a VLA."), 2);
    const std::string path = tmp_path("semfuzz_pool_rt.jsonl");
    pool.save(path);
    const FeaturePool loaded = FeaturePool::load(path);
    CHECK(loaded == pool);
    CHECK(loaded.insertion_log() == pool.insertion_log());
    std::remove(path.c_str());
}

TEST_CASE("pool load rejects id/description mismatch with a record index") {
    const std::string path = tmp_path("semfuzz_pool_bad.jsonl");
    {
        FeaturePool pool;
        pool.insert(mk("The code should be fine."));
        pool.save(path);
        std::ofstream out(path, std::ios::app);
        out << R"({"id":"deadbeefdeadbeef","description":"mismatch","witness":"",)"
            << R"("origin":"manual","reward":0})"
            << "\n";
    }
    try {
        FeaturePool::load(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.record == 2);
    }
    std::remove(path.c_str());
}

TEST_CASE("pool load rejects malformed json with a record index") {
    const std::string path = tmp_path("semfuzz_pool_garbled.jsonl");
    write_file(path, "{\"id\": not-json\n");
    try {
        FeaturePool::load(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.record == 1);
    }
    std::remove(path.c_str());
}

TEST_CASE("novel queue is FIFO with unique membership") {
    NovelQueue q;
    CHECK(q.enqueue("a"));
    CHECK(q.enqueue("b"));
    CHECK_FALSE(q.enqueue("a"));
    CHECK(q.size() == 2);
    CHECK(q.contains("a"));
    const auto got = q.dequeue(1);
    REQUIRE(got.size() == 1);
    CHECK(got[0] == "a");
    CHECK_FALSE(q.contains("a"));
    SUBCASE("an id may re-enter after leaving") {
        CHECK(q.enqueue("a"));
        const auto rest = q.dequeue(10);
        REQUIRE(rest.size() == 2);
        CHECK(rest[0] == "b");
        CHECK(rest[1] == "a");
    }
}

TEST_CASE("dequeue caps at the queue size") {
    NovelQueue q;
    q.enqueue("x");
    CHECK(q.dequeue(5).size() == 1);
    CHECK(q.dequeue(5).empty());
    CHECK(q.empty());
}

TEST_CASE("novel queue snapshot/restore preserves order") {
    NovelQueue q;
    q.enqueue("1");
    q.enqueue("2");
    q.enqueue("3");
    const auto snap = q.snapshot();
    NovelQueue r;
    r.restore(snap);
    CHECK(r == q);
    CHECK(r.dequeue(2) == std::vector<std::string>{"1", "2"});
}
