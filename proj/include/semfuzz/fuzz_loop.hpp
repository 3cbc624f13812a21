#pragma once

#include "semfuzz/compiler_harness.hpp"
#include "semfuzz/coverage.hpp"
#include "semfuzz/feature.hpp"
#include "semfuzz/instantiation.hpp"
#include "semfuzz/iteration_report.hpp"
#include "semfuzz/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace semfuzz {

// Seam between the loop and its expensive collaborators, so campaigns can
// be driven by scripted stand-ins in tests.
class GroupCompleter {
public:
    virtual ~GroupCompleter() = default;
    // Returns a group containing every seed feature. Throws ModelError
    // when the completion budget is exhausted.
    virtual FeatureGroup complete(const std::vector<Feature>& seed,
                                  std::size_t target_size, std::uint64_t iteration) = 0;
};

class Instantiator {
public:
    virtual ~Instantiator() = default;
    // Turns a group into a compilable source file. Throws
    // InstantiationFailed when the budget is exhausted.
    virtual SourceProgram instantiate(const FeatureGroup& g, std::uint64_t iteration) = 0;
};

class Harness {
public:
    virtual ~Harness() = default;
    virtual CompileOutcome compile(const SourceProgram& prog, const std::string& workdir) = 0;
    // Coverage observed for the most recent compile; empty map when
    // coverage collection is off.
    virtual CoverageMap coverage() = 0;
};

struct FuzzParams {
    std::size_t k = 2;                  // max seeds drawn from the novel queue
    std::size_t target_group_size = 4;
    // Total iteration budget for the campaign (absolute, so a resumed
    // campaign runs only the remainder). Both budgets 0 = run nothing.
    std::uint64_t max_iterations = 0;
    double wall_clock_budget_seconds = 0.0;  // 0 = no wall-clock cap
    std::uint64_t snapshot_every = 100; // iterations between snapshots, 0 = off
    std::size_t novel_queue_cap = 0;    // 0 = unbounded
    std::string campaign_dir;           // per-iteration artifacts land here
    bool keep_artifacts = true;         // false: only crashing inputs are kept
};

struct CampaignStats {
    std::uint64_t iterations = 0;
    std::uint64_t generated = 0;  // iterations that produced a program
    std::uint64_t valid = 0;
    std::uint64_t rejects = 0;
    std::uint64_t crashes_total = 0;
    std::uint64_t crashes_unique = 0;
    std::uint64_t hangs = 0;
    std::uint64_t ooms = 0;
    std::uint64_t model_failures = 0;
    std::uint64_t coverage_failures = 0;  // iterations degraded to no-feedback
    std::uint64_t promotions = 0;

    bool operator==(const CampaignStats&) const = default;
};

struct CoveragePoint {
    std::uint64_t iteration = 0;
    std::size_t covered = 0;

    bool operator==(const CoveragePoint&) const = default;
};

struct CampaignState {
    FeaturePool pool;
    NovelQueue novel;
    CoverageMap global_coverage;
    std::uint64_t iteration = 0;  // iterations completed so far
    CampaignStats stats;
    // signature key -> first iteration it was seen at
    std::map<std::string, std::uint64_t> crash_index;
    std::vector<CoveragePoint> coverage_curve;
    Rng rng;

    bool operator==(const CampaignState& o) const;
};

// Draws the seed set for one iteration: k_n ~ UniformInt(0, min(k, |novel|))
// features dequeued from the novel queue, topped up to k from the pool
// excluding those already chosen. The dequeued features come first in the
// result; novel_count (optional) receives how many there are. Throws
// EmptyPool when neither source can supply anything.
std::vector<Feature> select_seed_set(CampaignState& st, std::size_t k,
                                     std::size_t* novel_count = nullptr);

// Runs one iteration of the feedback loop against the supplied
// collaborators and returns its report. State mutations:
//   - completion failure: model_failures++, seeds already dequeued stay
//     consumed, otherwise unchanged;
//   - instantiation failure: same;
//   - coverage delta > 0: non-seed glue features join pool and novel
//     queue, every group member gets +1 reward.
IterationReport run_iteration(CampaignState& st, const FuzzParams& p,
                              GroupCompleter& completer, Instantiator& inst,
                              Harness& harness);

struct CampaignResult {
    std::vector<IterationReport> reports;
    CampaignStats stats;
};

// Runs iterations until max_iterations (or forever when 0), writing
// per-iteration artifacts and periodic snapshots under p.campaign_dir.
CampaignResult run_campaign(CampaignState& st, const FuzzParams& p,
                            GroupCompleter& completer, Instantiator& inst,
                            Harness& harness);

// Snapshot round-trip. Every field that influences subsequent iterations
// is persisted: pool contents and insertion order, queue order, global
// coverage, counters, crash index, curve and the RNG state.
void save_snapshot(const CampaignState& st, const std::string& path);
CampaignState load_snapshot(const std::string& path);

// Production adapters over the real collaborators.
class ModelGroupCompleter : public GroupCompleter {
public:
    explicit ModelGroupCompleter(ChatClient& client) : client_(client) {}
    FeatureGroup complete(const std::vector<Feature>& seed, std::size_t target_size,
                          std::uint64_t iteration) override;

private:
    ChatClient& client_;
};

class ModelInstantiator : public Instantiator {
public:
    ModelInstantiator(ChatClient& client, int retries = 2)
        : client_(client), retries_(retries) {}
    SourceProgram instantiate(const FeatureGroup& g, std::uint64_t iteration) override;

private:
    ChatClient& client_;
    int retries_;
};

class CompilerHarness : public Harness {
public:
    CompilerHarness(CompilerConfig cfg, CoverageContext cov)
        : cfg_(std::move(cfg)), cov_(std::move(cov)) {}
    CompileOutcome compile(const SourceProgram& prog, const std::string& workdir) override;
    CoverageMap coverage() override;

private:
    CompilerConfig cfg_;
    CoverageContext cov_;
};

}  // namespace semfuzz
