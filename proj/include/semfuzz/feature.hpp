#pragma once

#include "semfuzz/rng.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace semfuzz {

// Where a feature came from. Extracted features carry the bug they were
// mined from, glue features the iteration that synthesized them.
struct FeatureOrigin {
    enum class Kind { extracted, glue, manual };

    Kind kind = Kind::manual;
    std::string bug_id;            // kind == extracted
    std::uint64_t iteration = 0;   // kind == glue

    static FeatureOrigin extracted(std::string bug);
    static FeatureOrigin glue(std::uint64_t iteration);
    static FeatureOrigin manual();

    std::string to_string() const;
    static FeatureOrigin parse(const std::string& text);

    bool operator==(const FeatureOrigin&) const = default;
};

std::string normalize_description(const std::string& text);

// The atomic unit of the search space: a natural-language invariant plus a
// code witness showing one concrete realization. The id is derived from
// the normalized description alone, so the same invariant with a different
// witness dedups to one feature.
struct Feature {
    std::string id;
    std::string description;   // normalized
    std::string witness;       // may be empty
    FeatureOrigin origin;
    std::uint64_t reward = 0;  // coverage-increasing groups it was part of

    // Throws EmptyDescription when the description normalizes to "".
    static Feature make(const std::string& description, std::string witness,
                        FeatureOrigin origin);

    static std::string id_for(const std::string& description);

    bool operator==(const Feature&) const = default;
};

enum class GroupSource { collected, synthesized, random };

std::string to_string(GroupSource s);
GroupSource group_source_from_string(const std::string& s);

// A set of features meant to be realized jointly in one program. Member
// order carries no meaning; every downstream consumer either sorts by id
// or treats the members as a set.
struct FeatureGroup {
    std::vector<Feature> features;
    GroupSource source = GroupSource::collected;
    std::optional<std::string> parent_bug;

    bool contains(const std::string& id) const;
    // Adds f unless a member with the same id is present. Returns true if added.
    bool add(Feature f);
    std::size_t size() const { return features.size(); }

    // Members ordered by id; the canonical order for prompt rendering.
    std::vector<const Feature*> sorted_by_id() const;

    std::vector<std::string> ids() const;
};

// Global feature pool: id-indexed, dedup on insert, append-only insertion
// log so sampling and persistence are order-stable.
class FeaturePool {
public:
    // Returns false (and leaves the pool unchanged) when a feature with the
    // same id is already present. Throws EmptyDescription for features whose
    // description normalizes to empty.
    bool insert(const Feature& f);

    bool contains(const std::string& id) const { return entries_.count(id) != 0; }
    const Feature* find(const std::string& id) const;
    const Feature& at(const std::string& id) const;

    void add_reward(const std::string& id, std::uint64_t amount = 1);

    std::size_t size() const { return insertion_log_.size(); }
    bool empty() const { return insertion_log_.empty(); }
    const std::vector<std::string>& insertion_log() const { return insertion_log_; }

    // min(n, size) distinct features, uniform without replacement.
    // Deterministic for a fixed rng state.
    std::vector<Feature> sample(std::size_t n, Rng& rng) const;

    // Same, but never returns a feature whose id is in `exclude`.
    std::vector<Feature> sample_excluding(
        std::size_t n, const std::unordered_set<std::string>& exclude, Rng& rng) const;

    void save(const std::string& path) const;
    static FeaturePool load(const std::string& path);

    bool operator==(const FeaturePool& other) const;

private:
    std::unordered_map<std::string, Feature> entries_;
    std::vector<std::string> insertion_log_;
};

// FIFO of feature ids whose parent group increased coverage. An id is held
// at most once at any time; re-enqueueing a queued id is a no-op.
class NovelQueue {
public:
    bool enqueue(const std::string& id);
    // Removes and returns the first min(max, size) ids in FIFO order.
    std::vector<std::string> dequeue(std::size_t max);

    std::size_t size() const { return queue_.size(); }
    bool empty() const { return queue_.empty(); }
    bool contains(const std::string& id) const { return members_.count(id) != 0; }

    std::vector<std::string> snapshot() const;
    void restore(const std::vector<std::string>& ids);

    bool operator==(const NovelQueue& other) const { return queue_ == other.queue_; }

private:
    std::deque<std::string> queue_;
    std::unordered_set<std::string> members_;
};

}  // namespace semfuzz
