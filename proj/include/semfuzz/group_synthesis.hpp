#pragma once

#include "semfuzz/feature.hpp"
#include "semfuzz/llm_client.hpp"
#include "semfuzz/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace semfuzz {

// Masked-prediction example: predict the held-out half of a shuffled
// group from the rest. Input and target partition the group.
struct TrainingPair {
    std::vector<std::string> input_features;
    std::vector<std::string> target_features;
    std::string group_id;
};

// Prompt asking the completion model for up to `missing` glue features
// that tie the seed set together.
std::string build_completion_prompt(const std::vector<Feature>& seed,
                                    std::size_t missing);

// Completes a seed set into a coherent group. Every seed feature is kept
// unmodified; parsed glue features (tagged origin = glue(iteration)) fill
// the group up to target_size. Duplicates of a seed are dropped, and a
// response with fewer usable items yields a smaller group that is still a
// superset of the seed. When |seed| >= target_size the model is not
// called. Throws ModelError after the client's retries are exhausted.
FeatureGroup complete_group(const std::vector<Feature>& seed, std::size_t target_size,
                            ChatClient& model, std::uint64_t iteration = 0);

// Exactly 4 pairs per group: each one an independent shuffle followed by
// a uniform split point in [1, |g|-1]. Throws GroupTooSmall for |g| < 2.
std::vector<TrainingPair> make_training_pairs(const FeatureGroup& g, Rng& rng);

struct TrainingDatasetStats {
    std::size_t groups_in = 0;
    std::size_t groups_skipped = 0;  // too small to partition
    std::size_t pairs_out = 0;
};

// Writes one {prompt, completion} record per training pair. pairs_out is
// always 4 * (groups_in - groups_skipped).
TrainingDatasetStats export_training_dataset(const std::vector<FeatureGroup>& groups,
                                             const std::string& path, Rng& rng);

constexpr std::size_t kTrainingPairsPerGroup = 4;
constexpr std::size_t kDefaultTargetGroupSize = 4;

}  // namespace semfuzz
