#include "semfuzz/group_synthesis.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/extraction.hpp"
#include "semfuzz/instantiation.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace semfuzz {

std::string build_completion_prompt(const std::vector<Feature>& seed,
                                    std::size_t missing) {
    std::ostringstream out;
    out << "[Task]\n"
           "Complete the feature group below: propose up to "
        << missing
        << " additional glue features that bridge the implicit dependencies "
           "between the given features, so that all of them can be realized "
           "together in a single program.\n"
           "\n"
           "[Features]\n";
    std::size_t n = 0;
    for (const Feature& f : seed) {
        out << ++n << ". " << f.description << "\n";
    }
    out << "\n"
           "[Instructions]\n"
           "1. Keep the given features unchanged; do not repeat or rewrite them.\n"
           "2. Each new feature must be a single sentence starting with \"The "
           "code should\".\n"
           "3. Output a numbered list with at most "
        << missing << " items and nothing else.\n";
    return out.str();
}

FeatureGroup complete_group(const std::vector<Feature>& seed, std::size_t target_size,
                            ChatClient& model, std::uint64_t iteration) {
    if (seed.empty()) throw GroupTooSmall(0);

    FeatureGroup group;
    group.source = GroupSource::synthesized;
    for (const Feature& f : seed) group.add(f);

    if (group.size() >= target_size) return group;
    const std::size_t missing = target_size - group.size();

    const std::string response = model.chat(
        model.make_request(ModelRole::group, build_completion_prompt(seed, missing)));
    for (ParsedItem& item : parse_feature_items(response)) {
        if (group.size() >= target_size) break;
        group.add(Feature::make(item.description, std::move(item.witness),
                                FeatureOrigin::glue(iteration)));
    }
    return group;
}

std::vector<TrainingPair> make_training_pairs(const FeatureGroup& g, Rng& rng) {
    if (g.size() < 2) throw GroupTooSmall(g.size());

    std::vector<std::string> descriptions;
    descriptions.reserve(g.size());
    for (const Feature& f : g.features) descriptions.push_back(f.description);

    const std::string gid = group_content_id(g);
    std::vector<TrainingPair> pairs;
    pairs.reserve(kTrainingPairsPerGroup);
    for (std::size_t p = 0; p < kTrainingPairsPerGroup; ++p) {
        std::vector<std::string> shuffled = descriptions;
        rng.shuffle(shuffled);
        const std::size_t split =
            static_cast<std::size_t>(rng.uniform_int(1, shuffled.size() - 1));
        TrainingPair pair;
        pair.group_id = gid;
        pair.input_features.assign(shuffled.begin(), shuffled.begin() + split);
        pair.target_features.assign(shuffled.begin() + split, shuffled.end());
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

namespace {

std::string join_lines(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += '\n';
        out += parts[i];
    }
    return out;
}

}  // namespace

TrainingDatasetStats export_training_dataset(const std::vector<FeatureGroup>& groups,
                                             const std::string& path, Rng& rng) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open training dataset for writing: " + path);

    TrainingDatasetStats stats;
    stats.groups_in = groups.size();
    for (const FeatureGroup& g : groups) {
        std::vector<TrainingPair> pairs;
        try {
            pairs = make_training_pairs(g, rng);
        } catch (const GroupTooSmall&) {
            ++stats.groups_skipped;
            continue;
        }
        for (const TrainingPair& pair : pairs) {
            nlohmann::ordered_json record = {
                {"prompt", join_lines(pair.input_features)},
                {"completion", join_lines(pair.target_features)},
            };
            out << record.dump() << '\n';
            ++stats.pairs_out;
        }
    }
    if (!out) throw IoError("write failed: " + path);
    return stats;
}

}  // namespace semfuzz
