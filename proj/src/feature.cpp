#include "semfuzz/feature.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace semfuzz {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

FeatureOrigin FeatureOrigin::extracted(std::string bug) {
    FeatureOrigin o;
    o.kind = Kind::extracted;
    o.bug_id = std::move(bug);
    return o;
}

FeatureOrigin FeatureOrigin::glue(std::uint64_t iteration) {
    FeatureOrigin o;
    o.kind = Kind::glue;
    o.iteration = iteration;
    return o;
}

FeatureOrigin FeatureOrigin::manual() { return FeatureOrigin{}; }

std::string FeatureOrigin::to_string() const {
    switch (kind) {
        case Kind::extracted: return "extracted:" + bug_id;
        case Kind::glue: return "glue:" + std::to_string(iteration);
        case Kind::manual: return "manual";
    }
    return "manual";
}

FeatureOrigin FeatureOrigin::parse(const std::string& text) {
    if (text == "manual") return manual();
    if (text.rfind("extracted:", 0) == 0) return extracted(text.substr(10));
    if (text.rfind("glue:", 0) == 0) {
        return glue(std::stoull(text.substr(5)));
    }
    throw IoError("unknown feature origin: " + text);
}

std::string normalize_description(const std::string& text) {
    return collapse_whitespace(text);
}

std::string Feature::id_for(const std::string& description) {
    return fnv1a64_hex(normalize_description(description));
}

Feature Feature::make(const std::string& description, std::string witness,
                      FeatureOrigin origin) {
    std::string normalized = normalize_description(description);
    if (normalized.empty()) throw EmptyDescription();
    Feature f;
    f.description = normalized;
    f.id = fnv1a64_hex(normalized);
    f.witness = std::move(witness);
    f.origin = std::move(origin);
    return f;
}

std::string to_string(GroupSource s) {
    switch (s) {
        case GroupSource::collected: return "collected";
        case GroupSource::synthesized: return "synthesized";
        case GroupSource::random: return "random";
    }
    return "collected";
}

GroupSource group_source_from_string(const std::string& s) {
    if (s == "collected") return GroupSource::collected;
    if (s == "synthesized") return GroupSource::synthesized;
    if (s == "random") return GroupSource::random;
    throw IoError("unknown group source: " + s);
}

bool FeatureGroup::contains(const std::string& id) const {
    return std::any_of(features.begin(), features.end(),
                       [&](const Feature& f) { return f.id == id; });
}

bool FeatureGroup::add(Feature f) {
    if (contains(f.id)) return false;
    features.push_back(std::move(f));
    return true;
}

std::vector<const Feature*> FeatureGroup::sorted_by_id() const {
    std::vector<const Feature*> out;
    out.reserve(features.size());
    for (const Feature& f : features) out.push_back(&f);
    std::sort(out.begin(), out.end(),
              [](const Feature* a, const Feature* b) { return a->id < b->id; });
    return out;
}

std::vector<std::string> FeatureGroup::ids() const {
    std::vector<std::string> out;
    out.reserve(features.size());
    for (const Feature& f : features) out.push_back(f.id);
    return out;
}

bool FeaturePool::insert(const Feature& f) {
    if (normalize_description(f.description).empty()) throw EmptyDescription();
    if (entries_.count(f.id)) return false;
    entries_.emplace(f.id, f);
    insertion_log_.push_back(f.id);
    return true;
}

const Feature* FeaturePool::find(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
}

const Feature& FeaturePool::at(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error("feature id not in pool: " + id);
    return it->second;
}

void FeaturePool::add_reward(const std::string& id, std::uint64_t amount) {
    auto it = entries_.find(id);
    if (it != entries_.end()) it->second.reward += amount;
}

std::vector<Feature> FeaturePool::sample(std::size_t n, Rng& rng) const {
    static const std::unordered_set<std::string> kNoExclusions;
    return sample_excluding(n, kNoExclusions, rng);
}

std::vector<Feature> FeaturePool::sample_excluding(
    std::size_t n, const std::unordered_set<std::string>& exclude, Rng& rng) const {
    std::vector<const std::string*> candidates;
    candidates.reserve(insertion_log_.size());
    for (const std::string& id : insertion_log_)
        if (!exclude.count(id)) candidates.push_back(&id);

    std::size_t take = std::min(n, candidates.size());
    // Partial Fisher-Yates over the candidate list.
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.bounded(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
    }
    std::vector<Feature> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(entries_.at(*candidates[i]));
    return out;
}

void FeaturePool::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const std::string& id : insertion_log_) {
        const Feature& f = entries_.at(id);
        ordered_json rec;
        rec["id"] = f.id;
        rec["description"] = f.description;
        rec["witness"] = f.witness;
        rec["origin"] = f.origin.to_string();
        rec["reward"] = f.reward;
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

FeaturePool FeaturePool::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    FeaturePool pool;
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        ++record;
        if (trim(line).empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw FormatError("malformed feature record", record);
        try {
            Feature f;
            f.id = rec.at("id").get<std::string>();
            f.description = rec.at("description").get<std::string>();
            f.witness = rec.at("witness").get<std::string>();
            f.origin = FeatureOrigin::parse(rec.at("origin").get<std::string>());
            f.reward = rec.at("reward").get<std::uint64_t>();
            if (f.id != Feature::id_for(f.description))
                throw FormatError("feature id does not match its description", record);
            pool.insert(f);
        } catch (const FormatError&) {
            throw;
        } catch (const std::exception& e) {
            throw FormatError(std::string("malformed feature record: ") + e.what(),
                              record);
        }
    }
    return pool;
}

bool FeaturePool::operator==(const FeaturePool& other) const {
    return insertion_log_ == other.insertion_log_ && entries_ == other.entries_;
}

bool NovelQueue::enqueue(const std::string& id) {
    if (members_.count(id)) return false;
    queue_.push_back(id);
    members_.insert(id);
    return true;
}

std::vector<std::string> NovelQueue::dequeue(std::size_t max) {
    std::size_t take = std::min(max, queue_.size());
    std::vector<std::string> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back(queue_.front());
        members_.erase(queue_.front());
        queue_.pop_front();
    }
    return out;
}

std::vector<std::string> NovelQueue::snapshot() const {
    return std::vector<std::string>(queue_.begin(), queue_.end());
}

void NovelQueue::restore(const std::vector<std::string>& ids) {
    queue_.clear();
    members_.clear();
    for (const std::string& id : ids) enqueue(id);
}

}  // namespace semfuzz
