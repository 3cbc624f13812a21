#include "semfuzz/metrics.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/instantiation.hpp"
#include "semfuzz/util.hpp"

#include <algorithm>
#include <cmath>

namespace semfuzz {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw DimMismatch(a.size(), b.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector();
    const double value = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(value, -1.0, 1.0);
}

namespace {

// All unordered-pair similarities, in (i, j) enumeration order.
std::vector<double> pair_similarities(const std::vector<EmbeddingVector>& vecs) {
    if (vecs.size() < 2) throw TooFewFeatures(vecs.size());
    std::vector<double> sims;
    sims.reserve(vecs.size() * (vecs.size() - 1) / 2);
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        for (std::size_t j = i + 1; j < vecs.size(); ++j) {
            sims.push_back(cosine(vecs[i], vecs[j]));
        }
    }
    return sims;
}

// Mean with a canonical accumulation order, so permuting the input
// vectors cannot change the result by a rounding ulp.
double sorted_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace

RedundancyResult redundancy(const std::vector<EmbeddingVector>& vecs, double tau) {
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("tau must be in (0, 1]");
    RedundancyResult result;
    std::vector<double> kept;
    for (double sim : pair_similarities(vecs)) {
        if (sim < tau) {
            kept.push_back(sim);
        } else {
            ++result.filtered_count;
        }
    }
    result.pair_count = kept.size();
    result.value = kept.empty() ? 0.0 : sorted_mean(std::move(kept));
    return result;
}

double diameter(const std::vector<EmbeddingVector>& vecs) {
    double max_span = 0.0;
    for (double sim : pair_similarities(vecs)) {
        max_span = std::max(max_span, 1.0 - sim);
    }
    return max_span;
}

CoherenceScore coherence(const std::vector<EmbeddingVector>& vecs, double tau) {
    RedundancyResult r = redundancy(vecs, tau);
    return {r.value, diameter(vecs), r.pair_count, r.filtered_count};
}

JaccardResult jaccard(const std::unordered_set<std::string>& a,
                      const std::unordered_set<std::string>& b) {
    if (a.empty() && b.empty()) return {1.0, true};
    std::size_t intersection = 0;
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    for (const std::string& unit : small) {
        if (large.count(unit)) ++intersection;
    }
    const std::size_t unite = a.size() + b.size() - intersection;
    return {static_cast<double>(intersection) / static_cast<double>(unite), false};
}

JaccardResult jaccard(const CoverageMap& a, const CoverageMap& b) {
    if (a.unit_kind != b.unit_kind) throw UnitKindMismatch();
    return jaccard(a.covered, b.covered);
}

ValidityStats campaign_validity_stats(const std::vector<IterationReport>& reports,
                                      bool crashes_as_valid) {
    ValidityStats stats;
    stats.crashes_counted_valid = crashes_as_valid;
    for (const IterationReport& r : reports) {
        if (!r.status) {
            ++stats.model_failures;
            continue;
        }
        ++stats.generated;
        switch (*r.status) {
            case CompileStatus::Valid: ++stats.valid; break;
            case CompileStatus::Reject: ++stats.rejects; break;
            case CompileStatus::Crash: ++stats.crashes; break;
            case CompileStatus::Hang: ++stats.hangs; break;
            case CompileStatus::Oom: ++stats.ooms; break;
        }
    }
    const std::size_t crashing_valid = crashes_as_valid ? stats.crashes : 0;
    if (crashes_as_valid) stats.valid += stats.crashes;

    if (stats.generated == 0) {
        stats.valid_rate_degenerate = true;
    } else {
        stats.valid_rate =
            static_cast<double>(stats.valid) / static_cast<double>(stats.generated);
    }
    if (stats.valid == 0) {
        stats.crash_on_valid_degenerate = true;
    } else {
        stats.crash_on_valid =
            static_cast<double>(crashing_valid) / static_cast<double>(stats.valid);
    }
    return stats;
}

std::vector<EmbeddingVector> ClientEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
    return client_.embed(texts);
}

std::vector<EmbeddingVector> HashEmbeddingProvider::embed(
    const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        EmbeddingVector vec(dim_, 0.0);
        std::string token;
        bool any = false;
        auto flush = [&] {
            if (token.empty()) return;
            const std::uint64_t h = fnv1a64(token);
            vec[h % dim_] += (h >> 32) & 1 ? 1.0 : -1.0;
            any = true;
            token.clear();
        };
        for (char c : to_lower(text)) {
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
                token += c;
            } else {
                flush();
            }
        }
        flush();
        // Signed counts can cancel to zero; fall back to a whole-text bit
        // so the vector stays usable for cosine.
        bool all_zero = true;
        for (double v : vec) {
            if (v != 0.0) {
                all_zero = false;
                break;
            }
        }
        if (all_zero) vec[any ? fnv1a64(text) % dim_ : 0] = 1.0;
        out.push_back(std::move(vec));
    }
    return out;
}

GroupCoherenceRecord score_group(const FeatureGroup& g, EmbeddingProvider& provider,
                                 double tau) {
    std::vector<std::string> descriptions;
    descriptions.reserve(g.size());
    for (const Feature* f : g.sorted_by_id()) descriptions.push_back(f->description);
    return {group_content_id(g), coherence(provider.embed(descriptions), tau)};
}

}  // namespace semfuzz
