#pragma once

#include "semfuzz/coverage.hpp"
#include "semfuzz/feature.hpp"
#include "semfuzz/iteration_report.hpp"
#include "semfuzz/llm_client.hpp"

#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

namespace semfuzz {

using EmbeddingVector = std::vector<double>;

// Cosine similarity, clamped to [-1, 1] to absorb rounding drift.
// Throws DimMismatch when sizes differ and ZeroVector when either input
// has zero magnitude.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Mean pairwise cosine over unordered pairs (i < j) whose similarity is
// below `tau`; pairs at or above tau count as near-duplicates and are
// filtered out. pair_count == 0 means every pair was filtered (value 0).
struct RedundancyResult {
    double value = 0.0;
    std::size_t pair_count = 0;      // pairs that survived the tau filter
    std::size_t filtered_count = 0;  // pairs removed as near-duplicates

    bool no_pairs() const { return pair_count == 0; }
};

// Throws TooFewFeatures for fewer than two vectors.
RedundancyResult redundancy(const std::vector<EmbeddingVector>& vecs, double tau = 0.95);

// Max pairwise (1 - cosine). Throws TooFewFeatures for fewer than two.
double diameter(const std::vector<EmbeddingVector>& vecs);

struct CoherenceScore {
    double redundancy = 0.0;
    double diameter = 0.0;
    std::size_t pair_count = 0;
    std::size_t filtered_count = 0;
};

CoherenceScore coherence(const std::vector<EmbeddingVector>& vecs, double tau = 0.95);

struct JaccardResult {
    double value = 0.0;
    bool both_empty = false;  // value reported as 1.0 by convention
};

JaccardResult jaccard(const std::unordered_set<std::string>& a,
                      const std::unordered_set<std::string>& b);

// Throws UnitKindMismatch when the maps count different unit kinds.
JaccardResult jaccard(const CoverageMap& a, const CoverageMap& b);

struct ValidityStats {
    std::size_t generated = 0;   // iterations that produced a program
    std::size_t valid = 0;       // per the crashes_as_valid policy below
    std::size_t rejects = 0;
    std::size_t crashes = 0;
    std::size_t hangs = 0;
    std::size_t ooms = 0;
    std::size_t model_failures = 0;  // iterations with no program at all
    double valid_rate = 0.0;         // valid / generated
    double crash_on_valid = 0.0;     // crashing-valid / valid
    bool valid_rate_degenerate = false;      // generated == 0
    bool crash_on_valid_degenerate = false;  // valid == 0
    bool crashes_counted_valid = false;      // policy echo
};

// Aggregates compile outcomes across a campaign. A Crash outcome joins
// the valid bucket (numerator and denominator) only when
// crashes_as_valid is set; the default leaves crashes out of Valid, which
// makes crash_on_valid degenerate-zero under that policy.
ValidityStats campaign_validity_stats(const std::vector<IterationReport>& reports,
                                      bool crashes_as_valid = false);

// Embedding source for coherence measurements.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

// Remote embeddings through the chat client.
class ClientEmbeddingProvider : public EmbeddingProvider {
public:
    explicit ClientEmbeddingProvider(ChatClient& client) : client_(client) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    ChatClient& client_;
};

// Deterministic offline fallback: hashed bag-of-words vectors. Useful for
// plumbing tests and relative comparisons, not for absolute similarity
// judgements.
class HashEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dim = 256) : dim_(dim) {}
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

private:
    std::size_t dim_;
};

// Per-group coherence record for metric reports.
struct GroupCoherenceRecord {
    std::string group_id;
    CoherenceScore score;
};

GroupCoherenceRecord score_group(const FeatureGroup& g, EmbeddingProvider& provider,
                                 double tau = 0.95);

}  // namespace semfuzz
