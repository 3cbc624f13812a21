#pragma once

#include "semfuzz/feature.hpp"
#include "semfuzz/llm_client.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace semfuzz {

// One mined bug: report text, PoC program, and fix notes when available.
struct BugArtifact {
    std::string bug_id;
    std::string report_text;
    std::string poc_source;
    std::string fix_summary;  // empty when no fix history exists
    std::string url;

    bool valid() const {
        return !bug_id.empty() && (!report_text.empty() || !poc_source.empty());
    }
    // No fix history; extraction proceeds from report + PoC alone.
    bool partial() const { return fix_summary.empty(); }
};

struct FetchResult {
    std::vector<BugArtifact> artifacts;
    std::size_t parse_errors = 0;  // malformed records skipped, never fatal
};

// Abstracts where bug artifacts come from: a live tracker or a local
// fixture directory. All tests use fixtures.
class ArtifactSource {
public:
    virtual ~ArtifactSource() = default;
    virtual FetchResult fetch(const std::string& query, std::size_t limit) = 0;
};

// Reads <dir>/<bug_id>/{report.txt, poc.c, fix.txt}. Missing report.txt
// and poc.c together make the record malformed; fix.txt is optional.
class FixtureArtifactSource : public ArtifactSource {
public:
    explicit FixtureArtifactSource(std::string dir) : dir_(std::move(dir)) {}
    FetchResult fetch(const std::string& query, std::size_t limit) override;

private:
    std::string dir_;
};

// Bugzilla-style REST client: bug metadata from /rest/bug, report text
// from the first comment, PoC from the first plausible attachment.
class HttpArtifactSource : public ArtifactSource {
public:
    HttpArtifactSource(std::string base_url, int max_retries = 2,
                       int retry_backoff_ms = 200);
    FetchResult fetch(const std::string& query, std::size_t limit) override;

private:
    std::string base_url_;
    int max_retries_;
    int retry_backoff_ms_;
};

// Renders the feature-extraction prompt for one artifact. Deterministic;
// an empty fix summary renders an explicit "(not available)" marker.
std::string build_extraction_prompt(const BugArtifact& artifact);

// One parsed list item: a description already repaired to the "The code
// should" stem, plus the fenced snippet that followed it, if any.
struct ParsedItem {
    std::string description;
    std::string witness;
};

// The list grammar shared by feature extraction and glue-feature parsing.
// Accepts numbered lists, bullet lists, or blank-line-separated
// paragraphs, in that precedence; a fenced code block immediately after
// an item becomes its witness. Items that do not start with "The code
// should" are repaired by prefixing the stem.
std::vector<ParsedItem> parse_feature_items(const std::string& text);

// Splits a model response into one feature per enumerated item, tagged
// with the bug it was extracted from. Throws NoFeaturesFound when nothing
// parses.
FeatureGroup parse_extraction_response(const std::string& text,
                                       const std::string& bug_id);

struct ExtractionStats {
    std::size_t bugs = 0;
    std::size_t groups = 0;
    std::size_t features = 0;
    std::size_t skipped = 0;       // artifacts with no parsable features
    std::size_t parse_errors = 0;  // malformed source records
};

// Full extraction pass: fetch -> prompt -> model -> parse, one group per
// artifact. A failing artifact is counted and skipped, never fatal for
// the batch.
ExtractionStats extract_features(ArtifactSource& source, const std::string& query,
                                 std::size_t limit, ChatClient& model,
                                 FeaturePool& pool,
                                 std::vector<FeatureGroup>* groups_out = nullptr);

}  // namespace semfuzz
