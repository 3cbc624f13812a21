#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace semfuzz {

enum class CoverageUnit { edge, line };

std::string to_string(CoverageUnit u);
CoverageUnit coverage_unit_from_string(const std::string& s);

// Monotone accumulator of covered units. Edge units are bitmap indices
// rendered in decimal; line units are "file:line" keys.
struct CoverageMap {
    CoverageUnit unit_kind = CoverageUnit::edge;
    std::unordered_set<std::string> covered;

    std::size_t size() const { return covered.size(); }
    bool empty() const { return covered.empty(); }

    // Sorted unit ids, the stable order used by set files and snapshots.
    std::vector<std::string> sorted_units() const;

    bool operator==(const CoverageMap&) const = default;
};

// Union merge. Returns the number of units in `snap` that were new to
// `global`; "coverage increased" in the fuzzing loop means delta > 0.
// Throws UnitKindMismatch when the kinds differ.
std::size_t merge_coverage(CoverageMap& global, const CoverageMap& snap);

// Nonzero byte indices of an edge bitmap.
CoverageMap coverage_from_bitmap(const std::vector<std::uint8_t>& bitmap);
CoverageMap coverage_from_bitmap_file(const std::string& path);

// Parses a line-coverage report into executed "file:line" units. Accepts
// lcov tracefile records (SF:/DA:) and gcov intermediate text
// (file:/lcount:); lines with a zero execution count are skipped.
CoverageMap parse_line_report(const std::string& report_text);

// One unit id per line, sorted. Used for reproducible Jaccard audits.
void save_coverage_set(const CoverageMap& map, const std::string& path);
CoverageMap load_coverage_set(const std::string& path, CoverageUnit kind);

}  // namespace semfuzz
