#include "semfuzz/coverage.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <algorithm>
#include <fstream>

namespace semfuzz {

std::string to_string(CoverageUnit u) {
    return u == CoverageUnit::edge ? "edge" : "line";
}

CoverageUnit coverage_unit_from_string(const std::string& s) {
    if (s == "edge") return CoverageUnit::edge;
    if (s == "line") return CoverageUnit::line;
    throw IoError("unknown coverage unit: " + s);
}

std::vector<std::string> CoverageMap::sorted_units() const {
    std::vector<std::string> out(covered.begin(), covered.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t merge_coverage(CoverageMap& global, const CoverageMap& snap) {
    if (global.unit_kind != snap.unit_kind) throw UnitKindMismatch();
    std::size_t delta = 0;
    for (const std::string& unit : snap.covered)
        if (global.covered.insert(unit).second) ++delta;
    return delta;
}

CoverageMap coverage_from_bitmap(const std::vector<std::uint8_t>& bitmap) {
    CoverageMap map;
    map.unit_kind = CoverageUnit::edge;
    for (std::size_t i = 0; i < bitmap.size(); ++i)
        if (bitmap[i] != 0) map.covered.insert(std::to_string(i));
    return map;
}

CoverageMap coverage_from_bitmap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CoverageUnavailable("cannot open bitmap " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return coverage_from_bitmap(bytes);
}

namespace {

// "DA:<line>,<count>[,...]" — lcov tracefile line-execution record.
bool parse_da_record(const std::string& line, std::uint64_t& line_no,
                     std::uint64_t& count) {
    std::size_t comma = line.find(',');
    if (comma == std::string::npos) return false;
    try {
        line_no = std::stoull(line.substr(3, comma - 3));
        count = std::stoull(line.substr(comma + 1));
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

}  // namespace

CoverageMap parse_line_report(const std::string& report_text) {
    CoverageMap map;
    map.unit_kind = CoverageUnit::line;
    std::string current_file;
    for (const std::string& raw : split_lines(report_text)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.rfind("SF:", 0) == 0) {
            current_file = trim(line.substr(3));
        } else if (line.rfind("file:", 0) == 0) {
            current_file = trim(line.substr(5));
        } else if (line == "end_of_record") {
            current_file.clear();
        } else if (line.rfind("DA:", 0) == 0) {
            std::uint64_t line_no = 0, count = 0;
            if (!current_file.empty() && parse_da_record(line, line_no, count) &&
                count > 0)
                map.covered.insert(current_file + ":" + std::to_string(line_no));
        } else if (line.rfind("lcount:", 0) == 0) {
            std::string rest = line.substr(7);
            std::size_t comma = rest.find(',');
            if (!current_file.empty() && comma != std::string::npos) {
                try {
                    std::uint64_t line_no = std::stoull(rest.substr(0, comma));
                    std::uint64_t count = std::stoull(rest.substr(comma + 1));
                    if (count > 0)
                        map.covered.insert(current_file + ":" +
                                           std::to_string(line_no));
                } catch (const std::exception&) {
                    // Malformed counter line; skip it.
                }
            }
        }
    }
    return map;
}

void save_coverage_set(const CoverageMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const std::string& unit : map.sorted_units()) out << unit << '\n';
    if (!out) throw IoError("write failed for " + path);
}

CoverageMap load_coverage_set(const std::string& path, CoverageUnit kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    CoverageMap map;
    map.unit_kind = kind;
    std::string line;
    while (std::getline(in, line)) {
        std::string unit = trim(line);
        if (!unit.empty()) map.covered.insert(unit);
    }
    return map;
}

}  // namespace semfuzz
