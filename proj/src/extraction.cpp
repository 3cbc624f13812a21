#include "semfuzz/extraction.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <nlohmann/json.hpp>

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <optional>
#include <regex>
#include <sstream>
#include <thread>

namespace semfuzz {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_if_exists(const fs::path& p) {
    std::error_code ec;
    if (!fs::exists(p, ec) || ec) return "";
    return read_file(p.string());
}

}  // namespace

FetchResult FixtureArtifactSource::fetch(const std::string& query, std::size_t limit) {
    FetchResult result;
    std::error_code ec;
    if (!fs::is_directory(dir_, ec) || ec) {
        throw IoError("fixture directory not found: " + dir_);
    }
    std::vector<fs::path> entries;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.is_directory()) entries.push_back(entry.path());
    }
    std::sort(entries.begin(), entries.end());
    for (const fs::path& bug_dir : entries) {
        if (result.artifacts.size() >= limit) break;
        const std::string bug_id = bug_dir.filename().string();
        if (!query.empty() && bug_id.find(query) == std::string::npos) continue;
        BugArtifact a;
        a.bug_id = bug_id;
        a.report_text = read_if_exists(bug_dir / "report.txt");
        a.poc_source = read_if_exists(bug_dir / "poc.c");
        a.fix_summary = read_if_exists(bug_dir / "fix.txt");
        a.url = "file://" + bug_dir.string();
        if (!a.valid()) {
            ++result.parse_errors;
            continue;
        }
        result.artifacts.push_back(std::move(a));
    }
    return result;
}

namespace {

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    std::size_t path_start = base_url.find(
        '/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

bool source_like_attachment(const json& att) {
    if (att.value("is_patch", 0) != 0 || att.value("is_obsolete", 0) != 0) return false;
    const std::string name = to_lower(att.value("file_name", ""));
    for (const char* ext : {".c", ".cc", ".cpp", ".cxx", ".i", ".ii", ".h", ".hpp"}) {
        if (name.size() > std::strlen(ext) &&
            name.compare(name.size() - std::strlen(ext), std::string::npos, ext) == 0) {
            return true;
        }
    }
    return to_lower(att.value("content_type", "")).rfind("text/", 0) == 0;
}

}  // namespace

HttpArtifactSource::HttpArtifactSource(std::string base_url, int max_retries,
                                       int retry_backoff_ms)
    : base_url_(std::move(base_url)),
      max_retries_(max_retries),
      retry_backoff_ms_(retry_backoff_ms) {}

FetchResult HttpArtifactSource::fetch(const std::string& query, std::size_t limit) {
    auto [target, prefix] = split_base_url(base_url_);
    httplib::Client client(target);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(60, 0);

    auto get_json = [&](const std::string& path) -> json {
        std::string last_error;
        for (int attempt = 0; attempt <= max_retries_; ++attempt) {
            if (attempt > 0 && retry_backoff_ms_ > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(retry_backoff_ms_ * attempt));
            }
            auto res = client.Get(path);
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                last_error = e.what();
            }
        }
        throw NetworkError("GET " + path + " failed: " + last_error);
    };

    std::string list_path = prefix + "/rest/bug?limit=" + std::to_string(limit);
    if (!query.empty()) list_path += "&" + query;

    FetchResult result;
    json listing = get_json(list_path);
    if (!listing.contains("bugs") || !listing["bugs"].is_array()) {
        throw NetworkError("bug listing has no 'bugs' array");
    }
    for (const json& bug : listing["bugs"]) {
        if (result.artifacts.size() >= limit) break;
        BugArtifact a;
        try {
            a.bug_id = bug.contains("id") && bug["id"].is_number()
                           ? std::to_string(bug["id"].get<long long>())
                           : bug.value("id", "");
            if (a.bug_id.empty()) {
                ++result.parse_errors;
                continue;
            }
            a.url = base_url_ + "/show_bug.cgi?id=" + a.bug_id;
            a.report_text = bug.value("summary", "");

            json comments = get_json(prefix + "/rest/bug/" + a.bug_id + "/comment");
            const json& clist = comments.at("bugs").at(a.bug_id).at("comments");
            if (clist.is_array() && !clist.empty()) {
                const std::string body = clist.at(0).value("text", "");
                if (!body.empty()) {
                    if (!a.report_text.empty()) a.report_text += "\n\n";
                    a.report_text += body;
                }
            }

            json attachments = get_json(prefix + "/rest/bug/" + a.bug_id + "/attachment");
            const json& alist = attachments.at("bugs").at(a.bug_id);
            if (alist.is_array()) {
                for (const json& att : alist) {
                    if (!source_like_attachment(att)) continue;
                    a.poc_source = base64_decode(att.value("data", ""));
                    break;
                }
            }
        } catch (const json::exception&) {
            ++result.parse_errors;
            continue;
        } catch (const NetworkError&) {
            // per-bug endpoint failure: skip the record, keep the batch
            ++result.parse_errors;
            continue;
        } catch (const IoError&) {
            ++result.parse_errors;
            continue;
        }
        if (!a.valid()) {
            ++result.parse_errors;
            continue;
        }
        result.artifacts.push_back(std::move(a));
    }
    return result;
}

std::string build_extraction_prompt(const BugArtifact& artifact) {
    constexpr const char* kMissing = "(not available)";
    std::ostringstream out;
    out << "[Input]\n"
           "A bug-triggering program, its corresponding bug report, and the root "
           "cause of the bug described in the fix history.\n"
           "\n"
           "Bug report:\n"
        << (artifact.report_text.empty() ? kMissing : trim(artifact.report_text))
        << "\n"
           "\n"
           "Bug-triggering program:\n"
        << (artifact.poc_source.empty() ? kMissing : trim(artifact.poc_source))
        << "\n"
           "\n"
           "Root cause: "
        << (artifact.fix_summary.empty() ? kMissing : trim(artifact.fix_summary))
        << "\n"
           "\n"
           "[Task]\n"
           "Extract and describe key features that a program need in order to "
           "reproduce the bug described in the input.\n"
           "\n"
           "[Steps]\n"
           "1. Read the bug report and the root cause description to understand "
           "the observed failure and why the bug occurs.\n"
           "2. Analyze the bug report, root cause, and the program together to "
           "determine the key features relevant to triggering the issue.\n"
           "3. Extract the key features from the input.\n"
           "\n"
           "[OutputExample]\n"
           "The code should...\n";
    return out.str();
}

namespace {

struct RawItem {
    std::string text;
    std::string witness;
};

bool is_fence(const std::string& line) { return trim(line).rfind("```", 0) == 0; }

// Matches "1. text", "2) text" etc.; returns the text or nullopt.
std::optional<std::string> numbered_item(const std::string& line) {
    const std::string t = trim(line);
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i == 0 || i >= t.size()) return std::nullopt;
    if (t[i] != '.' && t[i] != ')') return std::nullopt;
    std::string rest = trim(t.substr(i + 1));
    if (rest.empty()) return std::nullopt;
    return rest;
}

std::optional<std::string> bullet_item(const std::string& line) {
    const std::string t = trim(line);
    if (t.size() < 2) return std::nullopt;
    if (t[0] != '-' && t[0] != '*' && t[0] != '+') return std::nullopt;
    if (t[1] != ' ') return std::nullopt;
    std::string rest = trim(t.substr(1));
    if (rest.empty()) return std::nullopt;
    return rest;
}

// Collects items of one list style; a fenced block directly after an item
// (blank lines allowed) becomes its witness, and plain continuation lines
// extend the description.
template <typename Matcher>
std::vector<RawItem> collect_items(const std::vector<std::string>& lines, Matcher match) {
    std::vector<RawItem> items;
    std::size_t i = 0;
    while (i < lines.size()) {
        auto head = match(lines[i]);
        if (!head) {
            ++i;
            continue;
        }
        RawItem item;
        item.text = *head;
        ++i;
        while (i < lines.size()) {
            if (match(lines[i])) break;
            if (is_fence(lines[i])) {
                ++i;  // opening fence
                std::string witness;
                while (i < lines.size() && !is_fence(lines[i])) {
                    witness += lines[i];
                    witness += '\n';
                    ++i;
                }
                if (i < lines.size()) ++i;  // closing fence
                if (item.witness.empty()) item.witness = witness;
                break;
            }
            const std::string cont = trim(lines[i]);
            if (cont.empty()) {
                // Blank line: item text is complete, but a fence may still follow.
                std::size_t j = i;
                while (j < lines.size() && trim(lines[j]).empty()) ++j;
                if (j < lines.size() && is_fence(lines[j])) {
                    i = j;
                    continue;
                }
                break;
            }
            item.text += ' ';
            item.text += cont;
            ++i;
        }
        items.push_back(std::move(item));
    }
    return items;
}

constexpr const char* kStem = "The code should";

std::vector<RawItem> paragraph_items(const std::vector<std::string>& lines) {
    std::vector<RawItem> items;
    std::size_t i = 0;
    while (i < lines.size()) {
        if (trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        if (is_fence(lines[i])) {
            ++i;
            std::string witness;
            while (i < lines.size() && !is_fence(lines[i])) {
                witness += lines[i];
                witness += '\n';
                ++i;
            }
            if (i < lines.size()) ++i;
            if (!items.empty() && items.back().witness.empty()) {
                items.back().witness = witness;
            }
            continue;
        }
        RawItem item;
        while (i < lines.size() && !trim(lines[i]).empty() && !is_fence(lines[i])) {
            if (!item.text.empty()) item.text += ' ';
            item.text += trim(lines[i]);
            ++i;
        }
        // Unlike enumerated items, free prose only counts as a feature when
        // it already follows the documented output shape; anything else is
        // likely filler or a refusal.
        if (starts_with_icase(item.text, kStem)) items.push_back(std::move(item));
    }
    return items;
}

std::string repair_description(const std::string& text) {
    if (starts_with_icase(text, kStem)) return text;
    return std::string(kStem) + " " + text;
}

}  // namespace

std::vector<ParsedItem> parse_feature_items(const std::string& text) {
    const std::vector<std::string> lines = split_lines(text);

    std::vector<RawItem> raw = collect_items(lines, numbered_item);
    if (raw.empty()) raw = collect_items(lines, bullet_item);
    if (raw.empty()) raw = paragraph_items(lines);

    std::vector<ParsedItem> items;
    for (RawItem& r : raw) {
        if (collapse_whitespace(r.text).empty()) continue;
        items.push_back({repair_description(r.text), std::move(r.witness)});
    }
    return items;
}

FeatureGroup parse_extraction_response(const std::string& text,
                                       const std::string& bug_id) {
    FeatureGroup group;
    group.source = GroupSource::collected;
    group.parent_bug = bug_id;
    for (ParsedItem& item : parse_feature_items(text)) {
        group.add(Feature::make(item.description, std::move(item.witness),
                                FeatureOrigin::extracted(bug_id)));
    }
    if (group.size() == 0) {
        throw NoFeaturesFound("no feature items parsed for bug " + bug_id);
    }
    return group;
}

namespace {

// "line 12", "lines 3-7": slice the smallest mentioned range out of the PoC.
std::string witness_from_poc(const std::string& description, const std::string& poc) {
    if (poc.empty()) return "";
    static const std::regex kRange(R"(lines?\s+(\d+)(?:\s*-\s*(\d+))?)",
                                   std::regex::icase);
    const std::vector<std::string> poc_lines = split_lines(poc);
    std::size_t best_lo = 0, best_hi = 0;
    bool found = false;
    for (auto it = std::sregex_iterator(description.begin(), description.end(), kRange);
         it != std::sregex_iterator(); ++it) {
        std::size_t lo = std::stoull((*it)[1].str());
        std::size_t hi = (*it)[2].matched ? std::stoull((*it)[2].str()) : lo;
        if (lo == 0 || hi < lo) continue;
        if (!found || hi - lo < best_hi - best_lo) {
            best_lo = lo;
            best_hi = hi;
            found = true;
        }
    }
    if (!found || best_lo > poc_lines.size()) return "";
    std::string witness;
    for (std::size_t n = best_lo; n <= best_hi && n <= poc_lines.size(); ++n) {
        witness += poc_lines[n - 1];
        witness += '\n';
    }
    return witness;
}

}  // namespace

ExtractionStats extract_features(ArtifactSource& source, const std::string& query,
                                 std::size_t limit, ChatClient& model,
                                 FeaturePool& pool,
                                 std::vector<FeatureGroup>* groups_out) {
    FetchResult fetched = source.fetch(query, limit);
    ExtractionStats stats;
    stats.parse_errors = fetched.parse_errors;
    for (const BugArtifact& artifact : fetched.artifacts) {
        ++stats.bugs;
        try {
            const std::string response = model.chat(
                model.make_request(ModelRole::extract, build_extraction_prompt(artifact)));
            FeatureGroup group = parse_extraction_response(response, artifact.bug_id);
            for (Feature& f : group.features) {
                if (f.witness.empty()) {
                    f.witness = witness_from_poc(f.description, artifact.poc_source);
                }
                pool.insert(f);
            }
            stats.features += group.size();
            ++stats.groups;
            if (groups_out) groups_out->push_back(std::move(group));
        } catch (const ModelError&) {
            ++stats.skipped;
        } catch (const NoFeaturesFound&) {
            ++stats.skipped;
        } catch (const ReplayMiss&) {
            ++stats.skipped;
        }
    }
    return stats;
}

}  // namespace semfuzz
