#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace semfuzz {

// FNV-1a, 64 bit. Used wherever a stable, platform-independent digest is
// needed (feature ids, crash bucket keys, replay archive keys).
std::uint64_t fnv1a64(std::string_view data);

// Digest rendered as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view data);

std::string trim(std::string_view s);

// Trims and collapses internal whitespace runs to single spaces. Case is
// preserved. Idempotent.
std::string collapse_whitespace(std::string_view s);

bool starts_with_icase(std::string_view text, std::string_view prefix);

std::vector<std::string> split_lines(std::string_view text);

std::string to_lower(std::string_view s);

std::string base64_decode(std::string_view encoded);

// Whole-file IO. Throw IoError on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace semfuzz
