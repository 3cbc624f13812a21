#pragma once

#include "semfuzz/feature.hpp"
#include "semfuzz/llm_client.hpp"

#include <string>

namespace semfuzz {

enum class SourceLanguage { c, cpp };

std::string to_string(SourceLanguage l);
SourceLanguage source_language_from_string(const std::string& s);

// A candidate test program extracted from a model response.
struct SourceProgram {
    std::string code;
    SourceLanguage language = SourceLanguage::c;
    std::string group_id;
    int attempt = 0;
};

// Renders the instantiation prompt for a group. Pure function of the
// group: members are listed sorted by id, so any permutation of the same
// set renders byte-identically. Witnesses are appended as illustrative
// snippets under their feature when present.
std::string build_instantiation_prompt(const FeatureGroup& g);

// Pulls a single compilable unit out of a model response: the first
// fenced code block, or, when there is no fence, the longest suffix
// starting at the first line that looks like a C/C++ preamble (#include,
// int main, or a type/function definition). Language is cpp when
// C++-only tokens are present. Throws NoCodeFound.
SourceProgram extract_code_block(const std::string& response);

// Prompt -> model -> code, with up to `retries` additional attempts on
// NoCodeFound or ModelError. The attempt index of the winning response is
// recorded. Throws InstantiationFailed once the budget is exhausted.
SourceProgram instantiate(const FeatureGroup& g, ChatClient& model, int retries = 2);

// Stable id for a group: hash of its sorted member ids.
std::string group_content_id(const FeatureGroup& g);

}  // namespace semfuzz
