#include "semfuzz/instantiation.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <algorithm>
#include <sstream>

namespace semfuzz {

std::string to_string(SourceLanguage l) {
    return l == SourceLanguage::cpp ? "cpp" : "c";
}

SourceLanguage source_language_from_string(const std::string& s) {
    if (s == "c") return SourceLanguage::c;
    if (s == "cpp") return SourceLanguage::cpp;
    throw ConfigError("unknown source language: " + s);
}

std::string build_instantiation_prompt(const FeatureGroup& g) {
    std::ostringstream out;
    out << "[Task]\n"
           "Given a set of features, generate a single C/C++ program that satisfies "
           "all features and stresses compiler edge cases.\n"
           "\n"
           "[Input]\n"
           "A set of feature where each feature specifies a semantic that must be "
           "satisfied by the generated program.\n"
           "\n";
    std::size_t n = 0;
    for (const Feature* f : g.sorted_by_id()) {
        out << ++n << ". " << f->description << "\n";
        if (!f->witness.empty()) {
            out << "   Witness:\n```\n" << f->witness;
            if (f->witness.back() != '\n') out << '\n';
            out << "```\n";
        }
    }
    out << "\n"
           "[Instructions]\n"
           "1. All features must be satisfied within a single program.\n"
           "2. Dependencies among features are implicit and should be realized "
           "through appropriate control-flow and/or data-flow structures in the "
           "generated code.\n"
           "3. The generated code must be valid and compilable under the language "
           "specification.\n";
    return out.str();
}

namespace {

bool looks_like_preamble(const std::string& line) {
    const std::string t = trim(line);
    if (t.rfind("#include", 0) == 0 || t.rfind("#define", 0) == 0 ||
        t.rfind("#pragma", 0) == 0) {
        return true;
    }
    if (t.find("int main") != std::string::npos) return true;
    static const char* kStarters[] = {
        "struct ", "class ",  "template", "typedef ", "using ",    "enum ",
        "union ",  "void ",   "int ",     "char ",    "float ",    "double ",
        "long ",   "short ",  "unsigned ", "signed ", "static ",   "extern ",
        "const ",  "volatile ", "namespace ",
    };
    for (const char* s : kStarters) {
        if (t.rfind(s, 0) == 0) return true;
    }
    return false;
}

bool has_cpp_tokens(const std::string& code, const std::string& fence_tag) {
    const std::string tag = to_lower(trim(fence_tag));
    if (tag == "cpp" || tag == "c++" || tag == "cxx") return true;
    if (tag == "c") return false;
    if (code.find("::") != std::string::npos) return true;
    if (code.find("template") != std::string::npos) return true;
    for (const std::string& line : split_lines(code)) {
        const std::string t = trim(line);
        if (t.rfind("class ", 0) == 0 || t.find(" class ") != std::string::npos) {
            return true;
        }
    }
    return false;
}

}  // namespace

SourceProgram extract_code_block(const std::string& response) {
    SourceProgram prog;
    auto open = response.find("```");
    if (open != std::string::npos) {
        auto tag_end = response.find('\n', open + 3);
        if (tag_end == std::string::npos) throw NoCodeFound();
        std::string tag = response.substr(open + 3, tag_end - open - 3);
        auto close = response.find("```", tag_end + 1);
        std::string body = close == std::string::npos
                               ? response.substr(tag_end + 1)
                               : response.substr(tag_end + 1, close - tag_end - 1);
        if (trim(body).empty()) throw NoCodeFound();
        prog.code = body;
        prog.language =
            has_cpp_tokens(body, tag) ? SourceLanguage::cpp : SourceLanguage::c;
        return prog;
    }

    const std::vector<std::string> lines = split_lines(response);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!looks_like_preamble(lines[i])) continue;
        std::string body;
        for (std::size_t j = i; j < lines.size(); ++j) {
            body += lines[j];
            body += '\n';
        }
        prog.code = body;
        prog.language = has_cpp_tokens(body, "") ? SourceLanguage::cpp : SourceLanguage::c;
        return prog;
    }
    throw NoCodeFound();
}

std::string group_content_id(const FeatureGroup& g) {
    std::vector<std::string> ids = g.ids();
    std::sort(ids.begin(), ids.end());
    std::string material;
    for (const std::string& id : ids) {
        material += id;
        material += '|';
    }
    return fnv1a64_hex(material);
}

SourceProgram instantiate(const FeatureGroup& g, ChatClient& model, int retries) {
    if (g.size() == 0) throw InstantiationFailed("empty group");
    const std::string base_prompt = build_instantiation_prompt(g);
    std::string last_error = "no attempts made";
    for (int attempt = 0; attempt <= retries; ++attempt) {
        std::string prompt = base_prompt;
        if (attempt > 0) {
            // A changed prompt also gives the request a distinct replay key,
            // so recorded retry chains play back step by step.
            prompt += "\n[Retry " + std::to_string(attempt) +
                      "] The previous response did not contain a usable program. "
                      "Reply with one fenced code block holding the complete "
                      "program and nothing else.\n";
        }
        try {
            const std::string response =
                model.chat(model.make_request(ModelRole::instantiate, prompt));
            SourceProgram prog = extract_code_block(response);
            prog.group_id = group_content_id(g);
            prog.attempt = attempt;
            return prog;
        } catch (const NoCodeFound& e) {
            last_error = e.what();
        } catch (const ModelError& e) {
            last_error = e.what();
        }
    }
    throw InstantiationFailed("after " + std::to_string(retries + 1) +
                              " attempts: " + last_error);
}

}  // namespace semfuzz
