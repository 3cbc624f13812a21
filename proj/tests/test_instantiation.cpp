#include <doctest.h>

#include "semfuzz/errors.hpp"
#include "semfuzz/instantiation.hpp"

#include <algorithm>

using namespace semfuzz;

namespace {

Feature mk(const std::string& desc, const std::string& witness = "") {
    return Feature::make(desc, witness, FeatureOrigin::manual());
}

FeatureGroup demo_group() {
    FeatureGroup g;
    g.add(mk("The code should use a variable-length array.", "int a[n];"));
    g.add(mk("The code should pass it to a function."));
    return g;
}

}  // namespace

TEST_CASE("instantiation prompt renders task, input, and instructions") {
    const std::string p = build_instantiation_prompt(demo_group());
    CHECK(p.find("[Task]\n"
                 "Given a set of features, generate a single C/C++ program that "
                 "satisfies all features and stresses compiler edge cases.") !=
          std::string::npos);
    CHECK(p.find("[Input]\n"
                 "A set of feature where each feature specifies a semantic that "
                 "must be satisfied by the generated program.") != std::string::npos);
    CHECK(p.find("All features must be satisfied within a single program.") !=
          std::string::npos);
    CHECK(p.find("valid and compilable") != std::string::npos);
    // the witness rides along under its feature
    CHECK(p.find("int a[n];") != std::string::npos);
}

TEST_CASE("prompt is invariant under member permutation") {
    FeatureGroup forward, backward;
    forward.add(mk("The code should alpha."));
    forward.add(mk("The code should beta."));
    backward.add(mk("The code should beta."));
    backward.add(mk("The code should alpha."));
    CHECK(build_instantiation_prompt(forward) == build_instantiation_prompt(backward));
    CHECK(group_content_id(forward) == group_content_id(backward));
}

TEST_CASE("group_content_id distinguishes different member sets") {
    FeatureGroup a, b;
    a.add(mk("The code should alpha."));
    b.add(mk("The code should beta."));
    CHECK(group_content_id(a) != group_content_id(b));
    b.add(mk("The code should alpha."));
    CHECK(group_content_id(a) != group_content_id(b));
}

TEST_CASE("fenced code blocks are extracted with language detection") {
    const SourceProgram c = extract_code_block(
        "Sure, here you go:\n```c\nint main() { return 0; }\n```\nEnjoy!");
    CHECK(c.code == "int main() { return 0; }\n");
    CHECK(c.language == SourceLanguage::c);

    const SourceProgram cpp = extract_code_block(
        "```cpp\n#include <vector>\nint main() { std::vector<int> v; }\n```");
    CHECK(cpp.language == SourceLanguage::cpp);

    SUBCASE("untagged fences sniff C++ tokens") {
        const SourceProgram t = extract_code_block(
            "```\ntemplate <class T> T id(T x) { return x; }\nint main() {}\n```");
        CHECK(t.language == SourceLanguage::cpp);
        const SourceProgram plain =
            extract_code_block("```\nint main() { return 1; }\n```");
        CHECK(plain.language == SourceLanguage::c);
    }

    SUBCASE("only the first fence counts") {
        const SourceProgram first = extract_code_block(
            "```c\nint first;\n```\ntext\n```c\nint second;\n```");
        CHECK(first.code == "int first;\n");
    }

    SUBCASE("an unclosed fence runs to the end") {
        const SourceProgram open =
            extract_code_block("```c\nint main() { return 2; }\n");
        CHECK(open.code == "int main() { return 2; }\n");
    }
}

TEST_CASE("prose-wrapped code without fences is recovered from the preamble") {
    const SourceProgram p = extract_code_block(
        "The program below satisfies every feature.\n"
        "#include <stdio.h>\n"
        "int main() { printf(\"hi\"); }\n");
    CHECK(p.code ==
          "#include <stdio.h>\nint main() { printf(\"hi\"); }\n");
}

TEST_CASE("responses without code throw NoCodeFound") {
    CHECK_THROWS_AS(extract_code_block("I could not produce a program."), NoCodeFound);
    CHECK_THROWS_AS(extract_code_block(""), NoCodeFound);
    CHECK_THROWS_AS(extract_code_block("```c\n\n```"), NoCodeFound);
}

TEST_CASE("instantiate retries on responses without code") {
    ChatClient model;
    model.set_retry_backoff_ms(0);
    int calls = 0;
    model.set_chat_transport([&](const ModelRequest& req) -> std::string {
        ++calls;
        if (calls == 1) {
            CHECK(req.prompt.find("[Retry") == std::string::npos);
            return "Let me think about this first...";
        }
        CHECK(req.prompt.find("[Retry 1]") != std::string::npos);
        return "```c\nint main() { return 0; }\n```";
    });
    const SourceProgram p = instantiate(demo_group(), model, 2);
    CHECK(calls == 2);
    CHECK(p.attempt == 1);
    CHECK(p.code == "int main() { return 0; }\n");
    CHECK(p.group_id == group_content_id(demo_group()));
}

TEST_CASE("instantiate fails after the retry budget") {
    ChatClient model;
    model.set_retry_backoff_ms(0);
    int calls = 0;
    model.set_chat_transport([&](const ModelRequest&) -> std::string {
        ++calls;
        return "still no code";
    });
    try {
        instantiate(demo_group(), model, 2);
        FAIL("expected InstantiationFailed");
    } catch (const InstantiationFailed& e) {
        CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    }
    CHECK(calls == 3);

    SUBCASE("zero retries means a single attempt") {
        calls = 0;
        CHECK_THROWS_AS(instantiate(demo_group(), model, 0), InstantiationFailed);
        CHECK(calls == 1);
    }
}

TEST_CASE("retry prompts carry distinct archive keys") {
    // identical requests replay identically, so each retry must render a
    // different prompt; otherwise a recorded flaky session could never be
    // replayed faithfully
    ChatClient model;
    model.set_retry_backoff_ms(0);
    std::vector<std::string> prompts;
    model.set_chat_transport([&](const ModelRequest& req) -> std::string {
        prompts.push_back(req.prompt);
        if (prompts.size() < 3) return "prose only";
        return "```c\nint main(){}\n```";
    });
    instantiate(demo_group(), model, 2);
    REQUIRE(prompts.size() == 3);
    CHECK(prompts[0] != prompts[1]);
    CHECK(prompts[1] != prompts[2]);
}

TEST_CASE("language string round trip") {
    CHECK(to_string(SourceLanguage::c) == "c");
    CHECK(source_language_from_string("cpp") == SourceLanguage::cpp);
}
