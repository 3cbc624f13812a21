#include <doctest.h>

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <cstdio>
#include <filesystem>

using namespace semfuzz;

TEST_CASE("fnv1a64 matches reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("hello") == 0xa430d84680aabd0bULL);
    CHECK(fnv1a64_hex("hello") == "a430d84680aabd0b");
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
}

TEST_CASE("fnv1a64_hex is 16 lowercase hex digits") {
    const std::string h = fnv1a64_hex("The code should use nested loops.");
    CHECK(h == "2b225e7a555017c5");
    CHECK(h.size() == 16);
}

TEST_CASE("trim strips both ends only") {
    CHECK(trim("  x  ") == "x");
    CHECK(trim("\t\n x y \r\n") == "x y");
    CHECK(trim("") == "");
    CHECK(trim("   ") == "");
}

TEST_CASE("collapse_whitespace collapses runs and trims") {
    CHECK(collapse_whitespace("  a\t\nb  ") == "a b");
    CHECK(collapse_whitespace("one  two\tthree") == "one two three");
    CHECK(collapse_whitespace("Case IS Kept") == "Case IS Kept");
    SUBCASE("idempotent") {
        const std::string once = collapse_whitespace(" a \n b ");
        CHECK(collapse_whitespace(once) == once);
    }
}

TEST_CASE("starts_with_icase") {
    CHECK(starts_with_icase("The Code Should", "the code"));
    CHECK(starts_with_icase("abc", ""));
    CHECK_FALSE(starts_with_icase("ab", "abc"));
    CHECK_FALSE(starts_with_icase("xyz", "abc"));
}

TEST_CASE("split_lines handles LF and CRLF and no trailing newline") {
    auto lines = split_lines("a\r\nb\nc");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "a");
    CHECK(lines[1] == "b");
    CHECK(lines[2] == "c");
    CHECK(split_lines("").empty());
    auto trailing = split_lines("x\n");
    REQUIRE(trailing.size() == 1);
    CHECK(trailing[0] == "x");
}

TEST_CASE("to_lower is ASCII-only") {
    CHECK(to_lower("AbC 123") == "abc 123");
}

TEST_CASE("base64_decode round trip") {
    CHECK(base64_decode("aGVsbG8=") == "hello");
    CHECK(base64_decode("aW50IG1haW4oKXt9") == "int main(){}");
    CHECK(base64_decode("") == "");
    SUBCASE("ignores embedded newlines") {
        CHECK(base64_decode("aGVs\nbG8=") == "hello");
    }
}

TEST_CASE("read_file and write_file round trip, missing file throws") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "semfuzz_util_io.txt").string();
    write_file(path, "line1\nline2");
    CHECK(read_file(path) == "line1\nline2");
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_file(path), IoError);
}
