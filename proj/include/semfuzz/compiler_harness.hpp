#pragma once

#include "semfuzz/coverage.hpp"
#include "semfuzz/instantiation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace semfuzz {

enum class CoverageMode { edge_bitmap, line_report, none };

std::string to_string(CoverageMode m);
CoverageMode coverage_mode_from_string(const std::string& s);

// How the target compiler is invoked and confined. The argv template uses
// {input} and {output} placeholders; flags are appended after the template.
struct CompilerConfig {
    std::vector<std::string> command_template;
    std::vector<std::string> flags;
    double timeout_seconds = 30.0;
    std::uint64_t memory_limit_bytes = 0;  // 0 = unlimited
    CoverageMode coverage_mode = CoverageMode::none;
    std::string workdir;
    std::size_t stderr_cap_bytes = 65536;

    // Stderr lines matching any of these mark the outcome as a Crash even
    // when the exit status alone looks like a plain rejection.
    std::vector<std::string> crash_patterns = default_crash_patterns();

    static std::vector<std::string> default_crash_patterns();
};

enum class CompileStatus { Valid, Reject, Crash, Hang, Oom };

std::string to_string(CompileStatus s);
CompileStatus compile_status_from_string(const std::string& s);

struct CompileOutcome {
    CompileStatus status = CompileStatus::Reject;
    int exit_code = -1;          // exit status when exited normally
    int signal = 0;              // terminating signal, 0 if none
    bool timed_out = false;
    bool stderr_truncated = false;
    std::string stderr_text;     // capped at stderr_cap_bytes
    double wall_time_seconds = 0.0;
    std::vector<std::string> command;  // resolved argv, for reproduction
};

enum class CrashKind { AssertionFailure, InternalError, Signal };

std::string to_string(CrashKind k);
CrashKind crash_kind_from_string(const std::string& s);

// Deterministic bucket key for a compiler failure. Two outcomes with the
// same normalized evidence always map to the same key.
struct CrashSignature {
    CrashKind kind = CrashKind::Signal;
    std::string key;

    bool operator==(const CrashSignature&) const = default;
};

// Where coverage observations come from after a run. Exactly one of the
// fields relevant to the configured mode must be usable.
struct CoverageContext {
    std::string bitmap_path;                  // edge_bitmap
    std::vector<std::string> report_command;  // line_report: stdout is parsed
    std::string report_path;                  // line_report alternative
};

// Writes the program into cfg.workdir (input.c / input.cpp), runs the
// compiler under the configured limits with stdout/stderr captured, and
// classifies the outcome. The child runs in its own process group and the
// whole group is killed on timeout. Also leaves stderr.txt in the workdir.
// Throws HarnessError when the compiler cannot be spawned at all.
CompileOutcome run_compile(const SourceProgram& program, const CompilerConfig& cfg);

// Classifies a Crash outcome into a stable bucket:
//   - "Assertion ... failed" / "UNREACHABLE executed" banners:
//     kind = AssertionFailure, key = the normalized message line.
//   - "internal compiler error" / "PLEASE submit a bug report" banners:
//     kind = InternalError, key = the normalized banner line.
//   - anything else (fatal signals): kind = Signal, key = hash of the top
//     3 normalized backtrace frames, falling back to the last 5 normalized
//     stderr lines when no backtrace is present.
// Normalization strips directory prefixes, replaces line/column numbers
// and hex addresses with placeholders, so drifting build paths and ASLR do
// not split buckets. Throws NotACrash for non-Crash outcomes.
CrashSignature classify_crash(const CompileOutcome& outcome);

// Reads the coverage observation for the configured mode. edge_bitmap
// reads the bitmap file; line_report runs the report command (or reads
// report_path) and parses executed file:line pairs; none yields an empty
// edge map. Throws CoverageUnavailable when artifacts are missing.
CoverageMap measure_coverage(const CoverageContext& ctx, const CompilerConfig& cfg);

// Spawn helper shared by run_compile and the line-report runner: runs argv
// with a timeout, captures stdout/stderr. Exposed for reuse in tests.
struct SpawnResult {
    int exit_code = -1;
    int signal = 0;
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
    bool stderr_truncated = false;
    double wall_time_seconds = 0.0;
};
SpawnResult spawn_capture(const std::vector<std::string>& argv, double timeout_seconds,
                          std::uint64_t memory_limit_bytes, std::size_t stderr_cap);

}  // namespace semfuzz
