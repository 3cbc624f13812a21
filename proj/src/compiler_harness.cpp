#include "semfuzz/compiler_harness.hpp"

#include "semfuzz/errors.hpp"
#include "semfuzz/util.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <regex>

namespace semfuzz {

namespace fs = std::filesystem;

std::string to_string(CoverageMode m) {
    switch (m) {
        case CoverageMode::edge_bitmap: return "edge_bitmap";
        case CoverageMode::line_report: return "line_report";
        case CoverageMode::none: return "none";
    }
    return "none";
}

CoverageMode coverage_mode_from_string(const std::string& s) {
    if (s == "edge_bitmap") return CoverageMode::edge_bitmap;
    if (s == "line_report") return CoverageMode::line_report;
    if (s == "none") return CoverageMode::none;
    throw ConfigError("unknown coverage mode: " + s);
}

std::string to_string(CompileStatus s) {
    switch (s) {
        case CompileStatus::Valid: return "Valid";
        case CompileStatus::Reject: return "Reject";
        case CompileStatus::Crash: return "Crash";
        case CompileStatus::Hang: return "Hang";
        case CompileStatus::Oom: return "Oom";
    }
    return "Reject";
}

CompileStatus compile_status_from_string(const std::string& s) {
    if (s == "Valid") return CompileStatus::Valid;
    if (s == "Reject") return CompileStatus::Reject;
    if (s == "Crash") return CompileStatus::Crash;
    if (s == "Hang") return CompileStatus::Hang;
    if (s == "Oom") return CompileStatus::Oom;
    throw ConfigError("unknown compile status: " + s);
}

std::string to_string(CrashKind k) {
    switch (k) {
        case CrashKind::AssertionFailure: return "AssertionFailure";
        case CrashKind::InternalError: return "InternalError";
        case CrashKind::Signal: return "Signal";
    }
    return "Signal";
}

CrashKind crash_kind_from_string(const std::string& s) {
    if (s == "AssertionFailure") return CrashKind::AssertionFailure;
    if (s == "InternalError") return CrashKind::InternalError;
    if (s == "Signal") return CrashKind::Signal;
    throw ConfigError("unknown crash kind: " + s);
}

std::vector<std::string> CompilerConfig::default_crash_patterns() {
    return {
        "internal compiler error",
        "Assertion .* failed",
        "UNREACHABLE executed",
        "PLEASE submit a bug report",
    };
}

namespace {

constexpr double kNoTimeout = 3.15e8;  // ~10 years; poll still cycles

double clamp_timeout(double seconds) {
    return seconds > 0.0 ? seconds : kNoTimeout;
}

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

}  // namespace

SpawnResult spawn_capture(const std::vector<std::string>& argv, double timeout_seconds,
                          std::uint64_t memory_limit_bytes, std::size_t stderr_cap) {
    if (argv.empty()) throw HarnessError("empty command");

    int out_pipe[2] = {-1, -1};
    int err_pipe[2] = {-1, -1};
    int exec_pipe[2] = {-1, -1};
    if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0 || ::pipe(exec_pipe) != 0) {
        throw HarnessError(std::string("pipe failed: ") + std::strerror(errno));
    }
    ::fcntl(exec_pipe[1], F_SETFD, FD_CLOEXEC);

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw HarnessError(std::string("fork failed: ") + std::strerror(errno));

    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1], exec_pipe[0]}) {
            ::close(fd);
        }
        if (memory_limit_bytes > 0) {
            rlimit rl{memory_limit_bytes, memory_limit_bytes};
            ::setrlimit(RLIMIT_AS, &rl);
        }
        std::vector<char*> cargv;
        cargv.reserve(argv.size() + 1);
        for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
        cargv.push_back(nullptr);
        ::execvp(cargv[0], cargv.data());
        const int err = errno;
        [[maybe_unused]] ssize_t n = ::write(exec_pipe[1], &err, sizeof err);
        ::_exit(127);
    }

    ::setpgid(pid, pid);  // best effort; the child does the same
    close_fd(out_pipe[1]);
    close_fd(err_pipe[1]);
    close_fd(exec_pipe[1]);

    int exec_errno = 0;
    const ssize_t got = ::read(exec_pipe[0], &exec_errno, sizeof exec_errno);
    close_fd(exec_pipe[0]);
    if (got > 0) {
        close_fd(out_pipe[0]);
        close_fd(err_pipe[0]);
        int status = 0;
        ::waitpid(pid, &status, 0);
        throw HarnessError("cannot execute " + argv[0] + ": " +
                           std::strerror(exec_errno));
    }

    ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    SpawnResult result;
    const double timeout = clamp_timeout(timeout_seconds);
    const auto deadline = start + std::chrono::duration<double>(timeout);
    // After a kill, give stragglers holding the pipe this long to go away.
    const auto drain_deadline = deadline + std::chrono::seconds(2);
    bool killed = false;

    int fds[2] = {out_pipe[0], err_pipe[0]};
    std::string* sinks[2] = {&result.stdout_text, &result.stderr_text};
    bool* trunc[2] = {nullptr, &result.stderr_truncated};

    while (fds[0] >= 0 || fds[1] >= 0) {
        const auto now = std::chrono::steady_clock::now();
        if (!killed && now >= deadline) {
            result.timed_out = true;
            killed = true;
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
        }
        if (killed && now >= drain_deadline) break;

        pollfd pfds[2];
        nfds_t nfds = 0;
        for (int i = 0; i < 2; ++i) {
            if (fds[i] >= 0) pfds[nfds++] = {fds[i], POLLIN, 0};
        }
        const auto until = killed ? drain_deadline : deadline;
        auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           until - std::chrono::steady_clock::now())
                           .count();
        if (wait_ms < 0) wait_ms = 0;
        if (wait_ms > 200) wait_ms = 200;
        if (::poll(pfds, nfds, static_cast<int>(wait_ms)) < 0 && errno != EINTR) break;

        for (nfds_t p = 0; p < nfds; ++p) {
            if (!(pfds[p].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const int i = pfds[p].fd == fds[0] ? 0 : 1;
            char buffer[4096];
            for (;;) {
                const ssize_t n = ::read(fds[i], buffer, sizeof buffer);
                if (n > 0) {
                    std::string& sink = *sinks[i];
                    if (sink.size() < stderr_cap) {
                        sink.append(buffer, std::min<std::size_t>(
                                                n, stderr_cap - sink.size()));
                        if (sink.size() >= stderr_cap && trunc[i]) *trunc[i] = true;
                    } else if (trunc[i]) {
                        *trunc[i] = true;
                    }
                    continue;
                }
                if (n == 0) {
                    close_fd(fds[i]);
                } else if (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
                    close_fd(fds[i]);
                }
                break;
            }
        }
    }
    close_fd(fds[0]);
    close_fd(fds[1]);

    int status = 0;
    ::waitpid(pid, &status, 0);
    if (!killed) {
        // Reap any stragglers the compiler driver left in the group.
        ::kill(-pid, SIGKILL);
    }
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.signal = WTERMSIG(status);
        result.exit_code = -1;
    }
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

namespace {

bool matches_any_pattern(const std::string& text,
                         const std::vector<std::string>& patterns) {
    for (const std::string& p : patterns) {
        if (std::regex_search(text, std::regex(p))) return true;
    }
    return false;
}

bool fatal_signal(int sig) {
    switch (sig) {
        case SIGSEGV:
        case SIGABRT:
        case SIGILL:
        case SIGFPE:
        case SIGBUS:
            return true;
        default:
            return false;
    }
}

bool looks_out_of_memory(const std::string& stderr_text) {
    for (const char* marker : {"virtual memory exhausted", "out of memory",
                               "Cannot allocate memory", "std::bad_alloc"}) {
        if (stderr_text.find(marker) != std::string::npos) return true;
    }
    return false;
}

CompileStatus decide_status(const SpawnResult& sr, const CompilerConfig& cfg) {
    if (sr.timed_out) return CompileStatus::Hang;
    if (cfg.memory_limit_bytes > 0 && sr.signal == SIGKILL) return CompileStatus::Oom;
    if (sr.signal == 0 && sr.exit_code == 0) return CompileStatus::Valid;
    if (looks_out_of_memory(sr.stderr_text)) return CompileStatus::Oom;
    if (fatal_signal(sr.signal) || matches_any_pattern(sr.stderr_text, cfg.crash_patterns)) {
        return CompileStatus::Crash;
    }
    return CompileStatus::Reject;
}

std::string substitute_all(std::string text, const std::string& placeholder,
                           const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return text;
}

}  // namespace

CompileOutcome run_compile(const SourceProgram& program, const CompilerConfig& cfg) {
    if (cfg.command_template.empty()) throw HarnessError("empty command template");
    if (cfg.timeout_seconds <= 0.0) throw HarnessError("timeout must be positive");
    bool has_input = false;
    for (const std::string& part : cfg.command_template) {
        if (part.find("{input}") != std::string::npos) has_input = true;
    }
    if (!has_input) throw HarnessError("command template lacks an {input} placeholder");

    const fs::path workdir = cfg.workdir.empty() ? fs::path(".") : fs::path(cfg.workdir);
    std::error_code ec;
    fs::create_directories(workdir, ec);
    if (ec) throw HarnessError("cannot create workdir " + workdir.string());

    const fs::path input =
        workdir / (program.language == SourceLanguage::cpp ? "input.cpp" : "input.c");
    const fs::path output = workdir / "output.o";
    write_file(input.string(), program.code);

    std::vector<std::string> argv;
    argv.reserve(cfg.command_template.size() + cfg.flags.size());
    for (const std::string& part : cfg.command_template) {
        argv.push_back(substitute_all(substitute_all(part, "{input}", input.string()),
                                      "{output}", output.string()));
    }
    argv.insert(argv.end(), cfg.flags.begin(), cfg.flags.end());

    SpawnResult sr = spawn_capture(argv, cfg.timeout_seconds, cfg.memory_limit_bytes,
                                   cfg.stderr_cap_bytes);
    write_file((workdir / "stderr.txt").string(), sr.stderr_text);

    CompileOutcome outcome;
    outcome.status = decide_status(sr, cfg);
    outcome.exit_code = sr.exit_code;
    outcome.signal = sr.signal;
    outcome.timed_out = sr.timed_out;
    outcome.stderr_truncated = sr.stderr_truncated;
    outcome.stderr_text = std::move(sr.stderr_text);
    outcome.wall_time_seconds = sr.wall_time_seconds;
    outcome.command = std::move(argv);
    return outcome;
}

namespace {

// Scrubs the evidence drift that would otherwise split buckets: hex
// addresses, line/column numbers, and build-tree directory prefixes.
std::string normalize_evidence_line(const std::string& line) {
    static const std::regex kHex("0x[0-9a-fA-F]+");
    static const std::regex kLineCol(":[0-9]+");
    std::string t = std::regex_replace(line, kHex, "0xADDR");
    t = std::regex_replace(t, kLineCol, ":N");

    std::string out;
    out.reserve(t.size());
    std::size_t i = 0;
    while (i < t.size()) {
        std::size_t end = t.find(' ', i);
        if (end == std::string::npos) end = t.size();
        std::string token = t.substr(i, end - i);
        const std::size_t slash = token.rfind('/');
        if (slash != std::string::npos) token = token.substr(slash + 1);
        out += token;
        if (end < t.size()) out += ' ';
        i = end + 1;
    }
    return collapse_whitespace(out);
}

// Backtrace frames as printed by the common crash handlers: either
// "#0 0x... fn (...)" or a bare "0x... fn file:N" line.
bool is_backtrace_frame(const std::string& line) {
    static const std::regex kNumbered(R"(^\s*#[0-9]+\s+0x[0-9a-fA-F]+)");
    static const std::regex kBare(R"(^\s*0x[0-9a-fA-F]+\s)");
    return std::regex_search(line, kNumbered) || std::regex_search(line, kBare);
}

}  // namespace

CrashSignature classify_crash(const CompileOutcome& outcome) {
    if (outcome.status != CompileStatus::Crash) throw NotACrash();

    static const std::regex kAssertion("Assertion .* failed|UNREACHABLE executed");
    static const std::regex kIceBanner("internal compiler error|PLEASE submit a bug report");

    const std::vector<std::string> lines = split_lines(outcome.stderr_text);
    for (const std::string& line : lines) {
        if (std::regex_search(line, kAssertion)) {
            return {CrashKind::AssertionFailure, normalize_evidence_line(line)};
        }
    }
    for (const std::string& line : lines) {
        if (std::regex_search(line, kIceBanner)) {
            return {CrashKind::InternalError, normalize_evidence_line(line)};
        }
    }

    std::vector<std::string> frames;
    for (const std::string& line : lines) {
        if (is_backtrace_frame(line)) {
            frames.push_back(normalize_evidence_line(line));
            if (frames.size() == 3) break;
        }
    }
    if (frames.empty()) {
        // Last 5 non-empty lines, normalized, oldest first.
        for (auto it = lines.rbegin(); it != lines.rend() && frames.size() < 5; ++it) {
            if (!trim(*it).empty()) frames.push_back(normalize_evidence_line(*it));
        }
        std::reverse(frames.begin(), frames.end());
    }
    std::string material = "signal:" + std::to_string(outcome.signal);
    for (const std::string& f : frames) {
        material += '\n';
        material += f;
    }
    return {CrashKind::Signal, fnv1a64_hex(material)};
}

CoverageMap measure_coverage(const CoverageContext& ctx, const CompilerConfig& cfg) {
    switch (cfg.coverage_mode) {
        case CoverageMode::none: {
            return CoverageMap{CoverageUnit::edge, {}};
        }
        case CoverageMode::edge_bitmap: {
            if (ctx.bitmap_path.empty()) {
                throw CoverageUnavailable("no bitmap path configured");
            }
            return coverage_from_bitmap_file(ctx.bitmap_path);
        }
        case CoverageMode::line_report: {
            if (!ctx.report_command.empty()) {
                SpawnResult sr = spawn_capture(ctx.report_command,
                                               clamp_timeout(cfg.timeout_seconds), 0,
                                               64u << 20);
                if (sr.timed_out || sr.signal != 0 || sr.exit_code != 0) {
                    throw CoverageUnavailable("report command failed: " +
                                              ctx.report_command.front());
                }
                return parse_line_report(sr.stdout_text);
            }
            if (!ctx.report_path.empty()) {
                return parse_line_report(read_file(ctx.report_path));
            }
            throw CoverageUnavailable("no report command or path configured");
        }
    }
    throw CoverageUnavailable("unknown coverage mode");
}

}  // namespace semfuzz
