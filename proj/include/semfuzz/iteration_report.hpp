#pragma once

#include "semfuzz/compiler_harness.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace semfuzz {

// One fuzzing iteration, as recorded for logs, validity statistics and
// snapshot/resume comparison. `group_ids` lists the full group that went
// through instantiation (sorted); `seed_ids` the subset chosen before
// completion. When the model failed and no program was compiled, `status`
// is empty and cov_delta is 0.
struct IterationReport {
    std::uint64_t iteration = 0;
    std::vector<std::string> seed_ids;
    std::vector<std::string> novel_ids;  // seeds that came from the novel queue
    std::vector<std::string> group_ids;
    std::optional<CompileStatus> status;
    std::optional<CrashSignature> signature;
    std::size_t cov_delta = 0;
    std::size_t cov_total = 0;
    std::vector<std::string> promoted_ids;
    bool model_failure = false;

    bool operator==(const IterationReport&) const = default;
};

}  // namespace semfuzz
