#pragma once

#include <string>
#include <vector>

namespace vtdl {

struct CheckResult {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string detail; // non-empty on failure
};

/// The invariance suite behind `vtdl selfcheck`: derivative scaling, cascade
/// composition, loss oracle, gradient check, FIFO bank, momentum contraction,
/// triplet constraints, embedding norms, learning-rate schedule.
std::vector<CheckResult> run_selfcheck();

} // namespace vtdl
