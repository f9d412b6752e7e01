#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace nhdimer {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct ValidationOptions {
    std::size_t workers = 0;
    /// Criterion ids to run; empty runs all of 1 to 11.
    std::vector<int> only;
};

inline constexpr int kCriterionCount = 11;

/// Runs one acceptance criterion. Exceptions inside a check count as failure.
CriterionResult run_criterion(int id, const ValidationOptions& options = {});

/// Runs the selected criteria in order, reporting each as soon as it finishes.
std::vector<CriterionResult> run_acceptance(const ValidationOptions& options = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// One line: "[PASS] C3 <name> (<seconds> s): <detail>".
std::string format_result(const CriterionResult& result);

}  // namespace nhdimer
