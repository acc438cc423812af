#pragma once

#include <string>

#include "spectra_shape/acceptance.hpp"

namespace spectra_shape {

struct CommandOutput {
    Json report;
    std::string csv;  // optional table
    int exit_code = 0;
};

CommandOutput cmd_eig(const RunConfig& config);
CommandOutput cmd_dgamma(const RunConfig& config);
CommandOutput cmd_critical(const RunConfig& config);
CommandOutput cmd_branches(const RunConfig& config);
// Runs the acceptance criteria (config.only selects a subset).
CommandOutput cmd_selftest(const RunConfig& config, std::function<void(const CriterionResult&)> progress = {});

}  // namespace spectra_shape
