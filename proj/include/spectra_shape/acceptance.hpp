#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spectra_shape/report.hpp"

namespace spectra_shape {

struct CriterionResult {
    int id = 0;
    std::string title;
    std::string verdict = "fail";  // pass, fail
    std::string summary;           // one line
    Json detail = Json::object();
    Json timing = Json::object();  // wall-clock measurements, kept out of the deterministic part
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::vector<int> only;  // empty = all nine
    int threads = 1;
    // Criterion 9 reruns this subset twice and compares the reports.
    std::vector<int> determinism_subset = {1, 5, 7};
    std::function<void(const CriterionResult&)> progress;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

// Report of an acceptance run; per-criterion seconds go into "timestamps".
Json acceptance_report(const std::vector<CriterionResult>& results, const RunConfig& config);

// "[PASS] 3 title: summary (12.3 s)"
std::string criterion_line(const CriterionResult& r);

}  // namespace spectra_shape
