#pragma once

#include <string>

#include <json.hpp>

#include "spectra_shape/config.hpp"

namespace spectra_shape {

using Json = nlohmann::ordered_json;

// {"value", "tolerance", "verdict"} plus an optional reference value.
Json measured(double value, double tolerance, const std::string& verdict);
Json measured(double value, double reference, double tolerance, const std::string& verdict);

// Worst of pass < inconclusive < fail.
std::string combine_verdicts(const std::string& a, const std::string& b);
int exit_code_for(const std::string& verdict);

// Mesh size statistics for the provenance block.
Json mesh_stats(const ShapeSolve& solve);

// Skeleton report: tool, command, provenance (config hash, resolved config,
// seed, tolerances) and an empty results object.
Json make_report(const std::string& command, const RunConfig& config);

// UTC, ISO 8601.
std::string utc_timestamp();
// Report text without the "timestamps" block: the determinism comparison.
std::string deterministic_text(Json report);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace spectra_shape
