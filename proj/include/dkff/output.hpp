#pragma once

// Result files. Every writer goes through write_atomic, so a reader never
// sees a partially written file.

#include <filesystem>
#include <string>
#include <vector>

#include "dkff/scenario.hpp"
#include "dkff/simulation.hpp"
#include "dkff/study.hpp"

namespace dkff {

/// Writes to a temporary sibling and renames over `path`. Throws kIo.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Per-tick columns:
/// t,truth_x,truth_y,truth_z,truth_yaw,est_x,est_y,est_z,est_yaw,lat_err,long_err
std::string run_csv(const RunResult& result);
std::string run_summary_json(const RunResult& result, const Scenario& scenario);
std::string run_summary_markdown(const RunResult& result);

std::string sweep_csv(const std::vector<SweepCell>& cells);
std::string sweep_json(const std::vector<SweepCell>& cells);
/// Rows are point counts, one lateral / longitudinal column pair per noise level.
std::string sweep_markdown(const std::vector<SweepCell>& cells);

std::string combo_csv(const std::vector<ComboRow>& rows);
std::string combo_json(const std::vector<ComboRow>& rows);
std::string combo_markdown(const std::vector<ComboRow>& rows);

}  // namespace dkff
