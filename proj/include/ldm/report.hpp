#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "ldm/experiment.hpp"
#include "ldm/stats.hpp"

namespace ldm {

enum class ReportKind { Profile, PenaltyMatrix, Curves };

ReportKind parse_report_kind(std::string_view name);
std::string_view to_string(ReportKind kind);

stats::ResultTable build_table(const std::vector<ExperimentRecord>& records);

struct ReportOptions {
  std::vector<double> deltas;  // defaults to 0, 0.01, ..., 1
  double threshold = 2.776;
};

/// Reads JSONL records, validates the grid and writes the artifacts for
/// `kind` into `out_dir`. Returns the paths written.
std::vector<std::filesystem::path> report(const std::filesystem::path& records_path, ReportKind kind,
                                          const std::filesystem::path& out_dir, const ReportOptions& options = {});

}  // namespace ldm
