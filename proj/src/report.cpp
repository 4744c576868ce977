#include "ldm/report.hpp"

#include <fstream>
#include <stdexcept>

namespace ldm {

ReportKind parse_report_kind(std::string_view name) {
  if (name == "profile" || name == "Profile") return ReportKind::Profile;
  if (name == "penalty" || name == "penalty-matrix" || name == "PenaltyMatrix") return ReportKind::PenaltyMatrix;
  if (name == "curves" || name == "Curves") return ReportKind::Curves;
  throw std::invalid_argument("unknown report kind '" + std::string(name) + "'");
}

std::string_view to_string(ReportKind kind) {
  switch (kind) {
    case ReportKind::Profile: return "profile";
    case ReportKind::PenaltyMatrix: return "penalty-matrix";
    case ReportKind::Curves: return "curves";
  }
  return "?";
}

stats::ResultTable build_table(const std::vector<ExperimentRecord>& records) {
  stats::ResultTable table;
  for (const auto& r : records) table.add({r.algorithm, r.dataset, r.repetition, r.step, r.test_accuracy});
  return table;
}

std::vector<std::filesystem::path> report(const std::filesystem::path& records_path, ReportKind kind,
                                          const std::filesystem::path& out_dir, const ReportOptions& options) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot open records " + records_path.string());
  const auto records = read_records_jsonl(in);
  if (records.empty()) throw std::runtime_error("records file " + records_path.string() + " is empty");
  const auto table = build_table(records);
  table.require_complete();

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto open = [&](const char* name) {
    written.push_back(out_dir / name);
    std::ofstream f(written.back());
    if (!f) throw std::runtime_error("cannot write " + written.back().string());
    return f;
  };
  switch (kind) {
    case ReportKind::Profile: {
      std::vector<double> deltas = options.deltas;
      if (deltas.empty()) {
        for (int i = 0; i <= 100; ++i) deltas.push_back(i / 100.0);
      }
      auto f = open("profile.csv");
      stats::write_profile_csv(f, stats::performance_profile(table, deltas));
      break;
    }
    case ReportKind::PenaltyMatrix: {
      const auto p = stats::penalty_matrix(table, options.threshold);
      auto csv = open("penalty_matrix.csv");
      stats::write_penalty_csv(csv, p);
      auto txt = open("penalty_matrix.txt");
      stats::write_penalty_text(txt, p);
      break;
    }
    case ReportKind::Curves: {
      auto f = open("curves.csv");
      stats::write_curves_csv(f, stats::accuracy_curves(table));
      break;
    }
  }
  return written;
}

}  // namespace ldm
