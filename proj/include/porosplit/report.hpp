#pragma once

#include "porosplit/coupling.hpp"
#include "porosplit/timestepper.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace porosplit {

enum class ReportFormat { Csv, Json };

inline constexpr const char* kReportCsvHeader = "k,energy_gap,err_norm,factor,theory_rate";

/// Shortest round-trip decimal representation, '.' separator.
std::string format_number(double value);

/// One row per iteration record; an undefined factor is an empty field.
std::string report_to_csv(const IterationReport& report);
nlohmann::json report_to_json(const IterationReport& report);

/// Rows of a report CSV as written by report_to_csv. Throws IoError on a
/// malformed document.
struct CsvRow {
  int k = 0;
  double energy_gap = 0, err_norm = 0, theory_rate = 0;
  std::optional<double> factor;
};
std::vector<CsvRow> parse_report_csv(const std::string& text);

void write_report(const IterationReport& report, const std::filesystem::path& path,
                  ReportFormat format);

/// Dof-wise dump of trajectory state n, rows "field,index,value" for u, p, q.
std::string checkpoint_to_csv(const Trajectory& traj, std::size_t n);

/// Per-step norms of a trajectory: t, Euclidean norms of u, p and q, the
/// physical energy and the outer iteration count.
nlohmann::json trajectory_norms_json(const Trajectory& traj, const OperatorSet& ops);

/// Writes text with '\n' line endings; throws IoError naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace porosplit
