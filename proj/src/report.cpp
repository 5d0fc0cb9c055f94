#include "porosplit/report.hpp"

#include "porosplit/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace porosplit {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string report_to_csv(const IterationReport& report) {
  std::string out = kReportCsvHeader;
  out += '\n';
  for (const auto& r : report.records) {
    out += std::to_string(r.k);
    out += ',';
    out += format_number(r.energy_gap);
    out += ',';
    out += format_number(r.err_norm);
    out += ',';
    if (r.factor) out += format_number(*r.factor);
    out += ',';
    out += format_number(report.theory_rate);
    out += '\n';
  }
  return out;
}

nlohmann::json report_to_json(const IterationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.records) {
    nlohmann::json row = {{"k", r.k},
                          {"energy_gap", r.energy_gap},
                          {"half_step_gap", r.half_step_gap},
                          {"err_norm", r.err_norm},
                          {"increment", r.increment},
                          {"mech_iterations", r.mech_iterations},
                          {"flow_iterations", r.flow_iterations}};
    row["factor"] = r.factor ? nlohmann::json(*r.factor) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  nlohmann::json j = {{"records", rows},
                      {"theory_rate", report.theory_rate},
                      {"stop_reason", to_string(report.stop)},
                      {"converged", report.converged()},
                      {"sweeps", report.sweeps},
                      {"iterations", report.iterations()},
                      {"solution_norm", report.solution_norm},
                      {"gap_to_norm_spread", report.gap_to_norm_spread}};
  j["gap_to_norm_constant"] = report.gap_to_norm_constant
                                  ? nlohmann::json(*report.gap_to_norm_constant)
                                  : nlohmann::json(nullptr);
  const auto worst = report.max_factor();
  j["max_factor"] = worst ? nlohmann::json(*worst) : nlohmann::json(nullptr);
  return j;
}

namespace {

double parse_double(const std::string& field, int line) {
  if (field == "nan") return std::nan("");
  if (field == "inf") return INFINITY;
  if (field == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw IoError("report CSV line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

}  // namespace

std::vector<CsvRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportCsvHeader)
    throw IoError("report CSV: missing or wrong header");
  std::vector<CsvRow> rows;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 5)
      throw IoError("report CSV line " + std::to_string(number) + ": expected 5 fields");
    CsvRow row;
    row.k = static_cast<int>(parse_double(fields[0], number));
    row.energy_gap = parse_double(fields[1], number);
    row.err_norm = parse_double(fields[2], number);
    if (!fields[3].empty()) row.factor = parse_double(fields[3], number);
    row.theory_rate = parse_double(fields[4], number);
    rows.push_back(row);
  }
  return rows;
}

std::string checkpoint_to_csv(const Trajectory& traj, std::size_t n) {
  if (n >= traj.states.size())
    throw Error(ErrorCode::InvalidArgument, "checkpoint index out of range");
  const StageState& x = traj.states[n];
  std::string out = "field,index,value\n";
  auto dump = [&](const char* field, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out += field;
      out += ',' + std::to_string(i) + ',' + format_number(v[i]) + '\n';
    }
  };
  dump("u", x.u);
  dump("p", x.p);
  dump("q", x.q);
  return out;
}

nlohmann::json trajectory_norms_json(const Trajectory& traj, const OperatorSet& ops) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    const StageState& x = traj.states[n];
    nlohmann::json row = {{"step", n},
                          {"t", traj.times[n]},
                          {"u_norm", x.u.norm()},
                          {"p_norm", x.p.norm()},
                          {"q_norm", x.q.norm()},
                          {"iterations", n > 0 ? traj.reports[n - 1].iterations() : 0}};
    if (n > 0) {
      const double dt = traj.times[n] - traj.times[n - 1];
      row["energy"] = physical_energy(x.u, traj.states[n - 1].u, x.p, ops, dt);
    }
    steps.push_back(row);
  }
  return {{"steps", steps}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_report(const IterationReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
  if (format == ReportFormat::Csv)
    write_text_file(path, report_to_csv(report));
  else
    write_text_file(path, report_to_json(report).dump(2) + "\n");
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed for '" + path.string() + "'");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

}  // namespace porosplit
