#include "ldl/io.hpp"

#include "ldl/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ldl::experiments {
namespace {

std::string full_precision(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed4(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

// Config ids contain '|' and '=' but never commas, so plain splitting is enough.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_result_row(const ResultRow& row) {
  return row.dataset + ',' + row.model + ',' + row.config_id + ',' + std::to_string(row.trial) + ',' +
         full_precision(row.val_acc) + ',' + full_precision(row.test_acc) + ',' + std::to_string(row.epochs) +
         ',' + full_precision(row.seconds);
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::vector<ResultRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line_no == 1 && line == kResultsHeader)) continue;
    const auto f = split_fields(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 8) throw ParseError(where, "expected 8 fields, found " + std::to_string(f.size()));
    try {
      rows.push_back({f[0], f[1], f[2], std::stoi(f[3]), std::stod(f[4]), std::stod(f[5]), std::stoi(f[6]),
                      std::stod(f[7])});
    } catch (const std::logic_error&) {
      throw ParseError(where, "non-numeric field");
    }
  }
  return rows;
}

void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::string text = std::string(kResultsHeader) + '\n';
  for (const auto& r : rows) text += format_result_row(r) + '\n';
  write_text(path, text);
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::string text = std::string(kSummaryHeader) + '\n';
  for (const auto& r : rows)
    text += r.dataset + ',' + r.model + ',' + fixed4(100.0 * r.mean_test_acc) + ',' +
            fixed4(100.0 * r.std_test_acc) + ',' + std::to_string(r.trials) + '\n';
  write_text(path, text);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace ldl::experiments
