#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ldl::experiments {

/// One line of a raw results file. Failed cells carry NaN accuracies.
struct ResultRow {
  std::string dataset;
  std::string model;
  std::string config_id;
  int trial = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  int epochs = 0;
  double seconds = 0.0;
};

struct SummaryRow {
  std::string dataset;
  std::string model;
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;
  int trials = 0;
};

inline constexpr const char* kResultsHeader = "dataset,model,config_id,trial,val_acc,test_acc,epochs,seconds";
inline constexpr const char* kSummaryHeader = "dataset,model,mean_test_acc,std_test_acc,trials";

std::string format_result_row(const ResultRow& row);
/// Missing file yields an empty list; a malformed line is a ParseError naming the line.
std::vector<ResultRow> read_results(const std::filesystem::path& path);
void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

/// Accuracies are written as percentages with four decimals.
void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ldl::experiments
