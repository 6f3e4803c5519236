#pragma once

#include <string>
#include <vector>

#include "emdloss/matrix.hpp"
#include "emdloss/metrics.hpp"
#include "emdloss/net.hpp"

namespace emdloss {

// Shortest round-trip decimal representation (std::to_chars); parse is the
// exact inverse. All emitted files use these so that reruns are
// byte-identical and every file re-parses to the same doubles.
std::string format_double(double v);
double parse_double(const std::string& s);

// History CSV, fixed column order:
// epoch,loss_XE_component,loss_reg_component,lambda,train_AEM,test_AEM,test_AEO,SDD
extern const char* const kHistoryHeader;
void write_history_csv(const std::string& path, const std::vector<EpochRecord>& epochs);
std::vector<EpochRecord> parse_history_csv(const std::string& path);

// Square matrix CSV with class labels as header row and first column.
void write_matrix_csv(const std::string& path, const Mat& m);
Mat parse_matrix_csv(const std::string& path);

// One JSON object per line.
std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& line);
void append_eval_report(const std::string& path, const EvalReport& report);
std::vector<EvalReport> parse_eval_reports(const std::string& path);

// Bin metadata sidecar (edges + centers) for score discretization.
void write_bins_json(const std::string& path, const Vec& edges, const Vec& centers);
std::pair<Vec, Vec> parse_bins_json(const std::string& path);

}  // namespace emdloss
