#ifndef TEDRATE_EVALUATION_HPP
#define TEDRATE_EVALUATION_HPP

#include <array>
#include <string>
#include <vector>

#include "tedrate/common.hpp"
#include "tedrate/corpus.hpp"

namespace tedrate::evaluation {

// Probability that a random positive outranks a random negative, ties
// counted 1/2 (Mann-Whitney / average-rank formulation). Labels are 0/1.
// Single-class labels have no defined AUC: returns NaN with a warning.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal integration of the ROC curve with tied scores grouped into
// one sweep step. Agrees with auc() to within fp rounding; kept as an
// independently-derived oracle.
double auc_trapezoid(const std::vector<double>& scores, const std::vector<int>& labels);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

// 0/0 cases (no predicted positives / no true positives / P+R = 0) are
// reported as 0 with a warning, never NaN.
Prf prf(const std::vector<int>& predictions, const std::vector<int>& labels);

struct CategoryMetrics {
  std::string category;
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool defined = true;  // false when the test split has a single class
};

struct MetricReport {
  std::string model_id;
  std::string split_id;
  std::string threshold_policy;
  std::vector<CategoryMetrics> categories;  // corpus::categories() order
  // macro averages over the defined categories only
  double macro_auc = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f = 0.0;
  std::size_t defined_count = 0;
};

struct TalkPrediction {
  std::string talk_id;
  std::array<double, corpus::kNumCategories> scores{};
  std::array<int, corpus::kNumCategories> predicted{};  // thresholded 0/1
};

struct TalkTruth {
  std::string talk_id;
  std::array<int, corpus::kNumCategories> labels{};  // binary
};

// Assembles per-category metrics plus macro rows. Every truth talk must
// have exactly one prediction; missing or unknown ids are an error that
// lists them. Categories with single-class truth are marked undefined and
// excluded from the macro averages.
MetricReport compute_report(const std::vector<TalkPrediction>& predictions,
                            const std::vector<TalkTruth>& truth,
                            const std::string& model_id, const std::string& split_id,
                            const std::string& threshold_policy);

void write_report_csv(const std::string& path, const MetricReport& report);
MetricReport read_report_csv(const std::string& path);

// Aligned table, one row per category plus Average, Table-3 style.
std::string render_report_txt(const MetricReport& report);
void write_report_txt(const std::string& path, const MetricReport& report);

void write_predictions_csv(const std::string& path,
                           const std::vector<TalkPrediction>& predictions);

// Side-by-side table of two reports in the same layout; used by
// `report --compare`.
std::string render_comparison(const MetricReport& a, const MetricReport& b);

}  // namespace tedrate::evaluation

#endif  // TEDRATE_EVALUATION_HPP
