#ifndef TEDRATE_BASELINES_HPP
#define TEDRATE_BASELINES_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tedrate/common.hpp"
#include "tedrate/corpus.hpp"

namespace tedrate::baselines {

// --- psycholinguistic lexicon ---

// File format: one entry per line, `word_or_prefix*<TAB>cat1,cat2,...`.
// A trailing '*' on the pattern makes it a prefix match. '#' comments and
// blank lines are skipped. Category order is first appearance.
struct LexiconSpec {
  struct Entry {
    std::string pattern;  // lowercased, '*' stripped
    bool prefix = false;
    std::vector<std::size_t> categories;  // indices into `categories`
  };
  std::vector<std::string> categories;
  std::vector<Entry> entries;

  // categories matched by one token (union over matching entries)
  std::vector<std::size_t> match(const std::string& token) const;
};

LexiconSpec load_lexicon(const std::string& path);

// --- feature vectors ---

struct FeatureVector {
  std::vector<std::string> schema;
  std::vector<double> values;
  // false when optional inputs (prosody annotations) were unavailable and
  // the schema is correspondingly shorter
  bool complete = true;
};

std::uint64_t schema_hash(const std::vector<std::string>& schema);

// Concatenation; duplicate feature names are a caller bug.
FeatureVector concat_features(const std::vector<FeatureVector>& parts);

// Per-category token counts normalized by total token count. Schema:
// "lex.<category>" in lexicon order.
FeatureVector lexicon_features(const std::vector<std::string>& tokens,
                               const LexiconSpec& lexicon);

inline constexpr std::array<const char*, 8> kProsodyChannelNames = {
    "pitch", "loudness", "f1", "f2", "f3", "b1", "b2", "b3"};

struct ProsodyAnnotations {
  double pause_duration_s = 0.0;
  double pct_unvoiced = 0.0;
  double jitter = 0.0;
  double shimmer = 0.0;
  double pct_breaks = 0.0;
};

// CSV with header `pause_duration_s,pct_unvoiced,jitter,shimmer,pct_breaks`
// and a single data row. Returns nullopt when the file is absent or the
// header lacks fields (the talk is then featurized without the 5
// annotation features); malformed numbers throw.
std::optional<ProsodyAnnotations> load_prosody_annotations(const std::string& path);

// 9 summary statistics (min, max, mean, p25, median, p75, sd, kurtosis,
// skewness) per channel = 72 features, plus the 5 annotation values when
// present. Kurtosis is excess kurtosis; degenerate channels (sd = 0)
// report skewness = kurtosis = 0. Population formulas throughout.
FeatureVector prosody_features(const std::vector<std::vector<double>>& channels,
                               const std::optional<ProsodyAnnotations>& annotations);

inline constexpr std::array<const char*, 13> kTrajectoryChannelNames = {
    "anger",    "disgust",   "fear",         "joy",          "sadness",
    "analytical", "confident", "tentative",
    "openness", "conscientiousness", "extraversion", "agreeableness",
    "emotional_range"};

// CSV per talk: header = the 13 channel names, one row per sentence.
std::vector<std::array<double, 13>> load_trajectory_scores(const std::string& path);

// Each channel linearly resampled to 100 points over [0,1], then
// min/max/mean/sd/kurtosis/skewness per channel = 78 features. A single
// sentence yields constant channels; an empty talk is an error.
FeatureVector trajectory_features(
    const std::vector<std::array<double, 13>>& sentence_scores);

// --- standardization ---

// Train-split z-scoring. Zero-variance features are dropped from the
// schema entirely (they carry no ranking information and break division).
struct Standardizer {
  std::vector<std::string> schema;    // kept features
  std::vector<std::size_t> keep;      // index into the input schema
  std::vector<double> mean;
  std::vector<double> sd;             // population sd of kept features

  static Standardizer fit(const std::vector<FeatureVector>& train_rows);
  FeatureVector apply(const FeatureVector& row) const;
};

// --- linear models (one per rating category) ---

enum class LinearKind { svm, lasso, ridge };

std::string kind_name(LinearKind kind);
LinearKind parse_kind(const std::string& name);

struct LinearModel {
  LinearKind kind = LinearKind::svm;
  double C = 1.0;
  std::vector<double> w;
  double b = 0.0;
  std::uint64_t schema = 0;  // schema_hash of the standardized features
  bool converged = true;
  double objective = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;  // accepted iterates, non-increasing
};

struct FitOptions {
  double C = 1.0;
  std::size_t max_iters = 5000;
  double tol = 1e-9;       // relative objective decrease considered "stalled"
  std::uint64_t seed = 0;  // unused: the solver is deterministic full-batch;
                           // kept so callers can thread a seed uniformly
};

// Objectives (bias never regularized):
//   svm:   1/2 ||w||^2 + C sum max(0, 1 - y_i (w.x_i - b))
//   lasso: ||w||_1      + C sum log(1 + exp(-y_i (w.x_i + b)))
//   ridge: 1/2 ||w||^2 + C sum log(1 + exp(-y_i (w.x_i + b)))
double linear_objective(LinearKind kind, double C, const std::vector<double>& w,
                        double b, const std::vector<std::vector<double>>& x,
                        const std::vector<double>& y);

// Deterministic full-batch descent: proximal step for the l1 term,
// (sub)gradient otherwise, with halving backtracking so accepted objective
// values never increase. Non-convergence at the iteration cap returns the
// best iterate with converged=false and a warning on stderr.
LinearModel fit_linear(const std::vector<std::vector<double>>& x,
                       const std::vector<double>& y, LinearKind kind,
                       const FitOptions& opts,
                       const std::vector<std::string>& schema);

struct Prediction {
  double score = 0.0;
  int label = 0;  // +1 / -1
};

// score = w.x + b (svm: w.x - b, Eq. 16's convention); label = sign, with
// 0 mapping to +1. `row` must already be standardized.
Prediction predict_linear(const LinearModel& model, const FeatureVector& row);

// --- one-vs-rest bundle over the 14 rating categories ---

struct OvrBaseline {
  LinearKind kind = LinearKind::svm;
  Standardizer standardizer;
  std::vector<LinearModel> models;  // one per category, corpus order
};

// labels[t][c] is the binary indicator for talk t, category c; converted
// to +-1 internally. Rows are raw (unstandardized) features.
OvrBaseline fit_one_vs_rest(const std::vector<FeatureVector>& rows,
                            const std::vector<std::array<double, corpus::kNumCategories>>& labels,
                            LinearKind kind, const FitOptions& opts);

std::array<double, corpus::kNumCategories> decision_scores(const OvrBaseline& ovr,
                                                           const FeatureVector& raw_row);

void write_feature_matrix(const std::string& path,
                          const std::vector<std::string>& talk_ids,
                          const std::vector<FeatureVector>& rows);

}  // namespace tedrate::baselines

#endif  // TEDRATE_BASELINES_HPP
