#ifndef TEDRATE_CORPUS_HPP
#define TEDRATE_CORPUS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tedrate/common.hpp"

namespace tedrate::corpus {

inline constexpr std::size_t kNumCategories = 14;

// Canonical category order, fixed across the whole system.
const std::array<std::string, kNumCategories>& categories();
int category_index(std::string_view name);  // -1 if unknown

enum class RatingKind { raw_count, scaled, binary };

struct RatingVector {
  std::array<double, kNumCategories> values{};
  RatingKind kind = RatingKind::raw_count;

  double sum() const;
  void validate() const;  // enforces the per-kind invariants
};

struct TalkRecord {
  std::string talk_id;
  std::string title;
  std::vector<std::string> sentences;
  long word_count = 0;  // sum of per-sentence token counts (canonical tokenizer)
  long long total_views = 0;
  long age_days = 0;  // crawl date minus publish date
  std::optional<Date> publish_date;
  std::optional<Date> crawl_date;
  std::vector<std::string> keywords;
  RatingVector ratings;  // kind = raw_count
  // Optional companion-file references (resolved from the data directory).
  std::string tree_ref;
  std::string prosody_ref;
  std::string trajectory_ref;
};

struct DatasetSplit {
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> dev_ids;
  std::vector<std::string> test_ids;
};

struct FilterResult {
  std::vector<TalkRecord> kept;
  // One line per removed record: "<id>: <reason>".
  std::vector<std::string> removed;
};

// Drops talks younger than six months at crawl time, talks carrying any of
// the performance-related keywords, and talks under `min_words` words.
// Records missing a publish date are rejected with a per-record diagnostic.
FilterResult filter_corpus(const std::vector<TalkRecord>& records, const Date& crawl_date,
                           long min_words = 450);

// r_scaled = r_i / sum_i r_i. Rejects all-zero vectors.
RatingVector scale_ratings(const RatingVector& raw, std::string_view talk_id = "");

struct BinarizeResult {
  std::vector<int> labels;  // 1 iff value > median (strict)
  double median = 0.0;
};

BinarizeResult binarize_by_median(const std::vector<double>& column);
std::vector<int> binarize_with_threshold(const std::vector<double>& column, double median);

struct CorrelationReport {
  std::array<double, kNumCategories> coefficients{};
  std::array<bool, kNumCategories> zero_variance{};  // coefficient forced to 0
  double average = 0.0;
};

enum class CorrelationField { total_views, age_days };

// Pearson correlation of each category's rating (raw or scaled) against a
// metadata field, plus the unweighted mean over the 14 categories.
CorrelationReport correlation_report(const std::vector<TalkRecord>& records,
                                     CorrelationField field, RatingKind kind);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Reserves `test_count` talks first, then splits the remainder so that
// |dev| = floor(remainder * dev_fraction). Deterministic given the seed;
// input order does not matter (ids are sorted before shuffling).
DatasetSplit split_dataset(const std::vector<std::string>& ids, std::size_t test_count,
                           double dev_fraction, std::uint64_t seed);

// --- file formats ---

// talks.jsonl: one JSON object per line, UTF-8. Computes word_count with the
// canonical tokenizer and validates ratings (all-zero vectors are rejected).
std::vector<TalkRecord> read_talks_jsonl(const std::string& path);
void write_talks_jsonl(const std::string& path, const std::vector<TalkRecord>& records);

void write_split_json(const std::string& path, const DatasetSplit& split);
DatasetSplit read_split_json(const std::string& path);

}  // namespace tedrate::corpus

#endif  // TEDRATE_CORPUS_HPP
