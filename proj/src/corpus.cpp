#include "tedrate/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tedrate/textpipe.hpp"

namespace tedrate::corpus {

using nlohmann::json;

const std::array<std::string, kNumCategories>& categories() {
  static const std::array<std::string, kNumCategories> names = {
      "Beautiful",  "Confusing", "Courageous", "Fascinating", "Funny",
      "Informative", "Ingenious", "Inspiring",  "Jaw-Dropping", "Long-winded",
      "Obnoxious",  "OK",        "Persuasive", "Unconvincing"};
  return names;
}

int category_index(std::string_view name) {
  const auto& cats = categories();
  for (std::size_t i = 0; i < cats.size(); ++i)
    if (cats[i] == name) return static_cast<int>(i);
  return -1;
}

double RatingVector::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

void RatingVector::validate() const {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("rating value out of range");
    if (kind == RatingKind::raw_count && v != std::floor(v))
      throw DataError("raw rating counts must be integers");
    if (kind == RatingKind::scaled && v > 1.0) throw DataError("scaled rating > 1");
    if (kind == RatingKind::binary && v != 0.0 && v != 1.0)
      throw DataError("binary rating outside {0,1}");
  }
  if (kind == RatingKind::scaled && std::fabs(sum() - 1.0) > 1e-9)
    throw DataError("scaled ratings do not sum to 1");
}

namespace {

const std::set<std::string>& excluded_keywords() {
  static const std::set<std::string> kw = {"live music", "dance", "music", "performance",
                                           "entertainment"};
  return kw;
}

}  // namespace

FilterResult filter_corpus(const std::vector<TalkRecord>& records, const Date& crawl_date,
                           long min_words) {
  FilterResult result;
  for (const auto& rec : records) {
    if (!rec.publish_date) {
      result.removed.push_back(rec.talk_id + ": missing publish date");
      continue;
    }
    // "published less than 6 months prior": strictly within the window goes.
    if (rec.publish_date->plus_months(6).day_number() > crawl_date.day_number()) {
      result.removed.push_back(rec.talk_id + ": published less than 6 months before crawl");
      continue;
    }
    bool keyword_hit = false;
    for (const auto& kw : rec.keywords) {
      if (excluded_keywords().count(lower_copy(trim_copy(kw)))) {
        result.removed.push_back(rec.talk_id + ": excluded keyword '" + kw + "'");
        keyword_hit = true;
        break;
      }
    }
    if (keyword_hit) continue;
    if (rec.word_count < min_words) {
      result.removed.push_back(rec.talk_id + ": word count " + std::to_string(rec.word_count) +
                               " < " + std::to_string(min_words));
      continue;
    }
    result.kept.push_back(rec);
  }
  return result;
}

RatingVector scale_ratings(const RatingVector& raw, std::string_view talk_id) {
  if (raw.kind != RatingKind::raw_count)
    throw DataError("scale_ratings expects raw counts");
  double total = raw.sum();
  if (total <= 0.0)
    throw DataError("all-zero rating vector" +
                    (talk_id.empty() ? std::string() : " for talk '" + std::string(talk_id) + "'"));
  RatingVector out;
  out.kind = RatingKind::scaled;
  for (std::size_t i = 0; i < kNumCategories; ++i) out.values[i] = raw.values[i] / total;
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BinarizeResult binarize_by_median(const std::vector<double>& column) {
  if (column.empty()) throw DataError("binarize_by_median: empty column");
  if (column.size() < 2) throw DataError("binarize_by_median: need at least 2 values");
  BinarizeResult res;
  res.median = median_of(column);
  res.labels = binarize_with_threshold(column, res.median);
  return res;
}

std::vector<int> binarize_with_threshold(const std::vector<double>& column, double median) {
  std::vector<int> labels(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) labels[i] = column[i] > median ? 1 : 0;
  return labels;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DataError("pearson: mismatched or too-short inputs");
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

CorrelationReport correlation_report(const std::vector<TalkRecord>& records,
                                     CorrelationField field, RatingKind kind) {
  if (records.size() < 3) throw DataError("correlation_report: need at least 3 records");
  if (kind != RatingKind::raw_count && kind != RatingKind::scaled)
    throw DataError("correlation_report: kind must be raw-count or scaled");

  std::vector<double> meta(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    meta[i] = field == CorrelationField::total_views
                  ? static_cast<double>(records[i].total_views)
                  : static_cast<double>(records[i].age_days);

  CorrelationReport report;
  double total = 0.0;
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    std::vector<double> col(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (kind == RatingKind::scaled)
        col[i] = scale_ratings(records[i].ratings, records[i].talk_id).values[c];
      else
        col[i] = records[i].ratings.values[c];
    }
    double r = pearson(col, meta);
    if (std::isnan(r)) {
      report.coefficients[c] = 0.0;
      report.zero_variance[c] = true;
    } else {
      report.coefficients[c] = r;
    }
    total += report.coefficients[c];
  }
  report.average = total / static_cast<double>(kNumCategories);
  return report;
}

DatasetSplit split_dataset(const std::vector<std::string>& ids, std::size_t test_count,
                           double dev_fraction, std::uint64_t seed) {
  if (dev_fraction <= 0.0 || dev_fraction >= 1.0)
    throw DataError("split_dataset: dev_fraction must be in (0,1)");
  if (test_count >= ids.size())
    throw DataError("split_dataset: test_count " + std::to_string(test_count) +
                    " >= corpus size " + std::to_string(ids.size()));
  std::vector<std::string> pool(ids);
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(pool.begin(), pool.end()) != pool.end())
    throw DataError("split_dataset: duplicate talk ids");

  Rng rng(seed);
  rng.shuffle(pool);

  DatasetSplit split;
  split.seed = seed;
  split.test_ids.assign(pool.begin(), pool.begin() + static_cast<long>(test_count));
  std::size_t remainder = pool.size() - test_count;
  std::size_t dev_count = static_cast<std::size_t>(
      std::floor(static_cast<double>(remainder) * dev_fraction));
  split.dev_ids.assign(pool.begin() + static_cast<long>(test_count),
                       pool.begin() + static_cast<long>(test_count + dev_count));
  split.train_ids.assign(pool.begin() + static_cast<long>(test_count + dev_count), pool.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  std::sort(split.dev_ids.begin(), split.dev_ids.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  return split;
}

namespace {

TalkRecord record_from_json(const json& j, const std::string& where) {
  TalkRecord rec;
  if (!j.contains("id") || !j["id"].is_string())
    throw DataError(where + ": missing string field 'id'");
  rec.talk_id = j["id"].get<std::string>();
  const std::string ctx = where + " (talk '" + rec.talk_id + "')";

  if (j.contains("title")) rec.title = j["title"].get<std::string>();
  if (!j.contains("sentences") || !j["sentences"].is_array() || j["sentences"].empty())
    throw DataError(ctx + ": 'sentences' must be a non-empty array");
  for (const auto& s : j["sentences"]) rec.sentences.push_back(s.get<std::string>());

  if (!j.contains("total_views")) throw DataError(ctx + ": missing 'total_views'");
  rec.total_views = j["total_views"].get<long long>();
  if (rec.total_views < 0) throw DataError(ctx + ": negative total_views");

  if (j.contains("publish_date") && !j["publish_date"].is_null())
    rec.publish_date = Date::parse(j["publish_date"].get<std::string>());
  if (j.contains("crawl_date") && !j["crawl_date"].is_null())
    rec.crawl_date = Date::parse(j["crawl_date"].get<std::string>());
  if (rec.publish_date && rec.crawl_date)
    rec.age_days = days_between(*rec.publish_date, *rec.crawl_date);

  if (j.contains("keywords"))
    for (const auto& k : j["keywords"]) rec.keywords.push_back(k.get<std::string>());

  if (!j.contains("ratings") || !j["ratings"].is_object())
    throw DataError(ctx + ": missing 'ratings' object");
  rec.ratings.kind = RatingKind::raw_count;
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    const std::string& name = categories()[c];
    if (!j["ratings"].contains(name))
      throw DataError(ctx + ": ratings missing category '" + name + "'");
    double v = j["ratings"][name].get<double>();
    if (v < 0 || v != std::floor(v))
      throw DataError(ctx + ": rating count for '" + name + "' must be a non-negative integer");
    rec.ratings.values[c] = v;
  }
  if (rec.ratings.sum() <= 0.0) throw DataError(ctx + ": all-zero rating vector");

  for (const auto& s : rec.sentences) rec.word_count += static_cast<long>(textpipe::tokenize(s).size());
  return rec;
}

}  // namespace

std::vector<TalkRecord> read_talks_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open talks file '" + path + "'");
  std::vector<TalkRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    TalkRecord rec = record_from_json(j, path + ":" + std::to_string(lineno));
    if (!seen.insert(rec.talk_id).second)
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate talk id '" +
                      rec.talk_id + "'");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_talks_jsonl(const std::string& path, const std::vector<TalkRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write talks file '" + path + "'");
  for (const auto& rec : records) {
    json j;
    j["id"] = rec.talk_id;
    j["title"] = rec.title;
    if (rec.publish_date) j["publish_date"] = rec.publish_date->to_string();
    if (rec.crawl_date) j["crawl_date"] = rec.crawl_date->to_string();
    j["keywords"] = rec.keywords;
    j["total_views"] = rec.total_views;
    j["sentences"] = rec.sentences;
    json ratings = json::object();
    for (std::size_t c = 0; c < kNumCategories; ++c)
      ratings[categories()[c]] = static_cast<long long>(rec.ratings.values[c]);
    j["ratings"] = ratings;
    out << j.dump() << "\n";
  }
}

void write_split_json(const std::string& path, const DatasetSplit& split) {
  json j;
  j["seed"] = split.seed;
  j["test"] = split.test_ids;
  j["dev"] = split.dev_ids;
  j["train"] = split.train_ids;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file '" + path + "'");
  out << j.dump(2) << "\n";
}

DatasetSplit read_split_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  DatasetSplit split;
  split.seed = j.value("seed", 0ull);
  for (const auto& id : j.at("test")) split.test_ids.push_back(id.get<std::string>());
  for (const auto& id : j.at("dev")) split.dev_ids.push_back(id.get<std::string>());
  for (const auto& id : j.at("train")) split.train_ids.push_back(id.get<std::string>());
  return split;
}

}  // namespace tedrate::corpus
