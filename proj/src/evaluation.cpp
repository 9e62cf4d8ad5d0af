#include "tedrate/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace tedrate::evaluation {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_auc_inputs(const std::vector<double>& scores,
                         const std::vector<int>& labels, const char* who) {
  if (scores.size() != labels.size())
    throw DataError(std::string(who) + ": " + std::to_string(scores.size()) +
                    " scores vs " + std::to_string(labels.size()) + " labels");
  if (scores.empty()) throw DataError(std::string(who) + ": empty input");
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError(std::string(who) + ": non-finite score");
  for (int y : labels)
    if (y != 0 && y != 1) throw DataError(std::string(who) + ": labels must be 0 or 1");
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  validate_auc_inputs(scores, labels, "auc");
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    std::cerr << "warning: auc undefined for single-class labels\n";
    return kNaN;
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    double avg_rank = static_cast<double>(i + 1 + j) / 2.0;  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
    i = j;
  }
  double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double auc_trapezoid(const std::vector<double>& scores, const std::vector<int>& labels) {
  validate_auc_inputs(scores, labels, "auc_trapezoid");
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    std::cerr << "warning: auc undefined for single-class labels\n";
    return kNaN;
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double area = 0.0;
  double tp = 0.0, fp = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    // one ROC step per distinct threshold; tied scores move diagonally
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1)
        tp += 1.0;
      else
        fp += 1.0;
      ++j;
    }
    double tpr = tp / static_cast<double>(pos);
    double fpr = fp / static_cast<double>(neg);
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
    i = j;
  }
  return area;
}

Prf prf(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw DataError("prf: " + std::to_string(predictions.size()) + " predictions vs " +
                    std::to_string(labels.size()) + " labels");
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] != 0 && predictions[i] != 1)
      throw DataError("prf: predictions must be 0 or 1");
    if (labels[i] != 0 && labels[i] != 1)
      throw DataError("prf: labels must be 0 or 1");
    if (predictions[i] == 1 && labels[i] == 1) tp += 1.0;
    if (predictions[i] == 1 && labels[i] == 0) fp += 1.0;
    if (predictions[i] == 0 && labels[i] == 1) fn += 1.0;
  }
  Prf out;
  if (tp + fp > 0.0) {
    out.precision = tp / (tp + fp);
  } else {
    std::cerr << "warning: precision 0/0 (no predicted positives) reported as 0\n";
  }
  if (tp + fn > 0.0) {
    out.recall = tp / (tp + fn);
  } else {
    std::cerr << "warning: recall 0/0 (no true positives) reported as 0\n";
  }
  if (out.precision + out.recall > 0.0)
    out.f_score = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

MetricReport compute_report(const std::vector<TalkPrediction>& predictions,
                            const std::vector<TalkTruth>& truth,
                            const std::string& model_id, const std::string& split_id,
                            const std::string& threshold_policy) {
  if (truth.empty()) throw DataError("report: empty test split");
  std::map<std::string, const TalkPrediction*> by_id;
  for (const TalkPrediction& p : predictions) {
    if (!by_id.emplace(p.talk_id, &p).second)
      throw DataError("report: duplicate prediction for talk '" + p.talk_id + "'");
  }
  std::string missing, unknown;
  std::map<std::string, bool> covered;
  for (const TalkTruth& t : truth) {
    if (by_id.find(t.talk_id) == by_id.end())
      missing += (missing.empty() ? "" : ", ") + t.talk_id;
    covered[t.talk_id] = true;
  }
  if (!missing.empty())
    throw DataError("report: no predictions for test talks: " + missing);
  for (const TalkPrediction& p : predictions)
    if (covered.find(p.talk_id) == covered.end())
      unknown += (unknown.empty() ? "" : ", ") + p.talk_id;
  if (!unknown.empty())
    throw DataError("report: predictions for talks outside the test split: " + unknown);

  MetricReport report;
  report.model_id = model_id;
  report.split_id = split_id;
  report.threshold_policy = threshold_policy;

  const auto& names = corpus::categories();
  double sum_auc = 0.0, sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  for (std::size_t c = 0; c < corpus::kNumCategories; ++c) {
    std::vector<double> scores;
    std::vector<int> labels, preds;
    scores.reserve(truth.size());
    for (const TalkTruth& t : truth) {
      const TalkPrediction& p = *by_id.at(t.talk_id);
      scores.push_back(p.scores[c]);
      preds.push_back(p.predicted[c]);
      labels.push_back(t.labels[c]);
    }
    CategoryMetrics m;
    m.category = names[c];
    bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
    m.defined = has_pos && has_neg;
    if (m.defined) {
      m.auc = auc(scores, labels);
      Prf pr = prf(preds, labels);
      m.precision = pr.precision;
      m.recall = pr.recall;
      m.f_score = pr.f_score;
      sum_auc += m.auc;
      sum_p += m.precision;
      sum_r += m.recall;
      sum_f += m.f_score;
      ++report.defined_count;
    } else {
      std::cerr << "warning: category '" << m.category
                << "' has a single-class test column; excluded from macro averages\n";
      m.auc = m.precision = m.recall = m.f_score = kNaN;
    }
    report.categories.push_back(std::move(m));
  }
  if (report.defined_count == 0) {
    std::cerr << "warning: every category is single-class; macro averages undefined\n";
    report.macro_auc = report.macro_precision = report.macro_recall = report.macro_f = kNaN;
  } else {
    double n = static_cast<double>(report.defined_count);
    report.macro_auc = sum_auc / n;
    report.macro_precision = sum_p / n;
    report.macro_recall = sum_r / n;
    report.macro_f = sum_f / n;
  }
  return report;
}

void write_report_csv(const std::string& path, const MetricReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("report: cannot write '" + path + "'");
  out << "# model: " << report.model_id << "\n";
  out << "# split: " << report.split_id << "\n";
  out << "# threshold: " << report.threshold_policy << "\n";
  out << "category,auc,precision,recall,f_score\n";
  for (const CategoryMetrics& m : report.categories)
    out << m.category << ',' << format_double(m.auc) << ',' << format_double(m.precision)
        << ',' << format_double(m.recall) << ',' << format_double(m.f_score) << "\n";
  out << "Average," << format_double(report.macro_auc) << ','
      << format_double(report.macro_precision) << ',' << format_double(report.macro_recall)
      << ',' << format_double(report.macro_f) << "\n";
}

MetricReport read_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("report: cannot open '" + path + "'");
  MetricReport report;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = trim_copy(line.substr(1));
      if (body.rfind("model:", 0) == 0) report.model_id = trim_copy(body.substr(6));
      else if (body.rfind("split:", 0) == 0) report.split_id = trim_copy(body.substr(6));
      else if (body.rfind("threshold:", 0) == 0)
        report.threshold_policy = trim_copy(body.substr(10));
      continue;
    }
    if (!header_seen) {
      if (line != "category,auc,precision,recall,f_score")
        throw DataError("report: '" + path + "' has unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells = split_on(line, ',');
    if (cells.size() != 5)
      throw DataError("report: " + path + ":" + std::to_string(lineno) +
                      ": expected 5 fields");
    std::string ctx = path + ":" + std::to_string(lineno);
    double a = parse_double(cells[1], ctx);
    double p = parse_double(cells[2], ctx);
    double r = parse_double(cells[3], ctx);
    double f = parse_double(cells[4], ctx);
    if (cells[0] == "Average") {
      report.macro_auc = a;
      report.macro_precision = p;
      report.macro_recall = r;
      report.macro_f = f;
    } else {
      CategoryMetrics m;
      m.category = cells[0];
      m.auc = a;
      m.precision = p;
      m.recall = r;
      m.f_score = f;
      m.defined = !std::isnan(a);
      if (m.defined) ++report.defined_count;
      report.categories.push_back(std::move(m));
    }
  }
  if (!header_seen || report.categories.empty())
    throw DataError("report: '" + path + "' contains no metric rows");
  return report;
}

namespace {

std::string fixed4(double x) {
  if (std::isnan(x)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

void pad_to(std::string& s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
}

std::string right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string render_report_txt(const MetricReport& report) {
  std::ostringstream out;
  out << "model: " << report.model_id << "   split: " << report.split_id
      << "   threshold: " << report.threshold_policy << "\n\n";
  std::size_t name_w = std::string("category").size();
  for (const CategoryMetrics& m : report.categories)
    name_w = std::max(name_w, m.category.size());
  name_w += 2;
  std::string head = "category";
  pad_to(head, name_w);
  out << head << right("auc", 9) << right("precision", 11) << right("recall", 9)
      << right("f_score", 10) << "\n";
  auto row = [&](const std::string& name, double a, double p, double r, double f) {
    std::string label = name;
    pad_to(label, name_w);
    out << label << right(fixed4(a), 9) << right(fixed4(p), 11) << right(fixed4(r), 9)
        << right(fixed4(f), 10) << "\n";
  };
  for (const CategoryMetrics& m : report.categories)
    row(m.category, m.auc, m.precision, m.recall, m.f_score);
  out << std::string(name_w + 39, '-') << "\n";
  row("Average", report.macro_auc, report.macro_precision, report.macro_recall,
      report.macro_f);
  return out.str();
}

void write_report_txt(const std::string& path, const MetricReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("report: cannot write '" + path + "'");
  out << render_report_txt(report);
}

void write_predictions_csv(const std::string& path,
                           const std::vector<TalkPrediction>& predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("predictions: cannot write '" + path + "'");
  const auto& names = corpus::categories();
  out << "talk_id";
  for (const std::string& n : names) out << ",score_" << n;
  for (const std::string& n : names) out << ",label_" << n;
  out << "\n";
  for (const TalkPrediction& p : predictions) {
    out << p.talk_id;
    for (double s : p.scores) out << ',' << format_double(s);
    for (int y : p.predicted) out << ',' << y;
    out << "\n";
  }
}

std::string render_comparison(const MetricReport& a, const MetricReport& b) {
  std::ostringstream out;
  out << "A = " << a.model_id << " (" << a.split_id << ")\n";
  out << "B = " << b.model_id << " (" << b.split_id << ")\n\n";
  std::size_t name_w = std::string("category").size();
  for (const CategoryMetrics& m : a.categories) name_w = std::max(name_w, m.category.size());
  name_w += 2;
  std::string head = "category";
  pad_to(head, name_w);
  out << head << right("auc A", 9) << right("auc B", 9) << right("prec A", 9)
      << right("prec B", 9) << right("rec A", 9) << right("rec B", 9)
      << right("f A", 9) << right("f B", 9) << "\n";
  auto find_b = [&](const std::string& name) -> const CategoryMetrics* {
    for (const CategoryMetrics& m : b.categories)
      if (m.category == name) return &m;
    return nullptr;
  };
  auto row = [&](const std::string& name, double aa, double ap, double ar, double af,
                 const CategoryMetrics* mb, double ba, double bp, double br, double bf) {
    std::string label = name;
    pad_to(label, name_w);
    out << label << right(fixed4(aa), 9);
    out << (mb ? right(fixed4(ba), 9) : right("-", 9));
    out << right(fixed4(ap), 9) << (mb ? right(fixed4(bp), 9) : right("-", 9));
    out << right(fixed4(ar), 9) << (mb ? right(fixed4(br), 9) : right("-", 9));
    out << right(fixed4(af), 9) << (mb ? right(fixed4(bf), 9) : right("-", 9));
    out << "\n";
  };
  for (const CategoryMetrics& m : a.categories) {
    const CategoryMetrics* mb = find_b(m.category);
    row(m.category, m.auc, m.precision, m.recall, m.f_score, mb, mb ? mb->auc : 0,
        mb ? mb->precision : 0, mb ? mb->recall : 0, mb ? mb->f_score : 0);
  }
  out << std::string(name_w + 72, '-') << "\n";
  CategoryMetrics avg;
  row("Average", a.macro_auc, a.macro_precision, a.macro_recall, a.macro_f, &avg,
      b.macro_auc, b.macro_precision, b.macro_recall, b.macro_f);
  return out.str();
}

}  // namespace tedrate::evaluation
