#include "tedrate/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace tedrate::baselines {

namespace {

// --- summary statistics (population formulas) ---

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double percentile(std::vector<double> sorted, double p) {
  // linear interpolation between closest ranks; `sorted` must be sorted
  double pos = p * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Moments {
  double min = 0.0, max = 0.0, mean = 0.0, sd = 0.0;
  double skewness = 0.0, kurtosis = 0.0;  // excess kurtosis; sd=0 -> both 0
};

Moments moments_of(const std::vector<double>& v) {
  Moments m;
  m.min = *std::min_element(v.begin(), v.end());
  m.max = *std::max_element(v.begin(), v.end());
  if (m.min == m.max) {
    // exactly constant: report the value itself and zero spread, avoiding
    // the 0/0 forms (and fp summation noise) in the moment ratios
    m.mean = m.min;
    return m;
  }
  m.mean = mean_of(v);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    double d = x - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  double n = static_cast<double>(v.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.sd = std::sqrt(m2);
  if (m.sd > 0.0) {
    m.skewness = m3 / (m.sd * m.sd * m.sd);
    m.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  for (const std::string& cell : split_on(line, ',')) out.push_back(trim_copy(cell));
  return out;
}

}  // namespace

// --- lexicon ---

std::vector<std::size_t> LexiconSpec::match(const std::string& token) const {
  std::string t = lower_copy(token);
  std::vector<std::size_t> hits;
  for (const Entry& e : entries) {
    bool matched = e.prefix ? t.size() >= e.pattern.size() &&
                                  t.compare(0, e.pattern.size(), e.pattern) == 0
                            : t == e.pattern;
    if (matched) hits.insert(hits.end(), e.categories.begin(), e.categories.end());
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

LexiconSpec load_lexicon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("lexicon: cannot open '" + path + "'");
  LexiconSpec spec;
  std::map<std::string, std::size_t> cat_index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = trim_copy(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("lexicon: " + path + ":" + std::to_string(lineno) +
                      ": expected '<pattern>\\t<categories>'");
    std::string pattern = lower_copy(trim_copy(line.substr(0, tab)));
    LexiconSpec::Entry entry;
    entry.prefix = !pattern.empty() && pattern.back() == '*';
    if (entry.prefix) pattern.pop_back();
    if (pattern.empty())
      throw DataError("lexicon: " + path + ":" + std::to_string(lineno) +
                      ": empty pattern");
    entry.pattern = pattern;
    for (const std::string& raw : split_on(line.substr(tab + 1), ',')) {
      std::string cat = trim_copy(raw);
      if (cat.empty()) continue;
      auto [it, inserted] = cat_index.try_emplace(cat, spec.categories.size());
      if (inserted) spec.categories.push_back(cat);
      entry.categories.push_back(it->second);
    }
    if (entry.categories.empty())
      throw DataError("lexicon: " + path + ":" + std::to_string(lineno) + ": '" +
                      pattern + "' maps to no category");
    spec.entries.push_back(std::move(entry));
  }
  if (spec.entries.empty()) throw DataError("lexicon: '" + path + "' has no entries");
  return spec;
}

std::uint64_t schema_hash(const std::vector<std::string>& schema) {
  std::uint64_t h = kFnvOffset;
  for (const std::string& name : schema) {
    h = fnv1a64(name, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

FeatureVector concat_features(const std::vector<FeatureVector>& parts) {
  FeatureVector out;
  for (const FeatureVector& p : parts) {
    out.schema.insert(out.schema.end(), p.schema.begin(), p.schema.end());
    out.values.insert(out.values.end(), p.values.begin(), p.values.end());
    out.complete = out.complete && p.complete;
  }
  std::vector<std::string> names = out.schema;
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw Error("concat_features: duplicate feature name");
  return out;
}

FeatureVector lexicon_features(const std::vector<std::string>& tokens,
                               const LexiconSpec& lexicon) {
  if (tokens.empty()) throw DataError("lexicon_features: empty token list");
  std::vector<double> counts(lexicon.categories.size(), 0.0);
  for (const std::string& token : tokens)
    for (std::size_t c : lexicon.match(token)) counts[c] += 1.0;
  FeatureVector fv;
  for (std::size_t c = 0; c < lexicon.categories.size(); ++c) {
    fv.schema.push_back("lex." + lexicon.categories[c]);
    fv.values.push_back(counts[c] / static_cast<double>(tokens.size()));
  }
  return fv;
}

// --- prosody ---

static const std::array<const char*, 5> kAnnotationNames = {
    "pause_duration_s", "pct_unvoiced", "jitter", "shimmer", "pct_breaks"};

std::optional<ProsodyAnnotations> load_prosody_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string header;
  if (!std::getline(in, header)) return std::nullopt;
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::string> cols = split_csv_row(header);
  if (cols.size() != kAnnotationNames.size()) return std::nullopt;
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i] != kAnnotationNames[i]) return std::nullopt;
  std::string row;
  if (!std::getline(in, row))
    throw DataError("prosody annotations: '" + path + "' has a header but no data row");
  if (!row.empty() && row.back() == '\r') row.pop_back();
  std::vector<std::string> cells = split_csv_row(row);
  if (cells.size() != 5)
    throw DataError("prosody annotations: '" + path + "' data row has " +
                    std::to_string(cells.size()) + " fields, expected 5");
  ProsodyAnnotations a;
  a.pause_duration_s = parse_double(cells[0], path + ": pause_duration_s");
  a.pct_unvoiced = parse_double(cells[1], path + ": pct_unvoiced");
  a.jitter = parse_double(cells[2], path + ": jitter");
  a.shimmer = parse_double(cells[3], path + ": shimmer");
  a.pct_breaks = parse_double(cells[4], path + ": pct_breaks");
  return a;
}

FeatureVector prosody_features(const std::vector<std::vector<double>>& channels,
                               const std::optional<ProsodyAnnotations>& annotations) {
  if (channels.size() != kProsodyChannelNames.size())
    throw DataError("prosody_features: expected 8 channels, got " +
                    std::to_string(channels.size()));
  FeatureVector fv;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const std::vector<double>& ch = channels[c];
    if (ch.empty())
      throw DataError(std::string("prosody_features: channel '") +
                      kProsodyChannelNames[c] + "' is empty");
    Moments m = moments_of(ch);
    std::vector<double> sorted = ch;
    std::sort(sorted.begin(), sorted.end());
    std::string base = std::string("pros.") + kProsodyChannelNames[c] + ".";
    const std::pair<const char*, double> stats[] = {
        {"min", m.min},
        {"max", m.max},
        {"mean", m.mean},
        {"p25", percentile(sorted, 0.25)},
        {"median", percentile(sorted, 0.5)},
        {"p75", percentile(sorted, 0.75)},
        {"sd", m.sd},
        {"kurtosis", m.kurtosis},
        {"skewness", m.skewness},
    };
    for (const auto& [name, value] : stats) {
      fv.schema.push_back(base + name);
      fv.values.push_back(value);
    }
  }
  if (annotations) {
    const ProsodyAnnotations& a = *annotations;
    const std::pair<const char*, double> extras[] = {
        {"pause_duration_s", a.pause_duration_s},
        {"pct_unvoiced", a.pct_unvoiced},
        {"jitter", a.jitter},
        {"shimmer", a.shimmer},
        {"pct_breaks", a.pct_breaks},
    };
    for (const auto& [name, value] : extras) {
      fv.schema.push_back(std::string("pros.") + name);
      fv.values.push_back(value);
    }
  } else {
    fv.complete = false;
  }
  return fv;
}

// --- narrative trajectory ---

std::vector<std::array<double, 13>> load_trajectory_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("trajectory: cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    throw DataError("trajectory: '" + path + "' is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::string> cols = split_csv_row(header);
  if (cols.size() != kTrajectoryChannelNames.size())
    throw DataError("trajectory: '" + path + "' header has " +
                    std::to_string(cols.size()) + " columns, expected 13");
  for (std::size_t i = 0; i < cols.size(); ++i)
    if (cols[i] != kTrajectoryChannelNames[i])
      throw DataError("trajectory: '" + path + "' column " + std::to_string(i + 1) +
                      " is '" + cols[i] + "', expected '" +
                      kTrajectoryChannelNames[i] + "'");
  std::vector<std::array<double, 13>> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_copy(line).empty()) continue;
    std::vector<std::string> cells = split_csv_row(line);
    if (cells.size() != 13)
      throw DataError("trajectory: " + path + ":" + std::to_string(lineno) +
                      ": expected 13 values, got " + std::to_string(cells.size()));
    std::array<double, 13> row{};
    for (std::size_t i = 0; i < 13; ++i)
      row[i] = parse_double(cells[i], path + ":" + std::to_string(lineno));
    rows.push_back(row);
  }
  return rows;
}

static std::vector<double> resample100(const std::vector<double>& knots) {
  std::vector<double> out(100);
  if (knots.size() == 1) {
    std::fill(out.begin(), out.end(), knots[0]);
    return out;
  }
  double last = static_cast<double>(knots.size() - 1);
  for (std::size_t k = 0; k < 100; ++k) {
    // k*last is an exact integer product, so a 100-knot channel resamples
    // to itself bit-for-bit
    double pos = static_cast<double>(k) * last / 99.0;
    std::size_t lo = std::min(static_cast<std::size_t>(pos), knots.size() - 2);
    double frac = pos - static_cast<double>(lo);
    // equal knots bypass the blend so constant stretches stay bit-exact
    out[k] = knots[lo] == knots[lo + 1]
                 ? knots[lo]
                 : (1.0 - frac) * knots[lo] + frac * knots[lo + 1];
  }
  return out;
}

FeatureVector trajectory_features(
    const std::vector<std::array<double, 13>>& sentence_scores) {
  if (sentence_scores.empty())
    throw DataError("trajectory_features: no sentences");
  FeatureVector fv;
  for (std::size_t c = 0; c < kTrajectoryChannelNames.size(); ++c) {
    std::vector<double> knots;
    knots.reserve(sentence_scores.size());
    for (const auto& row : sentence_scores) knots.push_back(row[c]);
    Moments m = moments_of(resample100(knots));
    std::string base = std::string("traj.") + kTrajectoryChannelNames[c] + ".";
    const std::pair<const char*, double> stats[] = {
        {"min", m.min},       {"max", m.max},           {"mean", m.mean},
        {"sd", m.sd},         {"kurtosis", m.kurtosis}, {"skewness", m.skewness},
    };
    for (const auto& [name, value] : stats) {
      fv.schema.push_back(base + name);
      fv.values.push_back(value);
    }
  }
  return fv;
}

// --- standardization ---

Standardizer Standardizer::fit(const std::vector<FeatureVector>& train_rows) {
  if (train_rows.empty()) throw DataError("standardizer: no training rows");
  const std::vector<std::string>& schema = train_rows[0].schema;
  for (const FeatureVector& row : train_rows)
    if (row.schema != schema)
      throw DataError("standardizer: rows disagree on the feature schema");
  std::size_t d = schema.size();
  double n = static_cast<double>(train_rows.size());
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const FeatureVector& row : train_rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += row.values[j];
  for (double& mj : mean) mj /= n;
  for (const FeatureVector& row : train_rows)
    for (std::size_t j = 0; j < d; ++j) {
      double dv = row.values[j] - mean[j];
      var[j] += dv * dv;
    }
  Standardizer st;
  for (std::size_t j = 0; j < d; ++j) {
    double sd = std::sqrt(var[j] / n);
    if (sd <= 1e-12 * std::max(1.0, std::fabs(mean[j]))) continue;  // constant
    st.keep.push_back(j);
    st.schema.push_back(schema[j]);
    st.mean.push_back(mean[j]);
    st.sd.push_back(sd);
  }
  if (st.keep.empty())
    throw DataError("standardizer: every feature is constant on the train split");
  return st;
}

FeatureVector Standardizer::apply(const FeatureVector& row) const {
  FeatureVector out;
  out.schema = schema;
  out.complete = row.complete;
  out.values.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    std::size_t j = keep[i];
    if (j >= row.schema.size() || row.schema[j] != schema[i])
      throw DataError("standardizer: row schema does not match the fitted schema");
    out.values.push_back((row.values[j] - mean[i]) / sd[i]);
  }
  return out;
}

// --- linear models ---

std::string kind_name(LinearKind kind) {
  switch (kind) {
    case LinearKind::svm: return "svm";
    case LinearKind::lasso: return "lasso";
    case LinearKind::ridge: return "ridge";
  }
  throw Error("kind_name: unknown kind");
}

LinearKind parse_kind(const std::string& name) {
  if (name == "svm") return LinearKind::svm;
  if (name == "lasso") return LinearKind::lasso;
  if (name == "ridge") return LinearKind::ridge;
  throw UsageError("unknown baseline kind '" + name + "' (expected svm, lasso or ridge)");
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// log(1 + exp(t)) without overflow
double log1pexp(double t) { return t > 35.0 ? t : std::log1p(std::exp(t)); }

// d/dt log(1+exp(t)) = sigmoid(t)
double sigmoid_stable(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double soft_threshold(double x, double lam) {
  if (x > lam) return x - lam;
  if (x < -lam) return x + lam;
  return 0.0;
}

}  // namespace

double linear_objective(LinearKind kind, double C, const std::vector<double>& w,
                        double b, const std::vector<std::vector<double>>& x,
                        const std::vector<double>& y) {
  double reg = 0.0;
  if (kind == LinearKind::lasso) {
    for (double wj : w) reg += std::fabs(wj);
  } else {
    for (double wj : w) reg += 0.5 * wj * wj;
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = dot(w, x[i]) + (kind == LinearKind::svm ? -b : b);
    if (kind == LinearKind::svm)
      loss += std::max(0.0, 1.0 - y[i] * s);
    else
      loss += log1pexp(-y[i] * s);
  }
  return reg + C * loss;
}

LinearModel fit_linear(const std::vector<std::vector<double>>& x,
                       const std::vector<double>& y, LinearKind kind,
                       const FitOptions& opts,
                       const std::vector<std::string>& schema) {
  if (x.empty()) throw DataError("fit_linear: no rows");
  if (x.size() != y.size())
    throw DataError("fit_linear: " + std::to_string(x.size()) + " rows vs " +
                    std::to_string(y.size()) + " labels");
  std::size_t d = schema.size();
  for (const auto& row : x)
    if (row.size() != d) throw DataError("fit_linear: row width does not match schema");
  for (double yi : y)
    if (yi != 1.0 && yi != -1.0) throw DataError("fit_linear: labels must be +-1");
  if (!(opts.C > 0.0)) throw UsageError("fit_linear: C must be positive");

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  double f = linear_objective(kind, opts.C, w, b, x, y);

  LinearModel model;
  model.kind = kind;
  model.C = opts.C;
  model.schema = schema_hash(schema);
  model.objective_trace.push_back(f);

  std::vector<double> gw(d);
  double step = 1.0;
  std::size_t stall = 0;
  std::size_t iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    // gradient (or subgradient) of everything except the l1 term
    if (kind != LinearKind::lasso)
      for (std::size_t j = 0; j < d; ++j) gw[j] = w[j];
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (kind == LinearKind::svm) {
        double margin = y[i] * (dot(w, x[i]) - b);
        if (margin < 1.0) {
          for (std::size_t j = 0; j < d; ++j) gw[j] -= opts.C * y[i] * x[i][j];
          gb += opts.C * y[i];
        }
      } else {
        double s = dot(w, x[i]) + b;
        double coeff = -opts.C * y[i] * sigmoid_stable(-y[i] * s);
        for (std::size_t j = 0; j < d; ++j) gw[j] += coeff * x[i][j];
        gb += coeff;
      }
    }

    bool accepted = false;
    std::vector<double> wc(d);
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t j = 0; j < d; ++j) {
        double moved = w[j] - step * gw[j];
        wc[j] = kind == LinearKind::lasso ? soft_threshold(moved, step) : moved;
      }
      double bc = b - step * gb;
      double fc = linear_objective(kind, opts.C, wc, bc, x, y);
      if (fc < f) {
        double drop = f - fc;
        w.swap(wc);
        b = bc;
        f = fc;
        model.objective_trace.push_back(f);
        step = std::min(step * 2.0, 1e6);
        accepted = true;
        stall = drop <= opts.tol * std::max(1.0, std::fabs(f)) ? stall + 1 : 0;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || stall >= 3) {
      model.converged = true;
      break;
    }
  }
  if (iter == opts.max_iters) {
    model.converged = false;
    std::cerr << "warning: " << kind_name(kind) << " fit (C=" << format_double(opts.C)
              << ") stopped at the iteration cap without stalling; returning the"
                 " best iterate\n";
  }
  model.w = std::move(w);
  model.b = b;
  model.objective = f;
  model.iterations = iter;
  return model;
}

Prediction predict_linear(const LinearModel& model, const FeatureVector& row) {
  if (schema_hash(row.schema) != model.schema)
    throw DataError("predict_linear: feature schema does not match the fitted model");
  if (row.values.size() != model.w.size())
    throw DataError("predict_linear: feature width does not match the model");
  Prediction p;
  p.score = dot(model.w, row.values) +
            (model.kind == LinearKind::svm ? -model.b : model.b);
  p.label = p.score >= 0.0 ? 1 : -1;
  return p;
}

OvrBaseline fit_one_vs_rest(
    const std::vector<FeatureVector>& rows,
    const std::vector<std::array<double, corpus::kNumCategories>>& labels,
    LinearKind kind, const FitOptions& opts) {
  if (rows.size() != labels.size())
    throw DataError("fit_one_vs_rest: " + std::to_string(rows.size()) + " rows vs " +
                    std::to_string(labels.size()) + " label vectors");
  OvrBaseline ovr;
  ovr.kind = kind;
  ovr.standardizer = Standardizer::fit(rows);
  std::vector<std::vector<double>> xs;
  xs.reserve(rows.size());
  for (const FeatureVector& row : rows) xs.push_back(ovr.standardizer.apply(row).values);
  for (std::size_t c = 0; c < corpus::kNumCategories; ++c) {
    std::vector<double> y;
    y.reserve(labels.size());
    for (const auto& lab : labels) {
      if (lab[c] != 0.0 && lab[c] != 1.0)
        throw DataError("fit_one_vs_rest: labels must be 0 or 1");
      y.push_back(lab[c] == 1.0 ? 1.0 : -1.0);
    }
    ovr.models.push_back(fit_linear(xs, y, kind, opts, ovr.standardizer.schema));
  }
  return ovr;
}

std::array<double, corpus::kNumCategories> decision_scores(const OvrBaseline& ovr,
                                                           const FeatureVector& raw_row) {
  FeatureVector std_row = ovr.standardizer.apply(raw_row);
  std::array<double, corpus::kNumCategories> scores{};
  for (std::size_t c = 0; c < ovr.models.size(); ++c)
    scores[c] = predict_linear(ovr.models[c], std_row).score;
  return scores;
}

void write_feature_matrix(const std::string& path,
                          const std::vector<std::string>& talk_ids,
                          const std::vector<FeatureVector>& rows) {
  if (talk_ids.size() != rows.size())
    throw DataError("feature matrix: id/row count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("feature matrix: cannot write '" + path + "'");
  out << "talk_id";
  if (!rows.empty())
    for (const std::string& name : rows[0].schema) out << ',' << name;
  out << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows.empty() && rows[i].schema != rows[0].schema)
      throw DataError("feature matrix: row schemas disagree");
    out << talk_ids[i];
    for (double v : rows[i].values) out << ',' << format_double(v);
    out << "\n";
  }
}

}  // namespace tedrate::baselines
