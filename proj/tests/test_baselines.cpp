#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tedrate/baselines.hpp"
#include "test_util.hpp"

using namespace tedrate;
using namespace tedrate::baselines;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

double feature(const FeatureVector& fv, const std::string& name) {
  for (std::size_t i = 0; i < fv.schema.size(); ++i)
    if (fv.schema[i] == name) return fv.values[i];
  throw std::runtime_error("no feature " + name);
}

std::vector<std::vector<double>> const_channels(double value, std::size_t len = 10) {
  return std::vector<std::vector<double>>(8, std::vector<double>(len, value));
}

}  // namespace

TEST_CASE("lexicon parsing and matching") {
  TempDir dir("tedrate-lex");
  std::string path = dir.file("lex.txt");
  write_file(path,
             "# demo lexicon\n"
             "happy\tposemo\n"
             "excit*\tposemo,affect\n"
             "\n"
             "war\tnegemo\n");
  LexiconSpec lex = load_lexicon(path);
  CHECK(lex.categories == std::vector<std::string>{"posemo", "affect", "negemo"});
  REQUIRE(lex.entries.size() == 3);
  CHECK(lex.entries[0].prefix == false);
  CHECK(lex.entries[1].prefix == true);
  CHECK(lex.entries[1].pattern == "excit");

  CHECK(lex.match("happy") == std::vector<std::size_t>{0});
  CHECK(lex.match("HAPPY") == std::vector<std::size_t>{0});
  CHECK(lex.match("exciting") == std::vector<std::size_t>{0, 1});
  CHECK(lex.match("excit") == std::vector<std::size_t>{0, 1});
  CHECK(lex.match("happiness").empty());  // exact entry, not a prefix
  CHECK(lex.match("warfare").empty());
}

TEST_CASE("lexicon file errors") {
  TempDir dir("tedrate-lex-err");
  std::string path = dir.file("bad.txt");
  write_file(path, "happy posemo\n");  // no tab
  CHECK(testutil::contains(
      testutil::thrown_message<DataError>([&] { load_lexicon(path); }), ":1"));
  write_file(path, "happy\t , \n");
  CHECK(testutil::contains(
      testutil::thrown_message<DataError>([&] { load_lexicon(path); }),
      "no category"));
  write_file(path, "# only a comment\n");
  CHECK_THROWS_AS(load_lexicon(path), DataError);
  CHECK_THROWS_AS(load_lexicon(dir.file("absent.txt")), DataError);
}

TEST_CASE("lexicon features normalize counts by token total") {
  TempDir dir("tedrate-lexfeat");
  std::string path = dir.file("lex.txt");
  write_file(path, "happy\tposemo\nexcit*\tposemo\nsad\tnegemo\n");
  LexiconSpec lex = load_lexicon(path);

  FeatureVector fv = lexicon_features({"happy", "happy", "day"}, lex);
  CHECK(fv.schema == std::vector<std::string>{"lex.posemo", "lex.negemo"});
  CHECK(feature(fv, "lex.posemo") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(feature(fv, "lex.negemo") == 0.0);

  // a token matching both an exact and a prefix entry of the same category
  // is still one matching token
  write_file(path, "exciting\tposemo\nexcit*\tposemo\n");
  LexiconSpec dup = load_lexicon(path);
  FeatureVector fv2 = lexicon_features({"exciting"}, dup);
  CHECK(feature(fv2, "lex.posemo") == 1.0);

  FeatureVector zero = lexicon_features({"the", "a"}, lex);
  for (double v : zero.values) CHECK(v == 0.0);

  CHECK_THROWS_AS(lexicon_features({}, lex), DataError);
}

TEST_CASE("prosody annotation file handling") {
  TempDir dir("tedrate-annot");
  std::string path = dir.file("a.csv");
  write_file(path,
             "pause_duration_s,pct_unvoiced,jitter,shimmer,pct_breaks\n"
             "1.5,0.3,0.01,0.02,0.12\n");
  auto a = load_prosody_annotations(path);
  REQUIRE(a.has_value());
  CHECK(a->pause_duration_s == 1.5);
  CHECK(a->pct_unvoiced == 0.3);
  CHECK(a->jitter == 0.01);
  CHECK(a->shimmer == 0.02);
  CHECK(a->pct_breaks == 0.12);

  CHECK(!load_prosody_annotations(dir.file("absent.csv")).has_value());
  write_file(path, "pause_duration_s,jitter\n1.5,0.01\n");
  CHECK(!load_prosody_annotations(path).has_value());
  write_file(path, "pause_duration_s,pct_unvoiced,jitter,shimmer,pct_breaks\n");
  CHECK_THROWS_AS(load_prosody_annotations(path), DataError);
  write_file(path, "pause_duration_s,pct_unvoiced,jitter,shimmer,pct_breaks\n1,2,x,4,5\n");
  CHECK_THROWS_AS(load_prosody_annotations(path), DataError);
}

TEST_CASE("prosody features: schema and hand statistics") {
  auto channels = const_channels(0.0, 4);
  channels[0] = {1.0, 2.0, 3.0, 4.0};  // pitch
  ProsodyAnnotations ann{1.5, 0.3, 0.01, 0.02, 0.12};
  FeatureVector fv = prosody_features(channels, ann);

  CHECK(fv.schema.size() == 77);
  CHECK(fv.values.size() == 77);
  CHECK(fv.complete);
  CHECK(fv.schema[0] == "pros.pitch.min");
  CHECK(fv.schema[76] == "pros.pct_breaks");

  CHECK(feature(fv, "pros.pitch.min") == 1.0);
  CHECK(feature(fv, "pros.pitch.max") == 4.0);
  CHECK(feature(fv, "pros.pitch.mean") == 2.5);
  CHECK(feature(fv, "pros.pitch.median") == 2.5);
  CHECK(feature(fv, "pros.pitch.p25") == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(feature(fv, "pros.pitch.p75") == doctest::Approx(3.25).epsilon(1e-15));
  CHECK(feature(fv, "pros.pitch.sd") == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(feature(fv, "pros.pitch.skewness") == 0.0);
  // m4/m2^2 - 3 = 2.5625/1.5625 - 3
  CHECK(feature(fv, "pros.pitch.kurtosis") == doctest::Approx(-1.36).epsilon(1e-12));
  CHECK(feature(fv, "pros.pause_duration_s") == 1.5);

  // constant channels: degenerate convention
  CHECK(feature(fv, "pros.loudness.sd") == 0.0);
  CHECK(feature(fv, "pros.loudness.skewness") == 0.0);
  CHECK(feature(fv, "pros.loudness.kurtosis") == 0.0);
  CHECK(feature(fv, "pros.loudness.mean") == 0.0);
}

TEST_CASE("prosody features: symmetric channel and missing annotations") {
  auto channels = const_channels(2.0, 3);
  channels[2] = {-1.0, 0.0, 1.0};  // f1
  FeatureVector fv = prosody_features(channels, std::nullopt);
  CHECK(fv.schema.size() == 72);
  CHECK(!fv.complete);
  CHECK(feature(fv, "pros.f1.skewness") == 0.0);
  CHECK(feature(fv, "pros.f1.sd") == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  // ((2/3)/(4/9)) - 3 = -1.5
  CHECK(feature(fv, "pros.f1.kurtosis") == doctest::Approx(-1.5).epsilon(1e-12));

  CHECK_THROWS_AS(prosody_features({{1.0}, {1.0}}, std::nullopt), DataError);
  auto bad = const_channels(1.0);
  bad[5].clear();
  CHECK_THROWS_AS(prosody_features(bad, std::nullopt), DataError);
}

TEST_CASE("prosody kurtosis of a gaussian sample is near zero") {
  Rng rng(404);
  auto channels = const_channels(0.0, 1);
  for (auto& ch : channels) {
    ch.resize(20000);
    for (double& x : ch) x = rng.normal();
  }
  FeatureVector fv = prosody_features(channels, std::nullopt);
  for (const char* name : kProsodyChannelNames) {
    CHECK(std::fabs(feature(fv, std::string("pros.") + name + ".kurtosis")) < 0.15);
    CHECK(std::fabs(feature(fv, std::string("pros.") + name + ".skewness")) < 0.1);
  }
}

TEST_CASE("trajectory file parsing") {
  TempDir dir("tedrate-traj");
  std::string path = dir.file("t.csv");
  std::string header =
      "anger,disgust,fear,joy,sadness,analytical,confident,tentative,"
      "openness,conscientiousness,extraversion,agreeableness,emotional_range";
  write_file(path, header + "\n" + "0.1,0,0,0.9,0,0.5,0.5,0,0.2,0.2,0.2,0.2,0.2\n" +
                       "0.2,0,0,0.8,0,0.5,0.5,0,0.2,0.2,0.2,0.2,0.2\n");
  auto rows = load_trajectory_scores(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == 0.1);
  CHECK(rows[1][3] == 0.8);

  write_file(path, "anger,joy\n0.1,0.2\n");
  CHECK_THROWS_AS(load_trajectory_scores(path), DataError);
  write_file(path, header + "\n0.1,0,0\n");
  CHECK_THROWS_AS(load_trajectory_scores(path), DataError);
  CHECK_THROWS_AS(load_trajectory_scores(dir.file("absent.csv")), DataError);
}

TEST_CASE("trajectory features: interpolation oracles") {
  // channel 0 ramps 0 -> 1 over two sentences; others constant 0.7
  std::vector<std::array<double, 13>> scores(2);
  scores[0].fill(0.7);
  scores[1].fill(0.7);
  scores[0][0] = 0.0;
  scores[1][0] = 1.0;
  FeatureVector fv = trajectory_features(scores);
  CHECK(fv.schema.size() == 78);
  CHECK(fv.schema[0] == "traj.anger.min");
  CHECK(feature(fv, "traj.anger.min") == 0.0);
  CHECK(feature(fv, "traj.anger.max") == 1.0);
  CHECK(feature(fv, "traj.anger.mean") == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(feature(fv, "traj.joy.min") == 0.7);
  CHECK(feature(fv, "traj.joy.max") == 0.7);
  CHECK(feature(fv, "traj.joy.mean") == 0.7);
  CHECK(feature(fv, "traj.joy.sd") == 0.0);

  // single sentence: constant channels
  FeatureVector one = trajectory_features({scores[0]});
  CHECK(feature(one, "traj.anger.min") == 0.0);
  CHECK(feature(one, "traj.anger.max") == 0.0);
  CHECK(feature(one, "traj.joy.mean") == 0.7);

  CHECK_THROWS_AS(trajectory_features({}), DataError);
}

TEST_CASE("trajectory resampling of a 100-sentence talk is the identity") {
  Rng rng(11);
  std::vector<std::array<double, 13>> scores(100);
  for (auto& row : scores)
    for (double& x : row) x = rng.uniform(-2.0, 2.0);
  FeatureVector fv = trajectory_features(scores);
  // identity resampling means min/max equal the raw channel extrema exactly
  for (std::size_t c = 0; c < 13; ++c) {
    double lo = scores[0][c], hi = scores[0][c], sum = 0.0;
    for (const auto& row : scores) {
      lo = std::min(lo, row[c]);
      hi = std::max(hi, row[c]);
      sum += row[c];
    }
    std::string base = std::string("traj.") + kTrajectoryChannelNames[c] + ".";
    CHECK(feature(fv, base + "min") == lo);
    CHECK(feature(fv, base + "max") == hi);
    CHECK(feature(fv, base + "mean") == doctest::Approx(sum / 100.0).epsilon(1e-14));
  }
}

TEST_CASE("concat_features") {
  FeatureVector a{{"x", "y"}, {1.0, 2.0}, true};
  FeatureVector b{{"z"}, {3.0}, false};
  FeatureVector c = concat_features({a, b});
  CHECK(c.schema == std::vector<std::string>{"x", "y", "z"});
  CHECK(c.values == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(!c.complete);
  FeatureVector dup{{"x"}, {9.0}, true};
  CHECK_THROWS_AS(concat_features({a, dup}), Error);
}

TEST_CASE("standardizer drops constant features and normalizes the rest") {
  Rng rng(500);
  std::vector<FeatureVector> rows;
  for (int i = 0; i < 40; ++i) {
    FeatureVector fv;
    fv.schema = {"a", "const", "b"};
    fv.values = {rng.uniform(0.0, 10.0), 3.25, rng.normal() * 0.01 + 7.0};
    rows.push_back(fv);
  }
  Standardizer st = Standardizer::fit(rows);
  CHECK(st.schema == std::vector<std::string>{"a", "b"});

  // invariant: transformed train split has mean ~0 and sd ~1 per feature
  std::vector<double> sum(2, 0.0), sumsq(2, 0.0);
  for (const FeatureVector& row : rows) {
    FeatureVector z = st.apply(row);
    REQUIRE(z.values.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
      sum[j] += z.values[j];
      sumsq[j] += z.values[j] * z.values[j];
    }
  }
  for (std::size_t j = 0; j < 2; ++j) {
    double mean = sum[j] / 40.0;
    double sd = std::sqrt(sumsq[j] / 40.0 - mean * mean);
    CHECK(std::fabs(mean) <= 1e-9);
    CHECK(std::fabs(sd - 1.0) <= 1e-9);
  }

  FeatureVector wrong;
  wrong.schema = {"a", "b"};
  wrong.values = {1.0, 2.0};
  CHECK_THROWS_AS(st.apply(wrong), DataError);

  std::vector<FeatureVector> constant(3, FeatureVector{{"k"}, {1.0}, true});
  CHECK_THROWS_AS(Standardizer::fit(constant), DataError);
  CHECK_THROWS_AS(Standardizer::fit({}), DataError);
}

TEST_CASE("linear objective hand values at the origin") {
  std::vector<std::vector<double>> x = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}};
  std::vector<double> y = {1.0, -1.0, -1.0};
  std::vector<double> w = {0.0, 0.0};
  // zero weights: every hinge is 1, every logistic term is ln 2
  CHECK(linear_objective(LinearKind::svm, 2.0, w, 0.0, x, y) ==
        doctest::Approx(6.0).epsilon(1e-15));
  CHECK(linear_objective(LinearKind::lasso, 2.0, w, 0.0, x, y) ==
        doctest::Approx(6.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(linear_objective(LinearKind::ridge, 2.0, w, 0.0, x, y) ==
        doctest::Approx(6.0 * std::log(2.0)).epsilon(1e-14));

  std::vector<double> w2 = {3.0, -4.0};
  CHECK(linear_objective(LinearKind::lasso, 1e-300, w2, 0.0, x, y) ==
        doctest::Approx(7.0).epsilon(1e-12));
  CHECK(linear_objective(LinearKind::ridge, 1e-300, w2, 0.0, x, y) ==
        doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("svm separates a 2-point set with zero hinge loss") {
  std::vector<std::vector<double>> x = {{1.0}, {-1.0}};
  std::vector<double> y = {1.0, -1.0};
  FitOptions opts;
  LinearModel m = fit_linear(x, y, LinearKind::svm, opts, {"f"});
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = m.w[0] * x[i][0] - m.b;
    hinge += std::max(0.0, 1.0 - y[i] * s);
    CHECK((s >= 0.0 ? 1.0 : -1.0) == y[i]);
  }
  CHECK(hinge <= 1e-6);
  CHECK(m.w[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("ridge on symmetric balanced data keeps the bias at zero") {
  Rng rng(9);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> row = {rng.normal(), rng.normal(), rng.normal()};
    std::vector<double> neg = {-row[0], -row[1], -row[2]};
    x.push_back(row);
    y.push_back(1.0);
    x.push_back(neg);
    y.push_back(-1.0);
  }
  LinearModel m = fit_linear(x, y, LinearKind::ridge, {}, {"a", "b", "c"});
  CHECK(std::fabs(m.b) <= 1e-6);
  CHECK(m.converged);
}

TEST_CASE("lasso with C -> 0 leaves all weights exactly zero") {
  Rng rng(13);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    y.push_back(i % 2 == 0 ? 1.0 : -1.0);
  }
  FitOptions opts;
  opts.C = 1e-9;
  LinearModel m = fit_linear(x, y, LinearKind::lasso, opts, {"a", "b", "c", "d"});
  for (double wj : m.w) CHECK(wj == 0.0);
}

TEST_CASE("objective trace is non-increasing for all three solvers") {
  Rng rng(77);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    double t = rng.normal();
    x.push_back({t + 0.3 * rng.normal(), rng.normal(), rng.uniform(-1.0, 1.0)});
    y.push_back(t > 0 ? 1.0 : -1.0);
  }
  for (LinearKind kind : {LinearKind::svm, LinearKind::lasso, LinearKind::ridge}) {
    LinearModel m = fit_linear(x, y, kind, {}, {"a", "b", "c"});
    REQUIRE(m.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
      CHECK(m.objective_trace[i] <= m.objective_trace[i - 1]);
    CHECK(m.objective == m.objective_trace.back());
    for (double wj : m.w) CHECK(std::isfinite(wj));
  }
}

TEST_CASE("lasso sparsity is monotone across a C grid") {
  Rng rng(31);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> row(10);
    for (double& v : row) v = rng.normal();
    double signal = 1.5 * row[2] - 2.0 * row[7] + 0.3 * rng.normal();
    x.push_back(row);
    y.push_back(signal > 0 ? 1.0 : -1.0);
  }
  std::vector<std::string> schema(10);
  for (int j = 0; j < 10; ++j) schema[j] = "f" + std::to_string(j);
  std::vector<std::size_t> nnz;
  for (double C : {0.01, 0.05, 0.2, 1.0, 5.0}) {
    FitOptions opts;
    opts.C = C;
    LinearModel m = fit_linear(x, y, LinearKind::lasso, opts, schema);
    std::size_t count = 0;
    for (double wj : m.w)
      if (wj != 0.0) ++count;
    nnz.push_back(count);
  }
  for (std::size_t i = 0; i + 1 < nnz.size(); ++i) CHECK(nnz[i] <= nnz[i + 1] + 1);
  CHECK(nnz.front() < nnz.back());  // the grid actually spans sparse -> dense
}

TEST_CASE("fit_linear input validation") {
  std::vector<std::vector<double>> x = {{1.0}};
  CHECK_THROWS_AS(fit_linear({}, {}, LinearKind::svm, {}, {"f"}), DataError);
  CHECK_THROWS_AS(fit_linear(x, {1.0, -1.0}, LinearKind::svm, {}, {"f"}), DataError);
  CHECK_THROWS_AS(fit_linear(x, {0.5}, LinearKind::svm, {}, {"f"}), DataError);
  CHECK_THROWS_AS(fit_linear(x, {1.0}, LinearKind::svm, {}, {"f", "g"}), DataError);
  FitOptions bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(fit_linear(x, {1.0}, LinearKind::svm, bad, {"f"}), UsageError);
}

TEST_CASE("predict_linear conventions") {
  LinearModel m;
  m.kind = LinearKind::svm;
  m.w = {2.0, -1.0};
  m.b = 0.5;
  m.schema = schema_hash({"a", "b"});
  FeatureVector row{{"a", "b"}, {1.0, 1.0}, true};
  Prediction p = predict_linear(m, row);
  CHECK(p.score == doctest::Approx(2.0 - 1.0 - 0.5).epsilon(1e-15));  // w.x - b
  CHECK(p.label == 1);

  m.kind = LinearKind::ridge;
  p = predict_linear(m, row);
  CHECK(p.score == doctest::Approx(2.0 - 1.0 + 0.5).epsilon(1e-15));  // w.x + b

  // zero model scores zero and maps to +1
  LinearModel zero;
  zero.w = {0.0, 0.0};
  zero.schema = m.schema;
  Prediction pz = predict_linear(zero, row);
  CHECK(pz.score == 0.0);
  CHECK(pz.label == 1);

  // consistent positive rescaling of w and b preserves the label
  LinearModel scaled = m;
  for (double& wj : scaled.w) wj *= 7.5;
  scaled.b *= 7.5;
  CHECK(predict_linear(scaled, row).label == p.label);

  FeatureVector mismatched{{"a", "c"}, {1.0, 1.0}, true};
  CHECK_THROWS_AS(predict_linear(m, mismatched), DataError);
}

TEST_CASE("one-vs-rest fits 14 models and scores new talks") {
  Rng rng(888);
  std::vector<FeatureVector> rows;
  std::vector<std::array<double, 14>> labels;
  for (int i = 0; i < 30; ++i) {
    FeatureVector fv;
    fv.schema = {"s", "n1", "n2"};
    double s = rng.normal();
    fv.values = {s, rng.normal(), rng.normal()};
    rows.push_back(fv);
    std::array<double, 14> lab{};
    for (std::size_t c = 0; c < 14; ++c) lab[c] = (c % 2 == 0 ? s > 0 : s < 0) ? 1.0 : 0.0;
    labels.push_back(lab);
  }
  OvrBaseline ovr = fit_one_vs_rest(rows, labels, LinearKind::ridge, {});
  CHECK(ovr.models.size() == 14);
  for (const LinearModel& m : ovr.models) CHECK(m.kind == LinearKind::ridge);

  FeatureVector probe;
  probe.schema = {"s", "n1", "n2"};
  probe.values = {2.0, 0.0, 0.0};
  auto scores = decision_scores(ovr, probe);
  // even categories track +s, odd categories track -s
  for (std::size_t c = 0; c < 14; ++c) {
    CHECK(std::isfinite(scores[c]));
    if (c % 2 == 0)
      CHECK(scores[c] > 0.0);
    else
      CHECK(scores[c] < 0.0);
  }

  std::vector<std::array<double, 14>> bad_labels = labels;
  bad_labels[0][0] = 0.25;
  CHECK_THROWS_AS(fit_one_vs_rest(rows, bad_labels, LinearKind::ridge, {}), DataError);
  CHECK_THROWS_AS(fit_one_vs_rest(rows, {}, LinearKind::ridge, {}), DataError);
}

TEST_CASE("one-vs-rest fits are deterministic") {
  Rng rng(999);
  std::vector<FeatureVector> rows;
  std::vector<std::array<double, 14>> labels;
  for (int i = 0; i < 20; ++i) {
    FeatureVector fv;
    fv.schema = {"a", "b"};
    fv.values = {rng.normal(), rng.normal()};
    rows.push_back(fv);
    std::array<double, 14> lab{};
    for (auto& v : lab) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    labels.push_back(lab);
  }
  OvrBaseline a = fit_one_vs_rest(rows, labels, LinearKind::svm, {});
  OvrBaseline b = fit_one_vs_rest(rows, labels, LinearKind::svm, {});
  for (std::size_t c = 0; c < 14; ++c) {
    CHECK(a.models[c].w == b.models[c].w);
    CHECK(a.models[c].b == b.models[c].b);
  }
}

TEST_CASE("feature matrix dump") {
  TempDir dir("tedrate-featdump");
  std::string path = dir.file("features.csv");
  std::vector<FeatureVector> rows = {
      {{"a", "b"}, {1.0, 0.5}, true},
      {{"a", "b"}, {-2.0, 0.25}, true},
  };
  write_feature_matrix(path, {"t1", "t2"}, rows);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "talk_id,a,b");
  std::getline(in, line);
  CHECK(line == "t1,1,0.5");
  std::getline(in, line);
  CHECK(line == "t2,-2,0.25");

  CHECK_THROWS_AS(write_feature_matrix(path, {"t1"}, rows), DataError);
}

TEST_CASE("kind names round trip") {
  for (LinearKind kind : {LinearKind::svm, LinearKind::lasso, LinearKind::ridge})
    CHECK(parse_kind(kind_name(kind)) == kind);
  CHECK_THROWS_AS(parse_kind("forest"), UsageError);
}
