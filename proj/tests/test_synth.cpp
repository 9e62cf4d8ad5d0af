#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "tedrate/baselines.hpp"
#include "tedrate/corpus.hpp"
#include "tedrate/synth.hpp"
#include "tedrate/textpipe.hpp"
#include "test_util.hpp"

using namespace tedrate;
using namespace tedrate::synth;

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

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SynthSpec small_spec() {
  SynthSpec spec;
  spec.n_talks = 20;
  spec.vocab_size = 30;
  spec.seed = 11;
  return spec;
}

// binarized labels for one category over a talk set
std::vector<int> binary_labels(const std::vector<corpus::TalkRecord>& talks, std::size_t cat) {
  std::vector<double> column;
  for (const auto& t : talks) column.push_back(corpus::scale_ratings(t.ratings).values[cat]);
  return corpus::binarize_by_median(column).labels;
}

}  // namespace

TEST_CASE("spec validation") {
  SynthSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());

  SynthSpec bad = spec;
  bad.rules.push_back({"NoSuchCategory", "tok", -1, 1.0});
  CHECK_THROWS_AS(bad.validate(), UsageError);

  bad = spec;
  bad.rules.push_back({"Funny", "tok", -1, 1.0});
  bad.rules.push_back({"Funny", "other", -1, 1.0});
  CHECK_THROWS_AS(bad.validate(), UsageError);

  bad = spec;
  bad.rules.push_back({"Funny", "Tok", -1, 1.0});  // not lowercase
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad.rules[0].trigger = "two words";
  CHECK_THROWS_AS(bad.validate(), UsageError);

  bad = spec;
  bad.vocab_size = 1;
  bad.rules.push_back({"Funny", "tok", -1, 1.0});
  bad.rules.push_back({"Beautiful", "tak", -1, 1.0});
  std::string msg = testutil::thrown_message<UsageError>([&] { bad.validate(); });
  CHECK(testutil::contains(msg, "trigger set"));

  bad = spec;
  bad.min_sentences = 1;
  CHECK_THROWS_AS(bad.validate(), UsageError);

  bad = spec;
  bad.rules.push_back({"Funny", "", 9, 1.0});  // channel out of range
  CHECK_THROWS_AS(bad.validate(), UsageError);

  CHECK(parse_tree_shape("chain") == TreeShape::chain);
  CHECK(parse_tree_shape("random") == TreeShape::random_shape);
  CHECK_THROWS_AS(parse_tree_shape("balanced"), UsageError);
}

TEST_CASE("same seed gives byte-identical outputs, different seed diverges") {
  TempDir a("tedrate-synth-a"), b("tedrate-synth-b"), c("tedrate-synth-c");
  SynthSpec spec = small_spec();
  spec.rules.push_back({"Funny", "joketoken", -1, 3.0});
  generate(spec, a.path.string());
  generate(spec, b.path.string());

  std::vector<std::string> files = {"talks.jsonl",    "trees.conllu", "embeddings.txt",
                                    "lexicon.txt",    "truth.csv",    "prosody/synth0000.csv",
                                    "annotations/synth0007.csv", "trajectory/synth0013.csv"};
  for (const std::string& f : files) {
    INFO(f);
    CHECK(slurp((a.path / f).string()) == slurp((b.path / f).string()));
  }

  SynthSpec other = spec;
  other.seed = 12;
  generate(other, c.path.string());
  CHECK(slurp(a.file("talks.jsonl")) != slurp(c.file("talks.jsonl")));
}

TEST_CASE("emitted files are mutually consistent and loadable") {
  TempDir dir("tedrate-synth-load");
  SynthSpec spec = small_spec();
  spec.rules.push_back({"Funny", "joketoken", -1, 2.0});
  SynthSummary summary = generate(spec, dir.path.string());

  auto talks = corpus::read_talks_jsonl(dir.file("talks.jsonl"));
  REQUIRE(talks.size() == spec.n_talks);
  auto forests = textpipe::read_conllu(dir.file("trees.conllu"));
  REQUIRE(forests.size() == spec.n_talks);

  for (std::size_t t = 0; t < talks.size(); ++t) {
    CHECK(talks[t].talk_id == summary.talk_ids[t]);
    CHECK(forests[t].talk_id == talks[t].talk_id);
    REQUIRE(forests[t].sentences.size() == talks[t].sentences.size());
    for (std::size_t s = 0; s < talks[t].sentences.size(); ++s) {
      auto tokens = textpipe::tokenize(talks[t].sentences[s]);
      REQUIRE(tokens.back() == ".");
      tokens.pop_back();
      const auto& nodes = forests[t].sentences[s].nodes;
      REQUIRE(nodes.size() == tokens.size());
      for (std::size_t k = 0; k < tokens.size(); ++k) CHECK(nodes[k].form == tokens[k]);
      CHECK_NOTHROW(forests[t].sentences[s].validate("synth"));
    }

    // prosody series: sentence ids cover every sentence, 8 channels wide
    std::ifstream series(dir.file("prosody/" + talks[t].talk_id + ".csv"));
    std::string line;
    std::getline(series, line);
    CHECK(line == "sentence,pitch,loudness,f1,f2,f3,b1,b2,b3");
    std::set<int> seen;
    while (std::getline(series, line)) {
      auto parts = split_on(line, ',');
      REQUIRE(parts.size() == 9);
      seen.insert(static_cast<int>(parse_int(parts[0], "sentence id")));
    }
    CHECK(seen.size() == talks[t].sentences.size());

    auto ann = baselines::load_prosody_annotations(
        dir.file("annotations/" + talks[t].talk_id + ".csv"));
    REQUIRE(ann.has_value());
    CHECK(ann->pause_duration_s >= 0.2);

    auto traj = baselines::load_trajectory_scores(
        dir.file("trajectory/" + talks[t].talk_id + ".csv"));
    CHECK(traj.size() == talks[t].sentences.size());
  }

  auto table = textpipe::load_embeddings(dir.file("embeddings.txt"), 16);
  CHECK(table.skipped_lines == 0);
  for (const std::string& w : summary.vocabulary) CHECK(table.contains(w));
  CHECK(table.contains("joketoken"));

  auto lexicon = baselines::load_lexicon(dir.file("lexicon.txt"));
  auto cats = lexicon.match("joketoken");
  REQUIRE(cats.size() == 1);
  CHECK(lexicon.categories[cats[0]] == "cue_funny");
}

TEST_CASE("truth counts match transcript trigger occurrences") {
  TempDir dir("tedrate-synth-truth");
  SynthSpec spec = small_spec();
  spec.n_talks = 40;
  spec.rules.push_back({"Funny", "joketoken", -1, 3.0});
  SynthSummary summary = generate(spec, dir.path.string());
  auto talks = corpus::read_talks_jsonl(dir.file("talks.jsonl"));

  std::size_t with = 0;
  for (std::size_t t = 0; t < talks.size(); ++t) {
    int occurrences = 0;
    for (const auto& s : talks[t].sentences)
      for (const auto& tok : textpipe::tokenize(s)) occurrences += tok == "joketoken";
    CHECK(occurrences == summary.trigger_counts[t][0]);
    with += occurrences > 0;
  }
  // presence is a fair coin; 40 draws stay comfortably inside [8, 32]
  CHECK(with >= 8);
  CHECK(with <= 32);
}

TEST_CASE("planted lexical signal drives the binarized label") {
  TempDir dir("tedrate-synth-signal");
  SynthSpec spec;
  spec.n_talks = 500;
  spec.vocab_size = 60;
  spec.seed = 7;
  spec.rules.push_back({"Funny", "joketoken", -1, 3.0});
  SynthSummary summary = generate(spec, dir.path.string());
  auto talks = corpus::read_talks_jsonl(dir.file("talks.jsonl"));

  auto labels = binary_labels(talks, static_cast<std::size_t>(corpus::category_index("Funny")));
  std::vector<double> presence, label_d;
  for (std::size_t t = 0; t < talks.size(); ++t) {
    presence.push_back(summary.trigger_counts[t][0] > 0 ? 1.0 : 0.0);
    label_d.push_back(labels[t]);
  }
  double pb = corpus::pearson(presence, label_d);
  CHECK(pb > 0.5);

  // Eq. 1's shared denominator couples the categories: raising Funny's
  // count shrinks every other scaled rating, so unplanted categories carry
  // a weaker, sign-flipped echo of the trigger rather than pure noise.
  auto other = binary_labels(talks, static_cast<std::size_t>(corpus::category_index("Courageous")));
  std::vector<double> other_d(other.begin(), other.end());
  double echo = corpus::pearson(presence, other_d);
  CHECK(echo < 0.0);
  CHECK(std::fabs(echo) < pb);
}

TEST_CASE("strength zero yields labels independent of the trigger") {
  TempDir dir("tedrate-synth-null");
  SynthSpec spec;
  spec.n_talks = 500;
  spec.vocab_size = 60;
  spec.seed = 9;
  spec.rules.push_back({"Funny", "joketoken", -1, 0.0});
  SynthSummary summary = generate(spec, dir.path.string());
  auto talks = corpus::read_talks_jsonl(dir.file("talks.jsonl"));

  auto labels = binary_labels(talks, static_cast<std::size_t>(corpus::category_index("Funny")));
  std::vector<double> presence, label_d;
  for (std::size_t t = 0; t < talks.size(); ++t) {
    presence.push_back(summary.trigger_counts[t][0] > 0 ? 1.0 : 0.0);
    label_d.push_back(labels[t]);
  }
  CHECK(std::fabs(corpus::pearson(presence, label_d)) < 0.15);
}

TEST_CASE("raw ratings track views while scaled ratings do not") {
  TempDir dir("tedrate-synth-eq1");
  SynthSpec spec;
  spec.n_talks = 500;
  spec.vocab_size = 60;
  spec.seed = 3;
  generate(spec, dir.path.string());
  auto talks = corpus::read_talks_jsonl(dir.file("talks.jsonl"));

  auto raw = corpus::correlation_report(talks, corpus::CorrelationField::total_views,
                                        corpus::RatingKind::raw_count);
  auto scaled = corpus::correlation_report(talks, corpus::CorrelationField::total_views,
                                           corpus::RatingKind::scaled);
  CHECK(raw.average > 0.4);
  double mean_abs = 0.0;
  for (double c : scaled.coefficients) mean_abs += std::fabs(c);
  mean_abs /= corpus::kNumCategories;
  CHECK(mean_abs < 0.05);
}

TEST_CASE("prosodic motif lifts the designated channel only when planted") {
  TempDir dir("tedrate-synth-motif");
  SynthSpec spec;
  spec.n_talks = 60;
  spec.vocab_size = 30;
  spec.seed = 21;
  spec.rules.push_back({"Inspiring", "", 0, 2.0});  // pitch channel
  SynthSummary summary = generate(spec, dir.path.string());

  double mean_with = 0, mean_without = 0;
  std::size_t n_with = 0, n_without = 0;
  for (std::size_t t = 0; t < summary.talk_ids.size(); ++t) {
    std::ifstream in(dir.file("prosody/" + summary.talk_ids[t] + ".csv"));
    std::string line;
    std::getline(in, line);  // header
    double sum = 0;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      auto parts = split_on(line, ',');
      sum += parse_double(parts[1], "pitch");
      ++n;
    }
    double mean = sum / static_cast<double>(n);
    if (summary.trigger_counts[t][0] > 0) {
      mean_with += mean;
      ++n_with;
    } else {
      mean_without += mean;
      ++n_without;
    }
  }
  REQUIRE(n_with > 5);
  REQUIRE(n_without > 5);
  mean_with /= static_cast<double>(n_with);
  mean_without /= static_cast<double>(n_without);
  // bursts of +8 channel sds over 3 of ~14 frames shift the talk mean by
  // roughly 1.7 sds = 34 Hz; noise on 60-talk group means is ~1 Hz
  CHECK(mean_with - mean_without > 10.0);
}

TEST_CASE("tree shapes") {
  TempDir chain_dir("tedrate-synth-chain"), random_dir("tedrate-synth-random");
  SynthSpec spec = small_spec();
  spec.min_tokens = 6;
  generate(spec, chain_dir.path.string());
  spec.tree_shape = TreeShape::random_shape;
  generate(spec, random_dir.path.string());

  auto chains = textpipe::read_conllu(chain_dir.file("trees.conllu"));
  for (const auto& talk : chains)
    for (const auto& tree : talk.sentences)
      for (std::size_t k = 0; k < tree.nodes.size(); ++k)
        CHECK(tree.nodes[k].parent == static_cast<int>(k) - 1);

  auto randoms = textpipe::read_conllu(random_dir.file("trees.conllu"));
  bool branching = false;
  for (const auto& talk : randoms)
    for (const auto& tree : talk.sentences) {
      CHECK_NOTHROW(tree.validate("random tree"));
      for (const auto& kids : tree.children) branching |= kids.size() >= 2;
    }
  CHECK(branching);
}
