#include "tedrate/synth.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "tedrate/baselines.hpp"
#include "tedrate/corpus.hpp"
#include "tedrate/textpipe.hpp"

namespace tedrate::synth {

namespace fs = std::filesystem;

TreeShape parse_tree_shape(const std::string& name) {
  if (name == "chain") return TreeShape::chain;
  if (name == "random") return TreeShape::random_shape;
  throw UsageError("unknown tree shape '" + name + "' (expected chain|random)");
}

void SynthSpec::validate() const {
  if (n_talks < 4) throw UsageError("synth: need at least 4 talks");
  if (min_sentences < 2 || max_sentences < min_sentences)
    throw UsageError("synth: sentence range must satisfy 2 <= min <= max");
  if (min_tokens < 1 || max_tokens < min_tokens)
    throw UsageError("synth: token range must satisfy 1 <= min <= max");
  std::size_t lexical = 0;
  std::set<std::string> cats;
  std::set<std::string> trigs;
  for (const PlantedRule& r : rules) {
    if (corpus::category_index(r.category) < 0)
      throw UsageError("synth: rule targets unknown category '" + r.category + "'");
    if (!cats.insert(r.category).second)
      throw UsageError("synth: category '" + r.category + "' has more than one rule");
    if (r.strength < 0) throw UsageError("synth: negative rule strength");
    if (r.lexical()) {
      if (r.trigger.empty()) throw UsageError("synth: lexical rule needs a trigger token");
      if (r.trigger != lower_copy(r.trigger) ||
          textpipe::tokenize(r.trigger) != std::vector<std::string>{r.trigger})
        throw UsageError("synth: trigger '" + r.trigger + "' must be a single lowercase token");
      if (!trigs.insert(r.trigger).second)
        throw UsageError("synth: duplicate trigger token '" + r.trigger + "'");
      ++lexical;
    } else if (r.prosody_channel >= static_cast<int>(baselines::kProsodyChannelNames.size())) {
      throw UsageError("synth: prosody channel out of range");
    }
  }
  if (vocab_size <= lexical)
    throw UsageError("synth: vocab size " + std::to_string(vocab_size) +
                     " is smaller than the trigger set (" + std::to_string(lexical) +
                     " triggers plus filler)");
}

namespace {

constexpr double kBceIntercept = -1.5;  // base logit before any planted push
constexpr double kRatingNoise = 0.3;
constexpr std::size_t kEmbeddingDim = 16;

// Pronounceable filler words: two syllables indexed in a fixed order, so the
// vocabulary depends only on its size and the trigger list.
std::vector<std::string> filler_words(std::size_t count, const std::set<std::string>& reserved) {
  static const char* cons = "bdfgklmnprst";
  static const char* vowels = "aeiou";
  std::vector<std::string> words;
  for (std::size_t i = 0; words.size() < count; ++i) {
    std::size_t a = i % 60, b = (i / 60) % 60;
    std::string w;
    w += cons[a % 12];
    w += vowels[a / 12];
    w += cons[b % 12];
    w += vowels[b / 12];
    if (i >= 3600) w += vowels[(i / 3600) % 5];
    if (!reserved.count(w)) words.push_back(w);
  }
  return words;
}

struct ChannelShape {
  double mean;
  double sd;
};

// rough speech-like magnitudes; only relative structure matters downstream
constexpr ChannelShape kChannelShapes[8] = {{120, 20}, {60, 8},    {500, 80},  {1500, 150},
                                            {2500, 200}, {80, 15}, {120, 25},  {160, 30}};

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  if (!s.empty()) {
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    s += '.';
  }
  return s;
}

int tag_of(const std::string& word, std::uint64_t salt, int n) {
  return static_cast<int>(mix64(fnv1a64(word) ^ salt) % static_cast<std::uint64_t>(n));
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

}  // namespace

SynthSummary generate(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "prosody");
  fs::create_directories(fs::path(out_dir) / "annotations");
  fs::create_directories(fs::path(out_dir) / "trajectory");

  std::set<std::string> reserved;
  for (const PlantedRule& r : spec.rules)
    if (r.lexical()) reserved.insert(r.trigger);
  std::size_t fillers = spec.vocab_size - reserved.size();
  std::vector<std::string> vocab = filler_words(fillers, reserved);

  SynthSummary summary;
  summary.vocabulary = vocab;
  for (const std::string& t : reserved) summary.vocabulary.push_back(t);
  std::sort(summary.vocabulary.begin(), summary.vocabulary.end());
  for (const PlantedRule& r : spec.rules) summary.rule_categories.push_back(r.category);

  Rng rng = Rng(spec.seed).split("synth");
  const Date publish_base{2015, 1, 1};
  const Date crawl{2017, 6, 1};
  static const char* kTopics[] = {"science", "culture", "technology", "storytelling", "history"};

  std::vector<corpus::TalkRecord> talks;
  std::vector<textpipe::TalkTrees> forests;
  // prosody frame buffers per talk: [sentence][frame][channel]
  std::vector<std::vector<std::vector<std::array<double, 8>>>> all_frames;

  auto range_draw = [&rng](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.bounded(hi - lo + 1));
  };

  for (std::size_t t = 0; t < spec.n_talks; ++t) {
    corpus::TalkRecord rec;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "synth%04zu", t);
    rec.talk_id = idbuf;
    rec.title = "Synthetic talk " + std::to_string(t);
    rec.publish_date = publish_base.plus_months(static_cast<int>(t % 24));
    rec.crawl_date = crawl;
    rec.age_days = days_between(*rec.publish_date, crawl);
    rec.keywords = {kTopics[t % 5]};

    std::size_t n_sent = range_draw(spec.min_sentences, spec.max_sentences);
    std::vector<std::vector<std::string>> sent_tokens(n_sent);
    for (auto& toks : sent_tokens) {
      std::size_t n_tok = range_draw(spec.min_tokens, spec.max_tokens);
      for (std::size_t k = 0; k < n_tok; ++k)
        toks.push_back(vocab[static_cast<std::size_t>(rng.bounded(vocab.size()))]);
    }

    // plant triggers; counts drive the rating link below
    std::vector<int> counts(spec.rules.size(), 0);
    std::vector<std::vector<int>> motif_sentences(spec.rules.size());
    for (std::size_t r = 0; r < spec.rules.size(); ++r) {
      const PlantedRule& rule = spec.rules[r];
      bool present = rng.uniform() < 0.5;
      if (!present) continue;
      if (rule.lexical()) {
        int k = 1 + static_cast<int>(rng.bounded(3));
        for (int j = 0; j < k; ++j) {
          auto& toks = sent_tokens[static_cast<std::size_t>(rng.bounded(n_sent))];
          toks.insert(toks.begin() + static_cast<long>(rng.bounded(toks.size() + 1)),
                      rule.trigger);
        }
        counts[r] = k;
      } else {
        for (std::size_t s = 0; s < n_sent; ++s) motif_sentences[r].push_back(static_cast<int>(s));
        counts[r] = static_cast<int>(n_sent);
      }
    }

    for (const auto& toks : sent_tokens) rec.sentences.push_back(join_tokens(toks));

    // ratings: logistic link on the planted counts, then view scaling
    double v = std::exp(rng.uniform(std::log(1e3), std::log(1e6)));
    rec.total_views = std::llround(v);
    rec.ratings.kind = corpus::RatingKind::raw_count;
    for (std::size_t c = 0; c < corpus::kNumCategories; ++c) {
      double logit = kBceIntercept + kRatingNoise * rng.normal();
      for (std::size_t r = 0; r < spec.rules.size(); ++r)
        if (spec.rules[r].category == corpus::categories()[c])
          logit += spec.rules[r].strength * counts[r];
      double f = 1.0 / (1.0 + std::exp(-logit));
      rec.ratings.values[c] = std::max(1.0, std::round(f * v));
    }
    for (const auto& s : rec.sentences)
      rec.word_count += static_cast<long>(textpipe::tokenize(s).size());

    // dependency trees over the final token lists
    textpipe::TalkTrees forest;
    forest.talk_id = rec.talk_id;
    static const char* kPos[] = {"ADJ", "ADP", "ADV", "DET", "NOUN", "PRON", "VERB"};
    static const char* kDep[] = {"advmod", "amod", "case", "det", "nsubj", "obj", "dep"};
    for (const auto& toks : sent_tokens) {
      textpipe::DepTree tree;
      for (std::size_t k = 0; k < toks.size(); ++k) {
        textpipe::TreeNode node;
        node.form = toks[k];
        node.upos = kPos[tag_of(toks[k], 0x705ull, 7)];
        node.deprel = k == 0 ? "root" : kDep[tag_of(toks[k], 0xde9ull, 7)];
        if (k == 0)
          node.parent = -1;
        else if (spec.tree_shape == TreeShape::chain)
          node.parent = static_cast<int>(k) - 1;
        else
          node.parent = static_cast<int>(rng.bounded(k));
        tree.nodes.push_back(node);
      }
      tree.root = 0;
      tree.rebuild_children();
      forest.sentences.push_back(std::move(tree));
    }
    forests.push_back(std::move(forest));

    // prosody frames (10 Hz scale is notional; lengths just need variety)
    std::vector<std::vector<std::array<double, 8>>> frames(n_sent);
    for (std::size_t s = 0; s < n_sent; ++s) {
      std::size_t m = 8 + static_cast<std::size_t>(rng.bounded(13));
      frames[s].resize(m);
      for (std::size_t f = 0; f < m; ++f)
        for (std::size_t ch = 0; ch < 8; ++ch)
          frames[s][f][ch] = kChannelShapes[ch].mean + kChannelShapes[ch].sd * rng.normal();
    }
    for (std::size_t r = 0; r < spec.rules.size(); ++r) {
      const PlantedRule& rule = spec.rules[r];
      if (rule.lexical()) continue;
      // Narrow, tall bumps: after per-talk z-normalization the inflated sd
      // still leaves the peak well above the smoothed noise maxima, so the
      // conv + max-pool stack has a clean per-sentence feature to find.
      for (int s : motif_sentences[r]) {
        auto& sent = frames[static_cast<std::size_t>(s)];
        std::size_t width = std::min<std::size_t>(3, sent.size());
        std::size_t start = static_cast<std::size_t>(rng.bounded(sent.size() - width + 1));
        for (std::size_t f = start; f < start + width; ++f)
          sent[f][static_cast<std::size_t>(rule.prosody_channel)] +=
              8.0 * kChannelShapes[static_cast<std::size_t>(rule.prosody_channel)].sd;
      }
    }
    all_frames.push_back(std::move(frames));

    talks.push_back(std::move(rec));
    summary.talk_ids.push_back(talks.back().talk_id);
    summary.trigger_counts.push_back(counts);
  }

  corpus::write_talks_jsonl((fs::path(out_dir) / "talks.jsonl").string(), talks);
  textpipe::write_conllu((fs::path(out_dir) / "trees.conllu").string(), forests);

  for (std::size_t t = 0; t < talks.size(); ++t) {
    const std::string& id = talks[t].talk_id;
    auto series = open_out(fs::path(out_dir) / "prosody" / (id + ".csv"));
    series << "sentence";
    for (const char* ch : baselines::kProsodyChannelNames) series << "," << ch;
    series << "\n";
    for (std::size_t s = 0; s < all_frames[t].size(); ++s)
      for (const auto& frame : all_frames[t][s]) {
        series << s;
        for (double x : frame) series << "," << format_double(x);
        series << "\n";
      }

    auto ann = open_out(fs::path(out_dir) / "annotations" / (id + ".csv"));
    ann << "pause_duration_s,pct_unvoiced,jitter,shimmer,pct_breaks\n";
    ann << format_double(rng.uniform(0.2, 2.0)) << "," << format_double(rng.uniform(10, 60))
        << "," << format_double(rng.uniform(0.5, 3.0)) << "," << format_double(rng.uniform(2, 10))
        << "," << format_double(rng.uniform(0, 20)) << "\n";

    auto traj = open_out(fs::path(out_dir) / "trajectory" / (id + ".csv"));
    for (std::size_t c = 0; c < baselines::kTrajectoryChannelNames.size(); ++c)
      traj << (c ? "," : "") << baselines::kTrajectoryChannelNames[c];
    traj << "\n";
    for (std::size_t s = 0; s < talks[t].sentences.size(); ++s) {
      for (std::size_t c = 0; c < baselines::kTrajectoryChannelNames.size(); ++c)
        traj << (c ? "," : "")
             << format_double(std::clamp(0.5 + 0.2 * rng.normal(), 0.0, 1.0));
      traj << "\n";
    }
  }

  // toy embeddings: each word's vector is a pure function of the word, so
  // any two corpora sharing vocabulary share vectors
  auto emb = open_out(fs::path(out_dir) / "embeddings.txt");
  for (const std::string& w : summary.vocabulary) {
    Rng wr(mix64(fnv1a64(w) ^ 0x7ed5ull));
    emb << w;
    for (std::size_t d = 0; d < kEmbeddingDim; ++d)
      emb << " " << format_double(wr.uniform(-0.5, 0.5));
    emb << "\n";
  }

  // demo lexicon for the baseline path: one category per lexical trigger
  // plus hash-bucketed filler categories
  auto lex = open_out(fs::path(out_dir) / "lexicon.txt");
  lex << "# synthetic lexicon\n";
  for (const PlantedRule& r : spec.rules)
    if (r.lexical()) lex << r.trigger << "\tcue_" << lower_copy(r.category) << "\n";
  for (const std::string& w : vocab) lex << w << "\tfiller" << tag_of(w, 0x1e8ull, 8) << "\n";

  auto truth = open_out(fs::path(out_dir) / "truth.csv");
  truth << "talk_id";
  for (const std::string& c : summary.rule_categories) truth << "," << c;
  truth << "\n";
  for (std::size_t t = 0; t < summary.talk_ids.size(); ++t) {
    truth << summary.talk_ids[t];
    for (int c : summary.trigger_counts[t]) truth << "," << c;
    truth << "\n";
  }

  return summary;
}

}  // namespace tedrate::synth
