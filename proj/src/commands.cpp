#include "tedrate/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tedrate/baselines.hpp"
#include "tedrate/evaluation.hpp"
#include "tedrate/gradsuite.hpp"
#include "tedrate/synth.hpp"

namespace tedrate::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  return out;
}

std::string category_header() {
  std::string h = "talk_id";
  for (const std::string& c : corpus::categories()) h += "," + c;
  return h;
}

void write_label_matrix(const fs::path& path, const std::vector<corpus::TalkRecord>& talks,
                        const std::vector<std::array<double, corpus::kNumCategories>>& rows,
                        bool integral) {
  auto out = open_out(path);
  out << category_header() << "\n";
  for (std::size_t t = 0; t < talks.size(); ++t) {
    out << talks[t].talk_id;
    for (double v : rows[t])
      out << "," << (integral ? std::to_string(static_cast<int>(v)) : format_double(v));
    out << "\n";
  }
}

std::vector<std::pair<std::string, std::array<double, corpus::kNumCategories>>> read_label_matrix(
    const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (trim_copy(line) != category_header())
    throw DataError(path.string() + ": unexpected header '" + line + "'");
  std::vector<std::pair<std::string, std::array<double, corpus::kNumCategories>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty()) continue;
    auto parts = split_on(line, ',');
    if (parts.size() != corpus::kNumCategories + 1)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(corpus::kNumCategories + 1) + " fields");
    std::array<double, corpus::kNumCategories> vals{};
    for (std::size_t c = 0; c < corpus::kNumCategories; ++c)
      vals[c] = parse_double(parts[c + 1], path.string() + ":" + std::to_string(lineno));
    rows.emplace_back(parts[0], vals);
  }
  return rows;
}

}  // namespace

// --- prepare ---

void run_prepare(const PrepareArgs& args) {
  if (args.data_dir.empty() || args.out_dir.empty())
    throw UsageError("prepare: --data-dir and --out-dir are required");
  if (args.dev_fraction < 0 || args.dev_fraction >= 1)
    throw UsageError("prepare: --dev-fraction must lie in [0, 1)");

  auto records = corpus::read_talks_jsonl((fs::path(args.data_dir) / "talks.jsonl").string());
  if (records.empty()) throw DataError("prepare: corpus has no talks");

  Date crawl;
  if (!args.crawl_date.empty()) {
    crawl = Date::parse(args.crawl_date);
  } else {
    bool found = false;
    for (const auto& r : records)
      if (r.crawl_date && (!found || r.crawl_date->day_number() > crawl.day_number())) {
        crawl = *r.crawl_date;
        found = true;
      }
    if (!found)
      throw DataError("prepare: no crawl dates in the corpus; pass --crawl-date explicitly");
  }

  auto filtered = corpus::filter_corpus(records, crawl, args.min_words);
  if (filtered.kept.empty()) throw DataError("prepare: every talk was filtered out");

  std::vector<std::array<double, corpus::kNumCategories>> scaled(filtered.kept.size());
  for (std::size_t t = 0; t < filtered.kept.size(); ++t)
    scaled[t] = corpus::scale_ratings(filtered.kept[t].ratings, filtered.kept[t].talk_id).values;

  std::vector<std::array<double, corpus::kNumCategories>> labels(filtered.kept.size());
  std::array<double, corpus::kNumCategories> medians{};
  for (std::size_t c = 0; c < corpus::kNumCategories; ++c) {
    std::vector<double> column;
    column.reserve(scaled.size());
    for (const auto& row : scaled) column.push_back(row[c]);
    auto bin = corpus::binarize_by_median(column);
    medians[c] = bin.median;
    for (std::size_t t = 0; t < labels.size(); ++t) labels[t][c] = bin.labels[t];
  }

  std::vector<std::string> ids;
  for (const auto& r : filtered.kept) ids.push_back(r.talk_id);
  std::size_t test_count = args.test_count ? args.test_count
                                           : std::max<std::size_t>(1, ids.size() * 15 / 100);
  auto split = corpus::split_dataset(ids, test_count, args.dev_fraction, args.seed);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  corpus::write_talks_jsonl((out / "talks.jsonl").string(), filtered.kept);
  write_label_matrix(out / "labels.csv", filtered.kept, labels, true);
  write_label_matrix(out / "scaled.csv", filtered.kept, scaled, false);
  corpus::write_split_json((out / "split.json").string(), split);

  auto log = open_out(out / "filter_log.txt");
  for (const std::string& line : filtered.removed) log << line << "\n";

  json meta;
  meta["source_dir"] = fs::absolute(args.data_dir).lexically_normal().string();
  meta["crawl_date"] = crawl.to_string();
  meta["min_words"] = args.min_words;
  meta["seed"] = args.seed;
  meta["test_count"] = test_count;
  meta["dev_fraction"] = args.dev_fraction;
  json med = json::object();
  for (std::size_t c = 0; c < corpus::kNumCategories; ++c)
    med[corpus::categories()[c]] = medians[c];
  meta["medians"] = med;
  open_out(out / "prepare.json") << meta.dump(2) << "\n";

  std::cout << "prepare: kept " << filtered.kept.size() << " of " << records.size()
            << " talks (train " << split.train_ids.size() << ", dev " << split.dev_ids.size()
            << ", test " << split.test_ids.size() << ")\n";
}

PreparedCorpus load_prepared(const std::string& prepared_dir) {
  const fs::path dir(prepared_dir);
  std::ifstream meta_in(dir / "prepare.json");
  if (!meta_in)
    throw DataError("'" + prepared_dir + "' is not a prepared directory (no prepare.json)");
  json meta;
  PreparedCorpus prepared;
  try {
    meta_in >> meta;
    prepared.data_dir = meta.at("source_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError((dir / "prepare.json").string() + ": " + e.what());
  }
  prepared.talks = corpus::read_talks_jsonl((dir / "talks.jsonl").string());
  for (std::size_t t = 0; t < prepared.talks.size(); ++t)
    prepared.index[prepared.talks[t].talk_id] = t;

  prepared.labels.resize(prepared.talks.size());
  auto rows = read_label_matrix(dir / "labels.csv");
  std::set<std::string> seen;
  for (const auto& [id, vals] : rows) {
    auto it = prepared.index.find(id);
    if (it == prepared.index.end())
      throw DataError("labels.csv lists unknown talk '" + id + "'");
    for (double v : vals)
      if (v != 0.0 && v != 1.0) throw DataError("labels.csv: non-binary label for '" + id + "'");
    prepared.labels[it->second] = vals;
    seen.insert(id);
  }
  if (seen.size() != prepared.talks.size())
    throw DataError("labels.csv covers " + std::to_string(seen.size()) + " of " +
                    std::to_string(prepared.talks.size()) + " talks");

  prepared.split = corpus::read_split_json((dir / "split.json").string());
  for (const auto* ids : {&prepared.split.train_ids, &prepared.split.dev_ids,
                          &prepared.split.test_ids})
    for (const std::string& id : *ids)
      if (!prepared.index.count(id))
        throw DataError("split.json lists unknown talk '" + id + "'");
  return prepared;
}

// --- model input assembly ---

std::size_t detect_embedding_dim(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (trim_copy(line).empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::size_t n = 0;
    while (ss >> field) ++n;
    if (n < 2) throw DataError(path + ": first entry has no vector components");
    return n - 1;
  }
  throw DataError(path + ": empty embeddings file");
}

std::vector<std::vector<std::array<double, 8>>> read_prosody_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prosody series '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::string expect = "sentence";
  for (const char* ch : baselines::kProsodyChannelNames) expect += std::string(",") + ch;
  if (trim_copy(line) != expect)
    throw DataError(path + ": unexpected header '" + line + "'");

  std::vector<std::vector<std::array<double, 8>>> frames;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty()) continue;
    auto parts = split_on(line, ',');
    if (parts.size() != 9)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected 9 fields");
    const std::string ctx = path + ":" + std::to_string(lineno);
    long long sid = parse_int(parts[0], ctx);
    if (sid < 0) throw DataError(ctx + ": negative sentence index");
    if (static_cast<std::size_t>(sid) >= frames.size())
      frames.resize(static_cast<std::size_t>(sid) + 1);
    std::array<double, 8> frame{};
    for (std::size_t ch = 0; ch < 8; ++ch) frame[ch] = parse_double(parts[ch + 1], ctx);
    frames[static_cast<std::size_t>(sid)].push_back(frame);
  }
  for (std::size_t s = 0; s < frames.size(); ++s)
    if (frames[s].empty())
      throw DataError(path + ": sentence " + std::to_string(s) + " has no frames");
  return frames;
}

models::TalkInput build_talk_input(const corpus::TalkRecord& record,
                                   const textpipe::TalkTrees* forest,
                                   const std::vector<std::vector<std::array<double, 8>>>* frames,
                                   const textpipe::EmbeddingTable& embeddings,
                                   const textpipe::AuxVocabs& vocabs, models::Variant variant) {
  using models::Variant;
  models::TalkInput input;
  input.talk_id = record.talk_id;
  input.sentences.resize(record.sentences.size());

  for (std::size_t s = 0; s < record.sentences.size(); ++s) {
    auto& sent = input.sentences[s];
    for (const std::string& tok : textpipe::tokenize(record.sentences[s]))
      sent.word_vecs.push_back(autodiff::Tensor::vector(embeddings.lookup(tok)));
  }

  if (variant != Variant::word_seq) {
    if (!forest)
      throw DataError("talk '" + record.talk_id + "' has no dependency trees");
    if (forest->sentences.size() != record.sentences.size())
      throw DataError("talk '" + record.talk_id + "': " +
                      std::to_string(forest->sentences.size()) + " trees for " +
                      std::to_string(record.sentences.size()) + " sentences");
    for (std::size_t s = 0; s < forest->sentences.size(); ++s) {
      auto& sent = input.sentences[s];
      sent.tree = forest->sentences[s];
      for (const auto& node : sent.tree.nodes) {
        sent.node_word_vecs.push_back(autodiff::Tensor::vector(embeddings.lookup(node.form)));
        sent.pos_ids.push_back(vocabs.pos.index_of(node.upos));
        sent.dep_ids.push_back(vocabs.dep.index_of(node.deprel));
      }
    }
  }

  if (variant == Variant::dep_tree_prosody) {
    if (!frames)
      throw DataError("talk '" + record.talk_id + "' has no prosody series");
    if (frames->size() != record.sentences.size())
      throw DataError("talk '" + record.talk_id + "': prosody covers " +
                      std::to_string(frames->size()) + " of " +
                      std::to_string(record.sentences.size()) + " sentences");

    // talk-level z-normalization, then sentence crops padded to the longest
    double mean[8] = {0}, sq[8] = {0};
    std::size_t total = 0, longest = models::kMinSignalLength;
    for (const auto& sent : *frames) {
      longest = std::max(longest, sent.size());
      total += sent.size();
      for (const auto& f : sent)
        for (std::size_t ch = 0; ch < 8; ++ch) {
          mean[ch] += f[ch];
          sq[ch] += f[ch] * f[ch];
        }
    }
    double sd[8];
    for (std::size_t ch = 0; ch < 8; ++ch) {
      mean[ch] /= static_cast<double>(total);
      double var = sq[ch] / static_cast<double>(total) - mean[ch] * mean[ch];
      sd[ch] = var > 0 ? std::sqrt(var) : 1.0;
    }
    for (std::size_t s = 0; s < frames->size(); ++s) {
      autodiff::Tensor signal({8, longest}, 0.0);
      const auto& sent = (*frames)[s];
      for (std::size_t f = 0; f < sent.size(); ++f)
        for (std::size_t ch = 0; ch < 8; ++ch)
          signal.at2(ch, f) = (sent[f][ch] - mean[ch]) / sd[ch];
      input.sentences[s].prosody = std::move(signal);
      input.sentences[s].has_prosody = true;
    }
  }
  return input;
}

namespace {

struct CorpusFiles {
  textpipe::EmbeddingTable embeddings;
  std::map<std::string, textpipe::TalkTrees> forests;  // by talk id
};

CorpusFiles load_corpus_files(const PreparedCorpus& prepared, models::Variant variant) {
  CorpusFiles files;
  const fs::path data(prepared.data_dir);
  const std::string emb_path = (data / "embeddings.txt").string();
  files.embeddings = textpipe::load_embeddings(emb_path, detect_embedding_dim(emb_path));
  if (variant != models::Variant::word_seq) {
    for (auto& forest : textpipe::read_conllu((data / "trees.conllu").string()))
      files.forests.emplace(forest.talk_id, std::move(forest));
  }
  return files;
}

std::vector<training::LabeledTalk> assemble_split(
    const PreparedCorpus& prepared, const CorpusFiles& files,
    const std::vector<std::string>& ids, const textpipe::AuxVocabs& vocabs,
    models::Variant variant) {
  std::vector<training::LabeledTalk> out;
  const fs::path data(prepared.data_dir);
  for (const std::string& id : ids) {
    std::size_t t = prepared.index.at(id);
    const textpipe::TalkTrees* forest = nullptr;
    if (variant != models::Variant::word_seq) {
      auto it = files.forests.find(id);
      if (it == files.forests.end())
        throw DataError("talk '" + id + "' missing from trees.conllu");
      forest = &it->second;
    }
    std::vector<std::vector<std::array<double, 8>>> frames;
    const std::vector<std::vector<std::array<double, 8>>>* frames_ptr = nullptr;
    if (variant == models::Variant::dep_tree_prosody) {
      fs::path series = data / "prosody" / (id + ".csv");
      if (!fs::exists(series))
        throw DataError("talk '" + id + "' has no prosody series at '" + series.string() + "'");
      frames = read_prosody_series(series.string());
      frames_ptr = &frames;
    }
    training::LabeledTalk lt;
    lt.input = build_talk_input(prepared.talks[t], forest, frames_ptr, files.embeddings, vocabs,
                                variant);
    lt.labels = prepared.labels[t];
    out.push_back(std::move(lt));
  }
  return out;
}

}  // namespace

// --- train ---

void run_train(const TrainArgs& args) {
  if (args.prepared_dir.empty() || args.out_dir.empty())
    throw UsageError("train: --prepared and --out-dir are required");

  training::TrainConfig config;
  if (!args.config_path.empty()) config = training::load_train_config(args.config_path);
  if (args.variant) config.variant = models::parse_variant(*args.variant);
  if (args.optimizer) config.optimizer = *args.optimizer;
  if (args.learning_rate) config.learning_rate = *args.learning_rate;
  if (args.batch_size) config.batch_size = *args.batch_size;
  if (args.max_epochs) config.max_epochs = *args.max_epochs;
  if (args.weight_drop_p) config.weight_drop_p = *args.weight_drop_p;
  if (args.patience) config.patience = *args.patience;
  if (args.seed) config.seed = *args.seed;
  config.validate();

  PreparedCorpus prepared = load_prepared(args.prepared_dir);
  CorpusFiles files = load_corpus_files(prepared, config.variant);

  textpipe::AuxVocabs vocabs;
  if (config.variant != models::Variant::word_seq) {
    std::vector<const textpipe::TalkTrees*> train_forests;
    for (const std::string& id : prepared.split.train_ids) {
      auto it = files.forests.find(id);
      if (it == files.forests.end())
        throw DataError("talk '" + id + "' missing from trees.conllu");
      train_forests.push_back(&it->second);
    }
    vocabs = textpipe::build_aux_vocabs(train_forests);
  }

  auto train_set =
      assemble_split(prepared, files, prepared.split.train_ids, vocabs, config.variant);
  auto dev_set = assemble_split(prepared, files, prepared.split.dev_ids, vocabs, config.variant);

  models::ModelConfig mc;
  mc.variant = config.variant;
  mc.hidden = args.hidden;
  mc.word_dim = files.embeddings.dimension();
  mc.pos_dim = args.pos_dim;
  mc.dep_dim = args.dep_dim;
  mc.fc_hidden = args.fc_hidden;
  mc.pos_vocab = vocabs.pos.size();
  mc.dep_vocab = vocabs.dep.size();

  models::ModelParams params = models::init_params(mc, config.seed);
  params.word_vocab_hash = files.embeddings.vocab_hash();
  if (config.variant != models::Variant::word_seq) {
    params.pos_vocab_hash = vocabs.pos.hash();
    params.dep_vocab_hash = vocabs.dep.hash();
  }

  training::TrainResult result = training::train(params, train_set, dev_set, config);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  models::save_checkpoint((out / "checkpoint.json").string(), result.best_params);
  training::write_losses_csv((out / "losses.csv").string(), result.curve);
  training::save_train_config((out / "train_config.json").string(), config);
  if (config.variant != models::Variant::word_seq) {
    vocabs.pos.save_json((out / "pos_vocab.json").string());
    vocabs.dep.save_json((out / "dep_vocab.json").string());
  }

  std::cout << "train: " << models::variant_name(config.variant) << " best dev loss "
            << format_double(result.best_dev_loss) << " at epoch " << result.best_epoch << " ("
            << result.curve.size() << " epochs run)\n";
}

// --- evaluate ---

namespace {

const std::vector<std::string>& split_ids(const PreparedCorpus& prepared,
                                          const std::string& name) {
  if (name == "train") return prepared.split.train_ids;
  if (name == "dev") return prepared.split.dev_ids;
  if (name == "test") return prepared.split.test_ids;
  throw UsageError("unknown split '" + name + "' (expected train, dev or test)");
}

void write_reports(const fs::path& out_dir, const std::vector<evaluation::TalkPrediction>& preds,
                   const std::vector<evaluation::TalkTruth>& truth, const std::string& model_id,
                   const std::string& split_id, const std::string& threshold) {
  fs::create_directories(out_dir);
  evaluation::MetricReport report =
      evaluation::compute_report(preds, truth, model_id, split_id, threshold);
  evaluation::write_report_csv((out_dir / "report.csv").string(), report);
  evaluation::write_report_txt((out_dir / "report.txt").string(), report);
  evaluation::write_predictions_csv((out_dir / "predictions.csv").string(), preds);
  std::cout << "evaluate: " << model_id << " on " << split_id << ": macro AUC "
            << (std::isnan(report.macro_auc) ? "n/a" : format_double(report.macro_auc)) << " over "
            << report.defined_count << " categories\n";
}

}  // namespace

void run_evaluate(const EvaluateArgs& args) {
  if (args.prepared_dir.empty() || args.out_dir.empty())
    throw UsageError("evaluate: --prepared and --out-dir are required");
  std::string checkpoint = args.checkpoint;
  if (checkpoint.empty()) {
    if (args.model_dir.empty())
      throw UsageError("evaluate: pass --model-dir or --checkpoint");
    checkpoint = (fs::path(args.model_dir) / "checkpoint.json").string();
  }

  PreparedCorpus prepared = load_prepared(args.prepared_dir);
  const std::vector<std::string>& ids = split_ids(prepared, args.split);
  if (ids.empty()) throw DataError("evaluate: split '" + args.split + "' is empty");

  models::ModelParams params = models::load_checkpoint(checkpoint);
  CorpusFiles files = load_corpus_files(prepared, params.config.variant);

  if (files.embeddings.vocab_hash() != params.word_vocab_hash)
    throw DataError("evaluate: checkpoint was trained against a different embedding vocabulary "
                    "(hash mismatch); re-train or point --prepared at the original corpus");

  textpipe::AuxVocabs vocabs;
  if (params.config.variant != models::Variant::word_seq) {
    const fs::path model_dir =
        args.model_dir.empty() ? fs::path(checkpoint).parent_path() : fs::path(args.model_dir);
    vocabs.pos = textpipe::TagVocab::load_json((model_dir / "pos_vocab.json").string());
    vocabs.dep = textpipe::TagVocab::load_json((model_dir / "dep_vocab.json").string());
    if (vocabs.pos.hash() != params.pos_vocab_hash || vocabs.dep.hash() != params.dep_vocab_hash)
      throw DataError("evaluate: checkpoint vocabulary hashes do not match '" +
                      model_dir.string() + "'");
  }

  auto talks = assemble_split(prepared, files, ids, vocabs, params.config.variant);

  std::vector<evaluation::TalkPrediction> preds;
  std::vector<evaluation::TalkTruth> truth;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto probs = models::predict_probs(params, talks[i].input);
    evaluation::TalkPrediction p;
    evaluation::TalkTruth t;
    p.talk_id = t.talk_id = ids[i];
    for (std::size_t c = 0; c < corpus::kNumCategories; ++c) {
      p.scores[c] = probs[c];
      p.predicted[c] = probs[c] >= 0.5 ? 1 : 0;
      t.labels[c] = static_cast<int>(talks[i].labels[c]);
    }
    preds.push_back(p);
    truth.push_back(t);
  }
  write_reports(args.out_dir, preds, truth, models::variant_name(params.config.variant),
                args.split, "sigmoid>=0.5");
}

// --- baseline ---

namespace {

baselines::FeatureVector talk_features(const corpus::TalkRecord& record,
                                       const std::string& features, const fs::path& data,
                                       const baselines::LexiconSpec* lexicon,
                                       bool use_annotations) {
  std::vector<baselines::FeatureVector> parts;
  if (features == "lexicon" || features == "all") {
    std::vector<std::string> tokens;
    for (const auto& s : record.sentences)
      for (auto& tok : textpipe::tokenize(s)) tokens.push_back(tok);
    parts.push_back(baselines::lexicon_features(tokens, *lexicon));
  }
  if (features == "prosody" || features == "all") {
    auto frames = read_prosody_series((data / "prosody" / (record.talk_id + ".csv")).string());
    std::vector<std::vector<double>> channels(8);
    for (const auto& sent : frames)
      for (const auto& f : sent)
        for (std::size_t ch = 0; ch < 8; ++ch) channels[ch].push_back(f[ch]);
    std::optional<baselines::ProsodyAnnotations> ann;
    if (use_annotations)
      ann = baselines::load_prosody_annotations(
          (data / "annotations" / (record.talk_id + ".csv")).string());
    parts.push_back(baselines::prosody_features(channels, ann));
  }
  if (features == "trajectory" || features == "all") {
    auto scores = baselines::load_trajectory_scores(
        (data / "trajectory" / (record.talk_id + ".csv")).string());
    parts.push_back(baselines::trajectory_features(scores));
  }
  if (parts.empty())
    throw UsageError("unknown feature set '" + features +
                     "' (expected lexicon, prosody, trajectory or all)");
  return parts.size() == 1 ? parts[0] : baselines::concat_features(parts);
}

}  // namespace

void run_baseline(const BaselineArgs& args) {
  if (args.prepared_dir.empty() || args.out_dir.empty())
    throw UsageError("baseline: --prepared and --out-dir are required");
  baselines::LinearKind kind = baselines::parse_kind(args.kind);
  if (args.features != "lexicon" && args.features != "prosody" &&
      args.features != "trajectory" && args.features != "all")
    throw UsageError("unknown feature set '" + args.features +
                     "' (expected lexicon, prosody, trajectory or all)");
  if (args.C <= 0) throw UsageError("baseline: --C must be positive");

  PreparedCorpus prepared = load_prepared(args.prepared_dir);
  const fs::path data(prepared.data_dir);

  baselines::LexiconSpec lexicon;
  bool need_lexicon = args.features == "lexicon" || args.features == "all";
  if (need_lexicon) {
    std::string path = args.lexicon_path.empty() ? (data / "lexicon.txt").string()
                                                 : args.lexicon_path;
    lexicon = baselines::load_lexicon(path);
  }

  // fit rows: train + dev (the convex solvers need no early-stopping split)
  std::vector<std::string> fit_ids = prepared.split.train_ids;
  fit_ids.insert(fit_ids.end(), prepared.split.dev_ids.begin(), prepared.split.dev_ids.end());
  const std::vector<std::string>& test_ids = prepared.split.test_ids;
  if (fit_ids.empty() || test_ids.empty())
    throw DataError("baseline: split has an empty train or test side");

  bool use_annotations = true;
  if (args.features == "prosody" || args.features == "all") {
    for (const auto& talk : prepared.talks)
      if (!fs::exists(data / "annotations" / (talk.talk_id + ".csv"))) {
        std::cerr << "warning: talk '" << talk.talk_id
                  << "' lacks prosody annotations; dropping the 5 annotation features for every "
                     "talk\n";
        use_annotations = false;
        break;
      }
  }

  auto featurize = [&](const std::vector<std::string>& ids) {
    std::vector<baselines::FeatureVector> rows;
    for (const std::string& id : ids)
      rows.push_back(talk_features(prepared.talks[prepared.index.at(id)], args.features, data,
                                   need_lexicon ? &lexicon : nullptr, use_annotations));
    return rows;
  };
  auto fit_rows = featurize(fit_ids);
  auto test_rows = featurize(test_ids);

  std::vector<std::array<double, corpus::kNumCategories>> fit_labels;
  for (const std::string& id : fit_ids) fit_labels.push_back(prepared.labels[prepared.index.at(id)]);

  baselines::FitOptions opts;
  opts.C = args.C;
  opts.max_iters = args.max_iters;
  baselines::OvrBaseline ovr = baselines::fit_one_vs_rest(fit_rows, fit_labels, kind, opts);

  std::vector<evaluation::TalkPrediction> preds;
  std::vector<evaluation::TalkTruth> truth;
  for (std::size_t i = 0; i < test_ids.size(); ++i) {
    auto scores = baselines::decision_scores(ovr, test_rows[i]);
    evaluation::TalkPrediction p;
    evaluation::TalkTruth t;
    p.talk_id = t.talk_id = test_ids[i];
    for (std::size_t c = 0; c < corpus::kNumCategories; ++c) {
      p.scores[c] = scores[c];
      p.predicted[c] = scores[c] >= 0 ? 1 : 0;
      t.labels[c] = static_cast<int>(prepared.labels[prepared.index.at(test_ids[i])][c]);
    }
    preds.push_back(p);
    truth.push_back(t);
  }

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  baselines::write_feature_matrix((out / "features_train.csv").string(), fit_ids, fit_rows);
  baselines::write_feature_matrix((out / "features_test.csv").string(), test_ids, test_rows);

  json models = json::array();
  for (std::size_t c = 0; c < corpus::kNumCategories; ++c) {
    const auto& m = ovr.models[c];
    std::size_t nonzeros = 0;
    for (double w : m.w) nonzeros += w != 0.0;
    json jm;
    jm["category"] = corpus::categories()[c];
    jm["converged"] = m.converged;
    jm["objective"] = m.objective;
    jm["iterations"] = m.iterations;
    jm["nonzero_weights"] = nonzeros;
    jm["bias"] = m.b;
    models.push_back(jm);
  }
  json summary;
  summary["kind"] = baselines::kind_name(kind);
  summary["features"] = args.features;
  summary["C"] = args.C;
  summary["standardized_features"] = ovr.standardizer.schema.size();
  summary["models"] = models;
  open_out(out / "models.json") << summary.dump(2) << "\n";

  write_reports(out, preds, truth, baselines::kind_name(kind) + "+" + args.features, "test",
                "score>=0");
}

// --- gradcheck ---

void run_gradcheck(const GradcheckArgs& args) {
  auto results = gradsuite::primitive_checks(args.seed);
  if (args.full) {
    auto more = gradsuite::model_checks(args.seed);
    results.insert(results.end(), more.begin(), more.end());
  }
  std::vector<std::string> failures;
  for (const auto& r : results) {
    std::cout << (r.pass ? "ok   " : "FAIL ") << r.name << "  max rel err "
              << format_double(r.max_rel_error) << " (tol " << format_double(r.tolerance)
              << ")\n";
    if (!r.pass) failures.push_back(r.name);
  }
  std::cout << "gradcheck: " << results.size() - failures.size() << "/" << results.size()
            << " checks passed\n";
  if (!failures.empty()) {
    std::string joined;
    for (const auto& name : failures) joined += (joined.empty() ? "" : ", ") + name;
    throw NumericError("gradient check failed: " + joined);
  }
}

// --- CLI ---

namespace {

synth::PlantedRule parse_lexical_rule(const std::string& text) {
  auto parts = split_on(text, ':');
  if (parts.size() != 3)
    throw UsageError("--plant expects CATEGORY:token:strength, got '" + text + "'");
  synth::PlantedRule rule;
  rule.category = parts[0];
  rule.trigger = parts[1];
  rule.strength = parse_double(parts[2], "--plant strength");
  return rule;
}

synth::PlantedRule parse_prosody_rule(const std::string& text) {
  auto parts = split_on(text, ':');
  if (parts.size() != 3)
    throw UsageError("--plant-prosody expects CATEGORY:channel:strength, got '" + text + "'");
  synth::PlantedRule rule;
  rule.category = parts[0];
  rule.prosody_channel = -1;
  for (std::size_t ch = 0; ch < baselines::kProsodyChannelNames.size(); ++ch)
    if (parts[1] == baselines::kProsodyChannelNames[ch]) rule.prosody_channel = static_cast<int>(ch);
  if (rule.prosody_channel < 0)
    throw UsageError("--plant-prosody: unknown channel '" + parts[1] + "'");
  rule.strength = parse_double(parts[2], "--plant-prosody strength");
  return rule;
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"talk-rating models: synthetic corpora, training, baselines, evaluation"};
  app.require_subcommand(1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth::SynthSpec spec;
  std::string synth_out, tree_shape = "chain";
  std::vector<std::string> plants, prosody_plants;
  synth_cmd->add_option("--out-dir", synth_out, "output directory")->required();
  synth_cmd->add_option("--talks", spec.n_talks, "number of talks");
  synth_cmd->add_option("--vocab", spec.vocab_size, "filler vocabulary size");
  synth_cmd->add_option("--min-sentences", spec.min_sentences);
  synth_cmd->add_option("--max-sentences", spec.max_sentences);
  synth_cmd->add_option("--min-tokens", spec.min_tokens);
  synth_cmd->add_option("--max-tokens", spec.max_tokens);
  synth_cmd->add_option("--tree-shape", tree_shape, "chain|random");
  synth_cmd->add_option("--seed", spec.seed);
  synth_cmd->add_option("--plant", plants, "lexical rule CATEGORY:token:strength");
  synth_cmd->add_option("--plant-prosody", prosody_plants,
                        "prosodic rule CATEGORY:channel:strength");

  // prepare
  auto* prepare_cmd = app.add_subcommand("prepare", "filter, scale, binarize and split a corpus");
  PrepareArgs prepare_args;
  prepare_cmd->add_option("--data-dir", prepare_args.data_dir, "corpus directory")->required();
  prepare_cmd->add_option("--out-dir", prepare_args.out_dir)->required();
  prepare_cmd->add_option("--min-words", prepare_args.min_words);
  prepare_cmd->add_option("--crawl-date", prepare_args.crawl_date, "YYYY-MM-DD");
  prepare_cmd->add_option("--test-count", prepare_args.test_count);
  prepare_cmd->add_option("--dev-fraction", prepare_args.dev_fraction);
  prepare_cmd->add_option("--seed", prepare_args.seed);

  // train
  auto* train_cmd = app.add_subcommand("train", "train one model variant");
  TrainArgs train_args;
  std::string variant, optimizer;
  double lr = 0, weight_drop = 0;
  std::size_t batch = 0, epochs = 0, patience = 0;
  std::uint64_t seed = 0;
  train_cmd->add_option("--prepared", train_args.prepared_dir, "prepared directory")->required();
  train_cmd->add_option("--out-dir", train_args.out_dir)->required();
  train_cmd->add_option("--config", train_args.config_path, "JSON training config");
  auto* ov = train_cmd->add_option("--variant", variant, "word-seq|dep-tree|dep-tree+prosody");
  auto* oo = train_cmd->add_option("--optimizer", optimizer, "adam|adagrad");
  auto* ol = train_cmd->add_option("--learning-rate", lr);
  auto* ob = train_cmd->add_option("--batch-size", batch);
  auto* oe = train_cmd->add_option("--epochs", epochs);
  auto* ow = train_cmd->add_option("--weight-drop", weight_drop);
  auto* op = train_cmd->add_option("--patience", patience);
  auto* os = train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--hidden", train_args.hidden);
  train_cmd->add_option("--pos-dim", train_args.pos_dim);
  train_cmd->add_option("--dep-dim", train_args.dep_dim);
  train_cmd->add_option("--fc-hidden", train_args.fc_hidden);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a split");
  EvaluateArgs eval_args;
  eval_cmd->add_option("--prepared", eval_args.prepared_dir)->required();
  eval_cmd->add_option("--model-dir", eval_args.model_dir);
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint);
  eval_cmd->add_option("--split", eval_args.split, "train|dev|test");
  eval_cmd->add_option("--out-dir", eval_args.out_dir)->required();

  // baseline
  auto* base_cmd = app.add_subcommand("baseline", "fit one-vs-rest linear baselines");
  BaselineArgs base_args;
  base_cmd->add_option("--prepared", base_args.prepared_dir)->required();
  base_cmd->add_option("--out-dir", base_args.out_dir)->required();
  base_cmd->add_option("--kind", base_args.kind, "svm|lasso|ridge");
  base_cmd->add_option("--features", base_args.features, "lexicon|prosody|trajectory|all");
  base_cmd->add_option("--lexicon", base_args.lexicon_path);
  base_cmd->add_option("--C", base_args.C);
  base_cmd->add_option("--max-iters", base_args.max_iters);

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  GradcheckArgs grad_args;
  grad_cmd->add_flag("--full", grad_args.full, "include the three end-to-end model checks");
  grad_cmd->add_option("--seed", grad_args.seed);

  // report
  auto* report_cmd = app.add_subcommand("report", "render or compare metric reports");
  std::vector<std::string> compare_files;
  std::string show_file;
  report_cmd->add_option("--compare", compare_files, "two report.csv files")->expected(2);
  report_cmd->add_option("file", show_file, "single report.csv to render");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; every parse failure is a usage error (1)
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*synth_cmd) {
    for (const auto& p : plants) spec.rules.push_back(parse_lexical_rule(p));
    for (const auto& p : prosody_plants) spec.rules.push_back(parse_prosody_rule(p));
    spec.tree_shape = synth::parse_tree_shape(tree_shape);
    synth::SynthSummary summary = synth::generate(spec, synth_out);
    std::cout << "synth: wrote " << summary.talk_ids.size() << " talks ("
              << summary.rule_categories.size() << " planted rules) to " << synth_out << "\n";
  } else if (*prepare_cmd) {
    run_prepare(prepare_args);
  } else if (*train_cmd) {
    if (ov->count()) train_args.variant = variant;
    if (oo->count()) train_args.optimizer = optimizer;
    if (ol->count()) train_args.learning_rate = lr;
    if (ob->count()) train_args.batch_size = batch;
    if (oe->count()) train_args.max_epochs = epochs;
    if (ow->count()) train_args.weight_drop_p = weight_drop;
    if (op->count()) train_args.patience = patience;
    if (os->count()) train_args.seed = seed;
    run_train(train_args);
  } else if (*eval_cmd) {
    run_evaluate(eval_args);
  } else if (*base_cmd) {
    run_baseline(base_args);
  } else if (*grad_cmd) {
    run_gradcheck(grad_args);
  } else if (*report_cmd) {
    if (compare_files.size() == 2) {
      auto a = evaluation::read_report_csv(compare_files[0]);
      auto b = evaluation::read_report_csv(compare_files[1]);
      std::cout << evaluation::render_comparison(a, b);
    } else if (!show_file.empty()) {
      auto r = evaluation::read_report_csv(show_file);
      std::cout << evaluation::render_report_txt(r);
    } else {
      throw UsageError("report: pass --compare a.csv b.csv or a single report file");
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tedrate::commands
