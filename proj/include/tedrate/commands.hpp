#ifndef TEDRATE_COMMANDS_HPP
#define TEDRATE_COMMANDS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tedrate/corpus.hpp"
#include "tedrate/models.hpp"
#include "tedrate/textpipe.hpp"
#include "tedrate/training.hpp"

namespace tedrate::commands {

// Subcommand bodies. Each throws the usual taxonomy (UsageError/DataError/
// NumericError); run_cli translates those into exit codes 1/2/3.

struct PrepareArgs {
  std::string data_dir;
  std::string out_dir;
  long min_words = 450;
  std::string crawl_date;      // empty: latest crawl date in the corpus
  std::size_t test_count = 0;  // 0: 15% of the kept talks
  double dev_fraction = 0.1;
  std::uint64_t seed = 1;
};
void run_prepare(const PrepareArgs& args);

// A prepared experiment directory: filtered talks, binary labels, split,
// and a pointer back to the raw corpus for companion files.
struct PreparedCorpus {
  std::string data_dir;
  std::vector<corpus::TalkRecord> talks;
  std::map<std::string, std::size_t> index;  // talk id -> position in talks
  std::vector<std::array<double, corpus::kNumCategories>> labels;
  corpus::DatasetSplit split;
};
PreparedCorpus load_prepared(const std::string& prepared_dir);

struct TrainArgs {
  std::string prepared_dir;
  std::string out_dir;
  std::string config_path;  // optional JSON; flags below override its values
  std::optional<std::string> variant;
  std::optional<std::string> optimizer;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> max_epochs;
  std::optional<double> weight_drop_p;
  std::optional<std::size_t> patience;
  std::optional<std::uint64_t> seed;
  std::size_t hidden = 128;
  std::size_t pos_dim = 16;
  std::size_t dep_dim = 16;
  std::size_t fc_hidden = 128;
};
void run_train(const TrainArgs& args);

struct EvaluateArgs {
  std::string prepared_dir;
  std::string model_dir;
  std::string checkpoint;  // default <model_dir>/checkpoint.json
  std::string split = "test";
  std::string out_dir;
};
void run_evaluate(const EvaluateArgs& args);

struct BaselineArgs {
  std::string prepared_dir;
  std::string out_dir;
  std::string kind = "svm";      // svm | lasso | ridge
  std::string features = "all";  // lexicon | prosody | trajectory | all
  std::string lexicon_path;      // default <data_dir>/lexicon.txt
  double C = 1.0;
  std::size_t max_iters = 5000;
};
void run_baseline(const BaselineArgs& args);

struct GradcheckArgs {
  bool full = false;
  std::uint64_t seed = 1;
};
// Prints one line per check; throws NumericError if any fails.
void run_gradcheck(const GradcheckArgs& args);

// --- pipeline plumbing shared by train/evaluate (exposed for tests) ---

// prosody/<id>.csv -> frames[sentence][frame][channel]; sentence ids must
// be contiguous from 0 and every sentence needs at least one frame.
std::vector<std::vector<std::array<double, 8>>> read_prosody_series(const std::string& path);

std::size_t detect_embedding_dim(const std::string& path);

// One talk's model inputs. `forest` may be null for word-seq; `frames` may
// be null unless the variant needs prosody. Z-normalizes prosody per talk
// and pads sentence crops to the talk's longest sentence.
models::TalkInput build_talk_input(const corpus::TalkRecord& record,
                                   const textpipe::TalkTrees* forest,
                                   const std::vector<std::vector<std::array<double, 8>>>* frames,
                                   const textpipe::EmbeddingTable& embeddings,
                                   const textpipe::AuxVocabs& vocabs, models::Variant variant);

// Full command line (argv minus the program name) -> exit code. Never
// throws; errors are printed to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace tedrate::commands

#endif  // TEDRATE_COMMANDS_HPP
