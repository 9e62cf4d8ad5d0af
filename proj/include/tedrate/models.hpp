#ifndef TEDRATE_MODELS_HPP
#define TEDRATE_MODELS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tedrate/autodiff.hpp"
#include "tedrate/common.hpp"
#include "tedrate/corpus.hpp"
#include "tedrate/textpipe.hpp"

namespace tedrate::models {

using autodiff::Graph;
using autodiff::Tensor;
using autodiff::Var;

enum class Variant { word_seq, dep_tree, dep_tree_prosody };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);  // "word-seq" | "dep-tree" | "dep-tree+prosody"

// Prosody CNN topology is fixed by the architecture: 8 input channels,
// three conv blocks (16, 16, 32 filters) with receptive field 3, two
// pool-by-2 stages, a final 64-filter conv and a global max pool.
inline constexpr std::size_t kProsodyChannels = 8;
inline constexpr std::size_t kCnnKernel = 3;
inline constexpr std::size_t kCnnOut = 64;
inline constexpr std::size_t kMinSignalLength = 4;

struct ModelConfig {
  Variant variant = Variant::word_seq;
  std::size_t hidden = 128;     // H
  std::size_t word_dim = 0;     // from the embedding file
  std::size_t pos_dim = 16;     // learned POS-tag embedding width
  std::size_t dep_dim = 16;     // learned dependency-type embedding width
  std::size_t fc_hidden = 128;  // fusion head hidden width
  std::size_t pos_vocab = 0;    // tag vocabulary sizes, UNK included
  std::size_t dep_vocab = 0;

  std::size_t tree_input_dim() const { return word_dim + pos_dim + dep_dim; }
};

// Named-tensor parameter store. Order is fixed at construction so that
// optimizers and serialization walk parameters deterministically.
struct ModelParams {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::uint64_t word_vocab_hash = 0;
  std::uint64_t pos_vocab_hash = 0;
  std::uint64_t dep_vocab_hash = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;
  void add(std::string name, Tensor t);
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor (fan_in =
// columns for matrices, length for vectors); forget-gate biases are set to
// exactly 1.0 afterwards. Deterministic given seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Parameters bound into a graph as leaves, optionally with fixed multiplier
// masks (weight-drop) applied to selected tensors by name. `vars` holds the
// post-mask nodes the forward pass consumes; `leaves` holds the raw leaves,
// aligned with ModelParams order, for reading gradients after backward().
struct ParamVars {
  std::vector<std::pair<std::string, Var>> vars;
  std::vector<Var> leaves;

  Var at(const std::string& name) const;
  bool has(const std::string& name) const;
};

ParamVars bind_params(Graph& g, const ModelParams& params, bool requires_grad,
                      const std::vector<std::pair<std::string, Tensor>>* masks = nullptr);

// One sentence's model inputs, assembled upstream from the transcript,
// parse, embedding table and prosody series.
struct SentenceInput {
  std::vector<Tensor> word_vecs;  // per transcript token (word-seq path)
  textpipe::DepTree tree;         // dep-tree path; may be empty
  std::vector<Tensor> node_word_vecs;
  std::vector<int> pos_ids;
  std::vector<int> dep_ids;
  Tensor prosody;  // (8 x M) z-normalized, cropped + padded; may be empty
  bool has_prosody = false;
};

struct TalkInput {
  std::string talk_id;
  std::vector<SentenceInput> sentences;
};

// h_{s_j} = last hidden state of a standard LSTM over the word vectors,
// with zero initial hidden and cell state.
Var lstm_sentence(Graph& g, const ParamVars& pv, const std::vector<Tensor>& word_vecs);

// Child-sum TreeLSTM over the dependency tree; node_inputs[i] is x_t for
// tree node i. Returns the root's hidden state.
Var treelstm_sentence(Graph& g, const ParamVars& pv, const textpipe::DepTree& tree,
                      const std::vector<Var>& node_inputs);

// Per-node x_t = concat(word vector, POS embedding row, dep embedding row).
std::vector<Var> tree_node_inputs(Graph& g, const ParamVars& pv, const SentenceInput& sent);

// Conv stack over an (8 x M) sentence signal; pads M up to 4 if shorter.
Var prosody_cnn(Graph& g, const ParamVars& pv, const Tensor& signal);

// Talk-level forward pass: mean sentence embedding -> output head.
// Throws DataError when the talk has no usable sentence for the variant or
// lacks prosody under the fusion variant.
Var predict_ratings(Graph& g, const ParamVars& pv, const TalkInput& talk, Variant variant);

// Convenience inference wrapper: fresh graph, no gradients.
std::array<double, corpus::kNumCategories> predict_probs(const ModelParams& params,
                                                         const TalkInput& talk);

// JSON checkpoint with a config header and every named tensor; loading
// validates shapes and finiteness. Vocabulary hashes travel with the file so
// evaluation can refuse a mismatched corpus.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace tedrate::models

#endif  // TEDRATE_MODELS_HPP
