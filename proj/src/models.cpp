#include "tedrate/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace tedrate::models {

using json = nlohmann::ordered_json;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::word_seq: return "word-seq";
    case Variant::dep_tree: return "dep-tree";
    case Variant::dep_tree_prosody: return "dep-tree+prosody";
  }
  throw Error("variant_name: unknown variant");
}

Variant parse_variant(const std::string& name) {
  if (name == "word-seq") return Variant::word_seq;
  if (name == "dep-tree") return Variant::dep_tree;
  if (name == "dep-tree+prosody") return Variant::dep_tree_prosody;
  throw UsageError("unknown variant '" + name +
                   "' (expected word-seq, dep-tree or dep-tree+prosody)");
}

Tensor& ModelParams::at(const std::string& name) {
  for (auto& [n, t] : tensors)
    if (n == name) return t;
  throw Error("ModelParams: no tensor named '" + name + "'");
}

const Tensor& ModelParams::at(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw Error("ModelParams: no tensor named '" + name + "'");
}

bool ModelParams::has(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

void ModelParams::add(std::string name, Tensor t) {
  if (has(name)) throw Error("ModelParams: duplicate tensor '" + name + "'");
  tensors.emplace_back(std::move(name), std::move(t));
}

namespace {

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

void push_cell(std::vector<TensorSpec>& specs, const std::string& prefix, std::size_t hidden,
               std::size_t input_dim) {
  for (const char* gate : {"i", "f", "u", "o"}) {
    specs.push_back({prefix + ".U_" + gate, {hidden, input_dim}});
    specs.push_back({prefix + ".V_" + gate, {hidden, hidden}});
    specs.push_back({prefix + ".b_" + gate, {hidden}});
  }
}

// The full tensor layout for a variant; init and checkpoint validation both
// derive from this single definition.
std::vector<TensorSpec> expected_tensors(const ModelConfig& c) {
  const std::size_t n = corpus::kNumCategories;
  std::vector<TensorSpec> specs;
  switch (c.variant) {
    case Variant::word_seq:
      push_cell(specs, "lstm", c.hidden, c.word_dim);
      specs.push_back({"head.W", {n, c.hidden}});
      specs.push_back({"head.b", {n}});
      break;
    case Variant::dep_tree:
      push_cell(specs, "tree", c.hidden, c.tree_input_dim());
      specs.push_back({"embed.pos", {c.pos_vocab, c.pos_dim}});
      specs.push_back({"embed.dep", {c.dep_vocab, c.dep_dim}});
      specs.push_back({"head.W", {n, c.hidden}});
      specs.push_back({"head.b", {n}});
      break;
    case Variant::dep_tree_prosody:
      push_cell(specs, "tree", c.hidden, c.tree_input_dim());
      specs.push_back({"embed.pos", {c.pos_vocab, c.pos_dim}});
      specs.push_back({"embed.dep", {c.dep_vocab, c.dep_dim}});
      specs.push_back({"cnn.W1", {16, kProsodyChannels * kCnnKernel}});
      specs.push_back({"cnn.b1", {16}});
      specs.push_back({"cnn.W2", {16, 16 * kCnnKernel}});
      specs.push_back({"cnn.b2", {16}});
      specs.push_back({"cnn.W3", {32, 16 * kCnnKernel}});
      specs.push_back({"cnn.b3", {32}});
      specs.push_back({"cnn.W4", {kCnnOut, 32 * kCnnKernel}});
      specs.push_back({"cnn.b4", {kCnnOut}});
      specs.push_back({"fc1.W", {c.fc_hidden, c.hidden + kCnnOut}});
      specs.push_back({"fc1.b", {c.fc_hidden}});
      specs.push_back({"fc2.W", {n, c.fc_hidden}});
      specs.push_back({"fc2.b", {n}});
      break;
  }
  return specs;
}

void validate_config(const ModelConfig& c) {
  if (c.hidden == 0) throw UsageError("model config: hidden size must be positive");
  if (c.word_dim == 0) throw UsageError("model config: word embedding dimension must be positive");
  if (c.variant != Variant::word_seq) {
    if (c.pos_dim == 0 || c.dep_dim == 0)
      throw UsageError("model config: POS/dep embedding dimensions must be positive");
    if (c.pos_vocab == 0 || c.dep_vocab == 0)
      throw UsageError("model config: POS/dep vocabulary sizes must be positive");
  }
  if (c.variant == Variant::dep_tree_prosody && c.fc_hidden == 0)
    throw UsageError("model config: fusion hidden width must be positive");
}

Tensor uniform_tensor(Rng& rng, const std::vector<std::size_t>& shape) {
  Tensor t(shape, 0.0);
  std::size_t fan_in = shape.size() == 2 ? shape[1] : t.size();
  double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data) v = rng.uniform(-a, a);
  return t;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  validate_config(config);
  ModelParams params;
  params.config = config;
  params.seed = seed;
  Rng rng(seed);
  for (const TensorSpec& spec : expected_tensors(config)) {
    Tensor t = uniform_tensor(rng, spec.shape);
    // forget-gate bias starts at 1 so early gradients flow through the cell
    if (ends_with(spec.name, ".b_f")) std::fill(t.data.begin(), t.data.end(), 1.0);
    params.add(spec.name, std::move(t));
  }
  return params;
}

Var ParamVars::at(const std::string& name) const {
  for (const auto& [n, v] : vars)
    if (n == name) return v;
  throw Error("ParamVars: no tensor named '" + name + "'");
}

bool ParamVars::has(const std::string& name) const {
  for (const auto& [n, v] : vars)
    if (n == name) return true;
  return false;
}

ParamVars bind_params(Graph& g, const ModelParams& params, bool requires_grad,
                      const std::vector<std::pair<std::string, Tensor>>* masks) {
  ParamVars pv;
  pv.vars.reserve(params.tensors.size());
  pv.leaves.reserve(params.tensors.size());
  for (const auto& [name, tensor] : params.tensors) {
    Var v = g.leaf(tensor, requires_grad);
    pv.leaves.push_back(v);
    if (masks != nullptr) {
      for (const auto& [mask_name, mask] : *masks) {
        if (mask_name == name) {
          v = autodiff::dropout_mask(v, mask);
          break;
        }
      }
    }
    pv.vars.emplace_back(name, v);
  }
  return pv;
}

namespace {

Var gate_affine(Var U, Var x, Var V, Var h, Var b) {
  return autodiff::add(autodiff::add(autodiff::matmul(U, x), autodiff::matmul(V, h)), b);
}

}  // namespace

Var lstm_sentence(Graph& g, const ParamVars& pv, const std::vector<Tensor>& word_vecs) {
  if (word_vecs.empty()) throw DataError("lstm_sentence: empty sentence");
  Var U_i = pv.at("lstm.U_i"), V_i = pv.at("lstm.V_i"), b_i = pv.at("lstm.b_i");
  Var U_f = pv.at("lstm.U_f"), V_f = pv.at("lstm.V_f"), b_f = pv.at("lstm.b_f");
  Var U_u = pv.at("lstm.U_u"), V_u = pv.at("lstm.V_u"), b_u = pv.at("lstm.b_u");
  Var U_o = pv.at("lstm.U_o"), V_o = pv.at("lstm.V_o"), b_o = pv.at("lstm.b_o");
  std::size_t hidden = b_i.value().size();
  Var h = g.constant(Tensor::zeros({hidden}));
  Var c = g.constant(Tensor::zeros({hidden}));
  for (const Tensor& w : word_vecs) {
    Var x = g.constant(w);
    Var i = autodiff::sigmoid(gate_affine(U_i, x, V_i, h, b_i));
    Var f = autodiff::sigmoid(gate_affine(U_f, x, V_f, h, b_f));
    Var u = autodiff::tanh_op(gate_affine(U_u, x, V_u, h, b_u));
    Var o = autodiff::sigmoid(gate_affine(U_o, x, V_o, h, b_o));
    c = autodiff::add(autodiff::mul(f, c), autodiff::mul(i, u));
    h = autodiff::mul(o, autodiff::tanh_op(c));
  }
  return h;
}

Var treelstm_sentence(Graph& g, const ParamVars& pv, const textpipe::DepTree& tree,
                      const std::vector<Var>& node_inputs) {
  if (tree.nodes.empty()) throw DataError("treelstm_sentence: empty tree");
  if (node_inputs.size() != tree.nodes.size())
    throw Error("treelstm_sentence: " + std::to_string(node_inputs.size()) + " inputs for " +
                std::to_string(tree.nodes.size()) + " nodes");
  Var U_i = pv.at("tree.U_i"), V_i = pv.at("tree.V_i"), b_i = pv.at("tree.b_i");
  Var U_f = pv.at("tree.U_f"), V_f = pv.at("tree.V_f"), b_f = pv.at("tree.b_f");
  Var U_u = pv.at("tree.U_u"), V_u = pv.at("tree.V_u"), b_u = pv.at("tree.b_u");
  Var U_o = pv.at("tree.U_o"), V_o = pv.at("tree.V_o"), b_o = pv.at("tree.b_o");
  std::size_t hidden = b_i.value().size();
  Var zero = g.constant(Tensor::zeros({hidden}));

  // children before parents: reversed pre-order
  std::vector<int> order;
  order.reserve(tree.nodes.size());
  std::vector<int> stack{tree.root};
  while (!stack.empty()) {
    int t = stack.back();
    stack.pop_back();
    order.push_back(t);
    for (int k : tree.children[t]) stack.push_back(k);
  }
  std::reverse(order.begin(), order.end());

  std::vector<Var> h(tree.nodes.size());
  std::vector<Var> c(tree.nodes.size());
  for (int t : order) {
    const std::vector<int>& kids = tree.children[t];
    Var x = node_inputs[static_cast<std::size_t>(t)];
    Var h_tilde = zero;
    for (std::size_t j = 0; j < kids.size(); ++j)
      h_tilde = j == 0 ? h[kids[j]] : autodiff::add(h_tilde, h[kids[j]]);
    Var i = autodiff::sigmoid(gate_affine(U_i, x, V_i, h_tilde, b_i));
    Var u = autodiff::tanh_op(gate_affine(U_u, x, V_u, h_tilde, b_u));
    Var o = autodiff::sigmoid(gate_affine(U_o, x, V_o, h_tilde, b_o));
    Var cell = autodiff::mul(i, u);
    for (int k : kids) {
      Var f = autodiff::sigmoid(gate_affine(U_f, x, V_f, h[k], b_f));
      cell = autodiff::add(cell, autodiff::mul(f, c[k]));
    }
    c[t] = cell;
    h[t] = autodiff::mul(o, autodiff::tanh_op(cell));
  }
  return h[tree.root];
}

std::vector<Var> tree_node_inputs(Graph& g, const ParamVars& pv, const SentenceInput& sent) {
  std::size_t n = sent.tree.nodes.size();
  if (sent.node_word_vecs.size() != n || sent.pos_ids.size() != n || sent.dep_ids.size() != n)
    throw Error("tree_node_inputs: per-node input arrays do not match the tree size");
  Var pos_table = pv.at("embed.pos");
  Var dep_table = pv.at("embed.dep");
  std::vector<Var> inputs;
  inputs.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    Var w = g.constant(sent.node_word_vecs[t]);
    Var p = autodiff::embedding_row(pos_table, static_cast<std::size_t>(sent.pos_ids[t]));
    Var d = autodiff::embedding_row(dep_table, static_cast<std::size_t>(sent.dep_ids[t]));
    inputs.push_back(autodiff::concat({w, p, d}));
  }
  return inputs;
}

Var prosody_cnn(Graph& g, const ParamVars& pv, const Tensor& signal) {
  if (signal.rank() != 2 || signal.rows() != kProsodyChannels)
    throw DataError("prosody_cnn: expected an 8-channel signal, got shape " +
                    signal.shape_string());
  Tensor padded = signal;
  if (signal.cols() < kMinSignalLength) {
    padded = Tensor::zeros({kProsodyChannels, kMinSignalLength});
    for (std::size_t r = 0; r < kProsodyChannels; ++r)
      for (std::size_t col = 0; col < signal.cols(); ++col) padded.at2(r, col) = signal.at2(r, col);
  }
  Var x = g.constant(padded);
  x = autodiff::relu(autodiff::conv1d(x, pv.at("cnn.W1"), pv.at("cnn.b1"), kProsodyChannels, kCnnKernel));
  x = autodiff::relu(autodiff::conv1d(x, pv.at("cnn.W2"), pv.at("cnn.b2"), 16, kCnnKernel));
  x = autodiff::maxpool1d(x, 2);
  x = autodiff::relu(autodiff::conv1d(x, pv.at("cnn.W3"), pv.at("cnn.b3"), 16, kCnnKernel));
  x = autodiff::maxpool1d(x, 2);
  x = autodiff::relu(autodiff::conv1d(x, pv.at("cnn.W4"), pv.at("cnn.b4"), 32, kCnnKernel));
  x = autodiff::maxpool1d(x, x.value().cols());
  return autodiff::reshape(x, {kCnnOut});
}

Var predict_ratings(Graph& g, const ParamVars& pv, const TalkInput& talk, Variant variant) {
  std::vector<Var> sentence_embeds;
  std::size_t skipped = 0;
  for (const SentenceInput& sent : talk.sentences) {
    switch (variant) {
      case Variant::word_seq: {
        if (sent.word_vecs.empty()) {
          ++skipped;
          continue;
        }
        sentence_embeds.push_back(lstm_sentence(g, pv, sent.word_vecs));
        break;
      }
      case Variant::dep_tree: {
        if (sent.tree.nodes.empty()) {
          ++skipped;
          continue;
        }
        sentence_embeds.push_back(treelstm_sentence(g, pv, sent.tree, tree_node_inputs(g, pv, sent)));
        break;
      }
      case Variant::dep_tree_prosody: {
        if (sent.tree.nodes.empty()) {
          ++skipped;
          continue;
        }
        if (!sent.has_prosody)
          throw DataError("talk '" + talk.talk_id +
                          "': variant dep-tree+prosody requires a prosody signal for every sentence");
        Var h = treelstm_sentence(g, pv, sent.tree, tree_node_inputs(g, pv, sent));
        Var p = prosody_cnn(g, pv, sent.prosody);
        sentence_embeds.push_back(autodiff::concat({h, p}));
        break;
      }
    }
  }
  if (skipped > 0)
    std::fprintf(stderr, "warning: talk '%s': skipped %zu empty sentence(s)\n",
                 talk.talk_id.c_str(), skipped);
  if (sentence_embeds.empty())
    throw DataError("talk '" + talk.talk_id + "' has no usable sentences for variant " +
                    variant_name(variant));

  Var mean = sentence_embeds[0];
  for (std::size_t i = 1; i < sentence_embeds.size(); ++i)
    mean = autodiff::add(mean, sentence_embeds[i]);
  mean = autodiff::scale(mean, 1.0 / static_cast<double>(sentence_embeds.size()));

  if (variant == Variant::dep_tree_prosody) {
    Var hidden = autodiff::relu(
        autodiff::add(autodiff::matmul(pv.at("fc1.W"), mean), pv.at("fc1.b")));
    return autodiff::sigmoid(
        autodiff::add(autodiff::matmul(pv.at("fc2.W"), hidden), pv.at("fc2.b")));
  }
  return autodiff::sigmoid(autodiff::add(autodiff::matmul(pv.at("head.W"), mean), pv.at("head.b")));
}

std::array<double, corpus::kNumCategories> predict_probs(const ModelParams& params,
                                                         const TalkInput& talk) {
  Graph g;
  ParamVars pv = bind_params(g, params, /*requires_grad=*/false);
  Var r = predict_ratings(g, pv, talk, params.config.variant);
  std::array<double, corpus::kNumCategories> out{};
  for (std::size_t i = 0; i < corpus::kNumCategories; ++i) out[i] = r.value().at(i);
  return out;
}

namespace {

std::string hash_string(std::uint64_t h) { return std::to_string(h); }

std::uint64_t parse_hash(const json& j, const char* key) {
  return static_cast<std::uint64_t>(std::stoull(j.at(key).get<std::string>()));
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params) {
  json j;
  j["format"] = "tedrate-checkpoint";
  j["version"] = 1;
  j["variant"] = variant_name(params.config.variant);
  j["config"] = {{"hidden", params.config.hidden},
                 {"word_dim", params.config.word_dim},
                 {"pos_dim", params.config.pos_dim},
                 {"dep_dim", params.config.dep_dim},
                 {"fc_hidden", params.config.fc_hidden},
                 {"pos_vocab", params.config.pos_vocab},
                 {"dep_vocab", params.config.dep_vocab}};
  j["seed"] = hash_string(params.seed);
  j["vocab_hashes"] = {{"word", hash_string(params.word_vocab_hash)},
                       {"pos", hash_string(params.pos_vocab_hash)},
                       {"dep", hash_string(params.dep_vocab_hash)}};
  json tensors = json::array();
  for (const auto& [name, t] : params.tensors) {
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape;
    entry["data"] = t.data;
    tensors.push_back(std::move(entry));
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint file: " + path);
  out << j.dump(1) << "\n";
  if (!out) throw DataError("failed writing checkpoint file: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path + ": invalid JSON: " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "tedrate-checkpoint")
      throw DataError("checkpoint " + path + ": unrecognized format tag");
    if (j.at("version").get<int>() != 1)
      throw DataError("checkpoint " + path + ": unsupported version");
    ModelParams params;
    params.config.variant = parse_variant(j.at("variant").get<std::string>());
    const json& c = j.at("config");
    params.config.hidden = c.at("hidden").get<std::size_t>();
    params.config.word_dim = c.at("word_dim").get<std::size_t>();
    params.config.pos_dim = c.at("pos_dim").get<std::size_t>();
    params.config.dep_dim = c.at("dep_dim").get<std::size_t>();
    params.config.fc_hidden = c.at("fc_hidden").get<std::size_t>();
    params.config.pos_vocab = c.at("pos_vocab").get<std::size_t>();
    params.config.dep_vocab = c.at("dep_vocab").get<std::size_t>();
    params.seed = parse_hash(j, "seed");
    const json& hashes = j.at("vocab_hashes");
    params.word_vocab_hash = parse_hash(hashes, "word");
    params.pos_vocab_hash = parse_hash(hashes, "pos");
    params.dep_vocab_hash = parse_hash(hashes, "dep");
    for (const json& entry : j.at("tensors")) {
      Tensor t;
      t.shape = entry.at("shape").get<std::vector<std::size_t>>();
      t.data = entry.at("data").get<std::vector<double>>();
      std::size_t expect = 1;
      for (std::size_t d : t.shape) expect *= d;
      if (t.shape.empty()) expect = t.data.size() == 1 ? 1 : 0;
      if (expect != t.data.size())
        throw DataError("checkpoint " + path + ": tensor '" +
                        entry.at("name").get<std::string>() + "' shape does not match its data");
      if (!t.all_finite())
        throw DataError("checkpoint " + path + ": tensor '" +
                        entry.at("name").get<std::string>() + "' contains non-finite values");
      params.add(entry.at("name").get<std::string>(), std::move(t));
    }
    // the layout must be exactly what the config dictates
    auto specs = expected_tensors(params.config);
    if (specs.size() != params.tensors.size())
      throw DataError("checkpoint " + path + ": expected " + std::to_string(specs.size()) +
                      " tensors, found " + std::to_string(params.tensors.size()));
    for (const TensorSpec& spec : specs) {
      if (!params.has(spec.name))
        throw DataError("checkpoint " + path + ": missing tensor '" + spec.name + "'");
      if (params.at(spec.name).shape != spec.shape)
        throw DataError("checkpoint " + path + ": tensor '" + spec.name +
                        "' has shape " + params.at(spec.name).shape_string());
    }
    return params;
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace tedrate::models
