#ifndef TEDRATE_TRAINING_HPP
#define TEDRATE_TRAINING_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tedrate/common.hpp"
#include "tedrate/corpus.hpp"
#include "tedrate/models.hpp"

namespace tedrate::training {

using autodiff::Tensor;

struct TrainConfig {
  std::string optimizer = "adagrad";  // "adam" | "adagrad"
  double learning_rate = 0.01;
  std::size_t batch_size = 30;
  std::size_t max_epochs = 50;
  double weight_drop_p = 0.2;
  std::uint64_t seed = 1;
  models::Variant variant = models::Variant::word_seq;
  std::size_t patience = 10;
  // Weight-drop always masks lstm.V_*; this extends it to tree.V_*. The
  // regularizer was described for sequence LSTMs; applying it to the
  // tree cell's recurrent matrices is the natural lift, kept switchable.
  bool drop_tree_recurrent = true;

  void validate() const;  // throws UsageError
};

// Reads a JSON config file; keys present override defaults, unknown keys
// are rejected. The CLI layers its flags on top of the result.
TrainConfig load_train_config(const std::string& path);
void save_train_config(const std::string& path, const TrainConfig& config);

// Multi-label BCE on plain probabilities, mirroring the graph op: r clamped
// to [1e-7, 1-1e-7], labels must be exactly 0 or 1.
double bce_value(const std::array<double, corpus::kNumCategories>& probs,
                 const std::array<double, corpus::kNumCategories>& labels);

// --- optimizers ---
// Per-tensor updates plus whole-parameter-list wrappers. State tensors are
// lazily sized to match on first use.

struct OptState {
  std::vector<Tensor> m;  // Adam first moment / Adagrad G
  std::vector<Tensor> v;  // Adam second moment
  std::size_t step = 0;   // completed steps (Adam bias correction uses step+1)
};

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 std::size_t step_index, double lr, double beta1, double beta2,
                 double eps);
void adagrad_update(Tensor& param, const Tensor& grad, Tensor& accum, double lr,
                    double eps);

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               OptState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);
void adagrad_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                  OptState& state, double lr, double eps = 1e-10);

// --- weight-drop ---

// Inverted-dropout multiplier mask: each element is 0 with probability p,
// else 1/(1-p). p=0 gives exact ones; p=1 gives exact zeros.
Tensor drop_mask(const std::vector<std::size_t>& shape, double p, Rng& rng);

// One mask per hidden-to-hidden matrix: every "lstm.V_*" tensor, plus
// "tree.V_*" when include_tree. Ready to feed bind_params.
std::vector<std::pair<std::string, Tensor>> recurrent_drop_masks(
    const models::ModelParams& params, double p, Rng& rng, bool include_tree);

// --- training loop ---

struct LabeledTalk {
  models::TalkInput input;
  std::array<double, corpus::kNumCategories> labels{};  // binary
};

// Mean BCE over a talk set in evaluation mode (no weight-drop).
double dataset_loss(const models::ModelParams& params,
                    const std::vector<LabeledTalk>& talks);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  bool saved = false;
};

struct TrainResult {
  models::ModelParams best_params;
  double best_dev_loss = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> curve;
};

// Mini-batched training from `init`. Per epoch: seeded shuffle, mean-BCE
// batch gradients with fresh weight-drop masks per batch, then a full
// unmasked dev pass; the best dev loss is checkpointed in memory. Stops at
// max_epochs or after dev loss fails to improve `patience` consecutive
// epochs (patience=0: the first failure stops).
TrainResult train(const models::ModelParams& init,
                  const std::vector<LabeledTalk>& train_set,
                  const std::vector<LabeledTalk>& dev_set,
                  const TrainConfig& config);

void write_losses_csv(const std::string& path,
                      const std::vector<EpochRecord>& curve);

}  // namespace tedrate::training

#endif  // TEDRATE_TRAINING_HPP
