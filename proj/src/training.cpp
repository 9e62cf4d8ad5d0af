#include "tedrate/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace tedrate::training {

using autodiff::Graph;
using autodiff::Var;
using json = nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (optimizer != "adam" && optimizer != "adagrad")
    throw UsageError("train config: optimizer must be 'adam' or 'adagrad', got '" +
                     optimizer + "'");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw UsageError("train config: learning_rate must be positive");
  if (batch_size < 1) throw UsageError("train config: batch_size must be >= 1");
  if (max_epochs < 1) throw UsageError("train config: max_epochs must be >= 1");
  if (!(weight_drop_p >= 0.0 && weight_drop_p <= 1.0))
    throw UsageError("train config: weight_drop_p must lie in [0,1]");
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("train config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("train config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw DataError("train config: '" + path + "' is not a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "optimizer") c.optimizer = value.get<std::string>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
      else if (key == "weight_drop_p") c.weight_drop_p = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "variant") c.variant = models::parse_variant(value.get<std::string>());
      else if (key == "patience") c.patience = value.get<std::size_t>();
      else if (key == "drop_tree_recurrent") c.drop_tree_recurrent = value.get<bool>();
      else throw UsageError("train config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw DataError("train config: bad value type in '" + path + "': " + e.what());
  }
  return c;
}

void save_train_config(const std::string& path, const TrainConfig& config) {
  json j;
  j["optimizer"] = config.optimizer;
  j["learning_rate"] = config.learning_rate;
  j["batch_size"] = config.batch_size;
  j["max_epochs"] = config.max_epochs;
  j["weight_drop_p"] = config.weight_drop_p;
  j["seed"] = config.seed;
  j["variant"] = models::variant_name(config.variant);
  j["patience"] = config.patience;
  j["drop_tree_recurrent"] = config.drop_tree_recurrent;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("train config: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

double bce_value(const std::array<double, corpus::kNumCategories>& probs,
                 const std::array<double, corpus::kNumCategories>& labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < corpus::kNumCategories; ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw DataError("bce: targets must be 0 or 1");
    double r = std::clamp(probs[i], autodiff::kBceClamp, 1.0 - autodiff::kBceClamp);
    loss -= labels[i] * std::log(r) + (1.0 - labels[i]) * std::log(1.0 - r);
  }
  return loss / static_cast<double>(corpus::kNumCategories);
}

namespace {

void check_grad_finite(const Tensor& grad, const char* opt) {
  if (!grad.all_finite())
    throw NumericError(std::string(opt) + ": non-finite gradient");
}

void match_or_init(Tensor& accum, const Tensor& param) {
  if (accum.size() == 0 && accum.rank() == 0) accum = Tensor::zeros(param.shape);
  if (!accum.same_shape(param))
    throw Error("optimizer state shape " + accum.shape_string() +
                " does not match parameter " + param.shape_string());
}

}  // namespace

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 std::size_t step_index, double lr, double beta1, double beta2,
                 double eps) {
  check_grad_finite(grad, "adam");
  if (!grad.same_shape(param))
    throw Error("adam: gradient shape " + grad.shape_string() +
                " does not match parameter " + param.shape_string());
  match_or_init(m, param);
  match_or_init(v, param);
  double t = static_cast<double>(step_index);
  double bc1 = 1.0 - std::pow(beta1, t);
  double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad.data[i];
    m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g;
    v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g * g;
    double mh = m.data[i] / bc1;
    double vh = v.data[i] / bc2;
    param.data[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

void adagrad_update(Tensor& param, const Tensor& grad, Tensor& accum, double lr,
                    double eps) {
  check_grad_finite(grad, "adagrad");
  if (!grad.same_shape(param))
    throw Error("adagrad: gradient shape " + grad.shape_string() +
                " does not match parameter " + param.shape_string());
  match_or_init(accum, param);
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad.data[i];
    accum.data[i] += g * g;
    param.data[i] -= lr * g / std::sqrt(accum.data[i] + eps);
  }
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               OptState& state, double lr, double beta1, double beta2, double eps) {
  if (grads.size() != params.size())
    throw Error("adam: " + std::to_string(grads.size()) + " gradients for " +
                std::to_string(params.size()) + " parameters");
  state.m.resize(params.size());
  state.v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_update(params[i], grads[i], state.m[i], state.v[i], state.step + 1, lr,
                beta1, beta2, eps);
  ++state.step;
}

void adagrad_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                  OptState& state, double lr, double eps) {
  if (grads.size() != params.size())
    throw Error("adagrad: " + std::to_string(grads.size()) + " gradients for " +
                std::to_string(params.size()) + " parameters");
  state.m.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    adagrad_update(params[i], grads[i], state.m[i], lr, eps);
  ++state.step;
}

Tensor drop_mask(const std::vector<std::size_t>& shape, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("weight-drop: p must lie in [0,1]");
  Tensor mask(shape);
  // p=1 never evaluates the 1/(1-p) branch: uniform() < 1 always holds.
  double keep = p < 1.0 ? 1.0 / (1.0 - p) : 0.0;
  for (double& x : mask.data) x = rng.uniform() < p ? 0.0 : keep;
  return mask;
}

std::vector<std::pair<std::string, Tensor>> recurrent_drop_masks(
    const models::ModelParams& params, double p, Rng& rng, bool include_tree) {
  std::vector<std::pair<std::string, Tensor>> masks;
  for (const auto& [name, tensor] : params.tensors) {
    bool lstm_v = name.rfind("lstm.V_", 0) == 0;
    bool tree_v = include_tree && name.rfind("tree.V_", 0) == 0;
    if (lstm_v || tree_v) masks.emplace_back(name, drop_mask(tensor.shape, p, rng));
  }
  return masks;
}

double dataset_loss(const models::ModelParams& params,
                    const std::vector<LabeledTalk>& talks) {
  if (talks.empty()) throw DataError("dataset_loss: empty talk set");
  double total = 0.0;
  for (const LabeledTalk& talk : talks)
    total += bce_value(models::predict_probs(params, talk.input), talk.labels);
  return total / static_cast<double>(talks.size());
}

TrainResult train(const models::ModelParams& init,
                  const std::vector<LabeledTalk>& train_set,
                  const std::vector<LabeledTalk>& dev_set,
                  const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw DataError("train: empty train set");
  if (dev_set.empty()) throw DataError("train: empty dev set");

  models::ModelParams params = init;
  const models::Variant variant = params.config.variant;
  OptState state;
  state.m.resize(params.tensors.size());
  state.v.resize(params.tensors.size());
  Rng shuffle_rng = Rng(config.seed).split("epoch-shuffle");
  Rng drop_rng = Rng(config.seed).split("weight-drop");

  TrainResult result;
  result.best_params = params;
  result.best_dev_loss = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;
  // patience=0 still tolerates nothing, so the threshold floors at one
  // failed epoch.
  const std::size_t stop_after = std::max<std::size_t>(config.patience, 1);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t count = std::min(config.batch_size, order.size() - start);
      std::vector<std::pair<std::string, Tensor>> masks;
      if (config.weight_drop_p > 0.0)
        masks = recurrent_drop_masks(params, config.weight_drop_p, drop_rng,
                                     config.drop_tree_recurrent);
      Graph g;
      models::ParamVars pv =
          models::bind_params(g, params, /*requires_grad=*/true,
                              masks.empty() ? nullptr : &masks);
      Var batch_loss;
      for (std::size_t k = 0; k < count; ++k) {
        const LabeledTalk& talk = train_set[order[start + k]];
        Var probs = models::predict_ratings(g, pv, talk.input, variant);
        std::vector<double> targets(talk.labels.begin(), talk.labels.end());
        Var talk_loss = autodiff::bce(probs, targets);
        batch_loss = k == 0 ? talk_loss : autodiff::add(batch_loss, talk_loss);
      }
      batch_loss = autodiff::scale(batch_loss, 1.0 / static_cast<double>(count));
      g.backward(batch_loss);
      loss_sum += batch_loss.value().scalar_value() * static_cast<double>(count);

      for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        auto& [name, tensor] = params.tensors[i];
        const Tensor& grad = pv.leaves[i].grad();
        if (grad.size() == 0) continue;  // leaf untouched by this batch
        if (!grad.all_finite())
          throw NumericError("train: non-finite gradient for '" + name +
                             "' in epoch " + std::to_string(epoch));
        if (config.optimizer == "adam")
          adam_update(tensor, grad, state.m[i], state.v[i], state.step + 1,
                      config.learning_rate, 0.9, 0.999, 1e-8);
        else
          adagrad_update(tensor, grad, state.m[i], config.learning_rate, 1e-10);
      }
      ++state.step;
    }

    double train_loss = loss_sum / static_cast<double>(train_set.size());
    double dev_loss = dataset_loss(params, dev_set);
    bool saved = dev_loss < result.best_dev_loss;
    result.curve.push_back({epoch, train_loss, dev_loss, saved});
    if (saved) {
      result.best_dev_loss = dev_loss;
      result.best_params = params;
      result.best_epoch = epoch;
      bad_epochs = 0;
    } else if (++bad_epochs >= stop_after) {
      break;
    }
  }
  return result;
}

void write_losses_csv(const std::string& path, const std::vector<EpochRecord>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("losses: cannot write '" + path + "'");
  out << "epoch,train_loss,dev_loss,saved\n";
  for (const EpochRecord& r : curve)
    out << r.epoch << ',' << format_double(r.train_loss) << ','
        << format_double(r.dev_loss) << ',' << (r.saved ? 1 : 0) << "\n";
}

}  // namespace tedrate::training
