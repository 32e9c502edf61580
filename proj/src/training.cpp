#include "ldl/training.hpp"

#include "ldl/errors.hpp"
#include "ldl/optim.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ldl::experiments {

using numerics::Tensor;

namespace {

// Training allocates many short-lived buffers above glibc's default mmap
// threshold; keeping them on the heap avoids a page-fault storm per epoch.
void tune_allocator() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    mallopt(M_TOP_PAD, 64 << 20);
  });
#endif
}

}  // namespace

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam" || name == "Adam") return OptimizerKind::adam;
  if (name == "adamw" || name == "AdamW") return OptimizerKind::adamw;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::adamw ? "adamw" : "adam"; }

void TrainSpec::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (patience < 1 || patience > max_epochs) throw ConfigError("patience must lie in [1, max_epochs]");
}

nlohmann::json to_json(const TrainSpec& spec) {
  return {{"optimizer", std::string(to_string(spec.optimizer))},
          {"lr", spec.lr},
          {"weight_decay", spec.weight_decay},
          {"max_epochs", spec.max_epochs},
          {"patience", spec.patience},
          {"seed", spec.seed}};
}

TrainSpec train_spec_from_json(const nlohmann::json& j, const TrainSpec& base) {
  if (!j.is_object()) throw ConfigError("training configuration must be a JSON object");
  static const std::set<std::string> known{"optimizer", "lr", "weight_decay", "max_epochs", "patience", "seed"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown training key '" + key + "'");
  TrainSpec spec = base;
  try {
    if (j.contains("optimizer")) spec.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    if (j.contains("lr")) spec.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) spec.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("max_epochs")) spec.max_epochs = j.at("max_epochs").get<int>();
    if (j.contains("patience")) spec.patience = j.at("patience").get<int>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid training configuration: ") + e.what());
  }
  return spec;
}

std::uint64_t cell_seed(std::uint64_t base, std::string_view config_id, int trial) {
  // FNV-1a over the id, then a splitmix64 finalizer over the combined words.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : config_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::uint64_t z = base ^ (h + 0x9e3779b97f4a7c15ULL + (static_cast<std::uint64_t>(trial) << 32));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> nodes) {
  if (nodes.empty()) throw EvaluationError("accuracy over an empty node set");
  Index correct = 0;
  for (Index i : nodes) {
    Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

TrainedModel train_model(const layers::ModelConfig& cfg, const TrainSpec& spec, const data::Dataset& ds,
                         const graph::NormalizedOperators& ops, const data::Trial& trial, int trial_index) {
  spec.validate();
  cfg.validate();
  tune_allocator();
  if (trial.train.empty() || trial.val.empty() || trial.test.empty())
    throw ValidationError("every trial needs non-empty train, validation, and test masks");
  const auto start = std::chrono::steady_clock::now();

  TrainedModel out;
  TrialResult& result = out.result;
  result.config_id = cfg.id();
  result.trial = trial_index;

  std::mt19937_64 rng(cell_seed(spec.seed, cfg.id(), trial_index));
  layers::ModelParams model = layers::assemble_model(cfg, ds.n_features(), ds.num_classes, rng);
  const Tensor features = Tensor::constant(ds.features);
  const auto params = model.parameters();
  Adam optimizer(params, AdamOptions{.lr = spec.lr,
                                     .weight_decay = spec.weight_decay,
                                     .decoupled = spec.optimizer == OptimizerKind::adamw});

  std::vector<Matrix> best(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i].values();
  double best_val = -1.0;
  int since_best = 0;

  // Returns false once patience runs out.
  auto evaluate = [&](const Matrix& logits, int epoch) {
    const double val = accuracy(logits, ds.labels, trial.val);
    if (val > best_val) {
      best_val = val;
      since_best = 0;
      result.best_epoch = epoch;
      result.best_val_acc = val;
      result.test_acc = accuracy(logits, ds.labels, trial.test);
      result.train_acc = accuracy(logits, ds.labels, trial.train);
      for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i].values();
      return true;
    }
    return ++since_best < spec.patience;
  };

  // Without dropout the training forward pass already is the evaluation of
  // the current parameters, so it is scored before the update.
  const bool stochastic = cfg.p_input > 0.0 || cfg.p_layer > 0.0;
  for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    result.epochs = epoch;
    optimizer.zero_grad();
    const auto fwd = layers::forward(model, features, ops, {.training = true}, rng);
    const Tensor loss = numerics::masked_softmax_cross_entropy(fwd.logits, ds.labels, trial.train);
    if (!std::isfinite(loss.item()) || !fwd.logits.values().allFinite()) {
      result.failed = true;
      result.failure = "non-finite training loss at epoch " + std::to_string(epoch);
      break;
    }
    if (!stochastic && !evaluate(fwd.logits.values(), epoch)) break;
    numerics::backward(loss);
    optimizer.step();

    if (stochastic) {
      Matrix logits;
      {
        numerics::NoGradGuard no_grad;
        logits = layers::forward(model, features, ops, {.training = false}, rng).logits.values();
      }
      if (!logits.allFinite()) {
        result.failed = true;
        result.failure = "non-finite logits at epoch " + std::to_string(epoch);
        break;
      }
      if (!evaluate(logits, epoch)) break;
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    p.mutable_values() = best[i];
  }
  out.params = std::move(model);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void export_embeddings(const layers::ModelParams& model, const data::Dataset& ds, int layer_index,
                       const std::filesystem::path& path) {
  if (layer_index < 0 || layer_index > model.config.depth)
    throw ConfigError("embedding layer " + std::to_string(layer_index) + " outside [0, " +
                      std::to_string(model.config.depth) + "]");
  std::mt19937_64 rng(0);
  numerics::NoGradGuard no_grad;
  const auto fwd = layers::forward(model, ds, {.training = false, .keep_embeddings = true}, rng);
  const Matrix& h = fwd.embeddings[layer_index].values();

  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings to " + path.string());
  out << "node_id,label";
  for (Index j = 0; j < h.cols(); ++j) out << ",h_" << (j + 1);
  out << '\n' << std::setprecision(17);
  for (Index i = 0; i < h.rows(); ++i) {
    out << i << ',' << ds.labels[i];
    for (Index j = 0; j < h.cols(); ++j) out << ',' << h(i, j);
    out << '\n';
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace ldl::experiments
