#pragma once

#include <string>
#include <vector>

#include "relex/model.hpp"

namespace relex {

// All instances of one (head, tail, label) key, in corpus order.
struct Bag {
  std::string head;
  std::string tail;
  size_t relation = 0;
  std::vector<size_t> instance_ids;
};

std::vector<Bag> make_bags(const std::vector<Instance>& instances);

struct TrainConfig {
  double learning_rate = 0.1;
  size_t batch_size = 160;
  size_t epochs = 30;
  size_t pretrain_epochs = 5;
  uint64_t seed = 0;
  bool log_accuracy = true;
};

struct EpochLog {
  size_t epoch = 0;
  std::string split;  // "pretrain" or "train"
  double loss = 0.0;
  double accuracy = -1.0;  // negative when not computed
};

// Mini-batch SGD over bags. Batches are formed from a seeded shuffle but
// processed in corpus order within each batch, which makes the batch loss
// independent of bag order and keeps the dropout stream well defined.
class Trainer {
 public:
  Trainer(Model& model, std::vector<Instance> train_instances, TrainConfig cfg);

  // Plain-attention pretraining: a fresh baseline head around the shared
  // embedding and encoder tensors, discarded afterwards. When the model is
  // already the plain baseline this trains the model head itself.
  void pretrain_encoder();

  void train();  // cfg.epochs main epochs
  double epoch_once();
  double step_batch(const std::vector<size_t>& bag_ids);  // returns batch loss

  double train_accuracy();  // bag-level argmax accuracy, evaluation mode

  const std::vector<Bag>& bags() const { return bags_; }
  const std::vector<Instance>& instances() const { return instances_; }
  const std::vector<EpochLog>& log() const { return log_; }
  const TrainConfig& config() const { return cfg_; }
  size_t epochs_done() const { return epochs_done_; }
  Rng& rng() { return rng_; }

  void save(const std::string& path, const std::string& config_echo = "") const;

  // restores the trainer position (epoch counter and rng) from a checkpoint
  void restore_position(size_t epochs_done, const std::string& rng_state);

 private:
  double run_epoch(Model& m, const std::string& split);
  void sgd_step(const std::vector<Tensor>& params);
  std::vector<Instance> bag_instances(const Bag& bag) const;

  Model& model_;
  std::vector<Instance> instances_;
  std::vector<Bag> bags_;
  TrainConfig cfg_;
  Rng rng_;
  size_t epochs_done_ = 0;
  std::vector<EpochLog> log_;
};

// Single-file binary checkpoint: format version, config echo, train
// position, rng state, vocabularies, hierarchy with node vectors, and a
// named tensor manifest with per-tensor checksums.
struct Checkpoint {
  Model model;
  TrainConfig train_cfg;
  std::string config_echo;
  size_t epochs_done = 0;
  std::string rng_state;
};

void save_checkpoint(const std::string& path, const Model& model, const TrainConfig& cfg,
                     size_t epochs_done, const std::string& rng_state,
                     const std::string& config_echo);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace relex
