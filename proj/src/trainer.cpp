#include "relex/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "relex/errors.hpp"

namespace relex {

namespace {

constexpr char kMagic[] = "RELEXCK1";
constexpr char kEndMark[] = "RELEXEND";
constexpr uint32_t kVersion = 1;

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw_data("checkpoint truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
  const uint64_t n = get_u64(in);
  if (n > (1ULL << 32)) throw_data("checkpoint corrupt: unreasonable string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw_data("checkpoint truncated");
  return s;
}

uint64_t fnv1a(const std::vector<double>& values) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (double d : values) {
    const uint64_t bits = std::bit_cast<uint64_t>(d);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace

std::vector<Bag> make_bags(const std::vector<Instance>& instances) {
  std::vector<Bag> bags;
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const std::string key =
        inst.head + '\t' + inst.tail + '\t' + std::to_string(inst.relation);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, bags.size()).first;
      bags.push_back({inst.head, inst.tail, inst.relation, {}});
    }
    bags[it->second].instance_ids.push_back(i);
  }
  return bags;
}

Trainer::Trainer(Model& model, std::vector<Instance> train_instances, TrainConfig cfg)
    : model_(model), instances_(std::move(train_instances)), cfg_(cfg), rng_(cfg.seed) {
  require_data(cfg_.batch_size >= 1, "trainer: batch size must be positive");
  for (const auto& inst : instances_) {
    require_data(inst.relation < model_.vocab.names.size(),
                 "trainer: instance labeled with an unknown relation id");
  }
  bags_ = make_bags(instances_);
}

std::vector<Instance> Trainer::bag_instances(const Bag& bag) const {
  std::vector<Instance> out;
  out.reserve(bag.instance_ids.size());
  for (size_t id : bag.instance_ids) out.push_back(instances_[id]);
  return out;
}

void Trainer::sgd_step(const std::vector<Tensor>& params) {
  for (const auto& p : params) {
    Tensor handle = p;
    const auto g = handle.grad();
    auto& values = handle.values_mut();
    for (size_t i = 0; i < values.size(); ++i) values[i] -= cfg_.learning_rate * g[i];
    handle.zero_grad();
  }
}

double Trainer::step_batch(const std::vector<size_t>& bag_ids) {
  std::vector<size_t> ids = bag_ids;
  // corpus order within the batch: the loss is order-free and the dropout
  // stream is well defined
  std::sort(ids.begin(), ids.end());
  const auto table = model_.class_table();
  std::vector<Tensor> losses;
  for (size_t id : ids) {
    const Bag& bag = bags_.at(id);
    if (model_.vocab.is_na(bag.relation)) continue;  // NA loss is cut
    losses.push_back(
        model_.bag_loss(bag_instances(bag), bag.relation, table, &rng_, true));
  }
  if (losses.empty()) return 0.0;
  Tensor batch_loss = losses[0];
  for (size_t i = 1; i < losses.size(); ++i) batch_loss = add(batch_loss, losses[i]);
  batch_loss = scale(batch_loss, 1.0 / static_cast<double>(losses.size()));
  if (!all_finite(batch_loss)) throw_numeric("training produced a non-finite loss");
  backward(batch_loss);
  sgd_step(model_.trainable());
  return batch_loss.scalar_value();
}

double Trainer::run_epoch(Model& m, const std::string& split) {
  std::vector<size_t> order(bags_.size());
  std::iota(order.begin(), order.end(), 0);
  rng_.shuffle(order);

  double total = 0.0;
  size_t counted = 0;
  for (size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const size_t end = std::min(order.size(), start + cfg_.batch_size);
    std::vector<size_t> ids(order.begin() + start, order.begin() + end);
    std::sort(ids.begin(), ids.end());

    const auto table = m.class_table();
    std::vector<Tensor> losses;
    for (size_t id : ids) {
      const Bag& bag = bags_[id];
      if (m.vocab.is_na(bag.relation)) continue;
      losses.push_back(m.bag_loss(bag_instances(bag), bag.relation, table, &rng_, true));
    }
    if (losses.empty()) continue;
    Tensor batch_loss = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) batch_loss = add(batch_loss, losses[i]);
    batch_loss = scale(batch_loss, 1.0 / static_cast<double>(losses.size()));
    if (!all_finite(batch_loss)) throw_numeric("training produced a non-finite loss");
    backward(batch_loss);
    sgd_step(m.trainable());
    total += batch_loss.scalar_value() * static_cast<double>(losses.size());
    counted += losses.size();
  }
  const double mean = counted ? total / static_cast<double>(counted) : 0.0;

  EpochLog entry;
  entry.split = split;
  entry.loss = mean;
  if (split == "train") {
    ++epochs_done_;
    entry.epoch = epochs_done_;
  } else {
    entry.epoch = log_.size() + 1;
  }
  if (cfg_.log_accuracy) {
    // evaluation pass; consumes no rng draws
    const auto table = m.class_table();
    size_t correct = 0;
    for (const auto& bag : bags_) {
      const auto scores =
          m.predict(m.encode_bag(bag_instances(bag), nullptr, false), table);
      const size_t arg =
          static_cast<size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
      if (arg == bag.relation) ++correct;
    }
    entry.accuracy = bags_.empty() ? 0.0 : static_cast<double>(correct) / bags_.size();
  }
  log_.push_back(entry);
  return mean;
}

double Trainer::epoch_once() { return run_epoch(model_, "train"); }

void Trainer::train() {
  for (size_t e = 0; e < cfg_.epochs; ++e) run_epoch(model_, "train");
}

void Trainer::pretrain_encoder() {
  if (cfg_.pretrain_epochs == 0) return;
  if (model_.cfg.attention == AttentionKind::Att) {
    for (size_t e = 0; e < cfg_.pretrain_epochs; ++e) run_epoch(model_, "pretrain");
    return;
  }
  // baseline head around the shared embedding and encoder tensors
  Model head;
  head.cfg = model_.cfg;
  head.cfg.attention = AttentionKind::Att;
  head.vocab = model_.vocab;
  head.words = model_.words;
  head.graph = model_.graph;
  head.embedding = model_.embedding;  // shared handles: updates reach the model
  head.encoder = model_.encoder;
  Rng head_rng(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
  const size_t enc = model_.enc_dim();
  const size_t qd = model_.cfg.query_dim();
  const size_t nrel = model_.vocab.names.size();
  head.att = AttentionParams::init(enc, qd, head_rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(qd));
  head.att_queries = Tensor::uniform({nrel, qd}, -bound, bound, head_rng, true);
  head.scores = ScoreMatrix::init(nrel, enc, head_rng, model_.cfg.score_bias);
  for (size_t e = 0; e < cfg_.pretrain_epochs; ++e) run_epoch(head, "pretrain");
}

double Trainer::train_accuracy() {
  const auto table = model_.class_table();
  size_t correct = 0;
  for (const auto& bag : bags_) {
    const auto scores =
        model_.predict(model_.encode_bag(bag_instances(bag), nullptr, false), table);
    const size_t arg =
        static_cast<size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    if (arg == bag.relation) ++correct;
  }
  return bags_.empty() ? 0.0 : static_cast<double>(correct) / bags_.size();
}

void Trainer::restore_position(size_t epochs_done, const std::string& rng_state) {
  epochs_done_ = epochs_done;
  rng_.restore_state(rng_state);
}

void Trainer::save(const std::string& path, const std::string& config_echo) const {
  save_checkpoint(path, model_, cfg_, epochs_done_, rng_.save_state(), config_echo);
}

void save_checkpoint(const std::string& path, const Model& model, const TrainConfig& cfg,
                     size_t epochs_done, const std::string& rng_state,
                     const std::string& config_echo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write checkpoint " + path);
  out.write(kMagic, 8);
  put_u64(out, kVersion);
  put_str(out, config_echo);
  put_u64(out, epochs_done);
  put_str(out, rng_state);

  // train config
  put_f64(out, cfg.learning_rate);
  put_u64(out, cfg.batch_size);
  put_u64(out, cfg.epochs);
  put_u64(out, cfg.pretrain_epochs);
  put_u64(out, cfg.seed);
  put_u64(out, cfg.log_accuracy ? 1 : 0);

  // model config
  const auto& mc = model.cfg;
  put_u64(out, mc.attention == AttentionKind::Katt ? 0 : 1);
  put_u64(out, mc.encoder.kind == EncoderKind::Cnn ? 0 : 1);
  put_u64(out, mc.encoder.kernel_size);
  put_u64(out, mc.encoder.hidden);
  put_f64(out, mc.encoder.dropout);
  put_u64(out, mc.word_dim);
  put_u64(out, mc.pos_dim);
  put_u64(out, mc.clamp);
  put_u64(out, mc.kg_dim);
  put_u64(out, mc.gcn_dim);
  put_u64(out, mc.score_bias ? 1 : 0);
  put_u64(out, mc.finetune_word_embeddings ? 1 : 0);

  // vocabularies
  put_u64(out, model.vocab.names.size());
  for (size_t i = 0; i < model.vocab.names.size(); ++i) {
    put_str(out, model.vocab.names[i]);
    put_u64(out, model.vocab.train_counts[i]);
  }
  put_u64(out, model.words.size());
  for (const auto& w : model.words) put_str(out, w);

  // hierarchy in creation order (parents precede children)
  put_u64(out, model.graph.node_count());
  for (size_t i = 0; i < model.graph.node_count(); ++i) {
    const auto& n = model.graph.node(static_cast<int>(i));
    put_str(out, n.id);
    put_u64(out, static_cast<uint64_t>(n.layer));
    put_u64(out, static_cast<uint64_t>(n.parent + 1));  // 0 means root
  }
  put_u64(out, model.graph.has_vectors() ? 1 : 0);
  if (model.graph.has_vectors()) {
    put_u64(out, model.graph.vector_of(0).size());
    for (size_t i = 0; i < model.graph.node_count(); ++i) {
      for (double v : model.graph.vector_of(static_cast<int>(i))) put_f64(out, v);
    }
  }

  // parameter manifest: name, shape, checksum, raw values
  const auto params = model.named_parameters();
  put_u64(out, params.size());
  for (const auto& [name, tensor] : params) {
    put_str(out, name);
    put_u64(out, tensor.rank());
    for (size_t d : tensor.shape()) put_u64(out, d);
    put_u64(out, fnv1a(tensor.values()));
    for (double v : tensor.values()) put_f64(out, v);
  }
  out.write(kEndMark, 8);
  if (!out) throw_data("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != kMagic) throw_data("not a checkpoint file: " + path);
  const uint64_t version = get_u64(in);
  if (version != kVersion) {
    throw_data("checkpoint version " + std::to_string(version) + " unsupported (expected " +
               std::to_string(kVersion) + ")");
  }
  Checkpoint ck;
  ck.config_echo = get_str(in);
  ck.epochs_done = get_u64(in);
  ck.rng_state = get_str(in);

  ck.train_cfg.learning_rate = get_f64(in);
  ck.train_cfg.batch_size = get_u64(in);
  ck.train_cfg.epochs = get_u64(in);
  ck.train_cfg.pretrain_epochs = get_u64(in);
  ck.train_cfg.seed = get_u64(in);
  ck.train_cfg.log_accuracy = get_u64(in) != 0;

  ModelConfig mc;
  mc.attention = get_u64(in) == 0 ? AttentionKind::Katt : AttentionKind::Att;
  mc.encoder.kind = get_u64(in) == 0 ? EncoderKind::Cnn : EncoderKind::Pcnn;
  mc.encoder.kernel_size = get_u64(in);
  mc.encoder.hidden = get_u64(in);
  mc.encoder.dropout = get_f64(in);
  mc.word_dim = get_u64(in);
  mc.pos_dim = get_u64(in);
  mc.clamp = get_u64(in);
  mc.kg_dim = get_u64(in);
  mc.gcn_dim = get_u64(in);
  mc.score_bias = get_u64(in) != 0;
  mc.finetune_word_embeddings = get_u64(in) != 0;

  RelationVocab vocab;
  const uint64_t nrel = get_u64(in);
  std::vector<std::string> names;
  std::vector<size_t> counts;
  for (uint64_t i = 0; i < nrel; ++i) {
    names.push_back(get_str(in));
    counts.push_back(get_u64(in));
  }
  vocab = RelationVocab::from_names(names);
  vocab.train_counts = counts;

  std::vector<std::string> words;
  const uint64_t nwords = get_u64(in);
  for (uint64_t i = 0; i < nwords; ++i) words.push_back(get_str(in));

  HierarchyGraph graph;
  const uint64_t nnodes = get_u64(in);
  for (uint64_t i = 0; i < nnodes; ++i) {
    const std::string id = get_str(in);
    const int layer = static_cast<int>(get_u64(in));
    const int parent = static_cast<int>(get_u64(in)) - 1;
    graph.add_node(id, layer, parent);
  }
  graph.finalize();
  if (get_u64(in) != 0) {
    const uint64_t dim = get_u64(in);
    std::vector<std::vector<double>> vectors(nnodes, std::vector<double>(dim));
    for (auto& vec : vectors) {
      for (double& v : vec) v = get_f64(in);
    }
    graph.set_vectors(std::move(vectors));
  }

  ck.model = Model::init(mc, std::move(vocab), std::move(words), std::move(graph), 0);

  const uint64_t nparams = get_u64(in);
  auto named = ck.model.named_parameters();
  require_data(nparams == named.size(), "checkpoint manifest has " + std::to_string(nparams) +
                                            " tensors, model expects " +
                                            std::to_string(named.size()));
  for (uint64_t i = 0; i < nparams; ++i) {
    const std::string name = get_str(in);
    require_data(named[i].first == name,
                 "checkpoint tensor '" + name + "' does not match expected '" +
                     named[i].first + "'");
    const uint64_t rank = get_u64(in);
    Shape shape;
    for (uint64_t d = 0; d < rank; ++d) shape.push_back(get_u64(in));
    Tensor handle = named[i].second;
    require_data(shape == handle.shape(), "checkpoint tensor '" + name + "' has shape " +
                                              shape_str(shape) + ", model expects " +
                                              shape_str(handle.shape()));
    const uint64_t checksum = get_u64(in);
    auto& values = handle.values_mut();
    for (double& v : values) v = get_f64(in);
    require_data(fnv1a(values) == checksum,
                 "checkpoint tensor '" + name + "' fails its checksum");
  }
  char endmark[8];
  in.read(endmark, 8);
  if (!in || std::string(endmark, 8) != kEndMark) throw_data("checkpoint truncated");
  return ck;
}

}  // namespace relex
