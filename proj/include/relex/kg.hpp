#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "relex/rng.hpp"

namespace relex {

struct Triple {
  size_t head = 0;
  size_t relation = 0;
  size_t tail = 0;
  bool operator==(const Triple&) const = default;
};

// Interned KG facts. Entities and relations are identified by dense ids in
// insertion order; duplicate facts are ignored.
class TripleStore {
 public:
  size_t intern_entity(const std::string& name);
  size_t intern_relation(const std::string& name);
  bool add_fact(const std::string& h, const std::string& r, const std::string& t);
  bool add_fact(size_t h, size_t r, size_t t);
  bool contains(size_t h, size_t r, size_t t) const;

  size_t entity_count() const { return entity_names_.size(); }
  size_t relation_count() const { return relation_names_.size(); }
  size_t fact_count() const { return facts_.size(); }
  const std::vector<Triple>& facts() const { return facts_; }
  const std::string& entity_name(size_t id) const { return entity_names_[id]; }
  const std::string& relation_name(size_t id) const { return relation_names_[id]; }
  std::optional<size_t> entity_id(const std::string& name) const;
  std::optional<size_t> relation_id(const std::string& name) const;

  // tsv lines `head\trelation\ttail`
  static TripleStore load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, size_t> entity_ids_;
  std::unordered_map<std::string, size_t> relation_ids_;
  std::vector<Triple> facts_;
  std::unordered_set<uint64_t> fact_keys_;
  uint64_t key(size_t h, size_t r, size_t t) const;
};

// Ordered identifier -> vector map backing the text embedding format
// (one record per line: `<identifier>\t<v1> <v2> ...`, 17 significant digits
// on save).
class Embeddings {
 public:
  void add(const std::string& id, std::vector<double> vec);
  bool has(const std::string& id) const { return index_.count(id) > 0; }
  const std::vector<double>& at(const std::string& id) const;
  size_t count() const { return order_.size(); }
  size_t dimension() const { return dimension_; }
  const std::vector<std::string>& ids() const { return order_; }

  static Embeddings load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, std::vector<double>> index_;
  size_t dimension_ = 0;
};

// Entity and relation vectors of one shared dimension. Serialized as a pair
// of embedding files derived from a stem: `<stem>.entities` and
// `<stem>.relations`.
struct EmbeddingTable {
  Embeddings entities;
  Embeddings relations;

  static EmbeddingTable load(const std::string& stem);
  void save(const std::string& stem) const;
};

struct TransEConfig {
  size_t dimension = 50;
  double margin = 1.0;
  int norm = 2;  // 1 or 2
  double learning_rate = 0.01;
  size_t epochs = 500;
  size_t negatives_per_positive = 1;
  uint64_t seed = 0;
};

struct TransEResult {
  EmbeddingTable table;
  // Exact expected margin loss under uniform filtered corruption, evaluated
  // at every epoch end.
  std::vector<double> epoch_loss;
};

// ||h + r - t||_p; lower means more plausible.
double score_triple(const std::vector<double>& h, const std::vector<double>& r,
                    const std::vector<double>& t, int norm);

// Uniform corruption of head or tail, resampled until the corrupted triple
// is absent from the store. Returns nothing when no valid corruption exists.
std::optional<Triple> sample_negative(const TripleStore& store, const Triple& fact, Rng& rng);

// Margin-ranking SGD with entity renormalization at every epoch end.
TransEResult train_transe(const TripleStore& store, const TransEConfig& cfg);

struct LinkPredictionResult {
  double mean_rank = 0.0;
  double hits_at_10 = 0.0;
};

// Ranks the true tail of every fact against all entities, filtering other
// true tails of the same (head, relation).
LinkPredictionResult link_prediction_eval(const EmbeddingTable& table,
                                          const TripleStore& store, int norm = 2);

// Ten facts over eight entities and two relations: a successor chain plus
// three two-step shortcuts. Small enough for exhaustive rank checks.
TripleStore toy_chain_kg();

}  // namespace relex
