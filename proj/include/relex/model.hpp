#pragma once

#include <string>
#include <utility>
#include <vector>

#include "relex/attention.hpp"
#include "relex/encoder.hpp"
#include "relex/gcn.hpp"
#include "relex/hierarchy.hpp"

namespace relex {

enum class AttentionKind { Katt, Att };

struct ModelConfig {
  EncoderConfig encoder;
  size_t word_dim = 300;
  size_t pos_dim = 5;
  size_t clamp = 50;
  size_t kg_dim = 50;  // d, the TransE dimension
  size_t gcn_dim = 0;  // q; 0 means same as kg_dim
  AttentionKind attention = AttentionKind::Katt;
  bool score_bias = true;
  bool finetune_word_embeddings = true;

  size_t q_dim() const { return gcn_dim ? gcn_dim : kg_dim; }
  size_t query_dim() const { return kg_dim + q_dim(); }
};

// Assembled network owning every trainable tensor. The same struct carries
// both attention kinds; the plain baseline replaces chain queries with one
// learned row per relation and skips the GCN and layer attention.
struct Model {
  ModelConfig cfg;
  RelationVocab vocab;
  std::vector<std::string> words;  // word-id order, index 0 is UNK
  HierarchyGraph graph;            // with implicit node vectors (katt)

  EmbeddingLayerParams embedding;
  EncoderParams encoder;
  GcnParams gcn;
  AttentionParams att;
  LayerAttentionParams layer_att;
  Tensor na_query;     // katt: used at every layer for the NA label
  Tensor att_queries;  // att: |R_all| x query_dim
  ScoreMatrix scores;

  static Model init(ModelConfig cfg, RelationVocab vocab, std::vector<std::string> words,
                    HierarchyGraph graph, uint64_t seed);

  // rows present in the file replace the seeded initialization
  void load_word_vectors(const Embeddings& vectors);

  bool is_katt() const { return cfg.attention == AttentionKind::Katt; }
  size_t enc_dim() const { return cfg.encoder.output_dim(); }
  size_t levels() const { return is_katt() ? static_cast<size_t>(graph.levels()) : 1; }
  size_t rep_dim() const { return levels() * enc_dim(); }

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> trainable() const;

  // recomputed every training step so the GCN receives gradients
  ClassEmbeddingTable class_table() const;

  std::vector<Tensor> encode_bag(const std::vector<Instance>& instances, Rng* rng,
                                 bool training) const;

  // katt: class embeddings along the relation's chain, or the learned NA
  // query at every layer; att: the relation's learned query row
  std::vector<Tensor> queries_for(size_t relation, const ClassEmbeddingTable& table) const;

  Tensor bag_logits(const std::vector<Tensor>& encodings, size_t relation,
                    const ClassEmbeddingTable& table) const;

  // -log P(gold | bag); the NA label contributes a constant zero
  Tensor bag_loss(const std::vector<Instance>& instances, size_t relation,
                  const ClassEmbeddingTable& table, Rng* rng, bool training) const;

  // score vector over all relations: entry r is P(r) under r's own queries
  std::vector<double> predict(const std::vector<Tensor>& encodings,
                              const ClassEmbeddingTable& table) const;

  struct AttentionRow {
    std::string bag_id;
    int layer = 0;
    std::string node_id;
    size_t instance_index = 0;
    double alpha = 0.0;
  };
  std::vector<AttentionRow> inspect(const std::string& bag_id,
                                    const std::vector<Instance>& instances, size_t relation,
                                    const ClassEmbeddingTable& table) const;
};

}  // namespace relex
