#include "relex/model.hpp"

#include <cmath>

#include "relex/errors.hpp"

namespace relex {

Model Model::init(ModelConfig cfg, RelationVocab vocab, std::vector<std::string> words,
                  HierarchyGraph graph, uint64_t seed) {
  require_data(!vocab.names.empty(), "model: empty relation vocabulary");
  require_data(!words.empty(), "model: empty word vocabulary");
  Model m;
  m.cfg = cfg;
  m.vocab = std::move(vocab);
  m.words = std::move(words);
  m.graph = std::move(graph);

  if (cfg.attention == AttentionKind::Katt) {
    require_data(m.graph.has_vectors(), "model: hierarchy must carry initialized node vectors");
    require_data(m.graph.vector_of(0).size() == cfg.kg_dim,
                 "model: hierarchy vectors disagree with kg_dim");
    for (size_t r = 0; r < m.vocab.names.size(); ++r) {
      if (m.vocab.is_na(r)) continue;
      auto idx = m.graph.find(m.vocab.names[r]);
      require_data(idx.has_value() && m.graph.node(*idx).layer == 0,
                   "model: relation '" + m.vocab.names[r] + "' missing from the hierarchy");
    }
  }

  Rng rng(seed);
  m.embedding =
      EmbeddingLayerParams::init(m.words.size(), cfg.word_dim, cfg.pos_dim, cfg.clamp, rng);
  m.encoder = EncoderParams::init(cfg.encoder, m.embedding.row_width(), rng);
  const size_t enc = cfg.encoder.output_dim();
  const size_t qd = cfg.query_dim();
  m.att = AttentionParams::init(enc, qd, rng);
  if (cfg.attention == AttentionKind::Katt) {
    m.gcn = GcnParams::init(cfg.kg_dim, cfg.q_dim(), rng);
    m.layer_att = LayerAttentionParams::init(enc, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(qd));
    m.na_query = Tensor::uniform({qd}, -bound, bound, rng, true);
    m.scores = ScoreMatrix::init(m.vocab.names.size(), m.rep_dim(), rng, cfg.score_bias);
  } else {
    const double bound = 1.0 / std::sqrt(static_cast<double>(qd));
    m.att_queries = Tensor::uniform({m.vocab.names.size(), qd}, -bound, bound, rng, true);
    m.scores = ScoreMatrix::init(m.vocab.names.size(), enc, rng, cfg.score_bias);
  }
  return m;
}

void Model::load_word_vectors(const Embeddings& vectors) {
  require_data(vectors.dimension() == cfg.word_dim,
               "word vectors have dimension " + std::to_string(vectors.dimension()) +
                   ", model expects " + std::to_string(cfg.word_dim));
  auto& table = embedding.word_table.values_mut();
  size_t found = 0;
  for (size_t w = 0; w < words.size(); ++w) {
    if (!vectors.has(words[w])) continue;
    const auto& vec = vectors.at(words[w]);
    std::copy(vec.begin(), vec.end(), table.begin() + w * cfg.word_dim);
    ++found;
  }
  require_data(found > 0, "word vector file shares no tokens with the corpus vocabulary");
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out{
      {"word_table", embedding.word_table},
      {"pos_head_table", embedding.pos_head_table},
      {"pos_tail_table", embedding.pos_tail_table},
      {"conv_kernel", encoder.kernel},
      {"conv_bias", encoder.bias},
      {"att_score_weight", att.score_weight},
      {"att_score_bias", att.score_bias},
      {"score_matrix", scores.weight},
  };
  if (scores.use_bias) out.emplace_back("score_bias", scores.bias);
  if (is_katt()) {
    out.emplace_back("gcn1_self", gcn.layer1.self_weight);
    out.emplace_back("gcn1_parent", gcn.layer1.parent_weight);
    out.emplace_back("gcn1_child", gcn.layer1.child_weight);
    out.emplace_back("gcn1_bias", gcn.layer1.bias);
    out.emplace_back("gcn2_self", gcn.layer2.self_weight);
    out.emplace_back("gcn2_parent", gcn.layer2.parent_weight);
    out.emplace_back("gcn2_child", gcn.layer2.child_weight);
    out.emplace_back("gcn2_bias", gcn.layer2.bias);
    out.emplace_back("layer_gate", layer_att.gate_weight);
    out.emplace_back("na_query", na_query);
  } else {
    out.emplace_back("att_queries", att_queries);
  }
  return out;
}

std::vector<Tensor> Model::trainable() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named_parameters()) {
    if (name == "word_table" && !cfg.finetune_word_embeddings) continue;
    out.push_back(t);
  }
  return out;
}

ClassEmbeddingTable Model::class_table() const {
  if (!is_katt()) return {};
  return class_embeddings(graph, gcn);
}

std::vector<Tensor> Model::encode_bag(const std::vector<Instance>& instances, Rng* rng,
                                      bool training) const {
  require_data(!instances.empty(), "encode_bag: empty bag");
  std::vector<Tensor> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    out.push_back(encode(embed_instance(inst, embedding), cfg.encoder, encoder, inst.head_pos,
                         inst.tail_pos, rng, training));
  }
  return out;
}

std::vector<Tensor> Model::queries_for(size_t relation, const ClassEmbeddingTable& table) const {
  require_data(relation < vocab.names.size(), "queries_for: relation id out of range");
  if (!is_katt()) {
    return {row(att_queries, relation)};
  }
  if (vocab.is_na(relation)) {
    return std::vector<Tensor>(levels(), na_query);
  }
  std::vector<Tensor> out;
  for (int node : graph.chain(vocab.names[relation])) {
    out.push_back(table.q[static_cast<size_t>(node)]);
  }
  return out;
}

Tensor Model::bag_logits(const std::vector<Tensor>& encodings, size_t relation,
                         const ClassEmbeddingTable& table) const {
  const auto queries = queries_for(relation, table);
  if (!is_katt()) {
    return relation_logits(instance_attention(encodings, queries[0], att).representation,
                           scores);
  }
  return relation_logits(bag_representation(encodings, queries, att, layer_att).final, scores);
}

Tensor Model::bag_loss(const std::vector<Instance>& instances, size_t relation,
                       const ClassEmbeddingTable& table, Rng* rng, bool training) const {
  if (vocab.is_na(relation)) {
    return Tensor::scalar(0.0);  // NA loss is cut: no graph, no gradients
  }
  const auto encodings = encode_bag(instances, rng, training);
  return cross_entropy(bag_logits(encodings, relation, table), relation);
}

std::vector<double> Model::predict(const std::vector<Tensor>& encodings,
                                   const ClassEmbeddingTable& table) const {
  std::vector<double> out(vocab.names.size(), 0.0);
  for (size_t r = 0; r < vocab.names.size(); ++r) {
    const auto probs = score_and_prob(
        is_katt() ? bag_representation(encodings, queries_for(r, table), att, layer_att).final
                  : instance_attention(encodings, queries_for(r, table)[0], att).representation,
        scores);
    out[r] = probs.values()[r];
  }
  return out;
}

std::vector<Model::AttentionRow> Model::inspect(const std::string& bag_id,
                                                const std::vector<Instance>& instances,
                                                size_t relation,
                                                const ClassEmbeddingTable& table) const {
  require_data(!vocab.is_na(relation) || !is_katt(),
               "inspect: NA has no hierarchy chain to display");
  const auto encodings = encode_bag(instances, nullptr, false);
  std::vector<AttentionRow> rows;
  if (is_katt()) {
    const auto chain = graph.chain(vocab.names[relation]);
    const auto rep = bag_representation(encodings, queries_for(relation, table), att, layer_att);
    for (size_t level = 0; level < chain.size(); ++level) {
      const auto& alpha = rep.instance_weights[level].values();
      for (size_t k = 0; k < alpha.size(); ++k) {
        rows.push_back({bag_id, graph.node(chain[level]).layer,
                        graph.node(chain[level]).id, k, alpha[k]});
      }
    }
  } else {
    const auto res = instance_attention(encodings, queries_for(relation, table)[0], att);
    for (size_t k = 0; k < res.weights.size(); ++k) {
      rows.push_back({bag_id, 0, vocab.names[relation], k, res.weights.values()[k]});
    }
  }
  return rows;
}

}  // namespace relex
