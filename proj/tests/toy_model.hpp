#pragma once

// Small fixture shared by the model, trainer, and acceptance suites: a
// handful of three-part relations plus NA, a seeded hierarchy with random
// implicit vectors, and a tiny vocabulary.

#include <string>
#include <vector>

#include "relex/model.hpp"

namespace toy {

inline std::vector<std::string> relation_names(size_t groups = 2) {
  std::vector<std::string> names{"NA"};
  for (size_t g = 0; g < groups; ++g) {
    names.push_back("/cat" + std::to_string(g) + "/grp" + std::to_string(g) + "/head");
    names.push_back("/cat" + std::to_string(g) + "/grp" + std::to_string(g) + "/tail");
  }
  return names;
}

inline std::vector<std::string> word_list(size_t n = 20) {
  std::vector<std::string> words{"<UNK>"};
  for (size_t i = 1; i < n; ++i) words.push_back("w" + std::to_string(i));
  return words;
}

inline relex::Model make_model(relex::AttentionKind kind, uint64_t seed, size_t groups = 2,
                               size_t kg_dim = 3, size_t hidden = 2,
                               relex::EncoderKind enc = relex::EncoderKind::Pcnn) {
  using namespace relex;
  auto vocab = RelationVocab::from_names(relation_names(groups));
  auto graph = parse_predefined(vocab);
  Rng vec_rng(seed + 1000);
  Embeddings emb;
  for (const auto& name : vocab.non_na_names()) {
    std::vector<double> v(kg_dim);
    for (double& x : v) x = vec_rng.uniform(-1, 1);
    emb.add(name, v);
  }
  init_node_vectors(graph, emb);

  ModelConfig cfg;
  cfg.encoder = EncoderConfig{enc, 3, hidden, 0.0};
  cfg.word_dim = 4;
  cfg.pos_dim = 2;
  cfg.clamp = 6;
  cfg.kg_dim = kg_dim;
  cfg.attention = kind;
  return Model::init(cfg, vocab, word_list(), graph, seed);
}

inline relex::Instance make_instance(relex::Rng& rng, size_t relation, size_t vocab = 20,
                                     size_t len = 6) {
  relex::Instance inst;
  for (size_t i = 0; i < len; ++i) inst.tokens.push_back(rng.uniform_int(vocab));
  inst.head_pos = rng.uniform_int(len);
  inst.tail_pos = rng.uniform_int(len);
  inst.relation = relation;
  inst.head = "h" + std::to_string(rng.uniform_int(5));
  inst.tail = "t" + std::to_string(rng.uniform_int(5));
  return inst;
}

}  // namespace toy
