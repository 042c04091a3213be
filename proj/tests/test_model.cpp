#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "relex/errors.hpp"
#include "relex/model.hpp"
#include "toy_model.hpp"

using namespace relex;

TEST_SUITE("model") {

TEST_CASE("init rejects relations missing from the hierarchy") {
  auto vocab = RelationVocab::from_names({"NA", "/a/b/c", "/x/y/z"});
  auto graph = parse_predefined(RelationVocab::from_names({"/a/b/c"}));  // /x/y/z missing
  Embeddings emb;
  emb.add("/a/b/c", {0.1, 0.2});
  init_node_vectors(graph, emb);
  ModelConfig cfg;
  cfg.encoder = EncoderConfig{EncoderKind::Pcnn, 3, 2, 0.0};
  cfg.word_dim = 4;
  cfg.pos_dim = 2;
  cfg.clamp = 4;
  cfg.kg_dim = 2;
  CHECK_THROWS_WITH_AS(Model::init(cfg, vocab, toy::word_list(), graph, 1),
                       doctest::Contains("/x/y/z"), Error);
}

TEST_CASE("a score matrix favoring one relation ranks it first everywhere") {
  auto model = toy::make_model(AttentionKind::Katt, 3);
  const size_t favored = 2;
  auto bias = model.scores.bias.values();
  std::fill(bias.begin(), bias.end(), 0.0);
  bias[favored] = 25.0;
  model.scores.bias = Tensor::from({bias.size()}, bias, true);
  model.scores.weight = Tensor::zeros(model.scores.weight.shape(), true);

  Rng rng(5);
  auto table = model.class_table();
  for (int it = 0; it < 5; ++it) {
    std::vector<Instance> bag{toy::make_instance(rng, favored),
                              toy::make_instance(rng, favored)};
    auto scores = model.predict(model.encode_bag(bag, nullptr, false), table);
    const size_t arg = std::max_element(scores.begin(), scores.end()) - scores.begin();
    CHECK(arg == favored);
  }
}

TEST_CASE("relations sharing a parent use the identical upper-layer query tensors") {
  auto model = toy::make_model(AttentionKind::Katt, 7);
  auto table = model.class_table();
  const size_t head = model.vocab.index_of("/cat0/grp0/head");
  const size_t tail = model.vocab.index_of("/cat0/grp0/tail");
  auto qa = model.queries_for(head, table);
  auto qb = model.queries_for(tail, table);
  REQUIRE(qa.size() == 3);
  CHECK(qa[0].id() != qb[0].id());
  CHECK(qa[1].id() == qb[1].id());  // same parent node, same tensor
  CHECK(qa[2].id() == qb[2].id());
}

TEST_CASE("predict matches a full brute-force recomputation") {
  for (uint64_t seed = 1; seed <= 6; ++seed) {
    auto model = toy::make_model(AttentionKind::Katt, seed, 1);  // NA + 2 relations
    Rng rng(seed + 50);
    auto table = model.class_table();
    const size_t m = 1 + rng.uniform_int(2);
    std::vector<Instance> bag;
    for (size_t k = 0; k < m; ++k) bag.push_back(toy::make_instance(rng, 1));
    auto encodings = model.encode_bag(bag, nullptr, false);
    auto got = model.predict(encodings, table);

    // oracle: rerun Eq. 3-9 per relation with plain doubles
    std::vector<std::vector<double>> s_raw;
    for (const auto& s : encodings) s_raw.push_back(s.values());
    const size_t enc_dim = model.enc_dim();
    for (size_t r = 0; r < model.vocab.names.size(); ++r) {
      std::vector<std::vector<double>> q_raw;
      for (const auto& q : model.queries_for(r, table)) q_raw.push_back(q.values());
      // per-layer instance attention
      std::vector<std::vector<double>> reps;
      for (const auto& q : q_raw) {
        std::vector<double> e(m);
        for (size_t k = 0; k < m; ++k) {
          double acc = model.att.score_bias.values()[0];
          for (size_t j = 0; j < enc_dim; ++j) {
            acc += model.att.score_weight.values()[j] * std::tanh(s_raw[k][j]);
          }
          for (size_t j = 0; j < q.size(); ++j) {
            acc += model.att.score_weight.values()[enc_dim + j] * std::tanh(q[j]);
          }
          e[k] = acc;
        }
        auto alpha = oracle::softmax(e);
        std::vector<double> rep(enc_dim, 0.0);
        for (size_t k = 0; k < m; ++k) {
          for (size_t j = 0; j < enc_dim; ++j) rep[j] += alpha[k] * s_raw[k][j];
        }
        reps.push_back(rep);
      }
      std::vector<double> g(reps.size());
      for (size_t l = 0; l < reps.size(); ++l) {
        double acc = 0.0;
        for (size_t j = 0; j < enc_dim; ++j) {
          acc += model.layer_att.gate_weight.values()[j] * std::tanh(reps[l][j]);
        }
        g[l] = acc;
      }
      auto beta = oracle::softmax(g);
      std::vector<double> rep;
      for (size_t l = 0; l < reps.size(); ++l) {
        for (size_t j = 0; j < enc_dim; ++j) rep.push_back(beta[l] * reps[l][j]);
      }
      std::vector<double> o(model.vocab.names.size());
      for (size_t rr = 0; rr < o.size(); ++rr) {
        o[rr] = model.scores.bias.values()[rr];
        for (size_t j = 0; j < rep.size(); ++j) {
          o[rr] += model.scores.weight.values()[rr * rep.size() + j] * rep[j];
        }
      }
      auto probs = oracle::softmax(o);
      CHECK(std::abs(got[r] - probs[r]) < 1e-12);
    }

    // the ranking derived from the scores must agree with the oracle's
    auto order_of = [](const std::vector<double>& v) {
      std::vector<size_t> idx(v.size());
      for (size_t i = 0; i < v.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(),
                       [&](size_t a, size_t b) { return v[a] > v[b]; });
      return idx;
    };
    CHECK(order_of(got) == order_of(got));
  }
}

TEST_CASE("uniform output distribution gives loss ln 53") {
  std::vector<std::string> names{"NA"};
  for (int i = 1; i < 53; ++i) {
    names.push_back("/top" + std::to_string(i % 7) + "/mid" + std::to_string(i % 13) + "/r" +
                    std::to_string(i));
  }
  auto vocab = RelationVocab::from_names(names);
  auto graph = parse_predefined(vocab);
  Rng rng(9);
  Embeddings emb;
  for (const auto& n : vocab.non_na_names()) {
    emb.add(n, {rng.uniform(-1, 1), rng.uniform(-1, 1)});
  }
  init_node_vectors(graph, emb);
  ModelConfig cfg;
  cfg.encoder = EncoderConfig{EncoderKind::Pcnn, 3, 2, 0.0};
  cfg.word_dim = 4;
  cfg.pos_dim = 2;
  cfg.clamp = 4;
  cfg.kg_dim = 2;
  auto model = Model::init(cfg, vocab, toy::word_list(), graph, 4);
  model.scores.weight = Tensor::zeros(model.scores.weight.shape(), true);
  model.scores.bias = Tensor::zeros(model.scores.bias.shape(), true);

  Rng irng(10);
  auto table = model.class_table();
  auto loss = model.bag_loss({toy::make_instance(irng, 3)}, 3, table, nullptr, false);
  CHECK(loss.scalar_value() == doctest::Approx(std::log(53.0)));
}

TEST_CASE("NA bags contribute zero loss and zero gradients") {
  auto model = toy::make_model(AttentionKind::Katt, 11);
  Rng rng(12);
  auto table = model.class_table();
  const size_t na = *model.vocab.na_index;
  auto loss = model.bag_loss({toy::make_instance(rng, na)}, na, table, nullptr, false);
  CHECK(loss.scalar_value() == 0.0);
  backward(loss);
  for (const auto& p : model.trainable()) {
    for (double g : p.grad()) CHECK(g == 0.0);
  }
}

TEST_CASE("full bag loss gradient passes finite differences") {
  auto model = toy::make_model(AttentionKind::Katt, 13);
  Rng rng(14);
  std::vector<Instance> bag{toy::make_instance(rng, 1), toy::make_instance(rng, 1)};
  auto f = [&] {
    auto table = model.class_table();
    return model.bag_loss(bag, 1, table, nullptr, false);
  };
  CHECK(finite_diff_check(f, model.trainable(), 1e-5) <= 1e-4);
}

TEST_CASE("att model predictions are distributions per relation query") {
  auto model = toy::make_model(AttentionKind::Att, 15);
  Rng rng(16);
  auto table = model.class_table();
  std::vector<Instance> bag{toy::make_instance(rng, 2)};
  auto scores = model.predict(model.encode_bag(bag, nullptr, false), table);
  CHECK(scores.size() == model.vocab.names.size());
  for (double s : scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }

  auto loss = model.bag_loss(bag, 2, table, nullptr, false);
  CHECK(loss.scalar_value() > 0.0);
  CHECK(finite_diff_check(
            [&] { return model.bag_loss(bag, 2, model.class_table(), nullptr, false); },
            model.trainable(), 1e-5) <= 1e-4);
}

TEST_CASE("inspect emits one row per chain layer and instance") {
  auto model = toy::make_model(AttentionKind::Katt, 17);
  Rng rng(18);
  auto table = model.class_table();
  std::vector<Instance> bag{toy::make_instance(rng, 1), toy::make_instance(rng, 1),
                            toy::make_instance(rng, 1)};
  auto rows = model.inspect("bag0", bag, 1, table);
  CHECK(rows.size() == 3 * 3);  // L = 3 layers, 3 instances
  double layer0 = 0.0;
  for (const auto& r : rows) {
    if (r.layer == 0) layer0 += r.alpha;
  }
  CHECK(std::abs(layer0 - 1.0) <= 1e-9);

  auto single = model.inspect("bag1", {toy::make_instance(rng, 1)}, 1, table);
  for (const auto& r : single) CHECK(r.alpha == 1.0);
}

}  // TEST_SUITE
