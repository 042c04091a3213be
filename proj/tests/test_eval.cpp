#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "relex/errors.hpp"
#include "relex/eval.hpp"
#include "relex/kg.hpp"
#include "toy_model.hpp"

using namespace relex;

namespace {

std::vector<PredictionRecord> records_from(const std::vector<double>& scores,
                                           const std::vector<bool>& gold) {
  std::vector<PredictionRecord> out;
  for (size_t i = 0; i < scores.size(); ++i) {
    out.push_back({"p" + std::to_string(i), 1, scores[i], gold[i]});
  }
  return out;
}

// quadratic oracle: precision and recall recomputed from scratch at each cut
std::vector<std::pair<double, double>> pr_oracle(std::vector<PredictionRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  size_t total_gold = 0;
  for (const auto& r : records) total_gold += r.gold ? 1 : 0;
  std::vector<std::pair<double, double>> out;
  for (size_t cut = 1; cut <= records.size(); ++cut) {
    size_t g = 0;
    for (size_t i = 0; i < cut; ++i) g += records[i].gold ? 1 : 0;
    out.emplace_back(static_cast<double>(g) / cut, static_cast<double>(g) / total_gold);
  }
  return out;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("perfect ranking gives precision one and auc one") {
  std::vector<PredictionRecord> records;
  for (int i = 0; i < 6; ++i) {
    records.push_back({"p" + std::to_string(i), 1, 10.0 - i, i < 3});
  }
  auto curve = pr_curve(records);
  for (size_t k = 0; k < 3; ++k) CHECK(curve.points[k].precision == 1.0);
  CHECK(curve.points[2].recall == 1.0);
  CHECK(curve.auc == doctest::Approx(1.0));
}

TEST_CASE("hand-enumerated four-record curve") {
  // gold pattern (1,0,1,0) by score order
  auto records = records_from({4, 3, 2, 1}, {true, false, true, false});
  auto curve = pr_curve(records);
  REQUIRE(curve.points.size() == 4);
  CHECK(curve.points[0].precision == doctest::Approx(1.0));
  CHECK(curve.points[1].precision == doctest::Approx(0.5));
  CHECK(curve.points[2].precision == doctest::Approx(2.0 / 3));
  CHECK(curve.points[3].precision == doctest::Approx(0.5));
  CHECK(curve.points[0].recall == doctest::Approx(0.5));
  CHECK(curve.points[1].recall == doctest::Approx(0.5));
  CHECK(curve.points[2].recall == doctest::Approx(1.0));
  CHECK(curve.points[3].recall == doctest::Approx(1.0));
}

TEST_CASE("curve equals the quadratic oracle on random scores") {
  Rng rng(3);
  for (int it = 0; it < 40; ++it) {
    const size_t n = 2 + rng.uniform_int(30);
    std::vector<PredictionRecord> records;
    bool any_gold = false;
    for (size_t i = 0; i < n; ++i) {
      const bool gold = rng.coin();
      any_gold = any_gold || gold;
      records.push_back({"p" + std::to_string(i), 1, rng.uniform(-1, 1), gold});
    }
    if (!any_gold) records[0].gold = true;
    auto curve = pr_curve(records);
    auto expect = pr_oracle(records);
    REQUIRE(curve.points.size() == expect.size());
    for (size_t k = 0; k < expect.size(); ++k) {
      CHECK(curve.points[k].precision == expect[k].first);
      CHECK(curve.points[k].recall == expect[k].second);
    }
    // recall never decreases and ends at one
    for (size_t k = 1; k < curve.points.size(); ++k) {
      CHECK(curve.points[k].recall >= curve.points[k - 1].recall);
    }
    CHECK(curve.points.back().recall == 1.0);
  }
}

TEST_CASE("curves are invariant to input permutation for distinct scores") {
  Rng rng(5);
  std::vector<PredictionRecord> records;
  for (size_t i = 0; i < 12; ++i) {
    records.push_back({"p" + std::to_string(i), 1, static_cast<double>(i) * 1.25, rng.coin()});
  }
  records[3].gold = true;
  auto base = pr_curve(records);
  for (int it = 0; it < 5; ++it) {
    rng.shuffle(records);
    auto again = pr_curve(records);
    for (size_t k = 0; k < base.points.size(); ++k) {
      CHECK(again.points[k].precision == base.points[k].precision);
      CHECK(again.points[k].recall == base.points[k].recall);
    }
    CHECK(again.auc == base.auc);
  }
}

TEST_CASE("pr curve rejects all-negative inputs") {
  CHECK_THROWS_AS(pr_curve(records_from({1, 2}, {false, false})), Error);
}

TEST_CASE("precision at n on a synthetic perfect and 80 percent scorer") {
  auto vocab = RelationVocab::from_names({"NA", "r1", "r2", "r3", "r4", "r5"});
  // 40 pairs, 2 instances each; gold relation = pair index % 5 + 1
  std::vector<EvalBag> bags;
  for (size_t p = 0; p < 40; ++p) {
    EvalBag bag;
    bag.pair_id = "pair" + std::to_string(p);
    Rng rng(p);
    bag.instances = {toy::make_instance(rng, p % 5 + 1), toy::make_instance(rng, p % 5 + 1)};
    bag.gold = {p % 5 + 1};
    bags.push_back(bag);
  }
  // a perfect scorer reads the gold set through a side channel
  size_t cursor = 0;
  BagScorer perfect = [&](const std::vector<Instance>&) {
    std::vector<double> s(vocab.names.size(), 0.0);
    s[bags[cursor % bags.size()].instances[0].relation] = 1.0;
    ++cursor;
    return s;
  };
  cursor = 0;
  auto res = precision_at_n(bags, perfect, vocab, TestMode::All, {10, 20, 40}, 1);
  for (double p : res.precision) CHECK(p == 1.0);
  CHECK(res.mean == 1.0);

  // exactly one instance retained per bag in ONE mode
  cursor = 0;
  std::vector<size_t> seen_sizes;
  BagScorer watcher = [&](const std::vector<Instance>& instances) {
    seen_sizes.push_back(instances.size());
    std::vector<double> s(vocab.names.size(), 0.5);
    return s;
  };
  precision_at_n(bags, watcher, vocab, TestMode::One, {10}, 7);
  for (size_t s : seen_sizes) CHECK(s == 1);

  // 100 records with 80 gold in front: p@100 = 0.8
  std::vector<EvalBag> wide;
  for (size_t p = 0; p < 25; ++p) {
    EvalBag bag;
    bag.pair_id = "w" + std::to_string(p);
    Rng rng(p + 100);
    bag.instances = {toy::make_instance(rng, 1), toy::make_instance(rng, 1)};
    // 4 of 5 non-NA candidates per pair are gold: 100 of 125 records
    bag.gold = {1, 2, 3, 4};
    wide.push_back(bag);
  }
  BagScorer gold_biased = [&](const std::vector<Instance>&) {
    std::vector<double> s(vocab.names.size(), 0.0);
    s[1] = s[2] = s[3] = s[4] = 1.0;  // gold candidates outrank r5
    return s;
  };
  auto res80 = precision_at_n(wide, gold_biased, vocab, TestMode::Two, {125}, 3);
  CHECK(res80.precision[0] == doctest::Approx(0.8));

  CHECK_THROWS_WITH_AS(precision_at_n(bags, perfect, vocab, TestMode::All, {9999}, 1),
                       doctest::Contains("200"), Error);
}

TEST_CASE("one and two mode subsampling is reproducible per seed") {
  auto vocab = RelationVocab::from_names({"NA", "r1", "r2"});
  std::vector<EvalBag> bags;
  Rng rng(9);
  for (size_t p = 0; p < 10; ++p) {
    EvalBag bag;
    bag.pair_id = "pair" + std::to_string(p);
    for (int i = 0; i < 4; ++i) bag.instances.push_back(toy::make_instance(rng, 1));
    bag.gold = {1};
    bags.push_back(bag);
  }
  auto capture = [&](uint64_t seed) {
    std::vector<std::vector<size_t>> picked;
    BagScorer watcher = [&](const std::vector<Instance>& instances) {
      std::vector<size_t> tokens;
      for (const auto& inst : instances) tokens.push_back(inst.tokens[0]);
      picked.push_back(tokens);
      return std::vector<double>(vocab.names.size(), 0.5);
    };
    precision_at_n(bags, watcher, vocab, TestMode::Two, {5}, seed);
    return picked;
  };
  CHECK(capture(42) == capture(42));
  CHECK(capture(42) != capture(43));
}

TEST_CASE("macro hits analytic cases") {
  RelationVocab vocab = RelationVocab::from_names({"NA", "tail1", "tail2", "head"});
  vocab.train_counts = {0, 5, 7, 500};

  // single tail relation whose only pair ranks it third: hits@10 == 1
  std::vector<PredictionRecord> records{
      {"p0", 1, 0.3, true},  // tail1 at rank 3
      {"p0", 2, 0.9, false},
      {"p0", 3, 0.5, false},
  };
  CHECK(macro_hits_at_k(records, vocab, 100, 10) == 1.0);
  CHECK(macro_hits_at_k(records, vocab, 100, 2) == 0.0);

  // hit rates 1.0 and 0.0 average to 0.5 regardless of pair counts
  std::vector<PredictionRecord> two{
      {"a", 1, 0.9, true},  {"a", 2, 0.1, false}, {"a", 3, 0.5, false},
      {"b", 1, 0.8, true},  {"b", 2, 0.2, false}, {"b", 3, 0.1, false},
      {"c", 1, 0.4, false}, {"c", 2, 0.2, true},  {"c", 3, 0.9, false},
  };
  CHECK(macro_hits_at_k(two, vocab, 100, 1) == doctest::Approx(0.5));

  RelationVocab empty_vocab = RelationVocab::from_names({"NA", "head"});
  empty_vocab.train_counts = {0, 500};
  CHECK_THROWS_AS(macro_hits_at_k(two, empty_vocab, 100, 10), Error);
}

TEST_CASE("macro hits equals a full-sort oracle on random tables") {
  Rng rng(11);
  for (int it = 0; it < 40; ++it) {
    const size_t nrel = 5, pairs = 20;
    std::vector<std::string> names{"NA"};
    for (size_t r = 1; r <= nrel; ++r) names.push_back("r" + std::to_string(r));
    auto vocab = RelationVocab::from_names(names);
    for (size_t r = 0; r < vocab.names.size(); ++r) {
      vocab.train_counts[r] = rng.uniform_int(200);
    }
    std::vector<PredictionRecord> records;
    for (size_t p = 0; p < pairs; ++p) {
      for (size_t r = 1; r <= nrel; ++r) {
        records.push_back({"p" + std::to_string(p), r, rng.uniform(-1, 1),
                           rng.uniform_int(4) == 0});
      }
    }
    const size_t threshold = 100, k = 1 + rng.uniform_int(3);

    // oracle: full sort per pair, unweighted mean over qualifying relations
    double macro = 0.0;
    size_t qualifying = 0;
    for (size_t r = 1; r <= nrel; ++r) {
      if (vocab.train_counts[r] >= threshold) continue;
      size_t hit = 0, total = 0;
      for (size_t p = 0; p < pairs; ++p) {
        std::vector<const PredictionRecord*> rows;
        for (const auto& rec : records) {
          if (rec.pair == "p" + std::to_string(p)) rows.push_back(&rec);
        }
        const PredictionRecord* own = nullptr;
        for (const auto* rec : rows) {
          if (rec->relation == r) own = rec;
        }
        if (!own->gold) continue;
        ++total;
        std::stable_sort(rows.begin(), rows.end(),
                         [](const auto* a, const auto* b) { return a->score > b->score; });
        const size_t rank =
            std::find(rows.begin(), rows.end(), own) - rows.begin() + 1;
        if (rank <= k) ++hit;
      }
      if (total == 0) continue;
      macro += static_cast<double>(hit) / total;
      ++qualifying;
    }
    if (qualifying == 0) continue;
    CHECK(macro_hits_at_k(records, vocab, threshold, k) ==
          doctest::Approx(macro / qualifying).epsilon(1e-12));
  }
}

TEST_CASE("macro hits ignore per-relation pair multiplicity") {
  RelationVocab vocab = RelationVocab::from_names({"NA", "tail", "other"});
  vocab.train_counts = {0, 3, 400};
  std::vector<PredictionRecord> records{
      {"a", 1, 0.9, true}, {"a", 2, 0.1, false},
      {"b", 1, 0.1, true}, {"b", 2, 0.9, false},
  };
  const double base = macro_hits_at_k(records, vocab, 100, 1);
  CHECK(base == doctest::Approx(0.5));
  // duplicate every pair of the relation with the same outcomes: the
  // unweighted per-relation rate, and so the macro, cannot move
  std::vector<PredictionRecord> dup = records;
  dup.push_back({"a2", 1, 0.9, true});
  dup.push_back({"a2", 2, 0.1, false});
  dup.push_back({"b2", 1, 0.1, true});
  dup.push_back({"b2", 2, 0.9, false});
  CHECK(macro_hits_at_k(dup, vocab, 100, 1) == doctest::Approx(base));
}

TEST_CASE("eval bags group test instances by pair across labels") {
  auto vocab = RelationVocab::from_names({"NA", "r1", "r2"});
  Rng rng(13);
  std::vector<Instance> test;
  for (int i = 0; i < 3; ++i) {
    auto inst = toy::make_instance(rng, i == 2 ? 2 : 1);
    inst.head = "x";
    inst.tail = "y";
    test.push_back(inst);
  }
  auto na_inst = toy::make_instance(rng, 0);
  na_inst.head = "x";
  na_inst.tail = "y";
  test.push_back(na_inst);
  auto bags = build_eval_bags(test, vocab);
  REQUIRE(bags.size() == 1);
  CHECK(bags[0].instances.size() == 4);
  CHECK(bags[0].gold == std::set<size_t>{1, 2});
}

TEST_CASE("class embedding export round-trips and tags layers") {
  auto model = toy::make_model(AttentionKind::Katt, 91);
  const auto path = temp_path("relex_classes.tsv");
  export_class_embeddings(model, path);
  auto loaded = Embeddings::load(path);
  CHECK(loaded.count() == model.graph.node_count());
  auto table = model.class_table();
  for (size_t i = 0; i < model.graph.node_count(); ++i) {
    const auto& node = model.graph.node(static_cast<int>(i));
    const auto& vec = loaded.at(node.id + "|L" + std::to_string(node.layer));
    for (size_t j = 0; j < vec.size(); ++j) {
      CHECK(vec[j] == doctest::Approx(table.q[i].values()[j]).epsilon(1e-15));
    }
  }

  // zero gcn parameters leave the explicit half zero in the export
  auto zeroed = toy::make_model(AttentionKind::Katt, 92);
  for (auto& t : zeroed.gcn.tensors()) {
    Tensor handle = t;
    std::fill(handle.values_mut().begin(), handle.values_mut().end(), 0.0);
  }
  export_class_embeddings(zeroed, path);
  auto zl = Embeddings::load(path);
  for (size_t i = 0; i < zeroed.graph.node_count(); ++i) {
    const auto& node = zeroed.graph.node(static_cast<int>(i));
    const auto& vec = zl.at(node.id + "|L" + std::to_string(node.layer));
    for (size_t j = zeroed.cfg.kg_dim; j < vec.size(); ++j) CHECK(vec[j] == 0.0);
  }
  std::remove(path.c_str());
}

}  // TEST_SUITE
