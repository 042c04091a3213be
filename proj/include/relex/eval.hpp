#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "relex/model.hpp"

namespace relex {

// One ranked candidate: is relation `relation` a fact about `pair`?
struct PredictionRecord {
  std::string pair;
  size_t relation = 0;  // never NA
  double score = 0.0;
  bool gold = false;
};

// Test instances of one entity pair; gold holds the pair's non-NA labels.
struct EvalBag {
  std::string pair_id;
  std::vector<Instance> instances;
  std::set<size_t> gold;
};

std::vector<EvalBag> build_eval_bags(const std::vector<Instance>& test_instances,
                                     const RelationVocab& vocab);

// Full score vector over the relation vocabulary for one bag of instances.
using BagScorer = std::function<std::vector<double>(const std::vector<Instance>&)>;

// Evaluation-mode scorer over a trained model; the class table is computed
// once up front.
BagScorer model_scorer(const Model& model);

// One record per (pair, non-NA relation), bags in order, relations in vocab
// order. That order breaks ranking ties.
std::vector<PredictionRecord> score_records(const std::vector<EvalBag>& bags,
                                            const BagScorer& scorer,
                                            const RelationVocab& vocab);

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // point k = top-(k+1) cut
  double auc = 0.0;             // trapezoid over recall, anchored at (0, 1)
};

PrCurve pr_curve(const std::vector<PredictionRecord>& records);

enum class TestMode { One, Two, All };
TestMode parse_test_mode(const std::string& name);
std::string test_mode_name(TestMode mode);

struct PrecisionAtN {
  TestMode mode = TestMode::All;
  std::vector<size_t> cutoffs;
  std::vector<double> precision;  // aligned with cutoffs
  double mean = 0.0;
};

// Restricted to pairs with at least two instances; ONE/TWO keep a seeded
// random subset of that size, ALL keeps every instance.
PrecisionAtN precision_at_n(const std::vector<EvalBag>& bags, const BagScorer& scorer,
                            const RelationVocab& vocab, TestMode mode,
                            const std::vector<size_t>& cutoffs, uint64_t seed);

// Macro average over relations with 0 <= train count < threshold of the
// fraction of their gold pairs ranked within the top k candidates.
double macro_hits_at_k(const std::vector<PredictionRecord>& records,
                       const RelationVocab& vocab, size_t freq_threshold, size_t k);

void write_pr_csv(const PrCurve& curve, const std::string& path);
void write_patn_csv(const std::vector<PrecisionAtN>& rows, const std::string& path);

struct HitsCell {
  size_t freq_threshold = 0;
  size_t k = 0;
  double value = 0.0;
};
void write_hits_csv(const std::vector<HitsCell>& cells, const std::string& path);

void write_attention_csv(const std::vector<Model::AttentionRow>& rows,
                         const std::string& path);

// Every hierarchy node's class embedding in the text embedding format, the
// identifier tagged as `<node_id>|L<layer>`.
void export_class_embeddings(const Model& model, const std::string& path);

}  // namespace relex
