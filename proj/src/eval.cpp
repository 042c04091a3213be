#include "relex/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>

#include "relex/errors.hpp"
#include "relex/kg.hpp"

namespace relex {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// indices of records by descending score; ties keep input order
std::vector<size_t> ranking(const std::vector<PredictionRecord>& records) {
  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return records[a].score > records[b].score;
  });
  return order;
}

}  // namespace

std::vector<EvalBag> build_eval_bags(const std::vector<Instance>& test_instances,
                                     const RelationVocab& vocab) {
  std::vector<EvalBag> bags;
  std::map<std::string, size_t> index;
  for (const auto& inst : test_instances) {
    require_data(inst.relation < vocab.names.size(),
                 "eval: instance labeled with an unknown relation id");
    const std::string pair = inst.head + "\t" + inst.tail;
    auto it = index.find(pair);
    if (it == index.end()) {
      it = index.emplace(pair, bags.size()).first;
      bags.push_back({pair, {}, {}});
    }
    bags[it->second].instances.push_back(inst);
    if (!vocab.is_na(inst.relation)) bags[it->second].gold.insert(inst.relation);
  }
  return bags;
}

BagScorer model_scorer(const Model& model) {
  auto table = std::make_shared<ClassEmbeddingTable>(model.class_table());
  const Model* m = &model;
  return [m, table](const std::vector<Instance>& instances) {
    return m->predict(m->encode_bag(instances, nullptr, false), *table);
  };
}

std::vector<PredictionRecord> score_records(const std::vector<EvalBag>& bags,
                                            const BagScorer& scorer,
                                            const RelationVocab& vocab) {
  std::vector<PredictionRecord> records;
  for (const auto& bag : bags) {
    const auto scores = scorer(bag.instances);
    require_data(scores.size() == vocab.names.size(),
                 "eval: scorer returned a vector of the wrong size");
    for (size_t r = 0; r < scores.size(); ++r) {
      if (vocab.is_na(r)) continue;
      records.push_back({bag.pair_id, r, scores[r], bag.gold.count(r) > 0});
    }
  }
  return records;
}

PrCurve pr_curve(const std::vector<PredictionRecord>& records) {
  size_t total_gold = 0;
  for (const auto& r : records) total_gold += r.gold ? 1 : 0;
  require_data(total_gold >= 1, "pr_curve: no gold-positive records");

  const auto order = ranking(records);
  PrCurve curve;
  size_t gold_seen = 0;
  double prev_p = 1.0, prev_r = 0.0;  // anchor
  for (size_t k = 0; k < order.size(); ++k) {
    if (records[order[k]].gold) ++gold_seen;
    PrPoint pt;
    pt.precision = static_cast<double>(gold_seen) / static_cast<double>(k + 1);
    pt.recall = static_cast<double>(gold_seen) / static_cast<double>(total_gold);
    curve.points.push_back(pt);
    curve.auc += (pt.recall - prev_r) * (pt.precision + prev_p) / 2.0;
    prev_p = pt.precision;
    prev_r = pt.recall;
  }
  return curve;
}

TestMode parse_test_mode(const std::string& name) {
  if (name == "one" || name == "ONE") return TestMode::One;
  if (name == "two" || name == "TWO") return TestMode::Two;
  if (name == "all" || name == "ALL") return TestMode::All;
  throw_usage("unknown test mode '" + name + "' (expected one|two|all)");
}

std::string test_mode_name(TestMode mode) {
  switch (mode) {
    case TestMode::One: return "ONE";
    case TestMode::Two: return "TWO";
    default: return "ALL";
  }
}

PrecisionAtN precision_at_n(const std::vector<EvalBag>& bags, const BagScorer& scorer,
                            const RelationVocab& vocab, TestMode mode,
                            const std::vector<size_t>& cutoffs, uint64_t seed) {
  require_data(!cutoffs.empty(), "precision_at_n: no cutoffs");
  // the mode family evaluates entity pairs with more than one instance
  Rng rng(seed);
  std::vector<EvalBag> restricted;
  for (const auto& bag : bags) {
    if (bag.instances.size() < 2) continue;
    EvalBag keep = bag;
    if (mode != TestMode::All) {
      const size_t want = mode == TestMode::One ? 1 : 2;
      std::vector<size_t> ids(bag.instances.size());
      std::iota(ids.begin(), ids.end(), 0);
      rng.shuffle(ids);
      ids.resize(want);
      std::sort(ids.begin(), ids.end());
      keep.instances.clear();
      for (size_t id : ids) keep.instances.push_back(bag.instances[id]);
    }
    restricted.push_back(std::move(keep));
  }
  const auto records = score_records(restricted, scorer, vocab);
  const size_t max_n = *std::max_element(cutoffs.begin(), cutoffs.end());
  require_data(records.size() >= max_n,
               "precision_at_n: only " + std::to_string(records.size()) +
                   " records for a top-" + std::to_string(max_n) + " cut");
  const auto order = ranking(records);

  PrecisionAtN out;
  out.mode = mode;
  out.cutoffs = cutoffs;
  for (size_t n : cutoffs) {
    size_t gold = 0;
    for (size_t k = 0; k < n; ++k) gold += records[order[k]].gold ? 1 : 0;
    out.precision.push_back(static_cast<double>(gold) / static_cast<double>(n));
  }
  out.mean = std::accumulate(out.precision.begin(), out.precision.end(), 0.0) /
             static_cast<double>(out.precision.size());
  return out;
}

double macro_hits_at_k(const std::vector<PredictionRecord>& records,
                       const RelationVocab& vocab, size_t freq_threshold, size_t k) {
  require_data(vocab.train_counts.size() == vocab.names.size(),
               "macro_hits_at_k: vocabulary lacks training counts");
  // per pair, candidates in input (vocab) order
  std::map<std::string, std::vector<const PredictionRecord*>> by_pair;
  for (const auto& r : records) by_pair[r.pair].push_back(&r);

  double macro = 0.0;
  size_t qualifying = 0;
  for (size_t rel = 0; rel < vocab.names.size(); ++rel) {
    if (vocab.is_na(rel) || vocab.train_counts[rel] >= freq_threshold) continue;
    size_t pairs = 0, hits = 0;
    for (const auto& [pair, rows] : by_pair) {
      const PredictionRecord* own = nullptr;
      for (const auto* r : rows) {
        if (r->relation == rel) {
          own = r;
          break;
        }
      }
      if (own == nullptr || !own->gold) continue;
      ++pairs;
      // rank under a stable descending sort: strictly higher scores and
      // earlier-vocab ties come first
      size_t rank = 1;
      for (const auto* r : rows) {
        if (r == own) continue;
        if (r->score > own->score || (r->score == own->score && r->relation < rel)) ++rank;
      }
      if (rank <= k) ++hits;
    }
    if (pairs == 0) continue;  // no test pair carries this relation
    macro += static_cast<double>(hits) / static_cast<double>(pairs);
    ++qualifying;
  }
  require_data(qualifying > 0,
               "macro_hits_at_k: no relation below the frequency threshold has test pairs");
  return macro / static_cast<double>(qualifying);
}

void write_pr_csv(const PrCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write " + path);
  out << "rank,precision,recall\n";
  for (size_t k = 0; k < curve.points.size(); ++k) {
    out << (k + 1) << ',' << format_double(curve.points[k].precision) << ','
        << format_double(curve.points[k].recall) << '\n';
  }
  out << "# auc = " << format_double(curve.auc) << '\n';
}

void write_patn_csv(const std::vector<PrecisionAtN>& rows, const std::string& path) {
  require_data(!rows.empty(), "write_patn_csv: nothing to write");
  std::ofstream out(path);
  if (!out) throw_data("cannot write " + path);
  out << "mode";
  for (size_t n : rows[0].cutoffs) out << ",p@" << n;
  out << ",mean\n";
  for (const auto& row : rows) {
    out << test_mode_name(row.mode);
    for (double p : row.precision) out << ',' << format_double(p);
    out << ',' << format_double(row.mean) << '\n';
  }
}

void write_hits_csv(const std::vector<HitsCell>& cells, const std::string& path) {
  require_data(!cells.empty(), "write_hits_csv: nothing to write");
  std::ofstream out(path);
  if (!out) throw_data("cannot write " + path);
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << "hits@" << cells[i].k << "_lt" << cells[i].freq_threshold;
  }
  out << '\n';
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << format_double(cells[i].value);
  }
  out << '\n';
}

void write_attention_csv(const std::vector<Model::AttentionRow>& rows,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write " + path);
  out << "bag_id,layer,node_id,instance_index,alpha\n";
  for (const auto& r : rows) {
    out << r.bag_id << ',' << r.layer << ',' << r.node_id << ',' << r.instance_index << ','
        << format_double(r.alpha) << '\n';
  }
}

void export_class_embeddings(const Model& model, const std::string& path) {
  require_data(model.is_katt(), "class embeddings exist only for the knowledge-aware model");
  const auto table = model.class_table();
  Embeddings out;
  for (size_t i = 0; i < model.graph.node_count(); ++i) {
    const auto& node = model.graph.node(static_cast<int>(i));
    out.add(node.id + "|L" + std::to_string(node.layer), table.q[i].values());
  }
  out.save(path);
}

}  // namespace relex
