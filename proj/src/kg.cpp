#include "relex/kg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "relex/errors.hpp"

namespace relex {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, const std::string& path, size_t line_no) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw_data(path + ":" + std::to_string(line_no) + ": unparseable number '" + tok + "'");
  }
  if (used != tok.size()) {
    throw_data(path + ":" + std::to_string(line_no) + ": unparseable number '" + tok + "'");
  }
  return v;
}

void l2_normalize(std::vector<double>& v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  const double n = std::sqrt(n2);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

}  // namespace

uint64_t TripleStore::key(size_t h, size_t r, size_t t) const {
  // mixes well for desk-scale id ranges
  return (static_cast<uint64_t>(h) * 0x9e3779b97f4a7c15ULL) ^
         (static_cast<uint64_t>(r) * 0xc2b2ae3d27d4eb4fULL) ^
         (static_cast<uint64_t>(t) + 0x165667b19e3779f9ULL);
}

size_t TripleStore::intern_entity(const std::string& name) {
  auto it = entity_ids_.find(name);
  if (it != entity_ids_.end()) return it->second;
  entity_names_.push_back(name);
  entity_ids_[name] = entity_names_.size() - 1;
  return entity_names_.size() - 1;
}

size_t TripleStore::intern_relation(const std::string& name) {
  auto it = relation_ids_.find(name);
  if (it != relation_ids_.end()) return it->second;
  relation_names_.push_back(name);
  relation_ids_[name] = relation_names_.size() - 1;
  return relation_names_.size() - 1;
}

bool TripleStore::add_fact(const std::string& h, const std::string& r, const std::string& t) {
  // interning order must not depend on argument evaluation order
  const size_t hid = intern_entity(h);
  const size_t rid = intern_relation(r);
  const size_t tid = intern_entity(t);
  return add_fact(hid, rid, tid);
}

bool TripleStore::add_fact(size_t h, size_t r, size_t t) {
  require_data(h < entity_count() && t < entity_count() && r < relation_count(),
               "add_fact: unknown entity or relation id");
  if (contains(h, r, t)) return false;
  facts_.push_back({h, r, t});
  fact_keys_.insert(key(h, r, t));
  return true;
}

bool TripleStore::contains(size_t h, size_t r, size_t t) const {
  if (fact_keys_.count(key(h, r, t)) == 0) return false;
  // verify against the slim chance of a key collision
  for (const auto& f : facts_) {
    if (f.head == h && f.relation == r && f.tail == t) return true;
  }
  return false;
}

std::optional<size_t> TripleStore::entity_id(const std::string& name) const {
  auto it = entity_ids_.find(name);
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<size_t> TripleStore::relation_id(const std::string& name) const {
  auto it = relation_ids_.find(name);
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

TripleStore TripleStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open triple file " + path);
  TripleStore store;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string h, r, t;
    if (!std::getline(ls, h, '\t') || !std::getline(ls, r, '\t') || !std::getline(ls, t, '\t') ||
        h.empty() || r.empty() || t.empty()) {
      throw_data(path + ":" + std::to_string(line_no) + ": expected `head\\trelation\\ttail`");
    }
    store.add_fact(h, r, t);
  }
  return store;
}

void TripleStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw_data("cannot write triple file " + path);
  for (const auto& f : facts_) {
    out << entity_names_[f.head] << '\t' << relation_names_[f.relation] << '\t'
        << entity_names_[f.tail] << '\n';
  }
}

void Embeddings::add(const std::string& id, std::vector<double> vec) {
  require_data(!index_.count(id), "duplicate embedding identifier '" + id + "'");
  if (order_.empty()) {
    dimension_ = vec.size();
  } else if (vec.size() != dimension_) {
    throw_data("embedding dimension mismatch for '" + id + "': expected " +
               std::to_string(dimension_) + ", got " + std::to_string(vec.size()));
  }
  order_.push_back(id);
  index_.emplace(id, std::move(vec));
}

const std::vector<double>& Embeddings::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw_data("no embedding for identifier '" + id + "'");
  return it->second;
}

Embeddings Embeddings::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open embedding file " + path);
  Embeddings table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw_data(path + ":" + std::to_string(line_no) + ": expected `<identifier>\\t<values>`");
    }
    const std::string id = line.substr(0, tab);
    std::istringstream vs(line.substr(tab + 1));
    std::vector<double> vec;
    std::string tok;
    while (vs >> tok) vec.push_back(parse_double(tok, path, line_no));
    if (vec.empty()) {
      throw_data(path + ":" + std::to_string(line_no) + ": record has no values");
    }
    if (table.count() > 0 && vec.size() != table.dimension()) {
      throw_data(path + ":" + std::to_string(line_no) + ": dimension " +
                 std::to_string(vec.size()) + " differs from " +
                 std::to_string(table.dimension()));
    }
    if (table.has(id)) {
      throw_data(path + ":" + std::to_string(line_no) + ": duplicate identifier '" + id + "'");
    }
    table.add(id, std::move(vec));
  }
  return table;
}

void Embeddings::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw_data("cannot write embedding file " + path);
  for (const auto& id : order_) {
    out << id << '\t';
    const auto& vec = index_.at(id);
    for (size_t i = 0; i < vec.size(); ++i) {
      if (i) out << ' ';
      out << format_double(vec[i]);
    }
    out << '\n';
  }
}

EmbeddingTable EmbeddingTable::load(const std::string& stem) {
  EmbeddingTable t;
  t.entities = Embeddings::load(stem + ".entities");
  t.relations = Embeddings::load(stem + ".relations");
  if (t.entities.count() && t.relations.count() &&
      t.entities.dimension() != t.relations.dimension()) {
    throw_data("entity and relation embeddings disagree on dimension");
  }
  return t;
}

void EmbeddingTable::save(const std::string& stem) const {
  entities.save(stem + ".entities");
  relations.save(stem + ".relations");
}

double score_triple(const std::vector<double>& h, const std::vector<double>& r,
                    const std::vector<double>& t, int norm) {
  require_data(h.size() == r.size() && r.size() == t.size(),
               "score_triple: dimension mismatch");
  require_data(norm == 1 || norm == 2, "score_triple: norm order must be 1 or 2");
  double acc = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    const double d = h[i] + r[i] - t[i];
    acc += norm == 1 ? std::abs(d) : d * d;
  }
  return norm == 1 ? acc : std::sqrt(acc);
}

std::optional<Triple> sample_negative(const TripleStore& store, const Triple& fact, Rng& rng) {
  const size_t n = store.entity_count();
  const size_t attempts = n * 20 + 10;
  for (size_t i = 0; i < attempts; ++i) {
    Triple cand = fact;
    const bool corrupt_head = rng.coin();
    const size_t repl = rng.uniform_int(n);
    if (corrupt_head) {
      cand.head = repl;
    } else {
      cand.tail = repl;
    }
    if (!store.contains(cand.head, cand.relation, cand.tail)) return cand;
  }
  return std::nullopt;
}

TransEResult train_transe(const TripleStore& store, const TransEConfig& cfg) {
  require_data(store.fact_count() > 0, "train_transe: empty triple store");
  require_data(cfg.dimension >= 1 && cfg.margin > 0.0, "train_transe: invalid configuration");
  std::vector<size_t> relation_uses(store.relation_count(), 0);
  for (const auto& f : store.facts()) relation_uses[f.relation]++;
  for (size_t r = 0; r < relation_uses.size(); ++r) {
    if (relation_uses[r] == 0) {
      throw_data("train_transe: relation '" + store.relation_name(r) + "' has no facts");
    }
  }

  Rng rng(cfg.seed);
  const size_t d = cfg.dimension;
  const double init = 6.0 / std::sqrt(static_cast<double>(d));
  std::vector<std::vector<double>> ent(store.entity_count()), rel(store.relation_count());
  for (auto& v : ent) {
    v.resize(d);
    for (double& x : v) x = rng.uniform(-init, init);
    l2_normalize(v);
  }
  for (auto& v : rel) {
    v.resize(d);
    for (double& x : v) x = rng.uniform(-init, init);
    l2_normalize(v);
  }

  // gradient of ||v||_p w.r.t. v
  auto norm_grad = [&](const std::vector<double>& h, const std::vector<double>& r,
                       const std::vector<double>& t) {
    std::vector<double> g(d);
    if (cfg.norm == 1) {
      for (size_t i = 0; i < d; ++i) {
        const double v = h[i] + r[i] - t[i];
        g[i] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      }
    } else {
      double n2 = 0.0;
      for (size_t i = 0; i < d; ++i) {
        const double v = h[i] + r[i] - t[i];
        g[i] = v;
        n2 += v * v;
      }
      const double n = std::sqrt(n2);
      if (n > 0.0) {
        for (double& x : g) x /= n;
      }
    }
    return g;
  };

  // Exact expected margin loss under the uniform filtered corruption
  // distribution. Noise-free, unlike the per-sample hinge averages, so the
  // reported curve reflects the objective rather than the sampling.
  auto expected_loss = [&] {
    double total = 0.0;
    size_t terms = 0;
    for (const auto& f : store.facts()) {
      const double pos_score =
          score_triple(ent[f.head], rel[f.relation], ent[f.tail], cfg.norm);
      for (int side = 0; side < 2; ++side) {
        for (size_t c = 0; c < store.entity_count(); ++c) {
          Triple cand = f;
          (side ? cand.tail : cand.head) = c;
          if (store.contains(cand.head, cand.relation, cand.tail)) continue;
          const double neg_score =
              score_triple(ent[cand.head], rel[cand.relation], ent[cand.tail], cfg.norm);
          total += std::max(0.0, cfg.margin + pos_score - neg_score);
          ++terms;
        }
      }
    }
    return terms ? total / static_cast<double>(terms) : 0.0;
  };

  TransEResult result;
  std::vector<size_t> order(store.fact_count());
  std::iota(order.begin(), order.end(), 0);

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // linear decay settles the iterates instead of bouncing around the optimum
    const double lr =
        cfg.learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
    rng.shuffle(order);
    for (size_t idx : order) {
      const Triple& pos = store.facts()[idx];
      for (size_t neg_i = 0; neg_i < cfg.negatives_per_positive; ++neg_i) {
        auto neg = sample_negative(store, pos, rng);
        if (!neg) continue;
        const double pos_score = score_triple(ent[pos.head], rel[pos.relation], ent[pos.tail], cfg.norm);
        const double neg_score = score_triple(ent[neg->head], rel[neg->relation], ent[neg->tail], cfg.norm);
        const double loss = cfg.margin + pos_score - neg_score;
        if (loss <= 0.0) continue;
        const auto gp = norm_grad(ent[pos.head], rel[pos.relation], ent[pos.tail]);
        const auto gn = norm_grad(ent[neg->head], rel[neg->relation], ent[neg->tail]);
        for (size_t i = 0; i < d; ++i) {
          // descend the positive score, ascend the negative score
          ent[pos.head][i] -= lr * gp[i];
          rel[pos.relation][i] -= lr * gp[i];
          ent[pos.tail][i] += lr * gp[i];
          ent[neg->head][i] += lr * gn[i];
          rel[neg->relation][i] += lr * gn[i];
          ent[neg->tail][i] -= lr * gn[i];
        }
      }
    }
    for (auto& v : ent) l2_normalize(v);
    result.epoch_loss.push_back(expected_loss());
  }

  for (size_t e = 0; e < ent.size(); ++e) {
    result.table.entities.add(store.entity_name(e), std::move(ent[e]));
  }
  for (size_t r = 0; r < rel.size(); ++r) {
    result.table.relations.add(store.relation_name(r), std::move(rel[r]));
  }
  return result;
}

LinkPredictionResult link_prediction_eval(const EmbeddingTable& table, const TripleStore& store,
                                          int norm) {
  require_data(store.fact_count() > 0, "link_prediction_eval: empty store");
  for (size_t e = 0; e < store.entity_count(); ++e) {
    require_data(table.entities.has(store.entity_name(e)),
                 "link_prediction_eval: missing entity vector for " + store.entity_name(e));
  }
  for (size_t r = 0; r < store.relation_count(); ++r) {
    require_data(table.relations.has(store.relation_name(r)),
                 "link_prediction_eval: missing relation vector for " + store.relation_name(r));
  }

  double rank_sum = 0.0;
  size_t hits = 0;
  for (const auto& f : store.facts()) {
    const auto& h = table.entities.at(store.entity_name(f.head));
    const auto& r = table.relations.at(store.relation_name(f.relation));
    const double true_score = score_triple(h, r, table.entities.at(store.entity_name(f.tail)), norm);
    size_t rank = 1;
    for (size_t c = 0; c < store.entity_count(); ++c) {
      if (c == f.tail) continue;
      if (store.contains(f.head, f.relation, c)) continue;  // filtered setting
      const double s = score_triple(h, r, table.entities.at(store.entity_name(c)), norm);
      if (s < true_score) ++rank;
    }
    rank_sum += static_cast<double>(rank);
    if (rank <= 10) ++hits;
  }
  const double n = static_cast<double>(store.fact_count());
  return {rank_sum / n, static_cast<double>(hits) / n};
}

TripleStore toy_chain_kg() {
  TripleStore store;
  for (int i = 0; i < 8; ++i) store.intern_entity("e" + std::to_string(i));
  store.intern_relation("next");
  store.intern_relation("skip");
  for (int i = 0; i < 7; ++i) {
    store.add_fact("e" + std::to_string(i), "next", "e" + std::to_string(i + 1));
  }
  for (int i : {0, 2, 4}) {
    store.add_fact("e" + std::to_string(i), "skip", "e" + std::to_string(i + 2));
  }
  return store;
}

}  // namespace relex
