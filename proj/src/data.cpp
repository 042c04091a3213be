#include "relex/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "relex/errors.hpp"

namespace relex {

namespace {

size_t parse_index(const std::string& tok, const std::string& path, size_t line_no) {
  try {
    size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return static_cast<size_t>(v);
  } catch (const std::exception&) {
    throw_data(path + ":" + std::to_string(line_no) + ": bad entity index '" + tok + "'");
  }
}

}  // namespace

std::vector<RawInstance> load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open corpus file " + path);
  std::vector<RawInstance> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string head, head_idx, tail, tail_idx, relation, sentence;
    if (!std::getline(ls, head, '\t') || !std::getline(ls, head_idx, '\t') ||
        !std::getline(ls, tail, '\t') || !std::getline(ls, tail_idx, '\t') ||
        !std::getline(ls, relation, '\t') || !std::getline(ls, sentence) || head.empty() ||
        tail.empty() || relation.empty()) {
      throw_data(path + ":" + std::to_string(line_no) +
                 ": expected `head\\tidx\\ttail\\tidx\\trelation\\ttokens`");
    }
    RawInstance inst;
    inst.head = head;
    inst.tail = tail;
    inst.relation = relation;
    inst.head_pos = parse_index(head_idx, path, line_no);
    inst.tail_pos = parse_index(tail_idx, path, line_no);
    std::istringstream ts(sentence);
    std::string tok;
    while (ts >> tok) inst.tokens.push_back(tok);
    if (inst.tokens.empty()) {
      throw_data(path + ":" + std::to_string(line_no) + ": record has no tokens");
    }
    if (inst.tokens.size() > kMaxSentenceLen) {
      inst.tokens.resize(kMaxSentenceLen);
    }
    // clamp entity indices into the kept range
    inst.head_pos = std::min(inst.head_pos, inst.tokens.size() - 1);
    inst.tail_pos = std::min(inst.tail_pos, inst.tokens.size() - 1);
    out.push_back(std::move(inst));
  }
  return out;
}

void save_instance_file(const std::vector<RawInstance>& instances, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write corpus file " + path);
  for (const auto& inst : instances) {
    out << inst.head << '\t' << inst.head_pos << '\t' << inst.tail << '\t' << inst.tail_pos
        << '\t' << inst.relation << '\t';
    for (size_t i = 0; i < inst.tokens.size(); ++i) {
      if (i) out << ' ';
      out << inst.tokens[i];
    }
    out << '\n';
  }
}

Corpus build_corpus(const std::vector<RawInstance>& train,
                    const std::vector<RawInstance>& test) {
  Corpus corpus;
  std::vector<std::string> relation_names{kNaRelation};
  std::unordered_map<std::string, size_t> relation_ids{{kNaRelation, 0}};
  corpus.words = {"<UNK>"};
  std::unordered_map<std::string, size_t> word_ids{{"<UNK>", 0}};
  std::unordered_map<std::string, size_t> entity_ids;

  auto intern_word = [&](const std::string& w) {
    auto it = word_ids.find(w);
    if (it != word_ids.end()) return it->second;
    corpus.words.push_back(w);
    word_ids[w] = corpus.words.size() - 1;
    return corpus.words.size() - 1;
  };
  auto intern_entity = [&](const std::string& e) {
    if (entity_ids.emplace(e, corpus.entities.size()).second) corpus.entities.push_back(e);
  };
  auto intern_relation = [&](const std::string& r) {
    auto it = relation_ids.find(r);
    if (it != relation_ids.end()) return it->second;
    relation_names.push_back(r);
    relation_ids[r] = relation_names.size() - 1;
    return relation_names.size() - 1;
  };
  auto convert = [&](const RawInstance& raw) {
    Instance inst;
    inst.head = raw.head;
    inst.tail = raw.tail;
    inst.head_pos = raw.head_pos;
    inst.tail_pos = raw.tail_pos;
    inst.relation = intern_relation(raw.relation);
    for (const auto& t : raw.tokens) inst.tokens.push_back(intern_word(t));
    intern_entity(raw.head);
    intern_entity(raw.tail);
    return inst;
  };

  for (const auto& r : train) corpus.train.push_back(convert(r));
  for (const auto& r : test) corpus.test.push_back(convert(r));
  corpus.relations = RelationVocab::from_names(relation_names);
  for (const auto& inst : corpus.train) corpus.relations.train_counts[inst.relation]++;
  return corpus;
}

Corpus load_corpus(const std::string& train_path, const std::string& test_path) {
  const auto train = load_instance_file(train_path);
  std::vector<RawInstance> test;
  if (!test_path.empty()) test = load_instance_file(test_path);
  return build_corpus(train, test);
}

void save_corpus_split(const Corpus& corpus, bool test_split, const std::string& path) {
  std::vector<RawInstance> raw;
  for (const auto& inst : test_split ? corpus.test : corpus.train) {
    RawInstance r;
    r.head = inst.head;
    r.tail = inst.tail;
    r.head_pos = inst.head_pos;
    r.tail_pos = inst.tail_pos;
    r.relation = corpus.relations.names[inst.relation];
    for (size_t id : inst.tokens) r.tokens.push_back(corpus.words[id]);
    raw.push_back(std::move(r));
  }
  save_instance_file(raw, path);
}

std::vector<Instance> map_instances(const std::vector<RawInstance>& raw,
                                    const RelationVocab& vocab,
                                    const std::vector<std::string>& words) {
  std::unordered_map<std::string, size_t> word_ids;
  for (size_t i = 0; i < words.size(); ++i) word_ids.emplace(words[i], i);
  std::unordered_map<std::string, size_t> relation_ids;
  for (size_t i = 0; i < vocab.names.size(); ++i) relation_ids.emplace(vocab.names[i], i);

  std::vector<Instance> out;
  for (const auto& r : raw) {
    Instance inst;
    inst.head = r.head;
    inst.tail = r.tail;
    inst.head_pos = r.head_pos;
    inst.tail_pos = r.tail_pos;
    auto rel = relation_ids.find(r.relation);
    require_data(rel != relation_ids.end(),
                 "instance carries relation '" + r.relation + "' unknown to the model");
    inst.relation = rel->second;
    for (const auto& t : r.tokens) {
      auto it = word_ids.find(t);
      inst.tokens.push_back(it == word_ids.end() ? kUnkWordId : it->second);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

SynthData synth_longtail(const SynthConfig& cfg) {
  require_data(cfg.tail_relations >= 1, "synth: need at least one tail relation");
  require_data(cfg.head_relations >= 1, "synth: need at least one head relation");
  require_data(cfg.instances_per_tail < cfg.instances_per_head,
               "synth: tail relations must have fewer instances than heads");
  require_data(cfg.instances_per_bag >= 1, "synth: instances_per_bag must be positive");
  require_data(cfg.sent_len_min >= 4 && cfg.sent_len_max >= cfg.sent_len_min &&
                   cfg.sent_len_max <= kMaxSentenceLen,
               "synth: bad sentence length range");
  require_data(cfg.noise_rate >= 0.0 && cfg.noise_rate < 1.0, "synth: bad noise rate");
  require_data(cfg.branching >= 1, "synth: branching must be positive");

  const size_t relations = cfg.head_relations + cfg.tail_relations;
  const size_t groups = cfg.head_relations;  // one head per group, tails join in
  const size_t keywords = groups + relations;
  require_data(cfg.vocab_size >= keywords + 4,
               "synth: vocabulary of " + std::to_string(cfg.vocab_size) +
                   " cannot hold " + std::to_string(keywords) + " keywords plus fillers");

  Rng rng(cfg.seed);

  // relation table: name, group, train instance budget
  struct Relation {
    std::string name;
    size_t group;
    size_t train_instances;
  };
  std::vector<Relation> rels;
  for (size_t h = 0; h < cfg.head_relations; ++h) {
    const size_t cat = h / cfg.branching;
    rels.push_back({"/c" + std::to_string(cat) + "/g" + std::to_string(h) + "/head" +
                        std::to_string(h),
                    h, cfg.instances_per_head});
  }
  for (size_t t = 0; t < cfg.tail_relations; ++t) {
    const size_t g = t % cfg.head_relations;
    const size_t cat = g / cfg.branching;
    rels.push_back({"/c" + std::to_string(cat) + "/g" + std::to_string(g) + "/tail" +
                        std::to_string(t),
                    g, cfg.instances_per_tail});
  }

  // token space: fillers, one keyword per group, one keyword per relation
  const size_t fillers = cfg.vocab_size - 1 - keywords;
  auto filler_tok = [&](size_t i) { return "w" + std::to_string(i); };
  auto group_tok = [](size_t g) { return "gk" + std::to_string(g); };
  auto relation_tok = [](size_t r) { return "rk" + std::to_string(r); };

  // entity pools shared inside a group make the kg triples learnable and let
  // sibling relations land on nearby translation vectors
  constexpr size_t kPool = 8;
  auto left_entity = [](size_t g, size_t i) {
    return "L" + std::to_string(g) + "_" + std::to_string(i);
  };
  auto right_entity = [](size_t g, size_t i) {
    return "R" + std::to_string(g) + "_" + std::to_string(i);
  };

  TripleStore kg;
  std::vector<RawInstance> train, test;

  auto emit = [&](size_t rel_idx, size_t bag, size_t bag_instances, bool is_test,
                  std::vector<RawInstance>& sink) {
    const auto& rel = rels[rel_idx];
    const std::string head = left_entity(rel.group, bag % kPool);
    const std::string tail = right_entity(rel.group, (bag / kPool) % kPool);
    if (!is_test) kg.add_fact(head, rel.name, tail);
    for (size_t k = 0; k < bag_instances; ++k) {
      RawInstance inst;
      inst.head = head;
      inst.tail = tail;
      inst.relation = rel.name;
      const size_t len = cfg.sent_len_min + rng.uniform_int(cfg.sent_len_max -
                                                            cfg.sent_len_min + 1);
      for (size_t i = 0; i < len; ++i) inst.tokens.push_back(filler_tok(rng.uniform_int(fillers)));
      inst.head_pos = rng.uniform_int(len);
      do {
        inst.tail_pos = rng.uniform_int(len);
      } while (len > 1 && inst.tail_pos == inst.head_pos);
      if (rng.uniform() >= cfg.noise_rate) {
        // keyword positions avoid the entity slots when the sentence allows
        size_t kw1 = rng.uniform_int(len), kw2 = rng.uniform_int(len);
        for (int tries = 0; tries < 16 && (kw1 == inst.head_pos || kw1 == inst.tail_pos);
             ++tries) {
          kw1 = rng.uniform_int(len);
        }
        for (int tries = 0;
             tries < 16 && (kw2 == inst.head_pos || kw2 == inst.tail_pos || kw2 == kw1);
             ++tries) {
          kw2 = rng.uniform_int(len);
        }
        inst.tokens[kw1] = group_tok(rel.group);
        if (kw2 != kw1) inst.tokens[kw2] = relation_tok(rel_idx);
      }
      sink.push_back(std::move(inst));
    }
  };

  for (size_t r = 0; r < rels.size(); ++r) {
    const size_t budget = rels[r].train_instances;
    const size_t bags = (budget + cfg.instances_per_bag - 1) / cfg.instances_per_bag;
    size_t left = budget;
    for (size_t b = 0; b < bags; ++b) {
      const size_t take = std::min(left, cfg.instances_per_bag);
      emit(r, b, take, false, train);
      left -= take;
    }
    const size_t test_budget = std::max(
        cfg.instances_per_bag,
        static_cast<size_t>(static_cast<double>(budget) * cfg.test_fraction + 0.5));
    const size_t test_bags = (test_budget + cfg.instances_per_bag - 1) / cfg.instances_per_bag;
    size_t test_left = test_budget;
    for (size_t b = 0; b < test_bags; ++b) {
      const size_t take = std::min(test_left, cfg.instances_per_bag);
      emit(r, bags + b, take, true, test);
      test_left -= take;
    }
  }

  for (size_t n = 0; n < cfg.na_train_instances; ++n) {
    RawInstance inst;
    const size_t g = rng.uniform_int(groups);
    inst.head = left_entity(g, rng.uniform_int(kPool));
    inst.tail = right_entity(g, rng.uniform_int(kPool));
    inst.relation = kNaRelation;
    const size_t len = cfg.sent_len_min;
    for (size_t i = 0; i < len; ++i) inst.tokens.push_back(filler_tok(rng.uniform_int(fillers)));
    inst.head_pos = 0;
    inst.tail_pos = len - 1;
    train.push_back(std::move(inst));
  }

  SynthData data;
  data.corpus = build_corpus(train, test);
  data.kg = std::move(kg);
  return data;
}

}  // namespace relex
