#pragma once

#include <string>
#include <vector>

#include "relex/encoder.hpp"
#include "relex/hierarchy.hpp"
#include "relex/kg.hpp"

namespace relex {

// One corpus line before vocabulary mapping. File format, tab separated:
// `<head>\t<head_index>\t<tail>\t<tail_index>\t<relation>\t<token token ...>`
struct RawInstance {
  std::string head;
  size_t head_pos = 0;
  std::string tail;
  size_t tail_pos = 0;
  std::string relation;
  std::vector<std::string> tokens;
};

// Sentences over 120 tokens are truncated and entity indices clamped into
// the kept range.
std::vector<RawInstance> load_instance_file(const std::string& path);
void save_instance_file(const std::vector<RawInstance>& instances, const std::string& path);

struct Corpus {
  std::vector<Instance> train;
  std::vector<Instance> test;
  RelationVocab relations;          // NA always present; counts from train
  std::vector<std::string> words;   // index 0 is UNK
  std::vector<std::string> entities;
};

// Vocabulary built over both splits; NA is inserted even when unseen.
Corpus build_corpus(const std::vector<RawInstance>& train,
                    const std::vector<RawInstance>& test);
Corpus load_corpus(const std::string& train_path, const std::string& test_path = "");
void save_corpus_split(const Corpus& corpus, bool test_split, const std::string& path);

// Remap raw instances onto an existing model vocabulary: unknown words fall
// to UNK, unknown relations are rejected.
std::vector<Instance> map_instances(const std::vector<RawInstance>& raw,
                                    const RelationVocab& vocab,
                                    const std::vector<std::string>& words);

struct SynthConfig {
  size_t head_relations = 4;
  size_t tail_relations = 4;
  size_t branching = 2;            // relation groups per top-level category
  size_t instances_per_head = 80;  // train instances per head relation
  size_t instances_per_tail = 8;
  size_t instances_per_bag = 2;
  double test_fraction = 0.25;  // test instances relative to train, per relation
  size_t vocab_size = 40;
  size_t sent_len_min = 6;
  size_t sent_len_max = 10;
  double noise_rate = 0.0;  // chance an instance carries no keywords
  size_t na_train_instances = 0;
  uint64_t seed = 0;
};

struct SynthData {
  Corpus corpus;
  TripleStore kg;  // one fact per training bag, entities shared within groups
};

// Long-tail corpus with a known three-level hierarchy. Every tail relation
// shares its group (and the group keyword token) with a head sibling, and
// carries its own relation keyword, so parent-level evidence transfers while
// labels stay separable at noise 0.
SynthData synth_longtail(const SynthConfig& cfg);

}  // namespace relex
