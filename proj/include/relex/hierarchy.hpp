#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "relex/kg.hpp"
#include "relex/rng.hpp"

namespace relex {

// Ordered relation identifiers with per-relation training-instance counts.
// The literal name "NA" marks the no-relation label.
struct RelationVocab {
  std::vector<std::string> names;
  std::vector<size_t> train_counts;  // parallel to names; zero when unknown
  std::optional<size_t> na_index;

  static RelationVocab from_names(const std::vector<std::string>& names);
  size_t index_of(const std::string& name) const;
  bool is_na(size_t idx) const { return na_index && *na_index == idx; }
  std::vector<std::string> non_na_names() const;
};

inline constexpr const char* kNaRelation = "NA";
inline constexpr const char* kRootId = "<root>";
inline constexpr const char* kRootMarker = "ROOT";

struct HierarchyNode {
  std::string id;
  int layer = 0;
  int parent = -1;  // node index; -1 only for the root
};

// Layered label tree: layer-0 nodes are the relations, one virtual root at
// the top layer, every parent exactly one layer above its children.
class HierarchyGraph {
 public:
  int add_node(const std::string& id, int layer, int parent);
  void finalize();  // builds child lists and checks the invariants

  size_t node_count() const { return nodes_.size(); }
  const HierarchyNode& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
  const std::vector<HierarchyNode>& nodes() const { return nodes_; }
  const std::vector<int>& children(int i) const { return children_[static_cast<size_t>(i)]; }
  int root() const { return root_; }
  int levels() const { return nodes_[static_cast<size_t>(root_)].layer; }  // L
  std::optional<int> find(const std::string& id) const;

  // child-to-parent walk from a layer-0 relation, excluding the root;
  // always has length L
  std::vector<int> chain(const std::string& relation) const;

  bool has_vectors() const { return !vectors_.empty(); }
  const std::vector<double>& vector_of(int i) const { return vectors_[static_cast<size_t>(i)]; }
  void set_vectors(std::vector<std::vector<double>> vectors);

  // text format: `<node_id>\t<layer>\t<parent_id>` with parent `ROOT` for the root
  static HierarchyGraph load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<HierarchyNode> nodes_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<double>> vectors_;
  int root_ = -1;
};

// Layer-i nodes are path prefixes of the slash-separated relation names;
// shared prefixes merge, chains of short names repeat their last prefix with
// an `@<layer>` suffix to keep ids unique.
HierarchyGraph parse_predefined(const RelationVocab& vocab);

// Minimum within-cluster-SSE clustering. Desk-scale instances are solved
// exactly by enumeration; larger ones run seeded Lloyd iterations with
// k-means++ seeding, keeping the best of `restarts` starts.
struct KMeansResult {
  std::vector<size_t> assignment;  // point -> cluster, clusters numbered by first occurrence
  size_t k = 0;
  double sse = 0.0;
};
KMeansResult kmeans_cluster(const std::vector<std::vector<double>>& points, size_t k,
                            uint64_t seed, size_t restarts = 10, size_t max_iters = 100);

// layers counts all levels including the virtual root; k_per_layer sizes the
// internal levels bottom-up (length layers - 2). Upper levels cluster the
// centroids of the level below.
HierarchyGraph build_kmeans(const std::vector<std::string>& relations,
                            const Embeddings& embeddings, size_t layers,
                            const std::vector<size_t>& k_per_layer, uint64_t seed);

struct HcMerge {
  size_t left = 0;   // cluster ids; originals are 0..n-1, merges create n, n+1, ...
  size_t right = 0;
  double distance = 0.0;
};
// Agglomerative merge sequence under Euclidean complete linkage.
std::vector<HcMerge> complete_linkage_merges(const std::vector<std::vector<double>>& points);

// Dendrogram cut at the (layers - 2) largest merge-distance gaps.
HierarchyGraph build_agglomerative(const std::vector<std::string>& relations,
                                   const Embeddings& embeddings, size_t layers);

// |{(h,t): r1(h,t) and r2(h,t)}| / |{(h,t): r1(h,t) and exists t': r2(h,t')}|,
// empty when the denominator is zero.
std::optional<double> pca_confidence(const TripleStore& store, size_t r1, size_t r2);

// Relations whose pca confidence reaches the threshold in either direction
// land in one group (connected components); three layers including the root.
HierarchyGraph build_amie(const TripleStore& store, double threshold);

// Layer-0 vectors come from the relation embeddings, parents are the
// arithmetic mean of their children, computed bottom-up.
void init_node_vectors(HierarchyGraph& graph, const Embeddings& relation_embeddings);

}  // namespace relex
