#pragma once

#include <vector>

#include "relex/hierarchy.hpp"
#include "relex/rng.hpp"
#include "relex/tensor.hpp"

namespace relex {

struct GcnLayerParams {
  Tensor self_weight;    // q x in_dim
  Tensor parent_weight;  // q x in_dim
  Tensor child_weight;   // q x in_dim
  Tensor bias;           // q
};

// Two layers sharing the edge-typed formulation; the first maps d -> q, the
// second q -> q.
struct GcnParams {
  GcnLayerParams layer1;
  GcnLayerParams layer2;

  static GcnParams init(size_t d, size_t q, Rng& rng);
  std::vector<Tensor> tensors() const;
  size_t output_dim() const { return layer1.self_weight.shape()[0]; }
};

// out_i = relu(W v_i + W_p mean(parent vectors) + W_c mean(child vectors) + b).
// A term with an empty neighbor set contributes zero; on a tree only the root
// lacks a parent.
std::vector<Tensor> gcn_layer(const HierarchyGraph& graph, const std::vector<Tensor>& vectors_in,
                              const GcnLayerParams& params);

// One class embedding per hierarchy node: the initialized node vector
// (implicit half, constant) concatenated with the two-layer GCN output
// (explicit half), dimension d+q. Differentiable w.r.t. the GCN parameters.
struct ClassEmbeddingTable {
  std::vector<Tensor> q;                   // by node index
  std::vector<std::vector<int>> by_layer;  // layer type -> node indices
  size_t dim = 0;                          // d + q
};

ClassEmbeddingTable class_embeddings(const HierarchyGraph& graph, const GcnParams& params);

}  // namespace relex
