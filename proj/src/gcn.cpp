#include "relex/gcn.hpp"

#include <cmath>

#include "relex/errors.hpp"

namespace relex {

namespace {

GcnLayerParams init_layer(size_t out_dim, size_t in_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  GcnLayerParams p;
  p.self_weight = Tensor::uniform({out_dim, in_dim}, -bound, bound, rng, true);
  p.parent_weight = Tensor::uniform({out_dim, in_dim}, -bound, bound, rng, true);
  p.child_weight = Tensor::uniform({out_dim, in_dim}, -bound, bound, rng, true);
  p.bias = Tensor::uniform({out_dim}, -bound, bound, rng, true);
  return p;
}

}  // namespace

GcnParams GcnParams::init(size_t d, size_t q, Rng& rng) {
  GcnParams p;
  p.layer1 = init_layer(q, d, rng);
  p.layer2 = init_layer(q, q, rng);
  return p;
}

std::vector<Tensor> GcnParams::tensors() const {
  return {layer1.self_weight, layer1.parent_weight, layer1.child_weight, layer1.bias,
          layer2.self_weight, layer2.parent_weight, layer2.child_weight, layer2.bias};
}

std::vector<Tensor> gcn_layer(const HierarchyGraph& graph, const std::vector<Tensor>& vectors_in,
                              const GcnLayerParams& params) {
  require_data(vectors_in.size() == graph.node_count(),
               "gcn_layer: one input vector per node required");
  const size_t in_dim = params.self_weight.shape()[1];
  for (const auto& v : vectors_in) {
    require_data(v.shape() == Shape{in_dim}, "gcn_layer: input dimension mismatch");
  }

  std::vector<Tensor> out(graph.node_count());
  for (size_t i = 0; i < graph.node_count(); ++i) {
    const auto& node = graph.node(static_cast<int>(i));
    Tensor acc = matvec(params.self_weight, vectors_in[i]);
    if (node.parent != -1) {
      acc = add(acc, matvec(params.parent_weight, vectors_in[static_cast<size_t>(node.parent)]));
    }
    const auto& kids = graph.children(static_cast<int>(i));
    if (!kids.empty()) {
      std::vector<Tensor> kid_vecs;
      for (int c : kids) kid_vecs.push_back(vectors_in[static_cast<size_t>(c)]);
      const auto weights =
          Tensor::full({kids.size()}, 1.0 / static_cast<double>(kids.size()));
      acc = add(acc, matvec(params.child_weight, linear_combination(kid_vecs, weights)));
    }
    out[i] = relu(add(acc, params.bias));
  }
  return out;
}

ClassEmbeddingTable class_embeddings(const HierarchyGraph& graph, const GcnParams& params) {
  require_data(graph.has_vectors(), "class_embeddings: hierarchy has no node vectors");

  std::vector<Tensor> implicit(graph.node_count());
  for (size_t i = 0; i < graph.node_count(); ++i) {
    const auto& v = graph.vector_of(static_cast<int>(i));
    implicit[i] = Tensor::from({v.size()}, v);  // constant; the GCN never mutates it
  }
  const auto hidden = gcn_layer(graph, implicit, params.layer1);
  const auto explicit_part = gcn_layer(graph, hidden, params.layer2);

  ClassEmbeddingTable table;
  table.q.resize(graph.node_count());
  table.by_layer.assign(static_cast<size_t>(graph.levels()) + 1, {});
  for (size_t i = 0; i < graph.node_count(); ++i) {
    table.q[i] = concat({implicit[i], explicit_part[i]});
    table.by_layer[static_cast<size_t>(graph.node(static_cast<int>(i)).layer)].push_back(
        static_cast<int>(i));
  }
  table.dim = table.q[0].size();
  return table;
}

}  // namespace relex
