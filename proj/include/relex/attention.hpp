#pragma once

#include <vector>

#include "relex/rng.hpp"
#include "relex/tensor.hpp"

namespace relex {

// Instance scorer e_k = W_s tanh([s_k ; q]) + b_s, shared across hierarchy
// layers; only the query changes per layer.
struct AttentionParams {
  Tensor score_weight;  // enc_dim + query_dim
  Tensor score_bias;    // scalar

  static AttentionParams init(size_t enc_dim, size_t query_dim, Rng& rng);
  std::vector<Tensor> tensors() const { return {score_weight, score_bias}; }
};

// Layer gate g_i = W_g tanh(r_i).
struct LayerAttentionParams {
  Tensor gate_weight;  // enc_dim

  static LayerAttentionParams init(size_t enc_dim, Rng& rng);
  std::vector<Tensor> tensors() const { return {gate_weight}; }
};

// One score row per relation including NA; the optional per-relation bias is
// a toggleable addition on top of o = M r.
struct ScoreMatrix {
  Tensor weight;  // |R_all| x rep_dim
  Tensor bias;    // |R_all|
  bool use_bias = true;

  static ScoreMatrix init(size_t relations, size_t rep_dim, Rng& rng, bool use_bias = true);
  std::vector<Tensor> tensors() const;
};

struct InstanceAttention {
  Tensor weights;         // alpha, a distribution over the bag
  Tensor representation;  // sum alpha_k s_k
};

InstanceAttention instance_attention(const std::vector<Tensor>& encodings, const Tensor& query,
                                     const AttentionParams& params);

struct LayerAttention {
  Tensor weights;                  // beta, a distribution over layers
  std::vector<Tensor> reweighted;  // beta_i r_i
};

LayerAttention layer_attention(const std::vector<Tensor>& reps,
                               const LayerAttentionParams& params);

// Coarse-to-fine pass: instance attention once per chain query, layer
// attention over the per-layer representations, concatenation.
struct BagRepresentation {
  std::vector<Tensor> instance_weights;  // alpha per layer
  std::vector<Tensor> per_layer;         // r^i before layer reweighting
  Tensor layer_weights;                  // beta
  Tensor final;                          // concat(beta_0 r^0, ..., beta_{L-1} r^{L-1})
};

BagRepresentation bag_representation(const std::vector<Tensor>& encodings,
                                     const std::vector<Tensor>& chain_queries,
                                     const AttentionParams& att,
                                     const LayerAttentionParams& layer_att);

Tensor relation_logits(const Tensor& rep, const ScoreMatrix& scores);
Tensor score_and_prob(const Tensor& rep, const ScoreMatrix& scores);  // softmax(o)

// Plain selective attention baseline: one flat learned query per relation,
// single-level attention, then scoring.
struct PlainAttention {
  Tensor weights;         // alpha
  Tensor representation;  // bag vector
  Tensor probabilities;   // over all relations
};

PlainAttention plain_att(const std::vector<Tensor>& encodings, const Tensor& relation_query,
                         const AttentionParams& params, const ScoreMatrix& scores);

}  // namespace relex
