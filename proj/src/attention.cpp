#include "relex/attention.hpp"

#include <cmath>

#include "relex/errors.hpp"

namespace relex {

AttentionParams AttentionParams::init(size_t enc_dim, size_t query_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(enc_dim + query_dim));
  AttentionParams p;
  p.score_weight = Tensor::uniform({enc_dim + query_dim}, -bound, bound, rng, true);
  p.score_bias = Tensor::uniform({1}, -bound, bound, rng, true);
  return p;
}

LayerAttentionParams LayerAttentionParams::init(size_t enc_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(enc_dim));
  LayerAttentionParams p;
  p.gate_weight = Tensor::uniform({enc_dim}, -bound, bound, rng, true);
  return p;
}

ScoreMatrix ScoreMatrix::init(size_t relations, size_t rep_dim, Rng& rng, bool use_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rep_dim));
  ScoreMatrix m;
  m.weight = Tensor::uniform({relations, rep_dim}, -bound, bound, rng, true);
  m.bias = use_bias ? Tensor::uniform({relations}, -bound, bound, rng, true)
                    : Tensor::zeros({relations});
  m.use_bias = use_bias;
  return m;
}

std::vector<Tensor> ScoreMatrix::tensors() const {
  if (use_bias) return {weight, bias};
  return {weight};
}

InstanceAttention instance_attention(const std::vector<Tensor>& encodings, const Tensor& query,
                                     const AttentionParams& params) {
  require_data(!encodings.empty(), "instance_attention: empty bag");
  const size_t expect = params.score_weight.shape()[0];
  require_data(encodings[0].size() + query.size() == expect,
               "instance_attention: scorer expects " + std::to_string(expect) +
                   " features, got " + std::to_string(encodings[0].size() + query.size()));
  std::vector<Tensor> scores;
  scores.reserve(encodings.size());
  for (const auto& s : encodings) {
    auto joined = relex::tanh(concat({s, query}));
    scores.push_back(add(dot(params.score_weight, joined), params.score_bias));
  }
  InstanceAttention out;
  out.weights = softmax(concat(scores));
  out.representation = linear_combination(encodings, out.weights);
  return out;
}

LayerAttention layer_attention(const std::vector<Tensor>& reps,
                               const LayerAttentionParams& params) {
  require_data(!reps.empty(), "layer_attention: no layer representations");
  std::vector<Tensor> gates;
  gates.reserve(reps.size());
  for (const auto& r : reps) {
    gates.push_back(dot(params.gate_weight, relex::tanh(r)));
  }
  LayerAttention out;
  out.weights = softmax(concat(gates));
  out.reweighted.reserve(reps.size());
  for (size_t i = 0; i < reps.size(); ++i) {
    out.reweighted.push_back(scale_by(element(out.weights, i), reps[i]));
  }
  return out;
}

BagRepresentation bag_representation(const std::vector<Tensor>& encodings,
                                     const std::vector<Tensor>& chain_queries,
                                     const AttentionParams& att,
                                     const LayerAttentionParams& layer_att) {
  require_data(!chain_queries.empty(), "bag_representation: empty query chain");
  BagRepresentation out;
  for (const auto& q : chain_queries) {
    auto level = instance_attention(encodings, q, att);
    out.instance_weights.push_back(level.weights);
    out.per_layer.push_back(level.representation);
  }
  auto layers = layer_attention(out.per_layer, layer_att);
  out.layer_weights = layers.weights;
  out.final = concat(layers.reweighted);
  return out;
}

Tensor relation_logits(const Tensor& rep, const ScoreMatrix& scores) {
  require_data(rep.size() == scores.weight.shape()[1],
               "relation_logits: representation dimension " + std::to_string(rep.size()) +
                   " does not match score matrix " + shape_str(scores.weight.shape()));
  Tensor o = matvec(scores.weight, rep);
  if (scores.use_bias) o = add(o, scores.bias);
  return o;
}

Tensor score_and_prob(const Tensor& rep, const ScoreMatrix& scores) {
  return softmax(relation_logits(rep, scores));
}

PlainAttention plain_att(const std::vector<Tensor>& encodings, const Tensor& relation_query,
                         const AttentionParams& params, const ScoreMatrix& scores) {
  PlainAttention out;
  auto level = instance_attention(encodings, relation_query, params);
  out.weights = level.weights;
  out.representation = level.representation;
  out.probabilities = score_and_prob(level.representation, scores);
  return out;
}

}  // namespace relex
