#include "relex/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "relex/errors.hpp"

namespace relex {

EmbeddingLayerParams EmbeddingLayerParams::init(size_t vocab, size_t d_w, size_t d_p,
                                                size_t clamp, Rng& rng) {
  require_data(vocab >= 1 && d_w >= 1 && d_p >= 1 && clamp >= 1,
               "embedding layer: all dimensions must be positive");
  EmbeddingLayerParams p;
  const double wb = 1.0 / std::sqrt(static_cast<double>(d_w));
  const double pb = 1.0 / std::sqrt(static_cast<double>(d_p));
  p.word_table = Tensor::uniform({vocab, d_w}, -wb, wb, rng, true);
  p.pos_head_table = Tensor::uniform({2 * clamp + 2, d_p}, -pb, pb, rng, true);
  p.pos_tail_table = Tensor::uniform({2 * clamp + 2, d_p}, -pb, pb, rng, true);
  p.clamp = clamp;
  return p;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, size_t d_in, Rng& rng) {
  require_data(cfg.kernel_size % 2 == 1, "encoder: kernel size must be odd");
  EncoderParams p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.kernel_size * d_in));
  p.kernel = Tensor::uniform({cfg.kernel_size, d_in, cfg.hidden}, -bound, bound, rng, true);
  p.bias = Tensor::uniform({cfg.hidden}, -bound, bound, rng, true);
  return p;
}

size_t relative_position(size_t token_index, size_t entity_index, size_t clamp) {
  const long offset = static_cast<long>(token_index) - static_cast<long>(entity_index);
  const long clamped = std::clamp(offset, -static_cast<long>(clamp), static_cast<long>(clamp));
  return static_cast<size_t>(clamped + static_cast<long>(clamp));
}

Tensor embed_instance(const Instance& inst, const EmbeddingLayerParams& params) {
  require_data(!inst.tokens.empty(), "embed_instance: empty instance");
  require_data(inst.tokens.size() <= kMaxSentenceLen, "embed_instance: instance too long");
  require_data(inst.head_pos < inst.tokens.size() && inst.tail_pos < inst.tokens.size(),
               "embed_instance: entity position out of range");
  const size_t vocab = params.word_table.shape()[0];
  for (size_t id : inst.tokens) {
    require_data(id < vocab, "embed_instance: word id " + std::to_string(id) +
                                 " outside vocabulary of " + std::to_string(vocab));
  }
  std::vector<size_t> head_idx(inst.tokens.size()), tail_idx(inst.tokens.size());
  for (size_t i = 0; i < inst.tokens.size(); ++i) {
    head_idx[i] = relative_position(i, inst.head_pos, params.clamp);
    tail_idx[i] = relative_position(i, inst.tail_pos, params.clamp);
  }
  return hconcat({embedding_rows(params.word_table, inst.tokens),
                  embedding_rows(params.pos_head_table, head_idx),
                  embedding_rows(params.pos_tail_table, tail_idx)});
}

Tensor encode(const Tensor& inst_matrix, const EncoderConfig& cfg, const EncoderParams& params,
              size_t head_pos, size_t tail_pos, Rng* dropout_rng, bool training) {
  Tensor hidden = conv1d(inst_matrix, params.kernel, params.bias);
  Tensor pooled;
  if (cfg.kind == EncoderKind::Cnn) {
    pooled = max_pool_columns(hidden);
  } else {
    pooled = piecewise_max_pool(hidden, std::min(head_pos, tail_pos),
                                std::max(head_pos, tail_pos));
  }
  Tensor out = relex::tanh(pooled);
  if (training && cfg.dropout > 0.0) {
    require_data(dropout_rng != nullptr, "encode: training dropout needs an rng");
    out = dropout(out, cfg.dropout, *dropout_rng, true);
  }
  return out;
}

}  // namespace relex
