#pragma once

#include <string>
#include <vector>

#include "relex/rng.hpp"
#include "relex/tensor.hpp"

namespace relex {

inline constexpr size_t kMaxSentenceLen = 120;
inline constexpr size_t kUnkWordId = 0;  // loaders map out-of-vocab tokens here

// Tokenized sentence mentioning two entities. Positions index the first token
// of each mention; relation may be the NA label.
struct Instance {
  std::vector<size_t> tokens;
  size_t head_pos = 0;
  size_t tail_pos = 0;
  size_t relation = 0;
  std::string head;
  std::string tail;
};

struct EmbeddingLayerParams {
  Tensor word_table;      // vocab x d_w
  Tensor pos_head_table;  // (2*clamp + 2) x d_p, last row reserved for padding
  Tensor pos_tail_table;
  size_t clamp = 50;

  static EmbeddingLayerParams init(size_t vocab, size_t d_w, size_t d_p, size_t clamp,
                                   Rng& rng);
  size_t row_width() const {
    return word_table.shape()[1] + pos_head_table.shape()[1] + pos_tail_table.shape()[1];
  }
  std::vector<Tensor> tensors() const { return {word_table, pos_head_table, pos_tail_table}; }
};

enum class EncoderKind { Cnn, Pcnn };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Pcnn;
  size_t kernel_size = 3;
  size_t hidden = 230;
  double dropout = 0.5;

  size_t output_dim() const { return kind == EncoderKind::Cnn ? hidden : 3 * hidden; }
};

struct EncoderParams {
  Tensor kernel;  // kernel_size x d_in x hidden
  Tensor bias;    // hidden

  static EncoderParams init(const EncoderConfig& cfg, size_t d_in, Rng& rng);
  std::vector<Tensor> tensors() const { return {kernel, bias}; }
};

// clip(token_index - entity_index, -clamp, +clamp) shifted to [0, 2*clamp]
size_t relative_position(size_t token_index, size_t entity_index, size_t clamp);

// row i = [word_vec(w_i) ; head position vec(i) ; tail position vec(i)]
Tensor embed_instance(const Instance& inst, const EmbeddingLayerParams& params);

// CNN: conv1d -> global column max -> tanh. PCNN: conv1d -> piecewise pool at
// the ordered entity positions -> tanh. Inverted dropout on the output while
// training.
Tensor encode(const Tensor& inst_matrix, const EncoderConfig& cfg, const EncoderParams& params,
              size_t head_pos, size_t tail_pos, Rng* dropout_rng = nullptr,
              bool training = false);

}  // namespace relex
