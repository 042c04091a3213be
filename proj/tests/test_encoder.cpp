#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "relex/encoder.hpp"
#include "relex/errors.hpp"

using namespace relex;

TEST_SUITE("encoder") {

TEST_CASE("relative positions clip and shift") {
  CHECK(relative_position(5, 5, 50) == 50);    // offset 0
  CHECK(relative_position(100, 0, 50) == 100); // clipped to +50
  CHECK(relative_position(0, 100, 50) == 0);   // clipped to -50
  CHECK(relative_position(7, 4, 50) == 53);
}

TEST_CASE("embedded rows have width d_w + 2 d_p") {
  Rng rng(2);
  auto params = EmbeddingLayerParams::init(10, 300, 5, 50, rng);
  Instance inst;
  inst.tokens = {1, 2, 3};
  inst.head_pos = 0;
  inst.tail_pos = 2;
  auto m = embed_instance(inst, params);
  CHECK(m.shape() == Shape{3, 310});
}

TEST_CASE("single-token instance uses the zero offset for both channels") {
  Rng rng(3);
  auto params = EmbeddingLayerParams::init(4, 6, 2, 5, rng);
  Instance inst;
  inst.tokens = {2};
  inst.head_pos = 0;
  inst.tail_pos = 0;
  auto m = embed_instance(inst, params);
  const auto& head_row = params.pos_head_table.values();
  const auto& tail_row = params.pos_tail_table.values();
  const size_t zero_idx = 5;  // clamp
  CHECK(m.values()[6] == head_row[zero_idx * 2]);
  CHECK(m.values()[7] == head_row[zero_idx * 2 + 1]);
  CHECK(m.values()[8] == tail_row[zero_idx * 2]);
  CHECK(m.values()[9] == tail_row[zero_idx * 2 + 1]);
}

TEST_CASE("zeroed word table leaves only the position columns") {
  Rng rng(4);
  auto params = EmbeddingLayerParams::init(4, 6, 2, 5, rng);
  params.word_table = Tensor::zeros({4, 6}, true);
  Instance inst;
  inst.tokens = {1, 3};
  inst.head_pos = 0;
  inst.tail_pos = 1;
  auto m = embed_instance(inst, params);
  for (size_t i = 0; i < 2; ++i) {
    for (size_t j = 0; j < 6; ++j) CHECK(m.values()[i * 10 + j] == 0.0);
    bool any = false;
    for (size_t j = 6; j < 10; ++j) any = any || m.values()[i * 10 + j] != 0.0;
    CHECK(any);
  }
}

TEST_CASE("out-of-vocabulary ids are rejected") {
  Rng rng(5);
  auto params = EmbeddingLayerParams::init(4, 6, 2, 5, rng);
  Instance inst;
  inst.tokens = {1, 4};
  CHECK_THROWS_AS(embed_instance(inst, params), Error);
}

TEST_CASE("output dimensions are h for cnn and 3h for pcnn") {
  Rng rng(6);
  auto emb = EmbeddingLayerParams::init(12, 300, 5, 50, rng);
  EncoderConfig cnn{EncoderKind::Cnn, 3, 230, 0.5};
  EncoderConfig pcnn{EncoderKind::Pcnn, 3, 230, 0.9};
  auto cnn_params = EncoderParams::init(cnn, emb.row_width(), rng);
  auto pcnn_params = EncoderParams::init(pcnn, emb.row_width(), rng);
  Instance inst;
  inst.tokens = {1, 2, 3, 4, 5};
  inst.head_pos = 1;
  inst.tail_pos = 3;
  auto m = embed_instance(inst, emb);
  CHECK(encode(m, cnn, cnn_params, 1, 3).shape() == Shape{230});
  CHECK(encode(m, pcnn, pcnn_params, 1, 3).shape() == Shape{690});
}

TEST_CASE("cnn output ignores sentence length for constant inputs") {
  Rng rng(7);
  EncoderConfig cfg{EncoderKind::Cnn, 3, 4, 0.0};
  auto params = EncoderParams::init(cfg, 3, rng);
  std::vector<double> row{0.3, -0.2, 0.5};
  auto repeat = [&](size_t n) {
    std::vector<double> v;
    for (size_t i = 0; i < n; ++i) v.insert(v.end(), row.begin(), row.end());
    return Tensor::from({n, 3}, v);
  };
  // interior positions see the same window, and the global max picks them
  auto short_out = encode(repeat(5), cfg, params, 0, 1);
  auto long_out = encode(repeat(9), cfg, params, 0, 1);
  CHECK(short_out.values() == long_out.values());
}

TEST_CASE("pcnn output equals the conv plus segment-max oracle composition") {
  Rng rng(8);
  for (int it = 0; it < 20; ++it) {
    const size_t n = 2 + rng.uniform_int(7);
    const size_t d_in = 1 + rng.uniform_int(4);
    const size_t h = 1 + rng.uniform_int(4);
    EncoderConfig cfg{EncoderKind::Pcnn, 3, h, 0.0};
    auto params = EncoderParams::init(cfg, d_in, rng);
    auto m = Tensor::uniform({n, d_in}, -1, 1, rng, false);
    const size_t tail = rng.uniform_int(n);
    const size_t head = rng.uniform_int(n);

    oracle::Matrix im(n, std::vector<double>(d_in));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < d_in; ++j) im[i][j] = m.values()[i * d_in + j];
    std::vector<oracle::Matrix> km(3, oracle::Matrix(d_in, std::vector<double>(h)));
    for (size_t w = 0; w < 3; ++w)
      for (size_t ci = 0; ci < d_in; ++ci)
        for (size_t co = 0; co < h; ++co)
          km[w][ci][co] = params.kernel.values()[(w * d_in + ci) * h + co];
    auto conv = oracle::conv1d(im, km, params.bias.values());
    auto pooled = oracle::piecewise_max(conv, std::min(head, tail), std::max(head, tail));

    auto out = encode(m, cfg, params, head, tail);
    REQUIRE(out.size() == pooled.size());
    for (size_t i = 0; i < pooled.size(); ++i) {
      CHECK(std::abs(out.values()[i] - std::tanh(pooled[i])) < 1e-12);
    }
  }
}

TEST_CASE("swapping entity annotations swaps the position channels") {
  Rng rng(9);
  auto params = EmbeddingLayerParams::init(6, 4, 2, 5, rng);
  Instance a;
  a.tokens = {1, 2, 3, 4};
  a.head_pos = 1;
  a.tail_pos = 3;
  Instance b = a;
  std::swap(b.head_pos, b.tail_pos);

  // with identical head/tail tables the embeddings coincide after the swap
  params.pos_tail_table = params.pos_head_table;
  auto ma = embed_instance(a, params);
  auto mb = embed_instance(b, params);
  for (size_t i = 0; i < 4; ++i) {
    for (size_t j = 0; j < 2; ++j) {
      CHECK(ma.values()[i * 8 + 4 + j] == mb.values()[i * 8 + 6 + j]);
      CHECK(ma.values()[i * 8 + 6 + j] == mb.values()[i * 8 + 4 + j]);
    }
  }

  // pcnn segmentation is order-invariant; a kernel symmetric across the two
  // position blocks makes the whole encoding swap-invariant
  EncoderConfig cfg{EncoderKind::Pcnn, 3, 3, 0.0};
  auto enc_params = EncoderParams::init(cfg, 8, rng);
  auto kv = enc_params.kernel.values();
  for (size_t w = 0; w < 3; ++w) {
    for (size_t j = 0; j < 2; ++j) {
      for (size_t co = 0; co < 3; ++co) {
        kv[(w * 8 + 6 + j) * 3 + co] = kv[(w * 8 + 4 + j) * 3 + co];
      }
    }
  }
  enc_params.kernel = Tensor::from({3, 8, 3}, kv, true);
  auto oa = encode(ma, cfg, enc_params, a.head_pos, a.tail_pos);
  auto ob = encode(mb, cfg, enc_params, b.head_pos, b.tail_pos);
  REQUIRE(oa.size() == ob.size());
  for (size_t i = 0; i < oa.size(); ++i) {
    // summation order differs after the channel swap, so equality is to 1e-12
    CHECK(std::abs(oa.values()[i] - ob.values()[i]) < 1e-12);
  }
}

TEST_CASE("only looked-up word rows receive gradient") {
  Rng rng(10);
  auto emb = EmbeddingLayerParams::init(8, 4, 2, 5, rng);
  EncoderConfig cfg{EncoderKind::Pcnn, 3, 3, 0.0};
  auto params = EncoderParams::init(cfg, 8, rng);
  Instance inst;
  inst.tokens = {2, 5};
  inst.head_pos = 0;
  inst.tail_pos = 1;
  auto out = encode(embed_instance(inst, emb), cfg, params, 0, 1);
  backward(sum(out));
  auto g = emb.word_table.grad();
  for (size_t row = 0; row < 8; ++row) {
    bool nonzero = false;
    for (size_t j = 0; j < 4; ++j) nonzero = nonzero || g[row * 4 + j] != 0.0;
    CHECK(nonzero == (row == 2 || row == 5));
  }
}

TEST_CASE("encoder gradients pass finite differences") {
  Rng rng(11);
  auto emb = EmbeddingLayerParams::init(8, 3, 2, 4, rng);
  EncoderConfig cfg{EncoderKind::Pcnn, 3, 2, 0.0};
  auto params = EncoderParams::init(cfg, 7, rng);
  Instance inst;
  inst.tokens = {1, 4, 2, 7};
  inst.head_pos = 1;
  inst.tail_pos = 2;
  auto f = [&] {
    auto out = encode(embed_instance(inst, emb), cfg, params, inst.head_pos, inst.tail_pos);
    return dot(out, out);
  };
  std::vector<Tensor> all = emb.tensors();
  auto enc = params.tensors();
  all.insert(all.end(), enc.begin(), enc.end());
  CHECK(finite_diff_check(f, all) <= 1e-5);
}

}  // TEST_SUITE
