#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "relex/errors.hpp"
#include "relex/tensor.hpp"

using namespace relex;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool rg = true) {
  return Tensor::uniform(std::move(shape), -1.0, 1.0, rng, rg);
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("conv1d analytic cases") {
  // input [1,2,3], k=3, all-ones kernel, zero bias -> [3,6,5]
  auto in = Tensor::from({3, 1}, {1, 2, 3});
  auto ker = Tensor::full({3, 1, 1}, 1.0);
  auto bias = Tensor::zeros({1});
  auto out = conv1d(in, ker, bias);
  CHECK(out.values() == std::vector<double>{3, 6, 5});

  // all-zero input, any kernel, bias b -> every output row equals b
  Rng rng(3);
  auto zin = Tensor::zeros({4, 2});
  auto rker = random_tensor({3, 2, 3}, rng, false);
  auto b = Tensor::from({3}, {0.5, -1.5, 2.0});
  auto out2 = conv1d(zin, rker, b);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(out2.values()[i * 3 + 0] == 0.5);
    CHECK(out2.values()[i * 3 + 1] == -1.5);
    CHECK(out2.values()[i * 3 + 2] == 2.0);
  }
}

TEST_CASE("conv1d matches the sliding-window oracle") {
  Rng rng(17);
  for (int it = 0; it < 25; ++it) {
    const size_t n = 1 + rng.uniform_int(8), d_in = 1 + rng.uniform_int(4),
                 d_out = 1 + rng.uniform_int(4), k = 3;
    auto in = random_tensor({n, d_in}, rng, false);
    auto ker = random_tensor({k, d_in, d_out}, rng, false);
    auto bias = random_tensor({d_out}, rng, false);

    oracle::Matrix im(n, std::vector<double>(d_in));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < d_in; ++j) im[i][j] = in.values()[i * d_in + j];
    std::vector<oracle::Matrix> km(k, oracle::Matrix(d_in, std::vector<double>(d_out)));
    for (size_t w = 0; w < k; ++w)
      for (size_t ci = 0; ci < d_in; ++ci)
        for (size_t co = 0; co < d_out; ++co)
          km[w][ci][co] = ker.values()[(w * d_in + ci) * d_out + co];
    auto expect = oracle::conv1d(im, km, bias.values());

    auto out = conv1d(in, ker, bias);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < d_out; ++j)
        CHECK(std::abs(out.values()[i * d_out + j] - expect[i][j]) < 1e-12);
  }
}

TEST_CASE("conv1d rejects mismatched feature dimensions") {
  auto in = Tensor::zeros({3, 2});
  auto ker = Tensor::zeros({3, 4, 1});
  auto bias = Tensor::zeros({1});
  CHECK_THROWS_AS(conv1d(in, ker, bias), Error);
}

TEST_CASE("piecewise max pool analytic cases") {
  // column [1,5,2,4,3], splits (1,3) -> maxima (5,4,3)
  auto h = Tensor::from({5, 1}, {1, 5, 2, 4, 3});
  auto out = piecewise_max_pool(h, 1, 3);
  CHECK(out.values() == std::vector<double>{5, 4, 3});

  // splits (0, n-1): segment 3 empty -> zero slot
  auto out2 = piecewise_max_pool(h, 0, 4);
  CHECK(out2.values()[0] == 1);  // [0..0]
  CHECK(out2.values()[1] == 5);  // [1..4]
  CHECK(out2.values()[2] == 0);  // empty

  CHECK_THROWS_AS(piecewise_max_pool(h, 3, 1), Error);
  CHECK_THROWS_AS(piecewise_max_pool(h, 0, 5), Error);
}

TEST_CASE("piecewise max pool matches the segment-scan oracle") {
  Rng rng(23);
  for (int it = 0; it < 40; ++it) {
    const size_t n = 2 + rng.uniform_int(7), m = 1 + rng.uniform_int(4);
    auto h = random_tensor({n, m}, rng, false);
    const size_t b = rng.uniform_int(n);
    const size_t a = rng.uniform_int(b + 1);
    oracle::Matrix hm(n, std::vector<double>(m));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < m; ++j) hm[i][j] = h.values()[i * m + j];
    CHECK(piecewise_max_pool(h, a, b).values() == oracle::piecewise_max(hm, a, b));
  }
}

TEST_CASE("softmax analytic cases") {
  auto s = softmax(Tensor::from({2}, {0, 0}));
  CHECK(s.values()[0] == doctest::Approx(0.5));
  CHECK(s.values()[1] == doctest::Approx(0.5));

  auto s2 = softmax(Tensor::from({2}, {std::log(3.0), 0.0}));
  CHECK(s2.values()[0] == doctest::Approx(0.75));
  CHECK(s2.values()[1] == doctest::Approx(0.25));

  auto s3 = softmax(Tensor::from({1}, {42.0}));
  CHECK(s3.values()[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(softmax(Tensor::from({0}, {})), Error);
}

TEST_CASE("softmax output is a distribution even for extreme logits") {
  Rng rng(31);
  for (int it = 0; it < 50; ++it) {
    const size_t m = 1 + rng.uniform_int(8);
    std::vector<double> logits(m);
    for (double& v : logits) v = rng.uniform(-700.0, 700.0);
    auto p = softmax(Tensor::from({m}, logits));
    double total = 0.0;
    for (double v : p.values()) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
  }
}

TEST_CASE("backward of sum is all ones; dot swaps operands") {
  Rng dummy(0);
  auto x = Tensor::from({4}, {1, 2, 3, 4}, true);
  backward(sum(x));
  CHECK(x.grad() == std::vector<double>(4, 1.0));

  auto a = Tensor::from({3}, {1, 2, 3}, true);
  auto b = Tensor::from({3}, {4, 5, 6}, true);
  backward(dot(a, b));
  CHECK(a.grad() == b.values());
  CHECK(b.grad() == a.values());
}

TEST_CASE("backward rejects non-scalar losses") {
  auto x = Tensor::from({2}, {1, 2}, true);
  CHECK_THROWS_AS(backward(add(x, x)), Error);
}

TEST_CASE("a tensor feeding two consumers accumulates both gradients") {
  auto x = Tensor::from({2}, {2, 3}, true);
  auto a = Tensor::from({2}, {1, 4});
  auto b = Tensor::from({2}, {5, -1});
  backward(sum(add(mul(x, a), mul(x, b))));
  auto g = x.grad();

  // manually unrolled graph with duplicated inputs
  auto x1 = Tensor::from({2}, {2, 3}, true);
  auto x2 = Tensor::from({2}, {2, 3}, true);
  backward(sum(add(mul(x1, a), mul(x2, b))));
  for (size_t i = 0; i < 2; ++i) {
    CHECK(g[i] == x1.grad()[i] + x2.grad()[i]);
  }
}

TEST_CASE("max pool ties route gradient to the lowest index") {
  auto h = Tensor::from({3, 1}, {7, 7, 3}, true);
  backward(sum(max_pool_columns(h)));
  CHECK(h.grad() == std::vector<double>{1, 0, 0});
}

TEST_CASE("finite differences: square function") {
  auto x = Tensor::scalar(3.0, true);
  auto err = finite_diff_check([&] { return mul(x, x); }, {x}, 1e-5);
  CHECK(err < 1e-8);
  x.zero_grad();
  backward(mul(x, x));
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("finite differences: cross-entropy of softmax over 5 random logits") {
  Rng rng(101);
  auto logits = random_tensor({5}, rng);
  auto err = finite_diff_check([&] { return cross_entropy(logits, 2); }, {logits});
  CHECK(err < 1e-6);
}

TEST_CASE("finite differences across every primitive") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    auto in = random_tensor({5, 3}, rng);
    auto ker = random_tensor({3, 3, 2}, rng);
    auto bias = random_tensor({2}, rng);
    auto w = random_tensor({4, 6}, rng);
    auto v = random_tensor({4}, rng);
    auto q = random_tensor({6}, rng);

    auto f = [&] {
      auto conv = conv1d(in, ker, bias);                         // 5x2
      auto pooled = piecewise_max_pool(conv, 1, 3);              // 6
      auto act = relex::tanh(pooled);                            // 6
      auto scores = matvec(w, act);                              // 4
      auto scored = add(scores, v);                              // 4
      auto alpha = softmax(scored);                              // 4
      auto mixed = linear_combination({act, act, relu(q), act}, alpha);
      auto combined = concat({mixed, alpha});
      return cross_entropy(combined, 1);
    };
    auto err = finite_diff_check(f, {in, ker, bias, w, v, q});
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("finite differences: matmul, embedding lookup, rowwise bias") {
  for (uint64_t seed = 30; seed < 36; ++seed) {
    Rng rng(seed);
    auto table = random_tensor({5, 3}, rng);
    auto m = random_tensor({4, 5}, rng);
    auto f = [&] {
      auto rows = embedding_rows(table, {0, 2, 2});  // 3x3
      auto mt = matmul(rows, matmul(rows, rows));    // 3x3
      auto biased = add_rowwise(mt, Tensor::from({3}, {0.1, 0.2, 0.3}));
      return sum(relex::tanh(biased));
    };
    CHECK(finite_diff_check(f, {table}) <= 1e-5);
    CHECK(finite_diff_check([&] { return sum(matmul(m, hconcat({table, table}))); },
                            {m, table}) <= 1e-5);
  }
}

TEST_CASE("forward passes are deterministic") {
  Rng rng1(99), rng2(99);
  auto a1 = random_tensor({6, 6}, rng1, false);
  auto a2 = random_tensor({6, 6}, rng2, false);
  CHECK(a1.values() == a2.values());
  auto r1 = matmul(a1, a1);
  auto r2 = matmul(a2, a2);
  CHECK(r1.values() == r2.values());
}

TEST_CASE("dropout is inverted, seeded, and disabled at evaluation") {
  Rng rng(7);
  auto x = Tensor::full({1000}, 1.0, true);
  auto kept = dropout(x, 0.4, rng, true);
  size_t zeros = 0;
  for (double v : kept.values()) {
    if (v == 0.0) {
      ++zeros;
    } else {
      CHECK(v == doctest::Approx(1.0 / 0.6));
    }
  }
  CHECK(zeros > 300);
  CHECK(zeros < 500);

  Rng eval_rng(7);
  auto same = dropout(x, 0.4, eval_rng, false);
  CHECK(same.id() == x.id());  // identity, no new node

  Rng r1(3), r2(3);
  auto d1 = dropout(x, 0.5, r1, true);
  auto d2 = dropout(x, 0.5, r2, true);
  CHECK(d1.values() == d2.values());

  CHECK_THROWS_AS(dropout(x, 1.0, rng, true), Error);
}

TEST_CASE("finite_diff_check rejects non-deterministic functions") {
  Rng rng(1);
  auto x = Tensor::scalar(1.0, true);
  CHECK_THROWS_AS(
      finite_diff_check([&] { return scale(x, rng.uniform()); }, {x}), Error);
}

}  // TEST_SUITE
