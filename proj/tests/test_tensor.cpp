#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mlt/nn.hpp"
#include "mlt/rng.hpp"
#include "mlt/tensor.hpp"

using namespace mlt;

namespace {

Vec random_vec(Rng& rng, size_t n, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

} // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  t.at(1, 2) = 5.0;
  CHECK(t.data[5] == 5.0);
  ParamStore store;
  store.param("w", {2, 2});
  CHECK_THROWS(store.param("w", {3, 2}));
  CHECK_THROWS(store.grad("missing"));
}

TEST_CASE("grad check: linear layer") {
  Rng rng(1);
  ParamStore store;
  store.init_glorot("W", 3, 4, rng);
  store.init_zeros("b", 3);
  for (double& v : store.param("b", {3}).data) v = rng.uniform(-0.5, 0.5);
  Vec x = random_vec(rng, 4);
  Vec proj = random_vec(rng, 3);

  auto loss = [&]() {
    Vec y = linear(store.param("W", {3, 4}), store.param("b", {3}), x);
    double l = 0;
    for (size_t i = 0; i < y.size(); ++i) l += proj[i] * y[i];
    return l;
  };
  store.zero_grads();
  linear_backward(store.param("W", {3, 4}), store.grad("W"), store.grad("b"),
                  x, proj);
  CHECK(grad_check(store, loss) < 1e-4);
}

TEST_CASE("grad check: embedding lookup") {
  Rng rng(2);
  ParamStore store;
  store.init_embedding("E", 5, 3, rng);
  Vec proj = random_vec(rng, 3);
  size_t idx = 2;
  auto loss = [&]() {
    Vec e = embedding_lookup(store.param("E", {5, 3}), idx);
    double l = 0;
    for (size_t i = 0; i < 3; ++i) l += proj[i] * e[i];
    return l;
  };
  store.zero_grads();
  embedding_backward(store.grad("E"), idx, proj);
  CHECK(grad_check(store, loss) < 1e-4);
  CHECK_THROWS(embedding_lookup(store.param("E", {5, 3}), 7));
}

TEST_CASE("grad check: lstm over a sequence") {
  Rng rng(3);
  ParamStore store;
  Lstm lstm(store, "lstm", 3, 4, &rng);
  std::vector<Vec> inputs = {random_vec(rng, 3), random_vec(rng, 3),
                             random_vec(rng, 3)};
  std::vector<Vec> projs = {random_vec(rng, 4), random_vec(rng, 4),
                            random_vec(rng, 4)};
  auto loss = [&]() {
    std::vector<LstmStepCache> caches;
    auto hs = lstm.forward(inputs, caches);
    double l = 0;
    for (size_t t = 0; t < hs.size(); ++t)
      for (size_t k = 0; k < hs[t].size(); ++k) l += projs[t][k] * hs[t][k];
    return l;
  };
  store.zero_grads();
  std::vector<LstmStepCache> caches;
  lstm.forward(inputs, caches);
  lstm.backward(caches, projs);
  CHECK(grad_check(store, loss) < 1e-4);
}

TEST_CASE("grad check: bidirectional encoder, including input gradients") {
  Rng rng(4);
  ParamStore store;
  BiLstm enc(store, "enc", 2, 3, &rng);
  // Inputs come from an embedding table so input grads are exercised too.
  store.init_embedding("E", 4, 2, rng);
  std::vector<size_t> idx = {0, 2, 3, 1};
  std::vector<Vec> projs;
  for (int t = 0; t < 4; ++t) projs.push_back(random_vec(rng, 6));

  auto loss = [&]() {
    std::vector<Vec> inputs;
    for (size_t i : idx)
      inputs.push_back(embedding_lookup(store.param("E", {4, 2}), i));
    BiLstmCache cache;
    auto out = enc.forward(inputs, cache);
    double l = 0;
    for (size_t t = 0; t < out.size(); ++t)
      for (size_t k = 0; k < out[t].size(); ++k) l += projs[t][k] * out[t][k];
    return l;
  };
  store.zero_grads();
  std::vector<Vec> inputs;
  for (size_t i : idx)
    inputs.push_back(embedding_lookup(store.param("E", {4, 2}), i));
  BiLstmCache cache;
  enc.forward(inputs, cache);
  auto dxs = enc.backward(cache, projs);
  for (size_t t = 0; t < idx.size(); ++t)
    embedding_backward(store.grad("E"), idx[t], dxs[t]);
  CHECK(grad_check(store, loss) < 1e-4);
}

TEST_CASE("attention with identical keys is uniform") {
  Vec q = {0.3, -0.2};
  std::vector<Vec> keys = {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
  AttentionCache cache;
  auto r = attention(q, keys, cache);
  for (double w : r.weights) CHECK(w == Catch::Approx(1.0 / 3.0).margin(1e-12));
  double sum = 0;
  for (double w : r.weights) sum += w;
  CHECK(std::fabs(sum - 1.0) < 1e-12);
}

TEST_CASE("grad check: attention") {
  Rng rng(5);
  ParamStore store;
  Tensor& q = store.param("q", {3});
  Tensor& K = store.param("K", {4, 3});
  for (double& v : q.data) v = rng.uniform(-1, 1);
  for (double& v : K.data) v = rng.uniform(-1, 1);
  Vec u = random_vec(rng, 3);  // projection on context
  Vec w = random_vec(rng, 4);  // projection on weights

  auto run = [&](AttentionCache& cache) {
    Vec query(q.data.begin(), q.data.end());
    std::vector<Vec> keys;
    for (size_t j = 0; j < 4; ++j)
      keys.push_back(Vec(K.data.begin() + j * 3, K.data.begin() + (j + 1) * 3));
    return attention(query, keys, cache);
  };
  auto loss = [&]() {
    AttentionCache cache;
    auto r = run(cache);
    double l = 0;
    for (size_t i = 0; i < 3; ++i) l += u[i] * r.context[i];
    for (size_t j = 0; j < 4; ++j) l += w[j] * r.weights[j];
    return l;
  };
  store.zero_grads();
  AttentionCache cache;
  run(cache);
  auto g = attention_backward(cache, w, u);
  for (size_t i = 0; i < 3; ++i) store.grad("q").at(i) += g.dquery[i];
  for (size_t j = 0; j < 4; ++j)
    for (size_t i = 0; i < 3; ++i) store.grad("K").at(j, i) += g.dkeys[j][i];
  CHECK(grad_check(store, loss) < 1e-4);
}

TEST_CASE("masked softmax cross-entropy basics") {
  SECTION("single unmasked logit forces probability 1") {
    Vec logits = {2.0, -1.0, 0.5};
    std::vector<char> mask = {0, 1, 0};
    auto r = softmax_cross_entropy(logits, 1, mask);
    CHECK(r.loss == Catch::Approx(0.0).margin(1e-15));
    for (double d : r.dlogits) CHECK(std::fabs(d) < 1e-15);
    CHECK(r.probs[0] == 0.0);
    CHECK(r.probs[2] == 0.0);
    CHECK(r.probs[1] == 1.0);
  }
  SECTION("probabilities sum to 1 within 1e-12; masked entries exactly 0") {
    Rng rng(6);
    for (int iter = 0; iter < 100; ++iter) {
      Vec logits = random_vec(rng, 6, 5.0);
      std::vector<char> mask(6, 0);
      size_t target = 0;
      while (true) {
        for (auto& m : mask) m = rng.bernoulli(0.6);
        bool any = false;
        for (size_t j = 0; j < 6; ++j)
          if (mask[j]) {
            target = j;
            any = true;
          }
        if (any) break;
      }
      auto r = softmax_cross_entropy(logits, target, mask);
      double sum = 0;
      for (size_t j = 0; j < 6; ++j) {
        if (!mask[j]) CHECK(r.probs[j] == 0.0);
        sum += r.probs[j];
      }
      CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
  }
  SECTION("masked target is an error") {
    CHECK_THROWS(softmax_cross_entropy({1.0, 2.0}, 0, {0, 1}));
  }
}

TEST_CASE("grad check: masked softmax cross-entropy") {
  Rng rng(7);
  ParamStore store;
  Tensor& l = store.param("logits", {5});
  for (double& v : l.data) v = rng.uniform(-2, 2);
  std::vector<char> mask = {1, 0, 1, 1, 0};
  auto loss = [&]() {
    Vec logits(l.data.begin(), l.data.end());
    return softmax_cross_entropy(logits, 2, mask).loss;
  };
  store.zero_grads();
  auto r = softmax_cross_entropy(Vec(l.data.begin(), l.data.end()), 2, mask);
  for (size_t i = 0; i < 5; ++i) store.grad("logits").at(i) += r.dlogits[i];
  CHECK(grad_check(store, loss) < 1e-4);
}

TEST_CASE("adam step with zero gradients leaves parameters unchanged") {
  Rng rng(8);
  ParamStore store;
  store.init_glorot("W", 3, 3, rng);
  auto before = store.param("W", {3, 3}).data;
  store.zero_grads();
  Adam opt;
  opt.step(store);
  CHECK(store.param("W", {3, 3}).data == before);
}

TEST_CASE("grad check: 2-step recurrence + attention + loss composite") {
  Rng rng(9);
  ParamStore store;
  Lstm lstm(store, "rec", 2, 3, &rng);
  store.init_embedding("E", 3, 2, rng);
  store.init_glorot("Wq", 3, 3, rng);
  store.init_zeros("bq", 3);
  std::vector<size_t> idx = {0, 2};

  // Forward: embed 2 steps through the recurrence, project the last state
  // to a query, attend over the step outputs, score keys by attention and
  // take cross-entropy against key 0.
  auto forward = [&](bool accumulate) {
    std::vector<Vec> inputs;
    for (size_t i : idx)
      inputs.push_back(embedding_lookup(store.param("E", {3, 2}), i));
    std::vector<LstmStepCache> caches;
    auto hs = lstm.forward(inputs, caches);
    Vec query = linear(store.param("Wq", {3, 3}), store.param("bq", {3}),
                       hs.back());
    AttentionCache att_cache;
    auto att = attention(query, hs, att_cache);
    Vec logits = att.weights; // point at a step via the attention weights
    auto ce = softmax_cross_entropy(logits, 0, {});
    if (accumulate) {
      auto g = attention_backward(att_cache, ce.dlogits, Vec(3, 0.0));
      std::vector<Vec> dhs(2, Vec(3, 0.0));
      for (size_t t = 0; t < 2; ++t) dhs[t] = g.dkeys[t];
      Vec dq = g.dquery;
      Vec dh_last = linear_backward(store.param("Wq", {3, 3}),
                                    store.grad("Wq"), store.grad("bq"),
                                    hs.back(), dq);
      for (size_t k = 0; k < 3; ++k) dhs.back()[k] += dh_last[k];
      auto dxs = lstm.backward(caches, dhs);
      for (size_t t = 0; t < 2; ++t)
        embedding_backward(store.grad("E"), idx[t], dxs[t]);
    }
    return ce.loss;
  };
  store.zero_grads();
  forward(true);
  CHECK(grad_check(store, [&]() { return forward(false); }, 1e-5) < 1e-4);
}
