#pragma once

// Neural building blocks with hand-written backward passes: embedding
// lookup, linear layers, a gated recurrence (LSTM) cell with BPTT,
// bidirectional encoding, scaled dot-product attention, and masked
// softmax cross-entropy. Verified against finite differences in tests.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/tensor.hpp"

namespace mlt {

using Vec = std::vector<double>;

inline void check_size(const Vec& v, size_t n, const char* what) {
  if (v.size() != n)
    throw std::runtime_error(std::string("shape mismatch in ") + what + ": [" +
                             std::to_string(v.size()) + "] vs [" +
                             std::to_string(n) + "]");
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Embedding lookup
// ---------------------------------------------------------------------------

inline Vec embedding_lookup(const Tensor& table, size_t index) {
  if (index >= table.rows())
    throw std::runtime_error("embedding index " + std::to_string(index) +
                             " out of range [0," + std::to_string(table.rows()) +
                             ")");
  Vec out(table.cols());
  for (size_t j = 0; j < table.cols(); ++j) out[j] = table.at(index, j);
  return out;
}

inline void embedding_backward(Tensor& table_grad, size_t index,
                               const Vec& dout) {
  check_size(dout, table_grad.cols(), "embedding_backward");
  for (size_t j = 0; j < table_grad.cols(); ++j)
    table_grad.at(index, j) += dout[j];
}

// ---------------------------------------------------------------------------
// Linear: y = W x + b
// ---------------------------------------------------------------------------

inline Vec linear(const Tensor& W, const Tensor& b, const Vec& x) {
  check_size(x, W.cols(), "linear");
  Vec y(W.rows());
  for (size_t r = 0; r < W.rows(); ++r) {
    double acc = b.at(r);
    const double* wr = &W.data[r * W.cols()];
    for (size_t c = 0; c < W.cols(); ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

// Accumulates dW, db; returns dx.
inline Vec linear_backward(const Tensor& W, Tensor& dW, Tensor& db,
                           const Vec& x, const Vec& dy) {
  check_size(dy, W.rows(), "linear_backward");
  Vec dx(W.cols(), 0.0);
  for (size_t r = 0; r < W.rows(); ++r) {
    db.at(r) += dy[r];
    const double* wr = &W.data[r * W.cols()];
    double* dwr = &dW.data[r * W.cols()];
    for (size_t c = 0; c < W.cols(); ++c) {
      dwr[c] += dy[r] * x[c];
      dx[c] += wr[c] * dy[r];
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// LSTM cell: input/forget/output gates plus candidate memory. Parameters
// live in a ParamStore under a name prefix; caches hold everything the
// backward pass needs.
// ---------------------------------------------------------------------------

struct LstmStepCache {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g, c, tanh_c;
};

struct LstmState {
  Vec h, c;
};

class Lstm {
 public:
  Lstm(ParamStore& store, std::string prefix, size_t input_dim,
       size_t hidden_dim, Rng* init_rng = nullptr)
      : store_(store), prefix_(std::move(prefix)), input_dim_(input_dim),
        hidden_dim_(hidden_dim) {
    if (init_rng) {
      store_.init_glorot(prefix_ + ".W", 4 * hidden_dim_, input_dim_, *init_rng);
      store_.init_glorot(prefix_ + ".U", 4 * hidden_dim_, hidden_dim_, *init_rng);
      store_.init_zeros(prefix_ + ".b", 4 * hidden_dim_);
    } else {
      store_.param(prefix_ + ".W", {4 * hidden_dim_, input_dim_});
      store_.param(prefix_ + ".U", {4 * hidden_dim_, hidden_dim_});
      store_.param(prefix_ + ".b", {4 * hidden_dim_});
    }
  }

  size_t hidden_dim() const { return hidden_dim_; }
  size_t input_dim() const { return input_dim_; }

  LstmState initial_state() const {
    return {Vec(hidden_dim_, 0.0), Vec(hidden_dim_, 0.0)};
  }

  LstmState step(const Vec& x, const LstmState& prev,
                 LstmStepCache& cache) const {
    check_size(x, input_dim_, "lstm step input");
    const Tensor& W = store_.param(prefix_ + ".W", {4 * hidden_dim_, input_dim_});
    const Tensor& U = store_.param(prefix_ + ".U", {4 * hidden_dim_, hidden_dim_});
    const Tensor& b = store_.param(prefix_ + ".b", {4 * hidden_dim_});
    size_t H = hidden_dim_;
    Vec z(4 * H);
    for (size_t r = 0; r < 4 * H; ++r) {
      double acc = b.at(r);
      const double* wr = &W.data[r * input_dim_];
      for (size_t c = 0; c < input_dim_; ++c) acc += wr[c] * x[c];
      const double* ur = &U.data[r * H];
      for (size_t c = 0; c < H; ++c) acc += ur[c] * prev.h[c];
      z[r] = acc;
    }
    cache.x = x;
    cache.h_prev = prev.h;
    cache.c_prev = prev.c;
    cache.i.resize(H);
    cache.f.resize(H);
    cache.o.resize(H);
    cache.g.resize(H);
    cache.c.resize(H);
    cache.tanh_c.resize(H);
    LstmState next{Vec(H), Vec(H)};
    for (size_t k = 0; k < H; ++k) {
      cache.i[k] = sigmoid(z[k]);
      cache.f[k] = sigmoid(z[H + k]);
      cache.o[k] = sigmoid(z[2 * H + k]);
      cache.g[k] = std::tanh(z[3 * H + k]);
      cache.c[k] = cache.f[k] * prev.c[k] + cache.i[k] * cache.g[k];
      cache.tanh_c[k] = std::tanh(cache.c[k]);
      next.c[k] = cache.c[k];
      next.h[k] = cache.o[k] * cache.tanh_c[k];
    }
    return next;
  }

  // One step of BPTT. dh/dc are gradients flowing into this step's outputs;
  // returns gradient on x and updates dh/dc to the previous step's.
  Vec step_backward(const LstmStepCache& cache, Vec& dh, Vec& dc) const {
    const Tensor& W = store_.param(prefix_ + ".W", {4 * hidden_dim_, input_dim_});
    const Tensor& U = store_.param(prefix_ + ".U", {4 * hidden_dim_, hidden_dim_});
    Tensor& dW = store_.grad(prefix_ + ".W");
    Tensor& dU = store_.grad(prefix_ + ".U");
    Tensor& db = store_.grad(prefix_ + ".b");
    size_t H = hidden_dim_;
    Vec dz(4 * H);
    Vec dh_prev(H, 0.0), dc_prev(H, 0.0);
    for (size_t k = 0; k < H; ++k) {
      double do_ = dh[k] * cache.tanh_c[k];
      double dct = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
      double di = dct * cache.g[k];
      double df = dct * cache.c_prev[k];
      double dg = dct * cache.i[k];
      dc_prev[k] = dct * cache.f[k];
      dz[k] = di * cache.i[k] * (1.0 - cache.i[k]);
      dz[H + k] = df * cache.f[k] * (1.0 - cache.f[k]);
      dz[2 * H + k] = do_ * cache.o[k] * (1.0 - cache.o[k]);
      dz[3 * H + k] = dg * (1.0 - cache.g[k] * cache.g[k]);
    }
    Vec dx(input_dim_, 0.0);
    for (size_t r = 0; r < 4 * H; ++r) {
      db.at(r) += dz[r];
      const double* wr = &W.data[r * input_dim_];
      double* dwr = &dW.data[r * input_dim_];
      for (size_t c = 0; c < input_dim_; ++c) {
        dwr[c] += dz[r] * cache.x[c];
        dx[c] += wr[c] * dz[r];
      }
      const double* ur = &U.data[r * H];
      double* dur = &dU.data[r * H];
      for (size_t c = 0; c < H; ++c) {
        dur[c] += dz[r] * cache.h_prev[c];
        dh_prev[c] += ur[c] * dz[r];
      }
    }
    dh = dh_prev;
    dc = dc_prev;
    return dx;
  }

  // Full unidirectional pass over a sequence.
  std::vector<Vec> forward(const std::vector<Vec>& inputs,
                           std::vector<LstmStepCache>& caches) const {
    caches.assign(inputs.size(), {});
    std::vector<Vec> hs;
    hs.reserve(inputs.size());
    LstmState state = initial_state();
    for (size_t t = 0; t < inputs.size(); ++t) {
      state = step(inputs[t], state, caches[t]);
      hs.push_back(state.h);
    }
    return hs;
  }

  // BPTT over the whole sequence; dhs[t] is the gradient on output t.
  std::vector<Vec> backward(const std::vector<LstmStepCache>& caches,
                            const std::vector<Vec>& dhs) const {
    if (caches.size() != dhs.size())
      throw std::runtime_error("lstm backward: cache/gradient length mismatch");
    std::vector<Vec> dxs(caches.size());
    Vec dh(hidden_dim_, 0.0), dc(hidden_dim_, 0.0);
    for (size_t t = caches.size(); t-- > 0;) {
      for (size_t k = 0; k < hidden_dim_; ++k) dh[k] += dhs[t][k];
      dxs[t] = step_backward(caches[t], dh, dc);
    }
    return dxs;
  }

 private:
  ParamStore& store_;
  std::string prefix_;
  size_t input_dim_;
  size_t hidden_dim_;
};

// ---------------------------------------------------------------------------
// Bidirectional encoder: forward and backward LSTM, outputs concatenated
// per position (2H each).
// ---------------------------------------------------------------------------

struct BiLstmCache {
  std::vector<LstmStepCache> fwd, bwd;
  size_t length = 0;
};

class BiLstm {
 public:
  BiLstm(ParamStore& store, const std::string& prefix, size_t input_dim,
         size_t hidden_dim, Rng* init_rng = nullptr)
      : fwd_(store, prefix + ".fwd", input_dim, hidden_dim, init_rng),
        bwd_(store, prefix + ".bwd", input_dim, hidden_dim, init_rng) {}

  size_t output_dim() const { return 2 * fwd_.hidden_dim(); }

  std::vector<Vec> forward(const std::vector<Vec>& inputs,
                           BiLstmCache& cache) const {
    cache.length = inputs.size();
    std::vector<Vec> hf = fwd_.forward(inputs, cache.fwd);
    std::vector<Vec> rev(inputs.rbegin(), inputs.rend());
    std::vector<Vec> hb = bwd_.forward(rev, cache.bwd);
    std::vector<Vec> out(inputs.size());
    size_t H = fwd_.hidden_dim();
    for (size_t t = 0; t < inputs.size(); ++t) {
      out[t].resize(2 * H);
      for (size_t k = 0; k < H; ++k) {
        out[t][k] = hf[t][k];
        out[t][H + k] = hb[inputs.size() - 1 - t][k];
      }
    }
    return out;
  }

  std::vector<Vec> backward(const BiLstmCache& cache,
                            const std::vector<Vec>& douts) const {
    size_t H = fwd_.hidden_dim();
    size_t T = cache.length;
    std::vector<Vec> dhf(T, Vec(H, 0.0)), dhb(T, Vec(H, 0.0));
    for (size_t t = 0; t < T; ++t)
      for (size_t k = 0; k < H; ++k) {
        dhf[t][k] = douts[t][k];
        dhb[T - 1 - t][k] = douts[t][H + k];
      }
    std::vector<Vec> dxf = fwd_.backward(cache.fwd, dhf);
    std::vector<Vec> dxb = bwd_.backward(cache.bwd, dhb);
    std::vector<Vec> dxs(T);
    for (size_t t = 0; t < T; ++t) {
      dxs[t] = dxf[t];
      const Vec& r = dxb[T - 1 - t];
      for (size_t c = 0; c < r.size(); ++c) dxs[t][c] += r[c];
    }
    return dxs;
  }

 private:
  Lstm fwd_, bwd_;
};

// ---------------------------------------------------------------------------
// Scaled dot-product attention over a set of keys (keys double as values).
// ---------------------------------------------------------------------------

struct AttentionCache {
  Vec query;
  std::vector<Vec> keys;
  Vec weights;
};

struct AttentionResult {
  Vec weights;
  Vec context;
};

inline AttentionResult attention(const Vec& query, const std::vector<Vec>& keys,
                                 AttentionCache& cache) {
  if (keys.empty()) throw std::runtime_error("attention over empty key set");
  size_t d = query.size();
  for (const auto& k : keys) check_size(k, d, "attention keys");
  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Vec scores(keys.size());
  double max_s = -1e300;
  for (size_t j = 0; j < keys.size(); ++j) {
    double s = 0.0;
    for (size_t k = 0; k < d; ++k) s += query[k] * keys[j][k];
    scores[j] = s * scale;
    max_s = std::max(max_s, scores[j]);
  }
  Vec w(keys.size());
  double z = 0.0;
  for (size_t j = 0; j < keys.size(); ++j) {
    w[j] = std::exp(scores[j] - max_s);
    z += w[j];
  }
  for (double& x : w) x /= z;
  Vec ctx(d, 0.0);
  for (size_t j = 0; j < keys.size(); ++j)
    for (size_t k = 0; k < d; ++k) ctx[k] += w[j] * keys[j][k];
  cache.query = query;
  cache.keys = keys;
  cache.weights = w;
  return {w, ctx};
}

struct AttentionGrad {
  Vec dquery;
  std::vector<Vec> dkeys;
};

inline AttentionGrad attention_backward(const AttentionCache& cache,
                                        const Vec& dweights,
                                        const Vec& dcontext) {
  size_t d = cache.query.size();
  size_t n = cache.keys.size();
  double scale = 1.0 / std::sqrt(static_cast<double>(d));
  // Total gradient on each weight: explicit dweights plus via the context.
  Vec dw(n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    dw[j] = dweights.empty() ? 0.0 : dweights[j];
    for (size_t k = 0; k < d; ++k) dw[j] += dcontext[k] * cache.keys[j][k];
  }
  double mean = 0.0;
  for (size_t j = 0; j < n; ++j) mean += cache.weights[j] * dw[j];
  AttentionGrad g;
  g.dquery.assign(d, 0.0);
  g.dkeys.assign(n, Vec(d, 0.0));
  for (size_t j = 0; j < n; ++j) {
    double ds = cache.weights[j] * (dw[j] - mean); // softmax jacobian
    for (size_t k = 0; k < d; ++k) {
      g.dquery[k] += ds * cache.keys[j][k] * scale;
      g.dkeys[j][k] += ds * cache.query[k] * scale +
                       cache.weights[j] * dcontext[k];
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Masked softmax cross-entropy. Masked entries get probability exactly 0.
// ---------------------------------------------------------------------------

struct SoftmaxCeResult {
  double loss = 0.0;
  Vec probs;   // masked entries exactly 0
  Vec dlogits; // gradient of loss w.r.t. logits
};

inline SoftmaxCeResult softmax_cross_entropy(const Vec& logits,
                                             size_t target_index,
                                             const std::vector<char>& mask) {
  if (!mask.empty() && mask.size() != logits.size())
    throw std::runtime_error("softmax_cross_entropy: mask size mismatch");
  if (target_index >= logits.size())
    throw std::runtime_error("softmax_cross_entropy: target out of range");
  auto admissible = [&](size_t j) { return mask.empty() || mask[j]; };
  if (!admissible(target_index))
    throw std::runtime_error("softmax_cross_entropy: target is masked out");
  double max_l = -1e300;
  for (size_t j = 0; j < logits.size(); ++j)
    if (admissible(j)) max_l = std::max(max_l, logits[j]);
  double z = 0.0;
  SoftmaxCeResult r;
  r.probs.assign(logits.size(), 0.0);
  for (size_t j = 0; j < logits.size(); ++j)
    if (admissible(j)) {
      r.probs[j] = std::exp(logits[j] - max_l);
      z += r.probs[j];
    }
  for (size_t j = 0; j < logits.size(); ++j) r.probs[j] /= z;
  r.loss = -(logits[target_index] - max_l - std::log(z));
  r.dlogits.assign(logits.size(), 0.0);
  for (size_t j = 0; j < logits.size(); ++j)
    if (admissible(j))
      r.dlogits[j] = r.probs[j] - (j == target_index ? 1.0 : 0.0);
  return r;
}

} // namespace mlt
