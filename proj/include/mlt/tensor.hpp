#pragma once

// Dense 64-bit float tensors, a named parameter/gradient store, Adam, and
// finite-difference gradient checking. The neural models hand-implement
// their backward passes on top of these.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/rng.hpp"

namespace mlt {

struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
    data.assign(numel(), 0.0);
  }

  size_t numel() const {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
  }

  size_t rows() const { return shape.at(0); }
  size_t cols() const { return shape.at(1); }

  double& at(size_t i) { return data[i]; }
  double at(size_t i) const { return data[i]; }
  double& at(size_t r, size_t c) { return data[r * shape[1] + c]; }
  double at(size_t r, size_t c) const { return data[r * shape[1] + c]; }

  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

inline std::string shape_str(const std::vector<size_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* what) {
  if (a.shape != b.shape)
    throw std::runtime_error(std::string("shape mismatch in ") + what + ": " +
                             shape_str(a.shape) + " vs " + shape_str(b.shape));
}

// Named parameter tensors with matching gradient tensors. Iteration order is
// the map's key order, which keeps checkpoints and Adam updates deterministic.
class ParamStore {
 public:
  // Creates the parameter on first use; later calls must match the shape.
  Tensor& param(const std::string& name, std::vector<size_t> shape) {
    auto it = params_.find(name);
    if (it == params_.end()) {
      it = params_.emplace(name, Tensor(shape)).first;
      grads_.emplace(name, Tensor(shape));
    } else if (it->second.shape != shape) {
      throw std::runtime_error("parameter '" + name + "' shape mismatch: " +
                               shape_str(it->second.shape) + " vs " +
                               shape_str(shape));
    }
    return it->second;
  }

  Tensor& grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end())
      throw std::runtime_error("no gradient for parameter '" + name + "'");
    return it->second;
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  void zero_grads() {
    for (auto& [name, g] : grads_) g.zero();
  }

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }
  std::map<std::string, Tensor>& grads() { return grads_; }

  // Glorot uniform for matrices, zeros for vectors/biases.
  Tensor& init_glorot(const std::string& name, size_t rows, size_t cols,
                      Rng& rng) {
    Tensor& t = param(name, {rows, cols});
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
  }

  Tensor& init_zeros(const std::string& name, size_t n) {
    return param(name, {n});
  }

  // Scaled normal init for embedding tables.
  Tensor& init_embedding(const std::string& name, size_t vocab, size_t dim,
                         Rng& rng) {
    Tensor& t = param(name, {vocab, dim});
    for (double& v : t.data) v = rng.normal(0.0, 0.1);
    return t;
  }

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> grads_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One update over every parameter in the store.
  void step(ParamStore& store) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (auto& [name, p] : store.params()) {
      const Tensor& g = store.grad(name);
      Tensor& m = state_m_.try_emplace(name, Tensor(p.shape)).first->second;
      Tensor& v = state_v_.try_emplace(name, Tensor(p.shape)).first->second;
      for (size_t i = 0; i < p.data.size(); ++i) {
        double gi = g.data[i];
        m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * gi;
        v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
        double mhat = m.data[i] / bc1;
        double vhat = v.data[i] / bc2;
        p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::map<std::string, Tensor> state_m_;
  std::map<std::string, Tensor> state_v_;
};

// Max relative error between analytic gradients (already in store.grads())
// and central finite differences of `loss`. `loss` must be a pure function
// of the parameters.
inline double grad_check(ParamStore& store,
                         const std::function<double()>& loss,
                         double epsilon = 1e-5) {
  double max_rel = 0.0;
  for (auto& [name, p] : store.params()) {
    const Tensor& g = store.grad(name);
    for (size_t i = 0; i < p.data.size(); ++i) {
      double orig = p.data[i];
      p.data[i] = orig + epsilon;
      double lp = loss();
      p.data[i] = orig - epsilon;
      double lm = loss();
      p.data[i] = orig;
      double fd = (lp - lm) / (2.0 * epsilon);
      double denom = std::max({std::fabs(fd), std::fabs(g.data[i]), 1e-8});
      double rel = std::fabs(fd - g.data[i]) / denom;
      // Entries below the central-difference noise floor
      // (~machine-eps * |loss| / epsilon) carry no signal; skip them.
      if (std::fabs(fd) < 1e-6 && std::fabs(g.data[i]) < 1e-6) continue;
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

} // namespace mlt
