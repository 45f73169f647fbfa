// lidtsm/nnet.hpp

// Copyright 2026  The lidtsm Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Feed-forward bottleneck DNN and two-layer peephole LSTM classifier with
// hand-written backward passes. Everything is templated on the scalar type:
// float for training, double for gradient checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lidtsm/error.hpp"
#include "lidtsm/matrix.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm::nnet {

enum class Activation { kSigmoid, kLinear, kRelu, kSoftmax };

inline const char *activation_name(Activation a) {
  switch (a) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

inline Activation parse_activation(const std::string &s) {
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "linear") return Activation::kLinear;
  if (s == "relu") return Activation::kRelu;
  if (s == "softmax") return Activation::kSoftmax;
  fail(ErrorCode::kConfig, "unknown activation '" + s + "'");
}

// ---------------------------------------------------------------------------
// Kernels

template <typename T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// Eight independent partial sums keep the loop vectorizable while the
// summation order stays fixed.
template <typename T>
T dot(const T *a, const T *b, size_t n) {
  T acc[8] = {};
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (size_t k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
void axpy(T alpha, const T *x, T *y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

/// y = W x + b.
template <typename T>
void affine(const Matrix<T> &w, const Matrix<T> &b, std::span<const T> x, std::span<T> y) {
  for (size_t r = 0; r < w.rows; ++r) y[r] = dot(&w.data[r * w.cols], x.data(), w.cols) + b.data[r];
}

template <typename T>
void log_softmax(std::span<const T> z, std::span<T> out) {
  const T peak = *std::max_element(z.begin(), z.end());
  T sum = 0;
  for (T v : z) sum += std::exp(v - peak);
  const T log_norm = peak + std::log(sum);
  for (size_t k = 0; k < z.size(); ++k) out[k] = z[k] - log_norm;
}

/// -log p(target).
template <typename T>
T cross_entropy(std::span<const T> log_probs, size_t target) {
  require(target < log_probs.size(), ErrorCode::kInvalidArgument, "target class out of range");
  require(std::isfinite(log_probs[target]), ErrorCode::kNonFinite, "non-finite log-probability");
  return -log_probs[target];
}

// ---------------------------------------------------------------------------
// Dense layers

template <typename T>
struct DenseLayer {
  Matrix<T> w;  // out x in
  Matrix<T> b;  // 1 x out
  Activation act = Activation::kLinear;

  DenseLayer() = default;
  DenseLayer(size_t in, size_t out, Activation a) : w(out, in), b(1, out), act(a) {}

  size_t in_dim() const { return w.cols; }
  size_t out_dim() const { return w.rows; }

  template <typename F>
  void visit(const std::string &prefix, F &&f) {
    f(prefix + ".w", w);
    f(prefix + ".b", b);
  }
  template <typename F>
  void visit(const std::string &prefix, F &&f) const {
    f(prefix + ".w", w);
    f(prefix + ".b", b);
  }
};

/// Applies the activation in place. Softmax rows become probabilities.
template <typename T>
void activate(Activation a, std::span<T> z) {
  switch (a) {
    case Activation::kSigmoid:
      for (T &v : z) v = sigmoid(v);
      break;
    case Activation::kRelu:
      for (T &v : z) v = std::max(v, T(0));
      break;
    case Activation::kSoftmax: {
      log_softmax<T>(z, z);
      for (T &v : z) v = std::exp(v);
      break;
    }
    case Activation::kLinear:
      break;
  }
}

/// Row-wise y = act(x W^T + b) for a batch of inputs.
template <typename T>
Matrix<T> dense_forward(const DenseLayer<T> &l, const Matrix<T> &x) {
  require(x.cols == l.in_dim(), ErrorCode::kShapeMismatch,
          "dense input has " + std::to_string(x.cols) + " columns, layer expects " +
              std::to_string(l.in_dim()));
  Matrix<T> y(x.rows, l.out_dim());
  for (size_t r = 0; r < x.rows; ++r) {
    affine<T>(l.w, l.b, x.row(r), y.row(r));
    activate<T>(l.act, y.row(r));
  }
  return y;
}

/// Given dL/dz for a batch (z = pre-activation), accumulates parameter
/// gradients and returns dL/dx.
template <typename T>
Matrix<T> dense_backward(const DenseLayer<T> &l, const Matrix<T> &x, const Matrix<T> &dz,
                         DenseLayer<T> &grad, bool need_dx = true) {
  const size_t in = l.in_dim(), out = l.out_dim();
  Matrix<T> dx(need_dx ? x.rows : 0, in);
  for (size_t r = 0; r < x.rows; ++r) {
    const T *xr = &x.data[r * in];
    for (size_t o = 0; o < out; ++o) {
      const T g = dz(r, o);
      if (g == T(0)) continue;
      grad.b.data[o] += g;
      axpy(g, xr, &grad.w.data[o * in], in);
      if (need_dx) axpy(g, &l.w.data[o * in], &dx.data[r * in], in);
    }
  }
  return dx;
}

// Converts dL/dy into dL/dz in place given the activation output y.
template <typename T>
void activation_backward(Activation a, const Matrix<T> &y, Matrix<T> &d) {
  switch (a) {
    case Activation::kSigmoid:
      for (size_t i = 0; i < d.size(); ++i) d.data[i] *= y.data[i] * (T(1) - y.data[i]);
      break;
    case Activation::kRelu:
      for (size_t i = 0; i < d.size(); ++i)
        if (y.data[i] <= T(0)) d.data[i] = T(0);
      break;
    case Activation::kLinear:
      break;
    case Activation::kSoftmax:
      fail(ErrorCode::kInvalidArgument, "softmax is only supported as the output layer");
  }
}

template <typename T>
void init_dense(DenseLayer<T> &l, Rng &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(l.in_dim() + l.out_dim()));
  for (T &v : l.w.data) v = static_cast<T>(rng.uniform(-limit, limit));
  std::fill(l.b.data.begin(), l.b.data.end(), T(0));
}

// ---------------------------------------------------------------------------
// Bottleneck DNN

struct BnDnnArch {
  size_t input_dim = 0;
  size_t hidden_layers = 5;  // including the linear bottleneck
  size_t hidden_width = 512;
  size_t bottleneck_width = 512;
  size_t num_classes = 0;

  void validate() const {
    require(input_dim > 0 && num_classes >= 2 && hidden_layers >= 1 && hidden_width > 0 &&
                bottleneck_width > 0,
            ErrorCode::kConfig, "invalid bottleneck DNN architecture");
  }
  friend bool operator==(const BnDnnArch &, const BnDnnArch &) = default;
};

/// (hidden_layers - 1) sigmoid layers, a linear bottleneck, a softmax layer.
template <typename T>
struct BnDnn {
  BnDnnArch arch;
  std::vector<DenseLayer<T>> layers;

  BnDnn() = default;
  explicit BnDnn(const BnDnnArch &a) : arch(a) {
    a.validate();
    size_t in = a.input_dim;
    for (size_t l = 0; l + 1 < a.hidden_layers; ++l) {
      layers.emplace_back(in, a.hidden_width, Activation::kSigmoid);
      in = a.hidden_width;
    }
    layers.emplace_back(in, a.bottleneck_width, Activation::kLinear);
    layers.emplace_back(a.bottleneck_width, a.num_classes, Activation::kSoftmax);
  }

  size_t bottleneck_index() const { return layers.size() - 2; }

  void initialize(Rng &rng) {
    for (auto &l : layers) init_dense(l, rng);
  }

  template <typename F>
  void visit(F &&f) {
    for (size_t l = 0; l < layers.size(); ++l) layers[l].visit("layer" + std::to_string(l), f);
  }
  template <typename F>
  void visit(F &&f) const {
    for (size_t l = 0; l < layers.size(); ++l) layers[l].visit("layer" + std::to_string(l), f);
  }
};

template <typename T>
struct DnnCache {
  std::vector<Matrix<T>> acts;  // acts[0] is the input, acts[l + 1] the output of layer l
  Matrix<T> log_probs;
};

template <typename T>
void dnn_forward_batch(const BnDnn<T> &p, const Matrix<T> &x, DnnCache<T> &cache) {
  cache.acts.resize(p.layers.size() + 1);
  cache.acts[0] = x;
  for (size_t l = 0; l < p.layers.size(); ++l)
    cache.acts[l + 1] = dense_forward(p.layers[l], cache.acts[l]);
  const Matrix<T> &probs = cache.acts.back();
  cache.log_probs = Matrix<T>(probs.rows, probs.cols);
  // Recomputed from the logits for accuracy at saturated probabilities.
  const auto &out = p.layers.back();
  std::vector<T> z(out.out_dim());
  for (size_t r = 0; r < x.rows; ++r) {
    affine<T>(out.w, out.b, cache.acts[cache.acts.size() - 2].row(r), z);
    log_softmax<T>(z, cache.log_probs.row(r));
  }
}

/// Bottleneck activations (linear layer output) for a batch of inputs.
template <typename T>
Matrix<T> dnn_bottleneck(const BnDnn<T> &p, const Matrix<T> &x) {
  Matrix<T> a = x;
  for (size_t l = 0; l <= p.bottleneck_index(); ++l) a = dense_forward(p.layers[l], a);
  return a;
}

template <typename T>
struct DnnOutput {
  std::vector<T> posteriors;
  std::vector<T> bottleneck;
};

template <typename T>
DnnOutput<T> dnn_forward(std::span<const T> v, const BnDnn<T> &p) {
  Matrix<T> x(1, v.size());
  std::copy(v.begin(), v.end(), x.data.begin());
  DnnCache<T> cache;
  dnn_forward_batch(p, x, cache);
  DnnOutput<T> out;
  out.posteriors = cache.acts.back().data;
  out.bottleneck = cache.acts[p.bottleneck_index() + 1].data;
  return out;
}

struct BatchStats {
  double loss = 0.0;  // summed cross-entropy
  size_t correct = 0;
  size_t count = 0;

  BatchStats &operator+=(const BatchStats &o) {
    loss += o.loss;
    correct += o.correct;
    count += o.count;
    return *this;
  }
};

/// Forward and backward for a batch; accumulates the gradient of the summed
/// cross-entropy into grad.
template <typename T>
BatchStats dnn_backward_batch(const BnDnn<T> &p, const Matrix<T> &x,
                              std::span<const int> targets, BnDnn<T> &grad) {
  require(targets.size() == x.rows, ErrorCode::kShapeMismatch, "label/feature length mismatch");
  DnnCache<T> cache;
  dnn_forward_batch(p, x, cache);
  BatchStats stats;
  stats.count = x.rows;
  Matrix<T> d = cache.acts.back();  // softmax + cross-entropy: p - onehot
  for (size_t r = 0; r < x.rows; ++r) {
    const size_t y = static_cast<size_t>(targets[r]);
    stats.loss += static_cast<double>(cross_entropy<T>(cache.log_probs.row(r), y));
    const auto lp = cache.log_probs.row(r);
    stats.correct += static_cast<size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin()) == y;
    d(r, y) -= T(1);
  }
  for (size_t l = p.layers.size(); l-- > 0;) {
    Matrix<T> dx = dense_backward(p.layers[l], cache.acts[l], d, grad.layers[l], l > 0);
    if (l == 0) break;
    activation_backward(p.layers[l - 1].act, cache.acts[l], dx);
    d = std::move(dx);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Peephole LSTM

template <typename T>
struct LstmLayer {
  size_t input_dim = 0;
  size_t hidden = 0;
  // W_f, W_i act on [c_{t-1}, h_{t-1}, x_t]; W_c on [h_{t-1}, x_t];
  // W_o on [c_t, h_{t-1}, x_t].
  Matrix<T> wf, wi, wc, wo;
  Matrix<T> bf, bi, bc, bo;

  LstmLayer() = default;
  LstmLayer(size_t d, size_t h)
      : input_dim(d), hidden(h),
        wf(h, 2 * h + d), wi(h, 2 * h + d), wc(h, h + d), wo(h, 2 * h + d),
        bf(1, h), bi(1, h), bc(1, h), bo(1, h) {}

  template <typename F>
  void visit(const std::string &prefix, F &&f) {
    f(prefix + ".W_f", wf); f(prefix + ".W_i", wi); f(prefix + ".W_c", wc); f(prefix + ".W_o", wo);
    f(prefix + ".b_f", bf); f(prefix + ".b_i", bi); f(prefix + ".b_c", bc); f(prefix + ".b_o", bo);
  }
  template <typename F>
  void visit(const std::string &prefix, F &&f) const {
    f(prefix + ".W_f", wf); f(prefix + ".W_i", wi); f(prefix + ".W_c", wc); f(prefix + ".W_o", wo);
    f(prefix + ".b_f", bf); f(prefix + ".b_i", bi); f(prefix + ".b_c", bc); f(prefix + ".b_o", bo);
  }
};

template <typename T>
void init_lstm(LstmLayer<T> &l, Rng &rng) {
  for (Matrix<T> *w : {&l.wf, &l.wi, &l.wc, &l.wo}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w->rows + w->cols));
    for (T &v : w->data) v = static_cast<T>(rng.uniform(-limit, limit));
  }
  for (Matrix<T> *b : {&l.bi, &l.bc, &l.bo}) std::fill(b->data.begin(), b->data.end(), T(0));
  std::fill(l.bf.data.begin(), l.bf.data.end(), T(1));
}

template <typename T>
struct LstmState {
  std::vector<T> c, h;
  LstmState() = default;
  explicit LstmState(size_t hidden) : c(hidden, T(0)), h(hidden, T(0)) {}
};

/// Everything one time step computed; u = [c_{t-1}, h_{t-1}, x_t].
template <typename T>
struct LstmStep {
  std::vector<T> u, f, i, g, c, o, tanh_c, h;

  LstmState<T> state() const {
    LstmState<T> s;
    s.c = c;
    s.h = h;
    return s;
  }
};

template <typename T>
LstmStep<T> lstm_cell_forward(std::span<const T> x, const LstmState<T> &prev,
                              const LstmLayer<T> &p) {
  const size_t h = p.hidden, d = p.input_dim;
  require(x.size() == d && prev.c.size() == h && prev.h.size() == h, ErrorCode::kShapeMismatch,
          "LSTM step shape mismatch");
  LstmStep<T> s;
  s.u.resize(2 * h + d);
  std::copy(prev.c.begin(), prev.c.end(), s.u.begin());
  std::copy(prev.h.begin(), prev.h.end(), s.u.begin() + h);
  std::copy(x.begin(), x.end(), s.u.begin() + 2 * h);
  const std::span<const T> u(s.u);
  s.f.resize(h); s.i.resize(h); s.g.resize(h); s.c.resize(h); s.o.resize(h);
  s.tanh_c.resize(h); s.h.resize(h);
  affine<T>(p.wf, p.bf, u, s.f);
  affine<T>(p.wi, p.bi, u, s.i);
  affine<T>(p.wc, p.bc, u.subspan(h), s.g);
  for (size_t k = 0; k < h; ++k) {
    s.f[k] = sigmoid(s.f[k]);
    s.i[k] = sigmoid(s.i[k]);
    s.g[k] = std::tanh(s.g[k]);
    s.c[k] = s.f[k] * prev.c[k] + s.i[k] * s.g[k];
  }
  // The output gate peeks at the fresh cell state.
  std::vector<T> v(s.u);
  std::copy(s.c.begin(), s.c.end(), v.begin());
  affine<T>(p.wo, p.bo, v, s.o);
  for (size_t k = 0; k < h; ++k) {
    s.o[k] = sigmoid(s.o[k]);
    s.tanh_c[k] = std::tanh(s.c[k]);
    s.h[k] = s.tanh_c[k] * s.o[k];
  }
  return s;
}

/// Runs a layer over the rows of x from a zero state; returns the h sequence.
template <typename T>
Matrix<T> lstm_sequence(const LstmLayer<T> &p, const Matrix<T> &x,
                        std::vector<LstmStep<T>> *trace = nullptr) {
  require(x.cols == p.input_dim, ErrorCode::kShapeMismatch, "LSTM input width mismatch");
  Matrix<T> out(x.rows, p.hidden);
  LstmState<T> state(p.hidden);
  if (trace) trace->clear();
  for (size_t t = 0; t < x.rows; ++t) {
    LstmStep<T> s = lstm_cell_forward<T>(x.row(t), state, p);
    std::copy(s.h.begin(), s.h.end(), out.row(t).begin());
    state.c = s.c;
    state.h = s.h;
    if (trace) trace->push_back(std::move(s));
  }
  return out;
}

/// Backpropagation through time. dh holds dL/dh_t from the layer above for
/// every step; returns dL/dx_t.
template <typename T>
Matrix<T> lstm_sequence_backward(const LstmLayer<T> &p, const std::vector<LstmStep<T>> &trace,
                                 const Matrix<T> &dh, LstmLayer<T> &grad) {
  const size_t h = p.hidden, d = p.input_dim, n = 2 * h + d;
  Matrix<T> dx(trace.size(), d);
  std::vector<T> dh_next(h, T(0)), dc_next(h, T(0));
  std::vector<T> dzf(h), dzi(h), dzg(h), dzo(h), dc(h), du(n), dv(n);
  for (size_t t = trace.size(); t-- > 0;) {
    const LstmStep<T> &s = trace[t];
    std::fill(du.begin(), du.end(), T(0));
    std::fill(dv.begin(), dv.end(), T(0));
    for (size_t k = 0; k < h; ++k) {
      const T dht = dh(t, k) + dh_next[k];
      dzo[k] = dht * s.tanh_c[k] * s.o[k] * (T(1) - s.o[k]);
      dc[k] = dc_next[k] + dht * s.o[k] * (T(1) - s.tanh_c[k] * s.tanh_c[k]);
    }
    // Output gate: v = [c_t, h_{t-1}, x_t].
    for (size_t k = 0; k < h; ++k) {
      if (dzo[k] == T(0)) continue;
      grad.bo.data[k] += dzo[k];
      T *gw = &grad.wo.data[k * n];
      const T *w = &p.wo.data[k * n];
      axpy(dzo[k], s.c.data(), gw, h);
      axpy(dzo[k], s.u.data() + h, gw + h, n - h);
      axpy(dzo[k], w, dv.data(), n);
    }
    for (size_t k = 0; k < h; ++k) {
      dc[k] += dv[k];  // peephole from o_t to c_t
      const T c_prev = s.u[k];
      dzf[k] = dc[k] * c_prev * s.f[k] * (T(1) - s.f[k]);
      dzi[k] = dc[k] * s.g[k] * s.i[k] * (T(1) - s.i[k]);
      dzg[k] = dc[k] * s.i[k] * (T(1) - s.g[k] * s.g[k]);
    }
    for (size_t k = 0; k < h; ++k) {
      grad.bf.data[k] += dzf[k];
      grad.bi.data[k] += dzi[k];
      grad.bc.data[k] += dzg[k];
      axpy(dzf[k], s.u.data(), &grad.wf.data[k * n], n);
      axpy(dzi[k], s.u.data(), &grad.wi.data[k * n], n);
      axpy(dzg[k], s.u.data() + h, &grad.wc.data[k * (n - h)], n - h);
      axpy(dzf[k], &p.wf.data[k * n], du.data(), n);
      axpy(dzi[k], &p.wi.data[k * n], du.data(), n);
      axpy(dzg[k], &p.wc.data[k * (n - h)], du.data() + h, n - h);
    }
    for (size_t k = 0; k < h; ++k) {
      dc_next[k] = dc[k] * s.f[k] + du[k];
      dh_next[k] = du[h + k] + dv[h + k];
    }
    for (size_t j = 0; j < d; ++j) dx(t, j) = du[2 * h + j] + dv[2 * h + j];
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Block classifier

struct ClassifierArch {
  size_t input_dim = 0;
  size_t lstm1 = 512;
  size_t lstm2 = 512;
  size_t relu_width = 1024;
  size_t num_classes = 10;

  void validate() const {
    require(input_dim > 0 && lstm1 > 0 && lstm2 > 0 && relu_width > 0 && num_classes >= 2,
            ErrorCode::kConfig, "invalid classifier architecture");
  }
  friend bool operator==(const ClassifierArch &, const ClassifierArch &) = default;
};

/// Two LSTM layers, h at the last frame, ReLU layer, softmax.
template <typename T>
struct Classifier {
  ClassifierArch arch;
  LstmLayer<T> lstm1, lstm2;
  DenseLayer<T> relu, output;

  Classifier() = default;
  explicit Classifier(const ClassifierArch &a)
      : arch(a), lstm1(a.input_dim, a.lstm1), lstm2(a.lstm1, a.lstm2),
        relu(a.lstm2, a.relu_width, Activation::kRelu),
        output(a.relu_width, a.num_classes, Activation::kSoftmax) {
    a.validate();
  }

  void initialize(Rng &rng) {
    init_lstm(lstm1, rng);
    init_lstm(lstm2, rng);
    init_dense(relu, rng);
    init_dense(output, rng);
  }

  template <typename F>
  void visit(F &&f) {
    lstm1.visit("lstm1", f);
    lstm2.visit("lstm2", f);
    relu.visit("relu", f);
    output.visit("output", f);
  }
  template <typename F>
  void visit(F &&f) const {
    lstm1.visit("lstm1", f);
    lstm2.visit("lstm2", f);
    relu.visit("relu", f);
    output.visit("output", f);
  }
};

template <typename T>
struct ClassifierCache {
  std::vector<LstmStep<T>> trace1, trace2;
  Matrix<T> h1, last, hidden;
  std::vector<T> log_probs;
};

/// Class log-probabilities for one block (rows are frames).
template <typename T>
std::vector<T> classifier_forward(const Classifier<T> &p, const Matrix<T> &block,
                                  ClassifierCache<T> *cache = nullptr) {
  require(block.rows > 0, ErrorCode::kShapeMismatch, "empty block");
  ClassifierCache<T> local;
  ClassifierCache<T> &c = cache ? *cache : local;
  c.h1 = lstm_sequence(p.lstm1, block, &c.trace1);
  const Matrix<T> h2 = lstm_sequence(p.lstm2, c.h1, &c.trace2);
  c.last = Matrix<T>(1, p.arch.lstm2);
  std::copy(h2.row(h2.rows - 1).begin(), h2.row(h2.rows - 1).end(), c.last.data.begin());
  c.hidden = dense_forward(p.relu, c.last);
  std::vector<T> z(p.arch.num_classes);
  affine<T>(p.output.w, p.output.b, c.hidden.row(0), z);
  c.log_probs.assign(z.size(), T(0));
  log_softmax<T>(z, c.log_probs);
  return c.log_probs;
}

/// Forward and backward for one block; accumulates into grad.
template <typename T>
BatchStats classifier_backward(const Classifier<T> &p, const Matrix<T> &block, size_t target,
                               Classifier<T> &grad) {
  ClassifierCache<T> c;
  classifier_forward(p, block, &c);
  BatchStats stats;
  stats.count = 1;
  stats.loss = static_cast<double>(cross_entropy<T>(c.log_probs, target));
  stats.correct = static_cast<size_t>(std::max_element(c.log_probs.begin(), c.log_probs.end()) -
                                      c.log_probs.begin()) == target;
  Matrix<T> dz(1, p.arch.num_classes);
  for (size_t k = 0; k < dz.cols; ++k) dz(0, k) = std::exp(c.log_probs[k]);
  dz(0, target) -= T(1);
  Matrix<T> d_hidden = dense_backward(p.output, c.hidden, dz, grad.output);
  activation_backward(Activation::kRelu, c.hidden, d_hidden);
  const Matrix<T> d_last = dense_backward(p.relu, c.last, d_hidden, grad.relu);
  Matrix<T> dh2(block.rows, p.arch.lstm2);
  std::copy(d_last.data.begin(), d_last.data.end(), dh2.row(block.rows - 1).begin());
  const Matrix<T> dh1 = lstm_sequence_backward(p.lstm2, c.trace2, dh2, grad.lstm2);
  lstm_sequence_backward(p.lstm1, c.trace1, dh1, grad.lstm1);
  return stats;
}

// ---------------------------------------------------------------------------
// Parameter plumbing and optimizers

template <typename T, typename Model>
std::vector<Matrix<T> *> tensors_of(Model &m) {
  std::vector<Matrix<T> *> out;
  m.visit([&](const std::string &, Matrix<T> &t) { out.push_back(&t); });
  return out;
}

template <typename T, typename Model>
std::vector<const Matrix<T> *> tensors_of(const Model &m) {
  std::vector<const Matrix<T> *> out;
  m.visit([&](const std::string &, const Matrix<T> &t) { out.push_back(&t); });
  return out;
}

template <typename T, typename Model>
size_t parameter_count(const Model &m) {
  size_t n = 0;
  for (const auto *t : tensors_of<T>(m)) n += t->size();
  return n;
}

template <typename T, typename Model>
void zero(Model &m) {
  for (auto *t : tensors_of<T>(m)) std::fill(t->data.begin(), t->data.end(), T(0));
}

/// dst += scale * src over matching tensors.
template <typename T, typename Model>
void accumulate(Model &dst, const Model &src, T scale = T(1)) {
  auto d = tensors_of<T>(dst);
  auto s = tensors_of<T>(src);
  for (size_t k = 0; k < d.size(); ++k) axpy(scale, s[k]->data.data(), d[k]->data.data(), d[k]->size());
}

template <typename T, typename Model>
void scale(Model &m, T factor) {
  for (auto *t : tensors_of<T>(m))
    for (T &v : t->data) v *= factor;
}

template <typename T, typename Model>
double global_norm(const Model &m) {
  double s = 0.0;
  for (const auto *t : tensors_of<T>(m))
    for (T v : t->data) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

template <typename T, typename Model>
void require_finite_gradient(const Model &g) {
  for (const auto *t : tensors_of<T>(g))
    require(t->all_finite(), ErrorCode::kNonFinite, "non-finite gradient; step rejected");
}

template <typename T>
struct Sgd {
  double learning_rate = 0.001;

  template <typename Model>
  void step(Model &params, const Model &grads) {
    require_finite_gradient<T>(grads);
    auto p = tensors_of<T>(params);
    auto g = tensors_of<T>(grads);
    const T lr = static_cast<T>(learning_rate);
    for (size_t k = 0; k < p.size(); ++k) axpy(-lr, g[k]->data.data(), p[k]->data.data(), p[k]->size());
  }
};

template <typename T>
struct Adam {
  double learning_rate = 0.0002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long steps = 0;
  std::vector<std::vector<double>> m, v;

  template <typename Model>
  void step(Model &params, const Model &grads) {
    require_finite_gradient<T>(grads);
    auto p = tensors_of<T>(params);
    auto g = tensors_of<T>(grads);
    if (m.empty()) {
      for (auto *t : p) {
        m.emplace_back(t->size(), 0.0);
        v.emplace_back(t->size(), 0.0);
      }
    }
    ++steps;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    for (size_t k = 0; k < p.size(); ++k) {
      for (size_t j = 0; j < p[k]->size(); ++j) {
        const double gj = static_cast<double>(g[k]->data[j]);
        m[k][j] = beta1 * m[k][j] + (1.0 - beta1) * gj;
        v[k][j] = beta2 * v[k][j] + (1.0 - beta2) * gj * gj;
        const double update = learning_rate * (m[k][j] / c1) / (std::sqrt(v[k][j] / c2) + epsilon);
        p[k]->data[j] = static_cast<T>(static_cast<double>(p[k]->data[j]) - update);
      }
    }
  }
};

template <typename U, typename T>
BnDnn<U> cast_model(const BnDnn<T> &m) {
  BnDnn<U> out(m.arch);
  for (size_t l = 0; l < m.layers.size(); ++l) {
    out.layers[l].w = m.layers[l].w.template cast<U>();
    out.layers[l].b = m.layers[l].b.template cast<U>();
  }
  return out;
}

template <typename U, typename T>
Classifier<U> cast_model(const Classifier<T> &m) {
  Classifier<U> out(m.arch);
  auto d = tensors_of<U>(out);
  auto s = tensors_of<T>(m);
  for (size_t k = 0; k < d.size(); ++k) *d[k] = s[k]->template cast<U>();
  return out;
}

}  // namespace lidtsm::nnet
