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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <utility>

#include "lidtsm/gradcheck.hpp"
#include "lidtsm/nnet.hpp"

namespace lidtsm::nnet {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

TEST(LstmCellTest, AllZeroParameters) {
  LstmLayer<double> p(3, 4);
  LstmState<double> prev(4);
  const std::vector<double> x = {0.5, -1.0, 2.0};
  const auto s = lstm_cell_forward<double>(x, prev, p);
  for (size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(s.f[k], 0.5);
    EXPECT_EQ(s.i[k], 0.5);
    EXPECT_EQ(s.o[k], 0.5);
    EXPECT_EQ(s.g[k], 0.0);
    EXPECT_EQ(s.c[k], 0.0);
    EXPECT_EQ(s.h[k], 0.0);
  }
}

TEST(LstmCellTest, ScalarHandExample) {
  LstmLayer<double> p(1, 1);
  for (auto *w : {&p.wf, &p.wi, &p.wc, &p.wo}) std::fill(w->data.begin(), w->data.end(), 1.0);
  LstmState<double> prev(1);
  prev.c[0] = 1.0;
  const std::vector<double> x = {0.0};
  const auto s = lstm_cell_forward<double>(x, prev, p);
  // f = i = sigma(c_prev); c~ = tanh(0); c = f; o = sigma(c); h = tanh(c) o.
  const double f = logistic(1.0);
  const double o = logistic(f);
  EXPECT_NEAR(s.f[0], f, 1e-12);
  EXPECT_NEAR(s.i[0], f, 1e-12);
  EXPECT_EQ(s.g[0], 0.0);
  EXPECT_NEAR(s.c[0], 0.731059, 1e-6);
  EXPECT_NEAR(s.o[0], 0.675038, 1e-6);
  EXPECT_NEAR(s.h[0], std::tanh(f) * o, 1e-12);
  EXPECT_NEAR(s.h[0], 0.421029, 1e-6);
}

TEST(LstmCellTest, SaturatedGatesCarryTheCell) {
  Rng rng(4);
  LstmLayer<double> p(2, 3);
  init_lstm(p, rng);
  std::fill(p.bf.data.begin(), p.bf.data.end(), 60.0);
  std::fill(p.bi.data.begin(), p.bi.data.end(), -60.0);
  LstmState<double> prev(3);
  prev.c = {0.7, -1.3, 2.1};
  prev.h = {0.1, 0.2, -0.3};
  const std::vector<double> x = {0.4, -0.9};
  const auto s = lstm_cell_forward<double>(x, prev, p);
  for (size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.c[k], prev.c[k], 1e-6);
}

TEST(LstmCellTest, OutputGateSeesFreshCell) {
  // Only the c_t column of W_o is non-zero, so o depends on c_t alone.
  LstmLayer<double> p(1, 1);
  p.wo(0, 0) = 2.0;
  p.bc.data[0] = 0.5;
  LstmState<double> prev(1);
  prev.c[0] = -3.0;
  const std::vector<double> x = {0.0};
  const auto s = lstm_cell_forward<double>(x, prev, p);
  const double c = 0.5 * -3.0 + 0.5 * std::tanh(0.5);
  EXPECT_NEAR(s.c[0], c, 1e-12);
  EXPECT_NEAR(s.o[0], logistic(2.0 * c), 1e-12);
}

TEST(LstmCellTest, ShapeMismatchThrows) {
  LstmLayer<double> p(2, 3);
  LstmState<double> prev(3);
  const std::vector<double> x = {1.0};
  EXPECT_THROW(lstm_cell_forward<double>(x, prev, p), Error);
}

ClassifierArch tiny_arch() {
  ClassifierArch a;
  a.input_dim = 3;
  a.lstm1 = 4;
  a.lstm2 = 4;
  a.relu_width = 5;
  a.num_classes = 3;
  return a;
}

Matrix<double> random_block(Rng &rng, size_t rows, size_t cols) {
  Matrix<double> x(rows, cols);
  for (double &v : x.data) v = rng.normal();
  return x;
}

TEST(ClassifierTest, OutputsAreNormalized) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Classifier<double> c(tiny_arch());
    c.initialize(rng);
    const auto lp = classifier_forward(c, random_block(rng, 5 + rng.below(20), 3));
    double sum = 0.0;
    for (double v : lp) sum += std::exp(v);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(ClassifierTest, ZeroParametersGiveUniform) {
  Classifier<double> c(tiny_arch());
  Rng rng(2);
  for (double v : classifier_forward(c, random_block(rng, 7, 3))) EXPECT_NEAR(v, -std::log(3.0), 1e-12);
}

TEST(ClassifierTest, FrameOrderMatters) {
  Rng rng(3);
  Classifier<double> c(tiny_arch());
  c.initialize(rng);
  auto x = random_block(rng, 6, 3);
  auto y = x;
  // Reverse frames 0..4, keep the last frame fixed.
  for (size_t t = 0; t < 5; ++t)
    std::copy(x.row(4 - t).begin(), x.row(4 - t).end(), y.row(t).begin());
  EXPECT_EQ(x.row(5)[0], y.row(5)[0]);
  const auto a = classifier_forward(c, x), b = classifier_forward(c, y);
  double diff = 0.0;
  for (size_t k = 0; k < a.size(); ++k) diff += std::abs(a[k] - b[k]);
  EXPECT_GT(diff, 1e-6);
}

TEST(ClassifierTest, ForwardIsBitIdentical) {
  Rng rng(8);
  Classifier<float> c(tiny_arch());
  c.initialize(rng);
  Matrix<float> x(10, 3);
  for (float &v : x.data) v = static_cast<float>(rng.normal());
  EXPECT_EQ(classifier_forward(c, x), classifier_forward(c, x));
}

TEST(GradcheckTest, ClassifierTinyNet) {
  const auto r = classifier_gradcheck(tiny_arch(), 5, 2, 11);
  EXPECT_LE(r.max_relative_error, 1e-4) << r.worst_parameter;
  EXPECT_EQ(r.checked, parameter_count<double>(Classifier<double>(tiny_arch())));
}

TEST(GradcheckTest, ClassifierSeveralSeedsAndShapes) {
  for (uint64_t seed = 20; seed < 25; ++seed) {
    ClassifierArch a = tiny_arch();
    a.lstm1 = 3 + seed % 3;
    a.lstm2 = 2 + seed % 4;
    const auto r = classifier_gradcheck(a, 3 + seed % 5, 1, seed);
    EXPECT_LE(r.max_relative_error, 1e-4) << seed << " " << r.worst_parameter;
  }
}

TEST(GradcheckTest, BottleneckDnn) {
  BnDnnArch a;
  a.input_dim = 6;
  a.hidden_layers = 3;
  a.hidden_width = 5;
  a.bottleneck_width = 3;
  a.num_classes = 4;
  const auto r = dnn_gradcheck(a, 7, 5);
  EXPECT_LE(r.max_relative_error, 1e-4) << r.worst_parameter;
}

TEST(GradcheckTest, ZeroLossPointHasZeroOutputBiasGradient) {
  Rng rng(6);
  Classifier<double> c(tiny_arch());
  c.initialize(rng);
  c.output.b.data = {60.0, 0.0, 0.0};
  Classifier<double> g(tiny_arch());
  const auto stats = classifier_backward(c, random_block(rng, 4, 3), 0, g);
  EXPECT_LT(stats.loss, 1e-20);
  for (double v : g.output.b.data) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(DnnTest, ZeroParametersGiveUniformPosteriors) {
  BnDnnArch a;
  a.input_dim = 4;
  a.hidden_layers = 3;
  a.hidden_width = 6;
  a.bottleneck_width = 2;
  a.num_classes = 5;
  BnDnn<double> net(a);
  const std::vector<double> v = {1, 2, 3, 4};
  const auto out = dnn_forward<double>(v, net);
  for (double p : out.posteriors) EXPECT_NEAR(p, 0.2, 1e-15);
  for (double b : out.bottleneck) EXPECT_EQ(b, 0.0);
}

TEST(DnnTest, MatchesHandEvaluation) {
  BnDnnArch a;
  a.input_dim = 3;
  a.hidden_layers = 2;
  a.hidden_width = 4;
  a.bottleneck_width = 2;
  a.num_classes = 3;
  Rng rng(9);
  BnDnn<double> net(a);
  net.initialize(rng);
  net.visit([&](const std::string &, Matrix<double> &t) {
    if (t.rows == 1)
      for (double &v : t.data) v = rng.uniform(-1, 1);
  });
  const std::vector<double> x = {0.3, -1.2, 0.8};

  auto layer = [](const DenseLayer<double> &l, const std::vector<double> &in) {
    std::vector<double> out(l.out_dim());
    for (size_t o = 0; o < out.size(); ++o) {
      out[o] = l.b.data[o];
      for (size_t i = 0; i < in.size(); ++i) out[o] += l.w(o, i) * in[i];
    }
    return out;
  };
  auto h = layer(net.layers[0], x);
  for (double &v : h) {
    v = logistic(v);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  const auto bn = layer(net.layers[1], h);
  auto z = layer(net.layers[2], bn);
  double norm = 0.0;
  for (double v : z) norm += std::exp(v);

  const auto out = dnn_forward<double>(x, net);
  for (size_t k = 0; k < 2; ++k) EXPECT_NEAR(out.bottleneck[k], bn[k], 1e-12);
  for (size_t k = 0; k < 3; ++k) EXPECT_NEAR(out.posteriors[k], std::exp(z[k]) / norm, 1e-9);
}

TEST(LossTest, CrossEntropyCases) {
  const std::vector<double> uniform(10, -std::log(10.0));
  EXPECT_NEAR(cross_entropy<double>(uniform, 3), 2.302585, 1e-6);
  const std::vector<double> certain = {0.0, -INFINITY};
  EXPECT_EQ(cross_entropy<double>(certain, 0), 0.0);
  const std::vector<double> half = {std::log(0.5), std::log(0.5)};
  EXPECT_NEAR(cross_entropy<double>(half, 1), 0.693147, 1e-6);
  EXPECT_THROW(cross_entropy<double>(half, 2), Error);
}

struct SingleLayer {
  DenseLayer<double> *l;
  template <typename F>
  void visit(F &&f) { l->visit("l", f); }
  template <typename F>
  void visit(F &&f) const { std::as_const(*l).visit("l", f); }
};

TEST(OptimizerTest, SgdScalarAndZeroRate) {
  DenseLayer<double> p(1, 1, Activation::kLinear), g(1, 1, Activation::kLinear);
  p.w(0, 0) = 1.0;
  g.w(0, 0) = 2.0;
  SingleLayer wp{&p}, wg{&g};
  Sgd<double>{0.0}.step(wp, wg);
  EXPECT_EQ(p.w(0, 0), 1.0);
  Sgd<double>{0.1}.step(wp, wg);
  EXPECT_DOUBLE_EQ(p.w(0, 0), 0.8);
  g.w(0, 0) = NAN;
  EXPECT_THROW(Sgd<double>{0.1}.step(wp, wg), Error);
}

TEST(OptimizerTest, AdamFirstStepMovesByLearningRate) {
  Rng rng(10);
  Classifier<double> p(tiny_arch()), g(tiny_arch());
  p.initialize(rng);
  const Classifier<double> before = p;
  for (auto *t : tensors_of<double>(g)) std::fill(t->data.begin(), t->data.end(), 1.0);
  Adam<double> adam;
  adam.learning_rate = 0.01;
  adam.step(p, g);
  auto a = tensors_of<double>(before);
  auto b = tensors_of<double>(p);
  for (size_t k = 0; k < a.size(); ++k)
    for (size_t j = 0; j < a[k]->size(); ++j)
      EXPECT_NEAR(a[k]->data[j] - b[k]->data[j], 0.01, 1e-6);
}

TEST(OptimizerTest, AdamZeroRateLeavesParameters) {
  Rng rng(12);
  Classifier<double> p(tiny_arch()), g(tiny_arch());
  p.initialize(rng);
  for (auto *t : tensors_of<double>(g))
    for (double &v : t->data) v = rng.normal();
  const auto before = p;
  Adam<double> adam;
  adam.learning_rate = 0.0;
  adam.step(p, g);
  EXPECT_EQ(tensors_of<double>(p)[3]->data, tensors_of<double>(before)[3]->data);
}

TEST(TrainingTest, SeparableBlocksAreLearned) {
  // Class k blocks have a constant offset on input dimension k.
  Rng rng(13);
  ClassifierArch a = tiny_arch();
  Classifier<float> net(a);
  net.initialize(rng);
  std::vector<Matrix<float>> blocks;
  std::vector<size_t> labels;
  for (size_t n = 0; n < 30; ++n) {
    Matrix<float> x(6, 3);
    for (float &v : x.data) v = static_cast<float>(0.3 * rng.normal());
    for (size_t t = 0; t < 6; ++t) x(t, n % 3) += 1.0f;
    blocks.push_back(x);
    labels.push_back(n % 3);
  }
  Adam<float> adam;
  adam.learning_rate = 0.01;
  double loss = 0.0;
  for (int epoch = 0; epoch < 200; ++epoch) {
    Classifier<float> g(a);
    BatchStats stats;
    for (size_t n = 0; n < blocks.size(); ++n) stats += classifier_backward(net, blocks[n], labels[n], g);
    scale<float>(g, 1.0f / static_cast<float>(blocks.size()));
    adam.step(net, g);
    loss = stats.loss / static_cast<double>(stats.count);
    if (loss < 0.1) break;
  }
  EXPECT_LT(loss, 0.1);
}

}  // namespace
}  // namespace lidtsm::nnet
