// lidtsm/gradcheck.hpp

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

// Central-difference verification of analytic gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lidtsm/nnet.hpp"

namespace lidtsm::nnet {

struct GradcheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::string worst_parameter;
  size_t checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-7});
}

/// Perturbs every scalar of `model` by +-step and compares the central
/// difference of loss() with the matching entry of `analytic`.
template <typename Model, typename LossFn>
GradcheckResult gradient_check(Model &model, const Model &analytic, LossFn &&loss,
                               double step = 1e-5) {
  GradcheckResult r;
  std::vector<std::string> names;
  model.visit([&](const std::string &name, Matrix<double> &) { names.push_back(name); });
  auto params = tensors_of<double>(model);
  auto grads = tensors_of<double>(analytic);
  for (size_t k = 0; k < params.size(); ++k) {
    for (size_t j = 0; j < params[k]->size(); ++j) {
      double &p = params[k]->data[j];
      const double saved = p;
      p = saved + step;
      const double up = loss();
      p = saved - step;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grads[k]->data[j];
      const double rel = relative_error(a, numeric);
      r.max_absolute_error = std::max(r.max_absolute_error, std::abs(a - numeric));
      if (rel > r.max_relative_error) {
        r.max_relative_error = rel;
        r.worst_parameter = names[k] + "[" + std::to_string(j) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

/// Gradient check of the full two-layer classifier on random blocks.
inline GradcheckResult classifier_gradcheck(const ClassifierArch &arch, size_t block_length,
                                            size_t num_blocks, uint64_t seed) {
  Rng rng(seed);
  Classifier<double> model(arch);
  model.initialize(rng);
  // Random biases so no unit sits at an exactly symmetric point.
  model.visit([&](const std::string &, Matrix<double> &t) {
    if (t.rows == 1)
      for (double &v : t.data) v += rng.uniform(-0.3, 0.3);
  });
  std::vector<Matrix<double>> blocks;
  std::vector<size_t> targets;
  for (size_t b = 0; b < num_blocks; ++b) {
    Matrix<double> x(block_length, arch.input_dim);
    for (double &v : x.data) v = rng.normal();
    blocks.push_back(std::move(x));
    targets.push_back(rng.below(arch.num_classes));
  }
  Classifier<double> grad(arch);
  for (size_t b = 0; b < num_blocks; ++b) classifier_backward(model, blocks[b], targets[b], grad);
  auto loss = [&] {
    double total = 0.0;
    for (size_t b = 0; b < num_blocks; ++b)
      total -= classifier_forward(model, blocks[b])[targets[b]];
    return total;
  };
  return gradient_check(model, grad, loss);
}

/// Gradient check of a bottleneck DNN on a random batch.
inline GradcheckResult dnn_gradcheck(const BnDnnArch &arch, size_t batch, uint64_t seed) {
  Rng rng(seed);
  BnDnn<double> model(arch);
  model.initialize(rng);
  model.visit([&](const std::string &, Matrix<double> &t) {
    if (t.rows == 1)
      for (double &v : t.data) v += rng.uniform(-0.3, 0.3);
  });
  Matrix<double> x(batch, arch.input_dim);
  for (double &v : x.data) v = rng.normal();
  std::vector<int> targets(batch);
  for (int &t : targets) t = static_cast<int>(rng.below(arch.num_classes));
  BnDnn<double> grad(arch);
  dnn_backward_batch<double>(model, x, targets, grad);
  auto loss = [&] {
    DnnCache<double> cache;
    dnn_forward_batch(model, x, cache);
    double total = 0.0;
    for (size_t r = 0; r < batch; ++r) total -= cache.log_probs(r, static_cast<size_t>(targets[r]));
    return total;
  };
  return gradient_check(model, grad, loss);
}

}  // namespace lidtsm::nnet
