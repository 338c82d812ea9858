// Copyright 2026-present the hcfl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hcfl/rng.hpp"

namespace hcfl {

/// Row-major feature matrix plus integer class labels.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

/// One client's local data: the training part is D_n, the test part is the
/// held-out 20%.
struct ClientDataset {
  int owner = -1;
  int dist_id = -1;
  Dataset train;
  Dataset test;
};

enum class ModelKind { kLogistic, kMlp };

struct ModelSpec {
  ModelKind kind = ModelKind::kLogistic;
  std::size_t input_dim = 20;
  std::size_t classes = 10;
  std::size_t hidden = 32;  // mlp only

  std::size_t parameter_count() const noexcept;
  std::string arch_tag() const;
};

/// Flat layer-packed parameter vector. Logistic packing is W (classes x dim,
/// row-major) then bias; the MLP packs W1, b1, W2, b2.
struct ModelParams {
  std::vector<double> values;
  std::string arch_tag;

  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const ModelParams&) const = default;
};

struct UpdateDelta {
  std::vector<double> values;
  int owner = -1;
  int round = 0;
  std::size_t sample_count = 0;
};

struct TrainReport {
  UpdateDelta delta;
  ModelParams trained;  // exactly before + delta
  std::size_t iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs = 0;
  std::size_t batch = 0;
};

struct TrainOptions {
  int epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
};

/// Zero weights for the logistic model (all clients start from omega = 0);
/// the MLP needs symmetry breaking, so its weights get a small seeded draw.
ModelParams init_model(const ModelSpec& spec, std::uint64_t seed);

void check_compatible(const ModelParams& a, const ModelParams& b);

void predict_logits(const ModelSpec& spec, std::span<const double> params,
                    std::span<const double> x, std::span<double> logits);

/// Mean cross-entropy over `indices` of `data`; writes the mean gradient
/// into `grad` (resized by the caller to parameter_count()).
double batch_loss_and_gradient(const ModelSpec& spec, std::span<const double> params,
                               const Dataset& data, std::span<const std::size_t> indices,
                               std::span<double> grad);

/// Mean per-sample cross-entropy F_n over the whole dataset.
double loss(const ModelSpec& spec, const ModelParams& model, const Dataset& data);

double evaluate_accuracy(const ModelSpec& spec, const ModelParams& model,
                         const Dataset& testset);

/// Number of minibatch steps L * ceil(D_n / b).
std::size_t local_iterations(std::size_t samples, int epochs, std::size_t batch_size);

/// Runs minibatch SGD on a copy of `model`. The input is not mutated.
TrainReport local_train(const ModelSpec& spec, const ModelParams& model, const Dataset& data,
                        const TrainOptions& opts, Rng& rng, int owner = -1, int round = 0);

/// sum_n (D_n / D) F_n.
double weighted_objective(std::span<const double> losses, std::span<const std::size_t> sizes);

// Vector helpers shared by aggregation and similarity code.
double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
ModelParams apply_delta(const ModelParams& base, std::span<const double> delta);

/// Little-endian blob: u32 FNV-1a hash of arch_tag, u32 parameter count, then
/// float32 values. Its bit length is the model size z used for upload costs.
std::vector<std::uint8_t> encode_model(const ModelParams& model);
ModelParams decode_model(std::span<const std::uint8_t> blob, const std::string& arch_tag);
std::size_t model_size_bits(std::size_t parameter_count) noexcept;

}  // namespace hcfl
