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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "hcfl/errors.hpp"
#include "hcfl/learner.hpp"
#include "oracles.hpp"

using namespace hcfl;

namespace {

Dataset blobs(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed, double sep = 4.0) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> means(classes, std::vector<double>(dim));
  for (auto& m : means)
    for (auto& v : m) v = sep * g(rng);
  Dataset d;
  d.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % classes);
    d.labels.push_back(y);
    for (std::size_t j = 0; j < dim; ++j) d.features.push_back(means[y][j] + g(rng));
  }
  return d;
}

double max_rel_fd_error(const ModelSpec& spec, const std::vector<double>& params, const Dataset& d) {
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<double> grad(params.size());
  batch_loss_and_gradient(spec, params, d, idx, grad);
  std::vector<double> scratch(params.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double h = 1e-6;
    auto p = params;
    p[k] += h;
    const double up = batch_loss_and_gradient(spec, p, d, idx, scratch);
    p[k] -= 2 * h;
    const double down = batch_loss_and_gradient(spec, p, d, idx, scratch);
    const double fd = (up - down) / (2 * h);
    const double denom = std::max(1e-3, std::abs(fd) + std::abs(grad[k]));
    worst = std::max(worst, std::abs(fd - grad[k]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("parameter counts and tags") {
  ModelSpec lr;
  CHECK(lr.parameter_count() == 210);
  CHECK(lr.arch_tag() == "logreg:20x10");
  ModelSpec mlp{ModelKind::kMlp, 20, 10, 32};
  CHECK(mlp.parameter_count() == 20 * 32 + 32 + 32 * 10 + 10);
  CHECK(mlp.arch_tag() == "mlp:20x32x10");
}

TEST_CASE("local iteration count rounds partial batches up") {
  CHECK(local_iterations(320, 10, 32) == 100);
  CHECK(local_iterations(321, 10, 32) == 110);
  CHECK(local_iterations(32, 1, 32) == 1);
}

TEST_CASE("init model") {
  ModelSpec lr;
  const auto m = init_model(lr, 7);
  CHECK(m.size() == 210);
  for (double v : m.values) CHECK(v == 0.0);
  ModelSpec mlp{ModelKind::kMlp, 20, 10, 32};
  CHECK(init_model(mlp, 3) == init_model(mlp, 3));
  CHECK_FALSE(init_model(mlp, 3) == init_model(mlp, 4));
}

TEST_CASE("loss matches per-sample summation") {
  ModelSpec spec{ModelKind::kLogistic, 3, 4, 0};
  Dataset d = blobs(8, 3, 4, 11);
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  ModelParams m{std::vector<double>(spec.parameter_count()), spec.arch_tag()};
  for (double& v : m.values) v = u(rng);
  std::vector<std::vector<double>> xs;
  for (std::size_t i = 0; i < d.size(); ++i) xs.emplace_back(d.row(i).begin(), d.row(i).end());
  CHECK(loss(spec, m, d) == doctest::Approx(oracle::logistic_loss(m.values, 3, 4, xs, d.labels)).epsilon(1e-12));
}

TEST_CASE("gradient agrees with finite differences") {
  Dataset d = blobs(24, 5, 3, 2);
  Rng rng(9);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  SUBCASE("logistic") {
    ModelSpec spec{ModelKind::kLogistic, 5, 3, 0};
    std::vector<double> p(spec.parameter_count());
    for (double& v : p) v = u(rng);
    CHECK(max_rel_fd_error(spec, p, d) <= 1e-4);
  }
  SUBCASE("mlp") {
    ModelSpec spec{ModelKind::kMlp, 5, 3, 6};
    std::vector<double> p(spec.parameter_count());
    for (double& v : p) v = u(rng);
    CHECK(max_rel_fd_error(spec, p, d) <= 1e-4);
  }
}

TEST_CASE("local training") {
  ModelSpec spec{ModelKind::kLogistic, 4, 3, 0};
  Dataset d = blobs(70, 4, 3, 4);
  const ModelParams start = init_model(spec, 1);
  const ModelParams copy = start;
  TrainOptions opts{3, 16, 0.05};
  Rng a(42), b(42);
  const auto r1 = local_train(spec, start, d, opts, a, 5, 2);
  const auto r2 = local_train(spec, start, d, opts, b, 5, 2);

  CHECK(start == copy);
  CHECK(r1.trained == r2.trained);
  CHECK(r1.iterations == local_iterations(70, 3, 16));
  CHECK(r1.delta.owner == 5);
  CHECK(r1.delta.round == 2);
  CHECK(r1.delta.sample_count == 70);
  CHECK(r1.final_loss < r1.initial_loss);
  for (std::size_t i = 0; i < start.size(); ++i)
    CHECK(r1.trained.values[i] == start.values[i] + r1.delta.values[i]);
}

TEST_CASE("training rejects bad inputs and diverging runs") {
  ModelSpec spec{ModelKind::kLogistic, 2, 2, 0};
  Dataset d = blobs(10, 2, 2, 1);
  Rng rng(1);
  CHECK_THROWS_AS(local_train(spec, init_model(spec, 1), d, {1, 32, 0.01}, rng), DomainError);
  CHECK_THROWS_AS(local_train(spec, init_model(spec, 1), d, {1, 4, 0.0}, rng), DomainError);
  for (double& x : d.features) x *= 1e150;
  CHECK_THROWS_AS(local_train(spec, init_model(spec, 1), d, {5, 4, 1e150}, rng), NumericDivergence);
}

TEST_CASE("weighted objective") {
  std::vector<double> l{1, 2, 3};
  std::vector<std::size_t> same{4, 4, 4};
  CHECK(weighted_objective(l, same) == doctest::Approx(2.0));
  std::vector<std::size_t> w{1, 2, 7};
  CHECK(weighted_objective(l, w) == doctest::Approx((1 * 1 + 2 * 2 + 3 * 7) / 10.0));
}

TEST_CASE("accuracy breaks ties toward the lowest class") {
  ModelSpec spec{ModelKind::kLogistic, 2, 3, 0};
  Dataset d;
  d.dim = 2;
  d.features = {1, 2, 3, 4};
  d.labels = {0, 2};
  CHECK(evaluate_accuracy(spec, init_model(spec, 1), d) == doctest::Approx(0.5));
}

TEST_CASE("model blob") {
  ModelSpec spec;
  ModelParams m = init_model(spec, 1);
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = 0.25 * static_cast<double>(i) - 3.0;
  const auto blob = encode_model(m);
  CHECK(blob.size() * 8 == model_size_bits(spec.parameter_count()));
  CHECK(model_size_bits(210) == 64 + 32 * 210);
  CHECK(decode_model(blob, spec.arch_tag()) == m);
  CHECK_THROWS(decode_model(blob, "mlp:20x32x10"));
  CHECK_THROWS(check_compatible(m, init_model(ModelSpec{ModelKind::kMlp, 20, 10, 32}, 1)));
}
