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

#include "hcfl/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "hcfl/errors.hpp"

namespace hcfl {

namespace {

std::uint32_t fnv1a32(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 16777619u;
  }
  return h;
}

// Numerically stable log-softmax cross-entropy for one sample; also leaves
// softmax probabilities in `logits` when `probs_out` is true.
double cross_entropy(std::span<double> logits, int label, bool probs_out) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  const double lse = zmax + std::log(sum);
  const double ce = lse - logits[static_cast<std::size_t>(label)];
  if (probs_out) {
    for (double& z : logits) z = std::exp(z - lse);
  }
  return ce;
}

struct MlpView {
  std::size_t d, h, c;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return h * d; }
  std::size_t w2() const { return h * d + h; }
  std::size_t b2() const { return h * d + h + c * h; }
};

void check_label(int label, std::size_t classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes)
    throw DomainError("label " + std::to_string(label) + " outside model classes");
}

}  // namespace

std::size_t ModelSpec::parameter_count() const noexcept {
  if (kind == ModelKind::kLogistic) return classes * input_dim + classes;
  return hidden * input_dim + hidden + classes * hidden + classes;
}

std::string ModelSpec::arch_tag() const {
  if (kind == ModelKind::kLogistic)
    return "logreg:" + std::to_string(input_dim) + "x" + std::to_string(classes);
  return "mlp:" + std::to_string(input_dim) + "x" + std::to_string(hidden) + "x" +
         std::to_string(classes);
}

ModelParams init_model(const ModelSpec& spec, std::uint64_t seed) {
  ModelParams m{std::vector<double>(spec.parameter_count(), 0.0), spec.arch_tag()};
  if (spec.kind == ModelKind::kMlp) {
    Rng rng = make_stream(seed, "init");
    const MlpView v{spec.input_dim, spec.hidden, spec.classes};
    std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(v.d)));
    std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / static_cast<double>(v.h)));
    for (std::size_t i = 0; i < v.h * v.d; ++i) m.values[v.w1() + i] = n1(rng);
    for (std::size_t i = 0; i < v.c * v.h; ++i) m.values[v.w2() + i] = n2(rng);
  }
  return m;
}

void check_compatible(const ModelParams& a, const ModelParams& b) {
  if (a.arch_tag != b.arch_tag || a.size() != b.size())
    throw DomainError("incompatible models: " + a.arch_tag + " vs " + b.arch_tag);
}

void predict_logits(const ModelSpec& spec, std::span<const double> params,
                    std::span<const double> x, std::span<double> logits) {
  const std::size_t d = spec.input_dim;
  const std::size_t c = spec.classes;
  if (spec.kind == ModelKind::kLogistic) {
    for (std::size_t k = 0; k < c; ++k) {
      const double* w = params.data() + k * d;
      double z = params[c * d + k];
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
      logits[k] = z;
    }
    return;
  }
  const MlpView v{d, spec.hidden, c};
  std::vector<double> hid(v.h);
  for (std::size_t u = 0; u < v.h; ++u) {
    const double* w = params.data() + v.w1() + u * d;
    double a = params[v.b1() + u];
    for (std::size_t j = 0; j < d; ++j) a += w[j] * x[j];
    hid[u] = a > 0.0 ? a : 0.0;
  }
  for (std::size_t k = 0; k < c; ++k) {
    const double* w = params.data() + v.w2() + k * v.h;
    double z = params[v.b2() + k];
    for (std::size_t u = 0; u < v.h; ++u) z += w[u] * hid[u];
    logits[k] = z;
  }
}

double batch_loss_and_gradient(const ModelSpec& spec, std::span<const double> params,
                               const Dataset& data, std::span<const std::size_t> indices,
                               std::span<double> grad) {
  if (indices.empty()) throw DomainError("empty batch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t d = spec.input_dim;
  const std::size_t c = spec.classes;
  std::vector<double> p(c);
  double total = 0.0;

  if (spec.kind == ModelKind::kLogistic) {
    for (std::size_t i : indices) {
      const auto x = data.row(i);
      const int y = data.labels[i];
      check_label(y, c);
      predict_logits(spec, params, x, p);
      total += cross_entropy(p, y, true);
      p[static_cast<std::size_t>(y)] -= 1.0;
      for (std::size_t k = 0; k < c; ++k) {
        double* g = grad.data() + k * d;
        const double e = p[k];
        for (std::size_t j = 0; j < d; ++j) g[j] += e * x[j];
        grad[c * d + k] += e;
      }
    }
  } else {
    const MlpView v{d, spec.hidden, c};
    std::vector<double> pre(v.h), hid(v.h), back(v.h);
    for (std::size_t i : indices) {
      const auto x = data.row(i);
      const int y = data.labels[i];
      check_label(y, c);
      for (std::size_t u = 0; u < v.h; ++u) {
        const double* w = params.data() + v.w1() + u * d;
        double a = params[v.b1() + u];
        for (std::size_t j = 0; j < d; ++j) a += w[j] * x[j];
        pre[u] = a;
        hid[u] = a > 0.0 ? a : 0.0;
      }
      for (std::size_t k = 0; k < c; ++k) {
        const double* w = params.data() + v.w2() + k * v.h;
        double z = params[v.b2() + k];
        for (std::size_t u = 0; u < v.h; ++u) z += w[u] * hid[u];
        p[k] = z;
      }
      total += cross_entropy(p, y, true);
      p[static_cast<std::size_t>(y)] -= 1.0;
      std::fill(back.begin(), back.end(), 0.0);
      for (std::size_t k = 0; k < c; ++k) {
        const double e = p[k];
        const double* w = params.data() + v.w2() + k * v.h;
        double* g = grad.data() + v.w2() + k * v.h;
        for (std::size_t u = 0; u < v.h; ++u) {
          g[u] += e * hid[u];
          back[u] += e * w[u];
        }
        grad[v.b2() + k] += e;
      }
      for (std::size_t u = 0; u < v.h; ++u) {
        if (pre[u] <= 0.0) continue;
        double* g = grad.data() + v.w1() + u * d;
        for (std::size_t j = 0; j < d; ++j) g[j] += back[u] * x[j];
        grad[v.b1() + u] += back[u];
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(indices.size());
  for (double& g : grad) g *= inv;
  return total * inv;
}

double loss(const ModelSpec& spec, const ModelParams& model, const Dataset& data) {
  if (data.size() == 0) throw DomainError("loss of empty dataset");
  std::vector<double> z(spec.classes);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    check_label(data.labels[i], spec.classes);
    predict_logits(spec, model.values, data.row(i), z);
    total += cross_entropy(z, data.labels[i], false);
  }
  return total / static_cast<double>(data.size());
}

double evaluate_accuracy(const ModelSpec& spec, const ModelParams& model,
                         const Dataset& testset) {
  if (testset.size() == 0) throw DomainError("accuracy of empty testset");
  std::vector<double> z(spec.classes);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    predict_logits(spec, model.values, testset.row(i), z);
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();
    if (best == testset.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(testset.size());
}

std::size_t local_iterations(std::size_t samples, int epochs, std::size_t batch_size) {
  return static_cast<std::size_t>(epochs) * ((samples + batch_size - 1) / batch_size);
}

TrainReport local_train(const ModelSpec& spec, const ModelParams& model, const Dataset& data,
                        const TrainOptions& opts, Rng& rng, int owner, int round) {
  const std::size_t n = data.size();
  if (opts.batch_size == 0 || opts.batch_size > n)
    throw DomainError("batch size must be in [1, D_n]");
  if (opts.epochs < 1) throw DomainError("epochs must be >= 1");
  if (!(opts.learning_rate > 0.0)) throw DomainError("learning rate must be > 0");
  if (model.size() != spec.parameter_count() || model.arch_tag != spec.arch_tag())
    throw DomainError("model does not match architecture " + spec.arch_tag());

  TrainReport rep;
  rep.epochs = opts.epochs;
  rep.batch = opts.batch_size;
  rep.initial_loss = loss(spec, model, data);

  std::vector<double> w = model.values;
  std::vector<double> grad(w.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += opts.batch_size) {
      const std::size_t len = std::min(opts.batch_size, n - start);
      const double l = batch_loss_and_gradient(
          spec, w, data, std::span<const std::size_t>(order.data() + start, len), grad);
      if (!std::isfinite(l)) throw NumericDivergence("non-finite loss", round, step);
      for (std::size_t j = 0; j < w.size(); ++j) {
        if (!std::isfinite(grad[j])) throw NumericDivergence("non-finite gradient", round, step);
        w[j] -= opts.learning_rate * grad[j];
      }
      ++step;
    }
  }
  for (double v : w)
    if (!std::isfinite(v)) throw NumericDivergence("non-finite parameter", round, step);

  rep.iterations = step;
  rep.delta.owner = owner;
  rep.delta.round = round;
  rep.delta.sample_count = n;
  rep.delta.values.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) rep.delta.values[j] = w[j] - model.values[j];
  rep.trained = apply_delta(model, rep.delta.values);
  rep.final_loss = loss(spec, rep.trained, data);
  if (!std::isfinite(rep.final_loss)) throw NumericDivergence("non-finite loss", round, step);
  return rep;
}

double weighted_objective(std::span<const double> losses, std::span<const std::size_t> sizes) {
  if (losses.size() != sizes.size() || losses.empty())
    throw DomainError("weighted_objective needs one size per loss");
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    total += static_cast<double>(sizes[i]);
    weighted += static_cast<double>(sizes[i]) * losses[i];
  }
  if (total <= 0.0) throw DomainError("weighted_objective with zero total samples");
  return weighted / total;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

ModelParams apply_delta(const ModelParams& base, std::span<const double> delta) {
  if (delta.size() != base.size()) throw DomainError("delta length mismatch");
  ModelParams out = base;
  for (std::size_t i = 0; i < delta.size(); ++i) out.values[i] += delta[i];
  return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const ModelParams& model) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * model.size());
  put_u32(out, fnv1a32(model.arch_tag));
  put_u32(out, static_cast<std::uint32_t>(model.size()));
  for (double v : model.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

ModelParams decode_model(std::span<const std::uint8_t> blob, const std::string& arch_tag) {
  if (blob.size() < 8) throw DomainError("model blob too short");
  if (get_u32(blob, 0) != fnv1a32(arch_tag)) throw DomainError("model blob arch_tag mismatch");
  const std::size_t count = get_u32(blob, 4);
  if (blob.size() != 8 + 4 * count) throw DomainError("model blob length mismatch");
  ModelParams m{std::vector<double>(count), arch_tag};
  for (std::size_t i = 0; i < count; ++i)
    m.values[i] = std::bit_cast<float>(get_u32(blob, 8 + 4 * i));
  return m;
}

std::size_t model_size_bits(std::size_t parameter_count) noexcept {
  return 64 + 32 * parameter_count;
}

}  // namespace hcfl
