#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/matrix.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Scores are kept strictly inside (0,1) so the cross-entropy stays finite.
inline constexpr double kScoreClamp = 1e-12;

/// Layer widths of the dense network, input first, output last.
struct LayerSpec {
  std::vector<std::size_t> dims;

  /// The standard stack used throughout: three hidden layers of 20, 10 and 5
  /// ReLU units on top of the input, one sigmoid output.
  static LayerSpec with_default_hidden(std::size_t input_dim) {
    return LayerSpec{{input_dim, 20, 10, 5, 1}};
  }

  std::size_t layer_count() const { return dims.empty() ? 0 : dims.size() - 1; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      n += dims[l] * dims[l + 1] + dims[l + 1];
    return n;
  }

  void validate() const {
    if (dims.size() < 2) throw std::invalid_argument("LayerSpec: need at least two layers");
    for (const auto d : dims)
      if (d < 1) throw std::invalid_argument("LayerSpec: zero-width layer");
  }

  bool operator==(const LayerSpec&) const = default;
};

/// Flat parameter vector. Layout per layer: weight matrix stored row-major by
/// output unit, then the bias vector.
struct ModelWeights {
  LayerSpec spec;
  std::vector<double> values;

  std::size_t weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
      off += spec.dims[l] * spec.dims[l + 1] + spec.dims[l + 1];
    return off;
  }

  std::size_t bias_offset(std::size_t layer) const {
    return weight_offset(layer) + spec.dims[layer] * spec.dims[layer + 1];
  }

  const double* layer_weights(std::size_t layer) const { return values.data() + weight_offset(layer); }
  const double* layer_biases(std::size_t layer) const { return values.data() + bias_offset(layer); }
  double* layer_weights(std::size_t layer) { return values.data() + weight_offset(layer); }
  double* layer_biases(std::size_t layer) { return values.data() + bias_offset(layer); }

  bool operator==(const ModelWeights&) const = default;
};

/// Adam moment vectors plus hyperparameters; step_count is the number of
/// updates applied so far.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step_count = 0;
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(std::size_t n) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
  }
};

struct Batch {
  Matrix features;                   // rows = examples
  std::vector<std::uint8_t> labels;  // {0,1}, one per row
};

/// Glorot-uniform weights, zero biases; deterministic in the seed.
inline ModelWeights init_weights(const LayerSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelWeights w{spec, std::vector<double>(spec.param_count(), 0.0)};
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < spec.dims.size(); ++l) {
    const auto fan_in = spec.dims[l];
    const auto fan_out = spec.dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    double* wl = w.layer_weights(l);
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) wl[i] = rng.uniform(-limit, limit);
    // biases stay zero
  }
  return w;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

// One affine layer over a batch: out[b][j] = bias[j] + W[j] . in[b].
inline void affine_forward(const Matrix& in, const double* weights, const double* biases,
                           std::size_t out_dim, Matrix& out) {
  const std::size_t in_dim = in.cols();
  out = Matrix(in.rows(), out_dim);
  for (std::size_t b = 0; b < in.rows(); ++b) {
    const double* x = in.row(b);
    double* o = out.row(b);
    for (std::size_t j = 0; j < out_dim; ++j) {
      const double* wrow = weights + j * in_dim;
      double acc = biases[j];
      for (std::size_t k = 0; k < in_dim; ++k) acc += wrow[k] * x[k];
      o[j] = acc;
    }
  }
}

// Activations for every layer of the network, input included. Hidden layers
// ReLU, output sigmoid (clamped away from {0,1}).
inline std::vector<Matrix> forward_activations(const ModelWeights& w, const Matrix& input) {
  const auto& dims = w.spec.dims;
  std::vector<Matrix> acts;
  acts.reserve(dims.size());
  acts.push_back(input);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Matrix z;
    affine_forward(acts.back(), w.layer_weights(l), w.layer_biases(l), dims[l + 1], z);
    const bool output_layer = (l + 2 == dims.size());
    for (auto& v : z.data())
      v = output_layer ? std::clamp(sigmoid(v), kScoreClamp, 1.0 - kScoreClamp)
                       : std::max(v, 0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

inline Matrix gather_rows(const Dataset& ds, const std::size_t* idx, std::size_t count) {
  Matrix m(count, ds.n_features);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* src = ds.row(idx[i]);
    double* dst = m.row(i);
    for (std::size_t j = 0; j < ds.n_features; ++j) dst[j] = src[j];
  }
  return m;
}

}  // namespace detail

/// Per-row scores in (0,1): affine+ReLU through the hidden layers, then
/// affine+sigmoid at the (width-1) output.
inline std::vector<double> forward(const ModelWeights& w, const Matrix& features) {
  w.spec.validate();
  if (features.cols() != w.spec.dims.front())
    throw std::invalid_argument("forward: feature width does not match the input layer");
  if (w.spec.dims.back() != 1)
    throw std::invalid_argument("forward: output layer must have width 1");
  const auto acts = detail::forward_activations(w, features);
  return acts.back().data();
}

/// forward over a whole dataset, processed in fixed-size row chunks so large
/// datasets never materialize as a dense double matrix.
inline std::vector<double> forward(const ModelWeights& w, const Dataset& data) {
  constexpr std::size_t kChunk = 512;
  std::vector<double> scores;
  scores.reserve(data.size());
  std::vector<std::size_t> idx(kChunk);
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - start);
    for (std::size_t i = 0; i < count; ++i) idx[i] = start + i;
    const auto chunk_scores = forward(w, detail::gather_rows(data, idx.data(), count));
    scores.insert(scores.end(), chunk_scores.begin(), chunk_scores.end());
  }
  return scores;
}

/// Mean binary cross-entropy, -mean[y log f + (1-y) log(1-f)].
inline double bce_loss(const std::vector<double>& scores,
                       const std::vector<std::uint8_t>& labels) {
  if (scores.empty()) throw std::invalid_argument("bce_loss: empty input");
  if (scores.size() != labels.size())
    throw std::invalid_argument("bce_loss: scores/labels length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double f = scores[i];
    total -= labels[i] ? std::log(f) : std::log(1.0 - f);
  }
  return total / static_cast<double>(scores.size());
}

/// Exact gradient of the mean BCE over the batch w.r.t. every parameter,
/// same flat layout as the weights.
inline std::vector<double> gradient(const ModelWeights& w, const Batch& batch) {
  if (batch.features.rows() == 0) throw std::invalid_argument("gradient: empty batch");
  if (batch.features.rows() != batch.labels.size())
    throw std::invalid_argument("gradient: features/labels row mismatch");
  if (batch.features.cols() != w.spec.dims.front())
    throw std::invalid_argument("gradient: feature width does not match the input layer");
  if (w.spec.dims.back() != 1)
    throw std::invalid_argument("gradient: output layer must have width 1");

  const auto& dims = w.spec.dims;
  const std::size_t n_layers = w.spec.layer_count();
  const std::size_t n = batch.features.rows();
  const auto acts = detail::forward_activations(w, batch.features);

  std::vector<double> grad(w.values.size(), 0.0);

  // Output delta of the sigmoid+BCE composite: (f - y) / n.
  Matrix delta(n, 1);
  for (std::size_t b = 0; b < n; ++b)
    delta(b, 0) = (acts.back()(b, 0) - batch.labels[b]) / static_cast<double>(n);

  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t in_dim = dims[l];
    const std::size_t out_dim = dims[l + 1];
    const Matrix& a_in = acts[l];
    double* gw = grad.data() + w.weight_offset(l);
    double* gb = grad.data() + w.bias_offset(l);

    for (std::size_t b = 0; b < n; ++b) {
      const double* d = delta.row(b);
      const double* x = a_in.row(b);
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double dj = d[j];
        if (dj == 0.0) continue;
        double* gwrow = gw + j * in_dim;
        for (std::size_t k = 0; k < in_dim; ++k) gwrow[k] += dj * x[k];
        gb[j] += dj;
      }
    }

    if (l > 0) {
      // Backpropagate through the affine map and the ReLU of the layer below;
      // ReLU'(z) is recovered from the activation (a > 0 iff z > 0).
      Matrix prev(n, in_dim);
      const double* weights = w.layer_weights(l);
      for (std::size_t b = 0; b < n; ++b) {
        const double* d = delta.row(b);
        double* p = prev.row(b);
        for (std::size_t j = 0; j < out_dim; ++j) {
          const double dj = d[j];
          if (dj == 0.0) continue;
          const double* wrow = weights + j * in_dim;
          for (std::size_t k = 0; k < in_dim; ++k) p[k] += dj * wrow[k];
        }
        const double* a = a_in.row(b);
        for (std::size_t k = 0; k < in_dim; ++k)
          if (a[k] <= 0.0) p[k] = 0.0;
      }
      delta = std::move(prev);
    }
  }
  return grad;
}

/// Standard Adam update with bias correction; increments step_count.
inline void adam_step(AdamState& state, ModelWeights& w, const std::vector<double>& g) {
  if (state.m.size() != w.values.size() || g.size() != w.values.size())
    throw std::invalid_argument("adam_step: length mismatch");
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double m_corr = 1.0 - std::pow(state.beta1, t);
  const double v_corr = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / m_corr;
    const double v_hat = state.v[i] / v_corr;
    w.values[i] -= state.eta * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

struct TrainResult {
  ModelWeights weights;
  double loss;  // mean BCE over the full dataset after the final epoch
};

/// Minibatch training: per epoch, shuffle the example order, split into
/// ceil(N/B) batches (last one short) and apply one Adam step per batch.
/// The returned loss is recomputed over the whole dataset afterwards.
inline TrainResult train_epochs(ModelWeights w, const Dataset& data, int epochs,
                                int batch_size, AdamState& state, Rng& rng) {
  if (data.size() == 0) throw std::invalid_argument("train_epochs: empty dataset");
  if (epochs < 1) throw std::invalid_argument("train_epochs: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train_epochs: batch size must be >= 1");

  const std::size_t n = data.size();
  const auto b = static_cast<std::size_t>(batch_size);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += b) {
      const std::size_t count = std::min(b, n - start);
      Batch batch;
      batch.features = detail::gather_rows(data, order.data() + start, count);
      batch.labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) batch.labels[i] = data.labels[order[start + i]];
      adam_step(state, w, gradient(w, batch));
    }
  }

  const double loss = bce_loss(forward(w, data), data.labels);
  if (!std::isfinite(loss)) throw std::logic_error("train_epochs: non-finite loss");
  return {std::move(w), loss};
}

/// Coordinatewise unweighted mean. Addends are summed in value order per
/// coordinate, so the result is invariant under permutations of the input
/// list; identical inputs return the input exactly.
inline ModelWeights average_weights(const std::vector<ModelWeights>& ws) {
  if (ws.empty()) throw std::invalid_argument("average_weights: empty list");
  for (const auto& w : ws)
    if (w.spec != ws.front().spec || w.values.size() != ws.front().values.size())
      throw std::invalid_argument("average_weights: layout mismatch");

  const std::size_t dim = ws.front().values.size();
  const std::size_t count = ws.size();
  ModelWeights out{ws.front().spec, std::vector<double>(dim, 0.0)};
  std::vector<double> coord(count);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k < count; ++k) coord[k] = ws[k].values[i];
    std::sort(coord.begin(), coord.end());
    if (coord.front() == coord.back()) {
      out.values[i] = coord.front();
      continue;
    }
    double acc = 0.0;
    for (const double v : coord) acc += v;
    out.values[i] = acc / static_cast<double>(count);
  }
  return out;
}

}  // namespace fedsim
