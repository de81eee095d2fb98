#pragma once

// Minimal dense MLP on a flat parameter vector: rectifier hidden layers,
// linear output. Parameters are packed layer by layer, weights (row-major,
// out x in) then biases, which keeps the "average the parents' weights"
// merge and the serialized form trivial.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "evorl/rng.hpp"

namespace evorl {

struct MlpParams {
  std::vector<int> layer_sizes;  // e.g. {4, 64, 2}
  std::vector<double> weights;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

inline std::size_t mlp_param_count(const std::vector<int>& sizes) {
  if (sizes.size() < 2)
    throw std::invalid_argument("mlp: need at least input and output layer");
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l + 1] < 1)
      throw std::invalid_argument("mlp: layer sizes must be positive");
    n += static_cast<std::size_t>(sizes[l]) * static_cast<std::size_t>(sizes[l + 1]) +
         static_cast<std::size_t>(sizes[l + 1]);
  }
  return n;
}

inline void validate_mlp(const MlpParams& p) {
  if (p.weights.size() != mlp_param_count(p.layer_sizes))
    throw std::invalid_argument("mlp: parameter vector size mismatch");
}

// Uniform +-1/sqrt(fan_in) initialization.
inline MlpParams mlp_random(std::vector<int> sizes, Rng& rng) {
  MlpParams p;
  p.layer_sizes = std::move(sizes);
  p.weights.resize(mlp_param_count(p.layer_sizes));
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    const int fan_in = p.layer_sizes[l];
    const int fan_out = p.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < fan_in * fan_out; ++i)
      p.weights[at++] = rng.uniform(-bound, bound);
    for (int i = 0; i < fan_out; ++i) p.weights[at++] = 0.0;
  }
  return p;
}

// Post-activation values per layer; [0] is the input itself.
struct MlpActivations {
  std::vector<std::vector<double>> post;
};

inline std::vector<double> mlp_forward(const MlpParams& p,
                                       std::span<const double> input,
                                       MlpActivations* acts = nullptr) {
  const auto& sizes = p.layer_sizes;
  if (static_cast<int>(input.size()) != sizes.front())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  std::vector<double> cur(input.begin(), input.end());
  if (acts) {
    acts->post.clear();
    acts->post.push_back(cur);
  }
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int n_in = sizes[l];
    const int n_out = sizes[l + 1];
    const bool hidden = l + 2 < sizes.size();
    std::vector<double> next(static_cast<std::size_t>(n_out));
    const double* w = p.weights.data() + at;
    const double* b = w + static_cast<std::size_t>(n_in) * static_cast<std::size_t>(n_out);
    for (int o = 0; o < n_out; ++o) {
      double acc = b[o];
      const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in);
      for (int i = 0; i < n_in; ++i) acc += row[i] * cur[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] = hidden && acc < 0.0 ? 0.0 : acc;
    }
    at += static_cast<std::size_t>(n_in) * static_cast<std::size_t>(n_out) +
          static_cast<std::size_t>(n_out);
    cur = std::move(next);
    if (acts) acts->post.push_back(cur);
  }
  return cur;
}

// Backprop of dL/d(output) through activations cached by mlp_forward.
// Gradients are accumulated into grad (same layout as weights).
inline void mlp_backward(const MlpParams& p, const MlpActivations& acts,
                         std::span<const double> d_out,
                         std::vector<double>& grad) {
  const auto& sizes = p.layer_sizes;
  if (grad.size() != p.weights.size())
    throw std::invalid_argument("mlp_backward: gradient size mismatch");
  if (acts.post.size() != sizes.size())
    throw std::invalid_argument("mlp_backward: activation cache mismatch");

  // Layer parameter offsets.
  std::vector<std::size_t> offset(sizes.size() - 1);
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    offset[l] = at;
    at += static_cast<std::size_t>(sizes[l]) * static_cast<std::size_t>(sizes[l + 1]) +
          static_cast<std::size_t>(sizes[l + 1]);
  }

  std::vector<double> delta(d_out.begin(), d_out.end());
  for (std::size_t l = sizes.size() - 1; l-- > 0;) {
    const int n_in = sizes[l];
    const int n_out = sizes[l + 1];
    const auto& in_act = acts.post[l];
    const double* w = p.weights.data() + offset[l];
    double* gw = grad.data() + offset[l];
    double* gb = gw + static_cast<std::size_t>(n_in) * static_cast<std::size_t>(n_out);
    for (int o = 0; o < n_out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      double* grow = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in);
      for (int i = 0; i < n_in; ++i) grow[i] += d * in_act[static_cast<std::size_t>(i)];
      gb[o] += d;
    }
    if (l == 0) break;
    std::vector<double> prev(static_cast<std::size_t>(n_in), 0.0);
    for (int i = 0; i < n_in; ++i) {
      if (acts.post[l][static_cast<std::size_t>(i)] <= 0.0) continue;  // ReLU gate
      double acc = 0.0;
      for (int o = 0; o < n_out; ++o)
        acc += delta[static_cast<std::size_t>(o)] *
               w[static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in) +
                 static_cast<std::size_t>(i)];
      prev[static_cast<std::size_t>(i)] = acc;
    }
    delta = std::move(prev);
  }
}

}  // namespace evorl
