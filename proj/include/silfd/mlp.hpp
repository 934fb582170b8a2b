#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

namespace silfd {

/// Batch-major matrix: one row per sample.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// One affine layer y = W x + b, with W of shape (out x in).
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

/// Dense MLP weights. ReLU between layers, linear output layer.
struct NetParams {
  std::vector<DenseLayer> layers;

  std::vector<int> layer_sizes() const;
  int in_dim() const;
  int out_dim() const;
  std::size_t parameter_count() const;

  /// Throws std::invalid_argument if dimensions do not chain or an entry is
  /// non-finite.
  void validate() const;

  bool operator==(const NetParams& other) const;
};

/// Partial derivatives of a scalar loss, shape-congruent to NetParams.
struct Gradients {
  std::vector<DenseLayer> layers;

  static Gradients zeros_like(const NetParams& params);
  bool all_finite() const;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double scale);
};

/// Adam moments plus step counter.
struct OptState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  std::int64_t t = 0;

  static OptState fresh(const NetParams& params);
};

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Activation record of one forward pass; enough to run backward.
struct Tape {
  std::vector<Matrix> layer_inputs;     // input to layer k (batch x in_k)
  std::vector<Matrix> pre_activations;  // z_k for hidden layers
  std::vector<int> layer_sizes;
  std::uint64_t fingerprint = 0;
};

struct ForwardResult {
  Matrix outputs;
  Tape tape;
};

/// Glorot-uniform weights, zero biases. Deterministic in seed.
NetParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

ForwardResult forward(const NetParams& params, const Matrix& inputs);

/// Forward without keeping a tape.
Matrix predict(const NetParams& params, const Matrix& inputs);

/// Gradients of sum(outputs .* output_grad) with respect to every parameter.
Gradients backward(const NetParams& params, const Tape& tape, const Matrix& output_grad);

/// Bias-corrected Adam. Rejects non-finite gradients with DivergenceError.
void adam_step(NetParams& params, const Gradients& grads, OptState& state, double lr,
               const AdamConstants& constants = {});

struct CategoricalHead {
  Matrix log_probs;  // batch x A
  Vector entropy;    // batch
};

/// Stable log-softmax and entropy per row.
CategoricalHead categorical_head(const Matrix& logits);

/// d(entropy_row)/d(logits_row) for every row, from stabilized log-probs.
Matrix entropy_logit_grad(const CategoricalHead& head);

nlohmann::json to_json(const NetParams& params);
NetParams net_params_from_json(const nlohmann::json& doc);

}  // namespace silfd
