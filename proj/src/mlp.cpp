#include "silfd/mlp.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "silfd/errors.hpp"
#include "silfd/rng.hpp"

namespace silfd {

namespace {

std::uint64_t fingerprint_of(const NetParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const double* data, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::uint64_t word;
      std::memcpy(&word, data + i, sizeof word);
      h = (h ^ word) * 0x100000001b3ULL;
      h ^= h >> 29;
    }
  };
  for (const auto& layer : params.layers) {
    h ^= static_cast<std::uint64_t>(layer.weight.rows()) * 31 + layer.weight.cols();
    mix(layer.weight.data(), layer.weight.size());
    mix(layer.bias.data(), layer.bias.size());
  }
  return h;
}

std::vector<DenseLayer> zero_layers(const std::vector<DenseLayer>& shape) {
  std::vector<DenseLayer> out;
  out.reserve(shape.size());
  for (const auto& layer : shape) {
    out.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                   Vector::Zero(layer.bias.size())});
  }
  return out;
}

}  // namespace

std::vector<int> NetParams::layer_sizes() const {
  std::vector<int> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(static_cast<int>(layers.front().weight.cols()));
  for (const auto& layer : layers) sizes.push_back(static_cast<int>(layer.weight.rows()));
  return sizes;
}

int NetParams::in_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

int NetParams::out_dim() const {
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

void NetParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    if (layer.weight.rows() == 0 || layer.weight.cols() == 0)
      throw std::invalid_argument("layer " + std::to_string(k) + " has a zero dimension");
    if (layer.bias.size() != layer.weight.rows())
      throw std::invalid_argument("layer " + std::to_string(k) + " bias size mismatch");
    if (k > 0 && layers[k - 1].weight.rows() != layer.weight.cols())
      throw std::invalid_argument("layer " + std::to_string(k) + " input does not chain");
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw std::invalid_argument("layer " + std::to_string(k) + " has non-finite entries");
  }
}

bool NetParams::operator==(const NetParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& a = layers[k];
    const auto& b = other.layers[k];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
    if (a.bias.size() != b.bias.size()) return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const NetParams& params) {
  return Gradients{zero_layers(params.layers)};
}

bool Gradients::all_finite() const {
  for (const auto& layer : layers)
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.layers.size() != layers.size())
    throw std::invalid_argument("gradient shapes differ");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += other.layers[k].weight;
    layers[k].bias += other.layers[k].bias;
  }
  return *this;
}

Gradients& Gradients::operator*=(double scale) {
  for (auto& layer : layers) {
    layer.weight *= scale;
    layer.bias *= scale;
  }
  return *this;
}

OptState OptState::fresh(const NetParams& params) {
  return OptState{zero_layers(params.layers), zero_layers(params.layers), 0};
}

NetParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("need at least two layer sizes");
  for (int size : layer_sizes)
    if (size <= 0) throw std::invalid_argument("layer sizes must be positive");

  Rng rng(seed);
  NetParams params;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const int fan_in = layer_sizes[k];
    const int fan_out = layer_sizes[k + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ForwardResult forward(const NetParams& params, const Matrix& inputs) {
  if (params.layers.empty()) throw std::invalid_argument("network has no layers");
  if (inputs.cols() != params.in_dim())
    throw std::invalid_argument("input has " + std::to_string(inputs.cols()) +
                                " columns, network expects " + std::to_string(params.in_dim()));
  ForwardResult result;
  Tape& tape = result.tape;
  tape.layer_sizes = params.layer_sizes();
  tape.fingerprint = fingerprint_of(params);
  tape.layer_inputs.reserve(params.layers.size());
  tape.pre_activations.reserve(params.layers.size() - 1);

  Matrix activation = inputs;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    Matrix z = activation * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    tape.layer_inputs.push_back(std::move(activation));
    if (k + 1 < params.layers.size()) {
      activation = z.cwiseMax(0.0);
      tape.pre_activations.push_back(std::move(z));
    } else {
      result.outputs = std::move(z);
    }
  }
  return result;
}

Matrix predict(const NetParams& params, const Matrix& inputs) {
  if (params.layers.empty()) throw std::invalid_argument("network has no layers");
  if (inputs.cols() != params.in_dim())
    throw std::invalid_argument("input column count does not match network");
  Matrix activation = inputs;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    Matrix z = activation * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    activation = (k + 1 < params.layers.size()) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return activation;
}

Gradients backward(const NetParams& params, const Tape& tape, const Matrix& output_grad) {
  if (tape.layer_inputs.size() != params.layers.size() ||
      tape.layer_sizes != params.layer_sizes() || tape.fingerprint != fingerprint_of(params))
    throw std::invalid_argument("tape was not produced by these parameters");
  const Eigen::Index batch = tape.layer_inputs.front().rows();
  if (output_grad.rows() != batch || output_grad.cols() != params.out_dim())
    throw std::invalid_argument("output gradient shape does not match tape");

  Gradients grads;
  grads.layers.resize(params.layers.size());
  Matrix upstream = output_grad;
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    auto& g = grads.layers[k];
    g.weight = upstream.transpose() * tape.layer_inputs[k];
    g.bias = upstream.colwise().sum().transpose();
    if (k > 0) {
      Matrix down = upstream * params.layers[k].weight;
      const Matrix& z = tape.pre_activations[k - 1];
      upstream = (z.array() > 0.0).select(down, 0.0);
    }
  }
  return grads;
}

void adam_step(NetParams& params, const Gradients& grads, OptState& state, double lr,
               const AdamConstants& c) {
  if (grads.layers.size() != params.layers.size() || state.m.size() != params.layers.size() ||
      state.v.size() != params.layers.size())
    throw std::invalid_argument("adam_step: shapes are not congruent");
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient passed to adam_step");

  state.t += 1;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    if (param.size() != grad.size()) throw std::invalid_argument("adam_step: shape mismatch");
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + c.epsilon);
  };
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    update(params.layers[k].weight, grads.layers[k].weight, state.m[k].weight, state.v[k].weight);
    update(params.layers[k].bias, grads.layers[k].bias, state.m[k].bias, state.v[k].bias);
  }
}

CategoricalHead categorical_head(const Matrix& logits) {
  CategoricalHead head;
  head.log_probs.resize(logits.rows(), logits.cols());
  head.entropy.resize(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    const auto shifted = (logits.row(i).array() - top).eval();
    const double log_norm = std::log(shifted.exp().sum());
    head.log_probs.row(i) = shifted - log_norm;
    const auto probs = head.log_probs.row(i).array().exp();
    head.entropy(i) = -(probs * head.log_probs.row(i).array()).sum();
  }
  return head;
}

Matrix entropy_logit_grad(const CategoricalHead& head) {
  // dH/dz_j = -p_j (log p_j + H)
  Matrix grad(head.log_probs.rows(), head.log_probs.cols());
  for (Eigen::Index i = 0; i < grad.rows(); ++i) {
    const auto probs = head.log_probs.row(i).array().exp();
    grad.row(i) = -probs * (head.log_probs.row(i).array() + head.entropy(i));
  }
  return grad;
}

nlohmann::json to_json(const NetParams& params) {
  nlohmann::json doc;
  doc["layer_sizes"] = params.layer_sizes();
  doc["weights"] = nlohmann::json::array();
  doc["biases"] = nlohmann::json::array();
  for (const auto& layer : params.layers) {
    std::vector<double> w(layer.weight.data(), layer.weight.data() + layer.weight.size());
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    doc["weights"].push_back(std::move(w));
    doc["biases"].push_back(std::move(b));
  }
  return doc;
}

NetParams net_params_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("layer_sizes") || !doc.contains("weights") ||
      !doc.contains("biases"))
    throw ParseError(0, "network document needs layer_sizes, weights and biases");
  const auto sizes = doc.at("layer_sizes").get<std::vector<int>>();
  const auto& weights = doc.at("weights");
  const auto& biases = doc.at("biases");
  if (sizes.size() < 2 || weights.size() != sizes.size() - 1 || biases.size() != sizes.size() - 1)
    throw ParseError(0, "layer_sizes does not match the number of weight/bias arrays");

  NetParams params;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const int in = sizes[k];
    const int out = sizes[k + 1];
    if (in <= 0 || out <= 0) throw ParseError(0, "layer sizes must be positive");
    const auto w = weights[k].get<std::vector<double>>();
    const auto b = biases[k].get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(in) * out || b.size() != static_cast<std::size_t>(out))
      throw ParseError(0, "layer " + std::to_string(k) + " has the wrong number of entries");
    DenseLayer layer{Matrix(out, in), Vector(out)};
    std::memcpy(layer.weight.data(), w.data(), w.size() * sizeof(double));
    std::memcpy(layer.bias.data(), b.data(), b.size() * sizeof(double));
    params.layers.push_back(std::move(layer));
  }
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, e.what());
  }
  return params;
}

}  // namespace silfd
