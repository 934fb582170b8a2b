#include <cmath>
#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "property_checks.hpp"
#include "silfd/errors.hpp"
#include "silfd/mlp.hpp"
#include "silfd/rng.hpp"

using namespace silfd;

namespace {

// Straight-line re-evaluation with plain loops and std::vector storage.
std::vector<std::vector<double>> reference_forward(const NetParams& params,
                                                   const std::vector<std::vector<double>>& xs) {
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) {
    std::vector<double> a = x;
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
      const auto& layer = params.layers[k];
      std::vector<double> z(static_cast<std::size_t>(layer.weight.rows()));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        double acc = layer.bias(r);
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) acc += layer.weight(r, c) * a[c];
        z[r] = (k + 1 < params.layers.size() && acc < 0.0) ? 0.0 : acc;
      }
      a = z;
    }
    out.push_back(a);
  }
  return out;
}

NetParams scalar_net(double w, double b) {
  NetParams p;
  p.layers.push_back({Matrix::Constant(1, 1, w), Vector::Constant(1, b)});
  return p;
}

}  // namespace

TEST_CASE("mlp_init shapes, zero biases and determinism") {
  const NetParams p = mlp_init({2, 32, 32, 2}, 0);
  REQUIRE(p.layers.size() == 3);
  CHECK(p.layers[0].weight.rows() == 32);
  CHECK(p.layers[0].weight.cols() == 2);
  CHECK(p.layers[1].weight.rows() == 32);
  CHECK(p.layers[1].weight.cols() == 32);
  CHECK(p.layers[2].weight.rows() == 2);
  CHECK(p.layers[2].weight.cols() == 32);
  for (const auto& layer : p.layers) CHECK(layer.bias.isZero(0.0));
  CHECK(p.parameter_count() == 32 * 2 + 32 + 32 * 32 + 32 + 2 * 32 + 2);
  CHECK(p == mlp_init({2, 32, 32, 2}, 0));
  CHECK_FALSE(p == mlp_init({2, 32, 32, 2}, 1));

  const double limit = std::sqrt(6.0 / (32 + 32));
  CHECK(p.layers[1].weight.cwiseAbs().maxCoeff() <= limit);

  const NetParams one = mlp_init({1, 1}, 7);
  REQUIRE(one.layers.size() == 1);
  CHECK(one.layers[0].weight.size() == 1);
  CHECK(one.layers[0].bias(0) == 0.0);
}

TEST_CASE("mlp_init rejects degenerate layer lists") {
  CHECK_THROWS_AS(mlp_init({}, 0), std::invalid_argument);
  CHECK_THROWS_AS(mlp_init({3}, 0), std::invalid_argument);
  CHECK_THROWS_AS(mlp_init({2, 0, 1}, 0), std::invalid_argument);
}

TEST_CASE("forward trivial maps") {
  NetParams zero = mlp_init({3, 4, 2}, 1);
  for (auto& layer : zero.layers) layer.weight.setZero();
  Matrix x(2, 3);
  x << 1, -2, 3, 4, 5, -6;
  CHECK(predict(zero, x).isZero(0.0));

  Matrix in(1, 1);
  in << 3.0;
  CHECK(predict(scalar_net(1.0, 0.0), in)(0, 0) == 3.0);
}

TEST_CASE("forward matches an independent interpreter") {
  Rng rng(11);
  NetParams p = mlp_init({4, 8, 8, 3}, 5);
  for (auto& layer : p.layers)
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-0.3, 0.3);
  std::vector<std::vector<double>> xs(9, std::vector<double>(4));
  Matrix m(9, 4);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = xs[i][j] = rng.uniform(-2.0, 2.0);
  const auto expected = reference_forward(p, xs);
  const Matrix got = forward(p, m).outputs;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 3; ++j) CHECK(got(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));
}

TEST_CASE("forward rejects a column mismatch") {
  CHECK_THROWS_AS(forward(mlp_init({2, 3, 1}, 0), Matrix::Zero(1, 3)), std::invalid_argument);
}

TEST_CASE("backward closed forms") {
  const NetParams p = mlp_init({3, 5, 2}, 2);
  Matrix x(4, 3);
  x.setRandom();
  const ForwardResult fwd = forward(p, x);
  const Gradients zero = backward(p, fwd.tape, Matrix::Zero(4, 2));
  for (const auto& layer : zero.layers) {
    CHECK(layer.weight.isZero(0.0));
    CHECK(layer.bias.isZero(0.0));
  }

  NetParams lin;
  lin.layers.push_back({Matrix::Constant(2, 3, 0.5), Vector::Zero(2)});
  Matrix xi(1, 3);
  xi << 1.0, -2.0, 0.5;
  Matrix g(1, 2);
  g << 3.0, -1.0;
  const Gradients lg = backward(lin, forward(lin, xi).tape, g);
  const Matrix expected = g.transpose() * xi;
  CHECK((lg.layers[0].weight - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(lg.layers[0].bias(0) == 3.0);
  CHECK(lg.layers[0].bias(1) == -1.0);
}

TEST_CASE("backward rejects stale or mismatched tapes") {
  NetParams p = mlp_init({2, 4, 1}, 3);
  Matrix x = Matrix::Ones(2, 2);
  const ForwardResult fwd = forward(p, x);
  CHECK_THROWS_AS(backward(p, fwd.tape, Matrix::Zero(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(backward(mlp_init({2, 3, 1}, 3), fwd.tape, Matrix::Zero(2, 1)),
                  std::invalid_argument);
  p.layers[0].weight(0, 0) += 1.0;
  CHECK_THROWS_AS(backward(p, fwd.tape, Matrix::Zero(2, 1)), std::invalid_argument);
}

TEST_CASE("gradient exactness against central differences") {
  const std::vector<std::vector<int>> shapes = {{2, 32, 32, 2}, {4, 8, 8, 3}, {3, 5, 1}, {1, 1}};
  std::uint64_t seed = 100;
  for (const auto& sizes : shapes) {
    for (int batch : {1, 7, 16}) {
      const auto r = checks::gradient_check(sizes, batch, seed++);
      INFO(r.detail);
      CHECK(r.pass);
    }
  }
}

TEST_CASE("adam first step and zero gradient") {
  NetParams p = scalar_net(1.0, 0.0);
  OptState s = OptState::fresh(p);
  Gradients g = Gradients::zeros_like(p);
  g.layers[0].weight(0, 0) = 1.0;
  adam_step(p, g, s, 0.1);
  CHECK(s.t == 1);
  CHECK(p.layers[0].weight(0, 0) == doctest::Approx(0.9).epsilon(1e-8));
  CHECK(p.layers[0].bias(0) == 0.0);

  NetParams q = mlp_init({2, 3, 1}, 4);
  const NetParams before = q;
  OptState qs = OptState::fresh(q);
  adam_step(q, Gradients::zeros_like(q), qs, 0.5);
  CHECK(q == before);
  CHECK(qs.t == 1);
}

TEST_CASE("adam is deterministic and rejects non-finite gradients") {
  NetParams a = mlp_init({2, 3, 1}, 4);
  NetParams b = a;
  OptState sa = OptState::fresh(a);
  OptState sb = OptState::fresh(b);
  Gradients g = Gradients::zeros_like(a);
  g.layers[0].weight.setConstant(0.3);
  for (int i = 0; i < 3; ++i) {
    adam_step(a, g, sa, 1e-2);
    adam_step(b, g, sb, 1e-2);
  }
  CHECK(a == b);
  for (const auto& v : sa.v) CHECK(v.weight.minCoeff() >= 0.0);

  g.layers[0].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(a, g, sa, 1e-2), DivergenceError);
}

TEST_CASE("categorical head") {
  Matrix logits(3, 2);
  logits << 0.0, 0.0, 1000.0, 0.0, -1e4, 1e4;
  const CategoricalHead head = categorical_head(logits);
  CHECK(head.log_probs(0, 0) == doctest::Approx(std::log(0.5)));
  CHECK(head.entropy(0) == doctest::Approx(std::log(2.0)));
  CHECK(std::exp(head.log_probs(1, 0)) == doctest::Approx(1.0));
  CHECK(head.entropy(1) == doctest::Approx(0.0));
  CHECK(head.log_probs.allFinite());
  for (int r = 0; r < 3; ++r)
    CHECK(std::abs(head.log_probs.row(r).array().exp().sum() - 1.0) <= 1e-9);

  Rng rng(3);
  Matrix random(20, 4);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 4; ++j) random(i, j) = rng.uniform(-1e4, 1e4) * (i % 2 ? 1e-4 : 1.0);
  const CategoricalHead rh = categorical_head(random);
  for (int i = 0; i < 20; ++i) {
    double m = random.row(i).maxCoeff();
    double z = 0.0;
    for (int j = 0; j < 4; ++j) z += std::exp(random(i, j) - m);
    double h = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double p = std::exp(random(i, j) - m) / z;
      if (p > 0.0) h -= p * std::log(p);
    }
    CHECK(rh.entropy(i) == doctest::Approx(h).epsilon(1e-9));
    CHECK(rh.entropy(i) >= 0.0);
    CHECK(std::abs(rh.log_probs.row(i).array().exp().sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("entropy logit gradient matches finite differences") {
  Matrix logits(1, 3);
  logits << 0.3, -1.2, 2.0;
  const Matrix grad = entropy_logit_grad(categorical_head(logits));
  for (int j = 0; j < 3; ++j) {
    Matrix up = logits;
    Matrix down = logits;
    up(0, j) += 1e-6;
    down(0, j) -= 1e-6;
    const double fd = (categorical_head(up).entropy(0) - categorical_head(down).entropy(0)) / 2e-6;
    CHECK(grad(0, j) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("NetParams JSON round trip and corruption") {
  const NetParams p = mlp_init({2, 4, 3}, 9);
  const nlohmann::json doc = to_json(p);
  CHECK(doc.at("layer_sizes") == nlohmann::json({2, 4, 3}));
  CHECK(net_params_from_json(doc) == p);
  CHECK(net_params_from_json(nlohmann::json::parse(doc.dump())) == p);

  nlohmann::json bad = doc;
  bad["weights"][0].erase(0);
  CHECK_THROWS_AS(net_params_from_json(bad), ParseError);
  CHECK_THROWS_AS(net_params_from_json(nlohmann::json{{"weights", 1}}), ParseError);
}
