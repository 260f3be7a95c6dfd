#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sgvi {

/// Fully connected network: ReLU between layers, linear output.
template <typename Scalar>
class BasicMlp {
 public:
  using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  struct Layer {
    MatrixType weights;  // out x in
    VectorType bias;
    friend bool operator==(const Layer&, const Layer&) = default;
  };

  /// Activations kept by forward_cached() for the backward pass.
  struct Cache {
    std::vector<VectorType> inputs;  // input to each layer (post-activation)
    std::vector<VectorType> pre;     // pre-activation of each layer
  };

  struct Gradient {
    std::vector<MatrixType> weights;
    std::vector<VectorType> bias;
  };

  BasicMlp() = default;

  /// Zero-initialised network with the given layer widths (input first).
  explicit BasicMlp(const std::vector<Eigen::Index>& widths) {
    if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output width");
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
      if (widths[k] < 1 || widths[k + 1] < 1) throw std::invalid_argument("mlp: widths must be positive");
      layers_.push_back({MatrixType::Zero(widths[k + 1], widths[k]), VectorType::Zero(widths[k + 1])});
    }
  }

  explicit BasicMlp(std::vector<Layer> layers) : layers_(std::move(layers)) { check_shapes(); }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  template <typename Rng>
  void randomize(Rng& rng) {
    for (auto& layer : layers_) {
      const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(layer.weights.cols()));
      std::uniform_real_distribution<Scalar> dist(-bound, bound);
      for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = dist(rng);
    }
  }

  Eigen::Index input_width() const { return layers_.empty() ? 0 : layers_.front().weights.cols(); }
  Eigen::Index output_width() const { return layers_.empty() ? 0 : layers_.back().weights.rows(); }
  std::size_t depth() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  template <typename Derived>
  VectorType forward(const Eigen::MatrixBase<Derived>& input) const {
    check_input(input.size());
    VectorType x = input;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      VectorType z = layers_[k].weights * x + layers_[k].bias;
      x = (k + 1 < layers_.size()) ? VectorType(z.cwiseMax(Scalar(0))) : z;
    }
    return x;
  }

  template <typename Derived>
  VectorType forward_cached(const Eigen::MatrixBase<Derived>& input, Cache& cache) const {
    check_input(input.size());
    cache.inputs.clear();
    cache.pre.clear();
    VectorType x = input;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      cache.inputs.push_back(x);
      VectorType z = layers_[k].weights * x + layers_[k].bias;
      cache.pre.push_back(z);
      x = (k + 1 < layers_.size()) ? VectorType(z.cwiseMax(Scalar(0))) : z;
    }
    return x;
  }

  Gradient zero_gradient() const {
    Gradient g;
    for (const auto& layer : layers_) {
      g.weights.push_back(MatrixType::Zero(layer.weights.rows(), layer.weights.cols()));
      g.bias.push_back(VectorType::Zero(layer.bias.size()));
    }
    return g;
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Cache& cache, VectorType upstream, Gradient& grad) const {
    for (std::size_t k = layers_.size(); k-- > 0;) {
      if (k + 1 < layers_.size())
        upstream = (cache.pre[k].array() > Scalar(0)).select(upstream, Scalar(0));
      grad.weights[k].noalias() += upstream * cache.inputs[k].transpose();
      grad.bias[k] += upstream;
      if (k > 0) upstream = layers_[k].weights.transpose() * upstream;
    }
  }

  /// Multiplies the final layer (weights and bias) by `factor`.
  void scale_output(Scalar factor) {
    if (layers_.empty()) return;
    layers_.back().weights *= factor;
    layers_.back().bias *= factor;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
      n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    return n;
  }

  friend bool operator==(const BasicMlp&, const BasicMlp&) = default;

 private:
  void check_input(Eigen::Index width) const {
    if (layers_.empty()) throw std::logic_error("mlp: empty network");
    if (width != input_width())
      throw std::invalid_argument("mlp: input width " + std::to_string(width) +
                                  " does not match first layer width " +
                                  std::to_string(input_width()));
  }

  void check_shapes() const {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (layers_[k].bias.size() != layers_[k].weights.rows())
        throw std::invalid_argument("mlp: bias length differs from layer output width");
      if (k > 0 && layers_[k].weights.cols() != layers_[k - 1].weights.rows())
        throw std::invalid_argument("mlp: layer widths do not chain");
    }
  }

  std::vector<Layer> layers_;
};

using Mlp = BasicMlp<double>;

}  // namespace sgvi
