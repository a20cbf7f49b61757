#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xbench/diagnosis.hpp"
#include "xbench/image.hpp"

namespace xbench {

/// Labeled dense vector produced by a classifier's embedding layer.
struct EmbeddingVector {
  Eigen::VectorXf values;
  std::string embedder_id;

  long dim() const { return values.size(); }
};

/// An ONNX classifier loaded for CPU inference. Immutable after load; safe
/// to share across concurrent inference calls.
///
/// Executes the feed-forward op subset (Gemm, MatMul, Add, Relu, Sigmoid,
/// Softmax, Flatten, Identity); graphs using other ops are rejected at load.
class ModelHandle {
 public:
  static ModelHandle load(const LocalModelConfig& config);

  const LocalModelConfig& config() const;
  long output_arity() const;
  std::vector<long> input_shape() const;
  bool supports_embedding() const;

  /// Softmax is applied only when the raw outputs do not already sum to
  /// ~1, so both logit-emitting and probability-emitting exports work.
  Diagnosis classify(const Tensor& input) const;

  /// Activations of the configured embedding layer, flattened.
  EmbeddingVector embed(const Tensor& input) const;

  ModelHandle(ModelHandle&&) noexcept;
  ModelHandle& operator=(ModelHandle&&) noexcept;
  ~ModelHandle();

 private:
  struct Impl;
  explicit ModelHandle(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace xbench
