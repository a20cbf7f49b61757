#include "xbench/onnx_model.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include "onnx.pb.h"

namespace xbench {

namespace {

using RowMajorMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<const RowMajorMatrix>;

struct Attr {
  float f = 0.0f;
  std::int64_t i = 0;
};

struct Node {
  std::string op_type;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, Attr> attrs;
};

Tensor tensor_from_proto(const onnx::TensorProto& proto) {
  if (proto.data_type() != onnx::TensorProto::FLOAT)
    throw BackendError("initializer '" + proto.name() + "': only float32 tensors are supported");
  Tensor t;
  for (const auto d : proto.dims()) t.dims.push_back(d);
  const long n = t.size();
  t.data.resize(n);
  if (!proto.raw_data().empty()) {
    if (proto.raw_data().size() != static_cast<size_t>(n) * sizeof(float))
      throw BackendError("initializer '" + proto.name() + "': raw data size mismatch");
    std::memcpy(t.data.data(), proto.raw_data().data(), proto.raw_data().size());
  } else {
    if (proto.float_data_size() != n)
      throw BackendError("initializer '" + proto.name() + "': float data size mismatch");
    for (long i = 0; i < n; ++i) t.data[i] = proto.float_data(static_cast<int>(i));
  }
  return t;
}

// 2-D view: first dim is the batch axis, everything else is flattened.
MatrixMap as_matrix(const Tensor& t) {
  const long rows = t.dims.empty() ? 1 : std::max<long>(t.dims[0], 1);
  const long cols = t.size() / rows;
  return MatrixMap(t.data.data(), rows, cols);
}

Tensor from_matrix(const RowMajorMatrix& m) {
  Tensor t;
  t.dims = {m.rows(), m.cols()};
  t.data = Eigen::Map<const Eigen::VectorXf>(m.data(), m.size());
  return t;
}

std::vector<long> proto_shape(const onnx::ValueInfoProto& info) {
  std::vector<long> dims;
  for (const auto& d : info.type().tensor_type().shape().dim())
    dims.push_back(d.value_case() == onnx::TensorShapeProto::Dimension::kDimValue
                       ? static_cast<long>(d.dim_value())
                       : 1); // dynamic (batch) dims run as 1
  return dims;
}

}  // namespace

struct ModelHandle::Impl {
  LocalModelConfig config;
  std::vector<Node> nodes;
  std::map<std::string, Tensor> initializers;
  std::string input_name;
  std::vector<long> input_dims;
  std::string output_name;
  long output_arity = 0;
  bool embedding_available = false;

  Tensor run(const Tensor& input, const std::string& target) const;
};

Tensor ModelHandle::Impl::run(const Tensor& input, const std::string& target) const {
  std::map<std::string, Tensor> values = initializers;
  values[input_name] = input;
  for (const auto& node : nodes) {
    if (values.count(node.outputs.front())) continue;
    auto arg = [&](size_t i) -> const Tensor& {
      auto it = values.find(node.inputs.at(i));
      if (it == values.end())
        throw BackendError("model '" + config.id + "': value '" + node.inputs.at(i) +
                           "' used before it is produced");
      return it->second;
    };
    Tensor result;
    if (node.op_type == "Gemm") {
      const float alpha = node.attrs.count("alpha") ? node.attrs.at("alpha").f : 1.0f;
      const float beta = node.attrs.count("beta") ? node.attrs.at("beta").f : 1.0f;
      const bool trans_a = node.attrs.count("transA") && node.attrs.at("transA").i != 0;
      const bool trans_b = node.attrs.count("transB") && node.attrs.at("transB").i != 0;
      RowMajorMatrix a = as_matrix(arg(0));
      RowMajorMatrix b = as_matrix(arg(1));
      if (trans_a) a.transposeInPlace();
      if (trans_b) b.transposeInPlace();
      RowMajorMatrix y = alpha * (a * b);
      if (node.inputs.size() > 2) {
        const auto& c = arg(2);
        y.rowwise() += beta * Eigen::Map<const Eigen::RowVectorXf>(c.data.data(), c.data.size());
      }
      result = from_matrix(y);
    } else if (node.op_type == "MatMul") {
      result = from_matrix(as_matrix(arg(0)) * as_matrix(arg(1)));
    } else if (node.op_type == "Add") {
      const auto& a = arg(0);
      const auto& b = arg(1);
      if (a.size() == b.size()) {
        result = a;
        result.data += b.data;
      } else {
        RowMajorMatrix y = as_matrix(a);
        y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b.data.data(), b.data.size());
        result = from_matrix(y);
      }
    } else if (node.op_type == "Relu") {
      result = arg(0);
      result.data = result.data.cwiseMax(0.0f);
    } else if (node.op_type == "Sigmoid") {
      result = arg(0);
      result.data = (1.0f + (-result.data.array()).exp()).inverse().matrix();
    } else if (node.op_type == "Softmax") {
      RowMajorMatrix y = as_matrix(arg(0));
      for (long r = 0; r < y.rows(); ++r) {
        Eigen::ArrayXf row = y.row(r).array() - y.row(r).maxCoeff();
        row = row.exp();
        y.row(r) = (row / row.sum()).matrix();
      }
      result = from_matrix(y);
    } else if (node.op_type == "Flatten") {
      const long axis = node.attrs.count("axis") ? node.attrs.at("axis").i : 1;
      const auto& a = arg(0);
      long rows = 1;
      for (long d = 0; d < axis && d < static_cast<long>(a.dims.size()); ++d) rows *= a.dims[static_cast<size_t>(d)];
      result = a;
      result.dims = {rows, a.size() / rows};
    } else if (node.op_type == "Identity") {
      result = arg(0);
    } else {
      throw BackendError("model '" + config.id + "': unsupported op " + node.op_type);
    }
    values[node.outputs.front()] = std::move(result);
    if (node.outputs.front() == target) break;
  }
  auto it = values.find(target);
  if (it == values.end())
    throw BackendError("model '" + config.id + "': graph does not produce '" + target + "'");
  return it->second;
}

ModelHandle::ModelHandle(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ModelHandle::ModelHandle(ModelHandle&&) noexcept = default;
ModelHandle& ModelHandle::operator=(ModelHandle&&) noexcept = default;
ModelHandle::~ModelHandle() = default;

ModelHandle ModelHandle::load(const LocalModelConfig& config) {
  if (!std::filesystem::exists(config.model_path))
    throw NotFoundError("model file not found: " + config.model_path.string());
  if (config.input_width <= 0 || config.input_height <= 0)
    throw ConfigError("model '" + config.id + "': input dimensions must be > 0");

  const auto bytes = read_file_bytes(config.model_path);
  onnx::ModelProto model;
  if (!model.ParseFromArray(bytes.data(), static_cast<int>(bytes.size())) || !model.has_graph())
    throw BackendError("file is not a valid ONNX model: " + config.model_path.string());
  const auto& graph = model.graph();
  if (graph.input_size() < 1 || graph.output_size() < 1)
    throw BackendError("model '" + config.id + "': graph must declare input and output");

  auto impl = std::make_unique<Impl>();
  impl->config = config;

  const double disk_mb = static_cast<double>(bytes.size()) / 1e6;
  if (impl->config.model_size_mb <= 0.0)
    impl->config.model_size_mb = disk_mb;
  else if (std::abs(impl->config.model_size_mb - disk_mb) > 0.01 * disk_mb)
    throw ConfigError("model '" + config.id + "': configured model_size_mb differs from the on-disk size by more than 1%");

  for (const auto& init : graph.initializer())
    impl->initializers[init.name()] = tensor_from_proto(init);

  // The first non-initializer graph input is the image tensor.
  for (const auto& in : graph.input()) {
    if (impl->initializers.count(in.name())) continue;
    impl->input_name = in.name();
    impl->input_dims = proto_shape(in);
    break;
  }
  if (impl->input_name.empty())
    throw BackendError("model '" + config.id + "': no data input found");
  if (impl->input_dims.size() == 4 &&
      (impl->input_dims[2] != config.input_height || impl->input_dims[3] != config.input_width))
    throw ConfigError("model '" + config.id + "': configured input size does not match the graph");

  impl->output_name = graph.output(0).name();
  const auto out_dims = proto_shape(graph.output(0));
  if (out_dims.empty())
    throw BackendError("model '" + config.id + "': output shape must be static");
  impl->output_arity = out_dims.back();
  if (config.positive_class_index < 0 || config.positive_class_index >= impl->output_arity)
    throw ConfigError("model '" + config.id + "': positive_class_index out of range for output arity " +
                      std::to_string(impl->output_arity));

  for (const auto& node : graph.node()) {
    Node n;
    n.op_type = node.op_type();
    n.inputs.assign(node.input().begin(), node.input().end());
    n.outputs.assign(node.output().begin(), node.output().end());
    for (const auto& attr : node.attribute()) n.attrs[attr.name()] = Attr{attr.f(), attr.i()};
    if (n.op_type != "Gemm" && n.op_type != "MatMul" && n.op_type != "Add" && n.op_type != "Relu" &&
        n.op_type != "Sigmoid" && n.op_type != "Softmax" && n.op_type != "Flatten" &&
        n.op_type != "Identity")
      throw BackendError("model '" + config.id + "': unsupported op " + n.op_type);
    if (config.embedding_layer)
      for (const auto& out : n.outputs)
        if (out == *config.embedding_layer) impl->embedding_available = true;
    impl->nodes.push_back(std::move(n));
  }
  if (config.embedding_layer && !impl->embedding_available)
    throw ConfigError("model '" + config.id + "': embedding layer '" + *config.embedding_layer +
                      "' is not produced by the graph");
  return ModelHandle(std::move(impl));
}

const LocalModelConfig& ModelHandle::config() const { return impl_->config; }
long ModelHandle::output_arity() const { return impl_->output_arity; }
std::vector<long> ModelHandle::input_shape() const { return impl_->input_dims; }
bool ModelHandle::supports_embedding() const { return impl_->embedding_available; }

Diagnosis ModelHandle::classify(const Tensor& input) const {
  long expected = 1;
  for (long d : impl_->input_dims) expected *= d;
  if (input.size() != expected)
    throw InputFormatError("model '" + impl_->config.id + "': input has " +
                                std::to_string(input.size()) + " elements, expected " +
                                std::to_string(expected));
  Tensor shaped = input;
  shaped.dims = impl_->input_dims;
  Tensor out = impl_->run(shaped, impl_->output_name);
  if (out.size() != impl_->output_arity)
    throw BackendError("model '" + impl_->config.id + "': unexpected output size");

  Eigen::VectorXf scores = out.data;
  if (std::abs(scores.sum() - 1.0f) > 1e-3f) { // logits: normalize
    Eigen::ArrayXf shifted = scores.array() - scores.maxCoeff();
    shifted = shifted.exp();
    scores = (shifted / shifted.sum()).matrix();
  }
  const double p_positive = scores[impl_->config.positive_class_index];
  return Diagnosis{p_positive, 1.0 - p_positive};
}

EmbeddingVector ModelHandle::embed(const Tensor& input) const {
  if (!impl_->config.embedding_layer || !impl_->embedding_available)
    throw CapabilityError("model '" + impl_->config.id + "' does not advertise an embedding layer");
  Tensor shaped = input;
  shaped.dims = impl_->input_dims;
  Tensor out = impl_->run(shaped, *impl_->config.embedding_layer);
  EmbeddingVector v;
  v.values = out.data;
  v.embedder_id = impl_->config.id;
  if (!v.values.allFinite() || v.values.norm() <= 0.0f)
    throw BackendError("model '" + impl_->config.id + "': embedding is degenerate");
  return v;
}

}  // namespace xbench
