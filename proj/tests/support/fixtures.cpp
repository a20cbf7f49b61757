#include "support/fixtures.hpp"

#include <fstream>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "onnx.pb.h"

namespace xbench::testing {

namespace {

onnx::TensorProto make_initializer(const std::string& name, std::vector<long> dims,
                                   std::mt19937& rng) {
  std::normal_distribution<float> dist(0.0f, 0.5f);
  onnx::TensorProto tensor;
  tensor.set_name(name);
  tensor.set_data_type(onnx::TensorProto::FLOAT);
  long n = 1;
  for (const long d : dims) {
    tensor.add_dims(d);
    n *= d;
  }
  for (long i = 0; i < n; ++i) tensor.add_float_data(dist(rng));
  return tensor;
}

void set_shape(onnx::ValueInfoProto* info, const std::string& name,
               const std::vector<long>& dims) {
  info->set_name(name);
  auto* tensor_type = info->mutable_type()->mutable_tensor_type();
  tensor_type->set_elem_type(onnx::TensorProto::FLOAT);
  for (const long d : dims) tensor_type->mutable_shape()->add_dim()->set_dim_value(d);
}

onnx::NodeProto* add_node(onnx::GraphProto* graph, const std::string& op,
                          const std::vector<std::string>& inputs,
                          const std::string& output) {
  auto* node = graph->add_node();
  node->set_op_type(op);
  for (const auto& in : inputs) node->add_input(in);
  node->add_output(output);
  return node;
}

onnx::TensorProto make_const_initializer(const std::string& name, std::vector<long> dims,
                                         const std::vector<float>& values) {
  onnx::TensorProto tensor;
  tensor.set_name(name);
  tensor.set_data_type(onnx::TensorProto::FLOAT);
  long n = 1;
  for (const long d : dims) {
    tensor.add_dims(d);
    n *= d;
  }
  for (long i = 0; i < n; ++i)
    tensor.add_float_data(values.empty() ? 0.0f : values[static_cast<size_t>(i) % values.size()]);
  return tensor;
}

void write_mlp(const std::filesystem::path& path, const MlpSpec& spec,
               const std::vector<float>* output_bias) {
  std::mt19937 rng(spec.seed);
  const long flat = static_cast<long>(spec.channels) * spec.height * spec.width;

  onnx::ModelProto model;
  model.set_ir_version(7);
  model.set_producer_name("xbench-fixture");
  auto* opset = model.add_opset_import();
  opset->set_version(13);

  auto* graph = model.mutable_graph();
  graph->set_name("mlp_classifier");
  set_shape(graph->add_input(), "input", {1, spec.channels, spec.height, spec.width});
  set_shape(graph->add_output(), "output", {1, spec.classes});

  if (output_bias) {
    *graph->add_initializer() = make_const_initializer("w1", {flat, spec.hidden}, {});
    *graph->add_initializer() = make_const_initializer("b1", {spec.hidden}, {});
    *graph->add_initializer() = make_const_initializer("w2", {spec.hidden, spec.classes}, {});
    *graph->add_initializer() = make_const_initializer("b2", {spec.classes}, *output_bias);
  } else {
    *graph->add_initializer() = make_initializer("w1", {flat, spec.hidden}, rng);
    *graph->add_initializer() = make_initializer("b1", {spec.hidden}, rng);
    *graph->add_initializer() = make_initializer("w2", {spec.hidden, spec.classes}, rng);
    *graph->add_initializer() = make_initializer("b2", {spec.classes}, rng);
  }

  add_node(graph, "Flatten", {"input"}, "flat");
  add_node(graph, "Gemm", {"flat", "w1", "b1"}, "dense1");
  add_node(graph, "Relu", {"dense1"}, spec.with_embedding ? "features" : "act1");
  const std::string act = spec.with_embedding ? "features" : "act1";
  if (spec.softmax_output) {
    add_node(graph, "Gemm", {act, "w2", "b2"}, "logits");
    add_node(graph, "Softmax", {"logits"}, "output");
  } else {
    add_node(graph, "Gemm", {act, "w2", "b2"}, "output");
  }

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  model.SerializeToOstream(&out);
}

}  // namespace

void write_mlp_model(const std::filesystem::path& path, const MlpSpec& spec) {
  write_mlp(path, spec, nullptr);
}

void write_mlp_logit_bias_model(const std::filesystem::path& path, const MlpSpec& spec,
                                const std::vector<float>& output_bias) {
  write_mlp(path, spec, &output_bias);
}

std::vector<std::uint8_t> make_png(int width, int height, unsigned seed) {
  cv::Mat img(height, width, CV_8UC1);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> dist(0, 255);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) img.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(dist(rng));
  std::vector<std::uint8_t> bytes;
  cv::imencode(".png", img, bytes);
  return bytes;
}

std::vector<std::uint8_t> make_flat_png(int width, int height, std::uint8_t value) {
  cv::Mat img(height, width, CV_8UC1, cv::Scalar(value));
  std::vector<std::uint8_t> bytes;
  cv::imencode(".png", img, bytes);
  return bytes;
}

LocalModelConfig mlp_config(const std::filesystem::path& model_path, const MlpSpec& spec) {
  LocalModelConfig config;
  config.id = "fixture-mlp";
  config.model_path = model_path;
  config.input_width = spec.width;
  config.input_height = spec.height;
  config.positive_class_index = 0;
  if (spec.with_embedding) config.embedding_layer = "features";
  return config;
}

std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937 rng(std::random_device{}());
  const auto dir = std::filesystem::temp_directory_path() /
                   ("xbench-" + tag + "-" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace xbench::testing
