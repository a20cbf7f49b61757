#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xbench/errors.hpp"

namespace xbench {

/// Dense row-major tensor, flat Eigen storage.
struct Tensor {
  std::vector<long> dims;
  Eigen::VectorXf data;

  long size() const {
    long n = 1;
    for (long d : dims) n *= d;
    return n;
  }
};

struct LocalModelConfig {
  std::string id;
  std::filesystem::path model_path;
  int input_width = 224;
  int input_height = 224;
  std::string channel_order = "rgb"; // "rgb" or "bgr"
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0, 1.0, 1.0};
  int positive_class_index = 0;
  std::optional<std::string> embedding_layer;
  double model_size_mb = 0.0; // 0 = take the on-disk size
};

/// Decode PNG/JPEG bytes, bilinear-resize to the configured input size and
/// emit a planar (3, H, W) tensor with value = (pixel/255 - mean) * scale.
/// Grayscale inputs are replicated across the three channels.
Tensor preprocess(std::span<const std::uint8_t> image_bytes, const LocalModelConfig& config);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace xbench
