#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "xbench/image.hpp"

namespace xbench::testing {

struct MlpSpec {
  int channels = 3;
  int height = 8;
  int width = 8;
  int hidden = 16;
  int classes = 2;
  unsigned seed = 7;
  bool softmax_output = false;       // emit probabilities instead of logits
  bool with_embedding = true;        // name the penultimate activation "features"
};

/// Writes a small randomly initialized dense classifier
/// (Flatten -> Gemm -> Relu["features"] -> Gemm[-> Softmax]) as an ONNX file.
void write_mlp_model(const std::filesystem::path& path, const MlpSpec& spec = {});

/// Variant with all weights zeroed and the output bias fixed, so the
/// classifier emits exactly `output_bias` for any input.
void write_mlp_logit_bias_model(const std::filesystem::path& path, const MlpSpec& spec,
                                const std::vector<float>& output_bias);

/// Deterministic grayscale PNG with pixel values derived from the seed.
std::vector<std::uint8_t> make_png(int width, int height, unsigned seed);

/// Grayscale PNG with every pixel set to the same value.
std::vector<std::uint8_t> make_flat_png(int width, int height, std::uint8_t value);

/// Config matching write_mlp_model's input contract.
LocalModelConfig mlp_config(const std::filesystem::path& model_path, const MlpSpec& spec = {});

/// Unique scratch directory under the system temp root.
std::filesystem::path scratch_dir(const std::string& tag);

}  // namespace xbench::testing
