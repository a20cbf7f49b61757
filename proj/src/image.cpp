#include "xbench/image.hpp"

#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace xbench {

Tensor preprocess(std::span<const std::uint8_t> image_bytes, const LocalModelConfig& config) {
  if (image_bytes.empty()) throw InputFormatError("empty image bytes");
  if (config.input_width <= 0 || config.input_height <= 0)
    throw ConfigError("model '" + config.id + "': input dimensions must be > 0");

  const cv::Mat encoded(1, static_cast<int>(image_bytes.size()), CV_8UC1,
                        const_cast<std::uint8_t*>(image_bytes.data()));
  cv::Mat bgr = cv::imdecode(encoded, cv::IMREAD_COLOR); // grayscale comes back replicated
  if (bgr.empty()) throw InputFormatError("image bytes do not decode as PNG or JPEG");

  cv::Mat resized;
  if (bgr.cols == config.input_width && bgr.rows == config.input_height)
    resized = bgr;
  else
    cv::resize(bgr, resized, cv::Size(config.input_width, config.input_height), 0, 0,
               cv::INTER_LINEAR);

  const int h = config.input_height;
  const int w = config.input_width;
  Tensor tensor;
  tensor.dims = {1, 3, h, w};
  tensor.data.resize(static_cast<long>(3) * h * w);

  const bool bgr_order = config.channel_order == "bgr";
  for (int c = 0; c < 3; ++c) {
    const int src_channel = bgr_order ? c : 2 - c; // OpenCV decodes as BGR
    const auto mean = static_cast<float>(config.mean[static_cast<size_t>(c)]);
    const auto scale = static_cast<float>(config.scale[static_cast<size_t>(c)]);
    float* dst = tensor.data.data() + static_cast<long>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      const auto* row = resized.ptr<cv::Vec3b>(y);
      for (int x = 0; x < w; ++x)
        dst[static_cast<long>(y) * w + x] =
            (static_cast<float>(row[x][src_channel]) / 255.0f - mean) * scale;
    }
  }
  return tensor;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open file: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace xbench
