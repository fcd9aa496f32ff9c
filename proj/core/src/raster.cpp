#include "rsprune/raster.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "rsprune/errors.hpp"

namespace rsprune {

Raster make_raster(std::uint32_t width, std::uint32_t height, std::uint32_t bands,
                   std::uint32_t max_value) {
  Raster r;
  r.width = width;
  r.height = height;
  r.bands = bands;
  r.max_value = max_value;
  r.samples.assign(std::size_t{width} * height * bands, 0);
  return r;
}

Raster decode_raster(const std::filesystem::path& path) {
  cv::Mat img;
  try {
    img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::format, "cannot decode " + path.string() + ": " + e.what());
  }
  if (img.empty()) fail(ErrorKind::format, "cannot decode " + path.string());

  const int depth = img.depth();
  if (depth != CV_8U && depth != CV_16U) {
    fail(ErrorKind::format, "unsupported sample depth in " + path.string());
  }
  const int ch = img.channels();
  if (ch == 3) cv::cvtColor(img, img, cv::COLOR_BGR2RGB);
  if (ch == 4) cv::cvtColor(img, img, cv::COLOR_BGRA2RGBA);

  Raster r = make_raster(static_cast<std::uint32_t>(img.cols), static_cast<std::uint32_t>(img.rows),
                         static_cast<std::uint32_t>(ch), depth == CV_8U ? 255u : 65535u);
  std::size_t o = 0;
  for (int y = 0; y < img.rows; ++y) {
    if (depth == CV_8U) {
      const auto* row = img.ptr<std::uint8_t>(y);
      for (int x = 0; x < img.cols * ch; ++x) r.samples[o++] = row[x];
    } else {
      const auto* row = img.ptr<std::uint16_t>(y);
      for (int x = 0; x < img.cols * ch; ++x) r.samples[o++] = row[x];
    }
  }
  return r;
}

void encode_raster(const Raster& raster, const std::filesystem::path& path) {
  if (raster.bands == 0 || raster.bands > 4) fail(ErrorKind::precondition, "encode: 1-4 bands supported");
  const bool wide = raster.max_value > 255;
  const int type = CV_MAKETYPE(wide ? CV_16U : CV_8U, static_cast<int>(raster.bands));
  cv::Mat img(static_cast<int>(raster.height), static_cast<int>(raster.width), type);
  std::size_t o = 0;
  for (int y = 0; y < img.rows; ++y) {
    const int n = img.cols * static_cast<int>(raster.bands);
    if (wide) {
      auto* row = img.ptr<std::uint16_t>(y);
      for (int x = 0; x < n; ++x) row[x] = raster.samples[o++];
    } else {
      auto* row = img.ptr<std::uint8_t>(y);
      for (int x = 0; x < n; ++x) row[x] = static_cast<std::uint8_t>(raster.samples[o++]);
    }
  }
  if (raster.bands == 3) cv::cvtColor(img, img, cv::COLOR_RGB2BGR);
  if (raster.bands == 4) cv::cvtColor(img, img, cv::COLOR_RGBA2BGRA);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), img);
  } catch (const cv::Exception& e) {
    fail(ErrorKind::io, "cannot encode " + path.string() + ": " + e.what());
  }
  if (!ok) fail(ErrorKind::io, "cannot encode " + path.string());
}

}  // namespace rsprune
