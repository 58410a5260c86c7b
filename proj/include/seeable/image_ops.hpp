#pragma once

// Resampling, filtering and codec round-trips for the perturbation factory.
// Resize/blur/sharpen are implemented directly so their support, border and
// rounding behavior is pinned; PNG/JPEG go through OpenCV.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "seeable/common.hpp"
#include "seeable/image.hpp"

namespace seeable {

// Bilinear resize with pixel-center alignment and edge clamping.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize_bilinear: bad size");
  if (out_w == img.width && out_h == img.height) return img;
  Image out(out_w, out_h);
  const double sx_scale = static_cast<double>(img.width) / out_w;
  const double sy_scale = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * sy_scale - 0.5;
    sy = std::min(std::max(sy, 0.0), static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * sx_scale - 0.5;
      sx = std::min(std::max(sx, 0.0), static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
        const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  }
  return out;
}

enum class Border { Zero, Replicate };

// Separable Gaussian on a single plane; radius ceil(3*sigma), so the filter
// support (and hence a blurred mask's support) is exactly bounded.
inline void gaussian_blur_plane(std::vector<float>& plane, int width, int height, double sigma,
                                Border border) {
  if (sigma <= 0.0) return;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += kernel[k + radius];
  }
  for (double& v : kernel) v /= sum;

  std::vector<float> tmp(plane.size());
  auto sample = [&](const std::vector<float>& src, int x, int y) -> double {
    if (x < 0 || x >= width || y < 0 || y >= height) {
      if (border == Border::Zero) return 0.0;
      x = std::min(std::max(x, 0), width - 1);
      y = std::min(std::max(y, 0), height - 1);
    }
    return src[static_cast<size_t>(y) * width + x];
  };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * sample(plane, x + k, y);
      tmp[static_cast<size_t>(y) * width + x] = static_cast<float>(acc);
    }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * sample(tmp, x, y + k);
      plane[static_cast<size_t>(y) * width + x] = static_cast<float>(acc);
    }
}

inline Image gaussian_blur(const Image& img, double sigma, Border border = Border::Replicate) {
  if (sigma <= 0.0) return img;
  Image out = img;
  std::vector<float> plane(static_cast<size_t>(img.width) * img.height);
  for (int c = 0; c < 3; ++c) {
    for (size_t i = 0; i < plane.size(); ++i) plane[i] = img.px[i * 3 + c];
    gaussian_blur_plane(plane, img.width, img.height, sigma, border);
    for (size_t i = 0; i < plane.size(); ++i) out.px[i * 3 + c] = plane[i];
  }
  return out;
}

// alpha * laplacian-sharpened + (1 - alpha) * original; alpha 0 is exact
// identity. Replicate border.
inline Image sharpen_blend(const Image& img, double alpha) {
  if (alpha == 0.0) return img;
  Image out = img;
  auto px = [&](int x, int y, int c) {
    x = std::min(std::max(x, 0), img.width - 1);
    y = std::min(std::max(y, 0), img.height - 1);
    return static_cast<double>(img.at(x, y, c));
  };
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double sharp = 5.0 * px(x, y, c) - px(x - 1, y, c) - px(x + 1, y, c) -
                             px(x, y - 1, c) - px(x, y + 1, c);
        out.at(x, y, c) =
            static_cast<float>(clamp255(alpha * sharp + (1.0 - alpha) * px(x, y, c)));
      }
  return out;
}

// Continuous translation via bilinear sampling, replicate border. Content
// moves by (+dx, +dy); landmarks shift by exactly the same offset.
inline Image translate_bilinear(const Image& img, double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return img;
  Image out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double sx = x - dx;
      double sy = y - dy;
      sx = std::min(std::max(sx, 0.0), static_cast<double>(img.width - 1));
      sy = std::min(std::max(sy, 0.0), static_cast<double>(img.height - 1));
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
        const double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  return out;
}

// ---- quantization and codecs ----

inline cv::Mat to_bgr_u8(const Image& img) {
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[x * 3 + c] =
            static_cast<uint8_t>(std::lround(clamp255(img.at(x, y, 2 - c))));
  }
  return m;
}

inline Image from_bgr_u8(const cv::Mat& m) {
  if (m.type() != CV_8UC3) throw DataError("from_bgr_u8: expected 8-bit BGR");
  Image img(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < m.cols; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(row[x * 3 + (2 - c)]);
  }
  return img;
}

// In-memory JPEG encode/decode at the given quality; this quantization
// round-trip is itself the frequency-domain perturbation.
inline Image jpeg_roundtrip(const Image& img, int quality) {
  if (quality < 1 || quality > 100) throw std::invalid_argument("jpeg_roundtrip: quality 1..100");
  std::vector<uint8_t> buf;
  cv::imencode(".jpg", to_bgr_u8(img), buf, {cv::IMWRITE_JPEG_QUALITY, quality});
  cv::Mat decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (decoded.empty()) throw NumericError("jpeg_roundtrip: decode failed");
  return from_bgr_u8(decoded);
}

inline void save_png(const std::string& path, const Image& img) {
  if (!cv::imwrite(path, to_bgr_u8(img))) throw DataError("save_png: cannot write " + path);
}

inline Image load_image(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  if (m.empty()) throw DataError("load_image: cannot read " + path);
  return from_bgr_u8(m);
}

// Binary mask of the landmark convex hull interior.
inline BlendMask convex_hull_mask(const Landmarks& lms, int width, int height) {
  if (lms.size() < 3) throw std::domain_error("convex_hull_mask: need at least 3 points");
  std::vector<cv::Point2f> pts;
  pts.reserve(lms.size());
  for (const auto& p : lms) pts.emplace_back(static_cast<float>(p.x), static_cast<float>(p.y));
  std::vector<cv::Point2f> hull;
  cv::convexHull(pts, hull);
  std::vector<cv::Point> hull_i;
  hull_i.reserve(hull.size());
  for (const auto& p : hull) hull_i.emplace_back(cv::Point(std::lround(p.x), std::lround(p.y)));
  cv::Mat m = cv::Mat::zeros(height, width, CV_8UC1);
  cv::fillConvexPoly(m, hull_i, cv::Scalar(255));
  BlendMask mask;
  mask.width = width;
  mask.height = height;
  mask.values.resize(static_cast<size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const auto* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < width; ++x)
      mask.values[static_cast<size_t>(y) * width + x] = row[x] ? 1.0f : 0.0f;
  }
  return mask;
}

}  // namespace seeable
