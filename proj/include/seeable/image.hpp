#pragma once

// Working image type: interleaved RGB, float intensities kept in [0,255]
// through the transform pipeline; quantization happens only at export.
// Per-pixel arithmetic runs in double and is stored back as float.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace seeable {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Landmarks = std::vector<Point>;
inline constexpr int kNumLandmarks = 68;

struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> px;  // height * width * 3, interleaved RGB

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), px(static_cast<size_t>(w) * h * 3, fill) {}

  float& at(int x, int y, int c) { return px[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const { return px[(static_cast<size_t>(y) * width + x) * 3 + c]; }

  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

// Soft blending weights in [0,1]; binary before feathering.
struct BlendMask {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // height * width

  float at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
};

inline double clamp255(double v) { return v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v); }
inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// mask * source + (1 - mask) * target, channelwise. Pixels where the mask is
// exactly zero come out bit-identical to the target.
inline Image blend(const BlendMask& mask, const Image& source, const Image& target) {
  if (!source.same_shape(target) || mask.width != source.width || mask.height != source.height)
    throw std::domain_error("blend: shape mismatch");
  Image out(source.width, source.height);
  const size_t n = static_cast<size_t>(source.width) * source.height;
  for (size_t i = 0; i < n; ++i) {
    const double m = mask.values[i];
    for (int c = 0; c < 3; ++c) {
      const double s = source.px[i * 3 + c];
      const double t = target.px[i * 3 + c];
      out.px[i * 3 + c] = static_cast<float>(clamp255(m * s + (1.0 - m) * t));
    }
  }
  return out;
}

inline bool landmarks_in_bounds(const Landmarks& lms, int width, int height) {
  for (const auto& p : lms)
    if (p.x < 0.0 || p.y < 0.0 || p.x > width - 1.0 || p.y > height - 1.0) return false;
  return true;
}

// ---- RGB <-> HSV on normalized [0,1] channels; hue is a turn fraction ----

struct Hsv {
  double h, s, v;
};

inline Hsv rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max(r, std::max(g, b));
  const double mn = std::min(r, std::min(g, b));
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r)
      h = (g - b) / d;
    else if (mx == g)
      h = 2.0 + (b - r) / d;
    else
      h = 4.0 + (r - g) / d;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? d / mx : 0.0;
  return {h, s, mx};
}

inline void hsv_to_rgb(const Hsv& hsv, double& r, double& g, double& b) {
  const double h6 = hsv.h * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = hsv.v * (1.0 - hsv.s);
  const double q = hsv.v * (1.0 - hsv.s * f);
  const double t = hsv.v * (1.0 - hsv.s * (1.0 - f));
  switch (sector) {
    case 0: r = hsv.v, g = t, b = p; break;
    case 1: r = q, g = hsv.v, b = p; break;
    case 2: r = p, g = hsv.v, b = t; break;
    case 3: r = p, g = q, b = hsv.v; break;
    case 4: r = t, g = p, b = hsv.v; break;
    default: r = hsv.v, g = p, b = q; break;
  }
}

// Per-channel additive shift, clamped. Zero shifts return the input as-is.
inline Image shift_rgb(const Image& img, double dr, double dg, double db) {
  if (dr == 0.0 && dg == 0.0 && db == 0.0) return img;
  Image out = img;
  const double d[3] = {dr, dg, db};
  const size_t n = static_cast<size_t>(img.width) * img.height;
  for (size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      out.px[i * 3 + c] = static_cast<float>(clamp255(static_cast<double>(img.px[i * 3 + c]) + d[c]));
  return out;
}

// HSV shift on normalized channels: hue wraps, saturation/value clamp.
inline Image shift_hsv(const Image& img, double dh, double ds, double dv) {
  if (dh == 0.0 && ds == 0.0 && dv == 0.0) return img;
  Image out = img;
  const size_t n = static_cast<size_t>(img.width) * img.height;
  for (size_t i = 0; i < n; ++i) {
    Hsv hsv = rgb_to_hsv(img.px[i * 3] / 255.0, img.px[i * 3 + 1] / 255.0, img.px[i * 3 + 2] / 255.0);
    hsv.h = hsv.h + dh - std::floor(hsv.h + dh);
    hsv.s = clamp01(hsv.s + ds);
    hsv.v = clamp01(hsv.v + dv);
    double r, g, b;
    hsv_to_rgb(hsv, r, g, b);
    out.px[i * 3] = static_cast<float>(clamp255(r * 255.0));
    out.px[i * 3 + 1] = static_cast<float>(clamp255(g * 255.0));
    out.px[i * 3 + 2] = static_cast<float>(clamp255(b * 255.0));
  }
  return out;
}

// Brightness scales intensities by 1+b; contrast stretches about 128 by 1+c.
inline Image brightness_contrast(const Image& img, double b, double c) {
  if (b == 0.0 && c == 0.0) return img;
  Image out = img;
  for (float& v : out.px) {
    double y = static_cast<double>(v) * (1.0 + b);
    y = (y - 128.0) * (1.0 + c) + 128.0;
    v = static_cast<float>(clamp255(y));
  }
  return out;
}

}  // namespace seeable
