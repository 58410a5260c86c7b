#pragma once

// The soft-discrepancy data factory: global discrepancy-invariant transforms
// followed by one localized spatial or frequency perturbation, blended into a
// single face patch, with the self-supervised (location, type) label.

#include <stdexcept>
#include <vector>

#include "seeable/common.hpp"
#include "seeable/image.hpp"
#include "seeable/image_ops.hpp"
#include "seeable/labels.hpp"
#include "seeable/masks.hpp"

namespace seeable {

struct PerturbationConfig {
  double rgb_shift_max = 20.0;
  double hsv_shift_max_local = 0.3;
  double hsv_shift_max_global = 0.1;
  double brightness_contrast_max = 0.1;
  std::vector<int> downsample_factors = {2, 4};
  double sharpen_alpha_min = 0.2;
  double sharpen_alpha_max = 0.5;
  int jpeg_quality_min = 30;
  int jpeg_quality_max = 70;
  double translate_frac_x = 0.03;
  double translate_frac_y = 0.015;
  double scale_max = 0.05;

  void validate() const {
    if (rgb_shift_max < 0 || hsv_shift_max_local < 0 || hsv_shift_max_global < 0 ||
        brightness_contrast_max < 0 || translate_frac_x < 0 || translate_frac_y < 0 ||
        scale_max < 0)
      throw std::invalid_argument("PerturbationConfig: negative bound");
    if (downsample_factors.empty())
      throw std::invalid_argument("PerturbationConfig: empty downsample set");
    for (int f : downsample_factors)
      if (f < 1) throw std::invalid_argument("PerturbationConfig: bad downsample factor");
    if (sharpen_alpha_min > sharpen_alpha_max || jpeg_quality_min > jpeg_quality_max)
      throw std::invalid_argument("PerturbationConfig: range bounds out of order");
    if (jpeg_quality_min < 1 || jpeg_quality_max > 100)
      throw std::invalid_argument("PerturbationConfig: jpeg quality out of range");
  }
};

// One spatial-domain edit, chosen uniformly: per-channel RGB shift, HSV
// shift, or brightness/contrast scaling.
inline Image perturb_spatial(const Image& img, Rng& rng, const PerturbationConfig& cfg) {
  switch (rng.below_int(3)) {
    case 0:
      return shift_rgb(img, rng.uniform(-cfg.rgb_shift_max, cfg.rgb_shift_max),
                       rng.uniform(-cfg.rgb_shift_max, cfg.rgb_shift_max),
                       rng.uniform(-cfg.rgb_shift_max, cfg.rgb_shift_max));
    case 1:
      return shift_hsv(img, rng.uniform(-cfg.hsv_shift_max_local, cfg.hsv_shift_max_local),
                       rng.uniform(-cfg.hsv_shift_max_local, cfg.hsv_shift_max_local),
                       rng.uniform(-cfg.hsv_shift_max_local, cfg.hsv_shift_max_local));
    default:
      return brightness_contrast(
          img, rng.uniform(-cfg.brightness_contrast_max, cfg.brightness_contrast_max),
          rng.uniform(-cfg.brightness_contrast_max, cfg.brightness_contrast_max));
  }
}

// Downsample-and-restore at the given factor (bilinear both ways).
inline Image downsample_up(const Image& img, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample_up: factor >= 1");
  if (factor == 1) return img;
  const int w = std::max(1, img.width / factor);
  const int h = std::max(1, img.height / factor);
  return resize_bilinear(resize_bilinear(img, w, h), img.width, img.height);
}

// One frequency-domain edit, chosen uniformly: downsample/upsample, sharpen
// blend, or a JPEG round-trip.
inline Image perturb_frequency(const Image& img, Rng& rng, const PerturbationConfig& cfg) {
  switch (rng.below_int(3)) {
    case 0: {
      const int f = cfg.downsample_factors[rng.below_int(
          static_cast<int>(cfg.downsample_factors.size()))];
      return downsample_up(img, f);
    }
    case 1:
      return sharpen_blend(img, rng.uniform(cfg.sharpen_alpha_min, cfg.sharpen_alpha_max));
    default: {
      const int q = cfg.jpeg_quality_min +
                    rng.below_int(cfg.jpeg_quality_max - cfg.jpeg_quality_min + 1);
      return jpeg_roundtrip(img, q);
    }
  }
}

inline Image perturb_by_type(const Image& img, int y_type, Rng& rng,
                             const PerturbationConfig& cfg) {
  if (y_type == kTypeSpatial) return perturb_spatial(img, rng, cfg);
  if (y_type == kTypeFrequency) return perturb_frequency(img, rng, cfg);
  throw std::domain_error("perturb_by_type: unknown type");
}

// Whole-image transform parameters that leave the discrepancy signal intact.
struct InvariantParams {
  double dx = 0.0;
  double dy = 0.0;
  double scale = 1.0;  // >= 1, center-cropped back
  double dh = 0.0, ds = 0.0, dv = 0.0;
};

struct TransformedFace {
  Image image;
  Landmarks landmarks;
};

// Deterministic application: scale + center crop, then translate, then a
// global HSV shift. Landmarks follow the same geometry.
inline TransformedFace apply_invariant_transforms_with(const Image& img, const Landmarks& lms,
                                                       const InvariantParams& p) {
  TransformedFace out{img, lms};
  if (p.scale != 1.0) {
    const int ws = static_cast<int>(std::lround(img.width * p.scale));
    const int hs = static_cast<int>(std::lround(img.height * p.scale));
    const Image scaled = resize_bilinear(out.image, ws, hs);
    const int ox = (ws - img.width) / 2;
    const int oy = (hs - img.height) / 2;
    Image cropped(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < 3; ++c) cropped.at(x, y, c) = scaled.at(x + ox, y + oy, c);
    out.image = std::move(cropped);
    const double fx = static_cast<double>(ws) / img.width;
    const double fy = static_cast<double>(hs) / img.height;
    for (auto& lm : out.landmarks) {
      lm.x = (lm.x + 0.5) * fx - 0.5 - ox;
      lm.y = (lm.y + 0.5) * fy - 0.5 - oy;
    }
  }
  if (p.dx != 0.0 || p.dy != 0.0) {
    out.image = translate_bilinear(out.image, p.dx, p.dy);
    for (auto& lm : out.landmarks) {
      lm.x += p.dx;
      lm.y += p.dy;
    }
  }
  out.image = shift_hsv(out.image, p.dh, p.ds, p.dv);
  return out;
}

inline InvariantParams draw_invariant_params(Rng& rng, const PerturbationConfig& cfg, int width,
                                             int height) {
  InvariantParams p;
  p.dx = rng.uniform(-cfg.translate_frac_x, cfg.translate_frac_x) * width;
  p.dy = rng.uniform(-cfg.translate_frac_y, cfg.translate_frac_y) * height;
  p.scale = 1.0 + rng.uniform(0.0, cfg.scale_max);
  p.dh = rng.uniform(-cfg.hsv_shift_max_global, cfg.hsv_shift_max_global);
  p.ds = rng.uniform(-cfg.hsv_shift_max_global, cfg.hsv_shift_max_global);
  p.dv = rng.uniform(-cfg.hsv_shift_max_global, cfg.hsv_shift_max_global);
  return p;
}

// Randomized global transforms; draws are rejected until all landmarks stay
// in bounds (identity after 100 tries, which small bounds make unreachable).
inline TransformedFace apply_invariant_transforms(const Image& img, const Landmarks& lms,
                                                  Rng& rng, const PerturbationConfig& cfg) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto p = draw_invariant_params(rng, cfg, img.width, img.height);
    auto out = apply_invariant_transforms_with(img, lms, p);
    if (landmarks_in_bounds(out.landmarks, img.width, img.height)) return out;
  }
  return {img, lms};
}

struct SdSample {
  Image image;          // the face with the soft discrepancy
  DiscrepancyLabel label;
  BlendMask mask;       // feathered blending mask used
  Image base;           // globally-transformed input before perturbation
  Landmarks landmarks;  // transformed landmarks
};

// Full pipeline: global invariant transforms, one type-specific perturbation,
// and a blend confined to the selected patch. Deterministic given the rng.
inline SdSample synthesize_sd(const Image& img, const Landmarks& lms, int y_loc, int y_type,
                              Rng& rng, const SubmaskScheme& scheme,
                              const PerturbationConfig& cfg) {
  cfg.validate();
  auto t = apply_invariant_transforms(img, lms, rng, cfg);
  const Image perturbed = perturb_by_type(t.image, y_type, rng, cfg);
  BlendMask mask = make_submask(scheme, t.landmarks, y_loc, t.image.width, t.image.height);

  SdSample sample;
  sample.image = blend(mask, perturbed, t.image);
  sample.label = make_label(y_loc, y_type, kNumTypes, scheme.n_loc());
  sample.mask = std::move(mask);
  sample.base = std::move(t.image);
  sample.landmarks = std::move(t.landmarks);
  return sample;
}

}  // namespace seeable
