#pragma once

// Procedural desk-scale corpus: face-like images (layered ellipses, shading,
// banded texture and pixel grain) with a fixed 68-landmark template,
// per-video identity parameters and per-frame jitter. Fakes are global
// face-swap composites: a donor identity rendered into the source geometry
// and blended over the landmark hull.

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "seeable/common.hpp"
#include "seeable/image.hpp"
#include "seeable/image_ops.hpp"
#include "seeable/manifest.hpp"

namespace seeable {

struct FaceGeometry {
  double cx, cy;  // face ellipse center (pixels)
  double rx, ry;  // face ellipse radii
};

struct TextureWave {
  double fx, fy, phase, amp;
};

struct FaceAppearance {
  std::array<double, 3> skin, eye, brow, mouth, bg_top, bg_bottom;
  std::array<TextureWave, 3> waves;
  double noise_amp = 5.0;
  double bg_texture_scale = 0.4;
  uint64_t noise_key = 0;
};

struct VideoParams {
  FaceGeometry geom;
  FaceAppearance look;
};

struct FrameJitter {
  double dx = 0.0, dy = 0.0;
  double light = 1.0;
  double phase_shift = 0.0;
  uint64_t noise_key = 0;
};

namespace synth_detail {

inline double pixel_noise(uint64_t key, int x, int y) {
  const uint64_t h = splitmix64(key ^ (static_cast<uint64_t>(static_cast<uint32_t>(y)) << 32 |
                                       static_cast<uint32_t>(x)));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline double smoothstep(double lo, double hi, double v) {
  const double t = clamp01((v - lo) / (hi - lo));
  return t * t * (3.0 - 2.0 * t);
}

// Soft implicit ellipse: 1 inside, 0 outside, smooth over the rim.
inline double soft_ellipse(double x, double y, double cx, double cy, double rx, double ry,
                           double softness = 0.15) {
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  const double e = dx * dx + dy * dy;
  return 1.0 - smoothstep(1.0 - softness, 1.0 + softness, e);
}

}  // namespace synth_detail

inline VideoParams draw_video_params(Rng& rng, int size) {
  VideoParams vp;
  const double s = static_cast<double>(size);
  vp.geom.cx = s * rng.uniform(0.48, 0.52);
  vp.geom.cy = s * rng.uniform(0.50, 0.54);
  vp.geom.rx = s * rng.uniform(0.27, 0.33);
  vp.geom.ry = s * rng.uniform(0.32, 0.38);

  auto& a = vp.look;
  const double r = rng.uniform(150.0, 225.0);
  a.skin = {r, r * rng.uniform(0.70, 0.86), r * rng.uniform(0.52, 0.72)};
  a.eye = {rng.uniform(20, 80), rng.uniform(30, 90), rng.uniform(40, 120)};
  a.brow = {rng.uniform(30, 90), rng.uniform(20, 70), rng.uniform(15, 60)};
  a.mouth = {rng.uniform(130, 200), rng.uniform(40, 90), rng.uniform(50, 100)};
  a.bg_top = {rng.uniform(40, 200), rng.uniform(40, 200), rng.uniform(40, 200)};
  a.bg_bottom = {rng.uniform(40, 200), rng.uniform(40, 200), rng.uniform(40, 200)};
  // one mid and two fine bands, random orientations
  const double bands[3][2] = {{0.05, 0.11}, {0.14, 0.24}, {0.28, 0.45}};
  for (int w = 0; w < 3; ++w) {
    const double f = rng.uniform(bands[w][0], bands[w][1]);
    const double ang = rng.uniform(0.0, 3.14159265358979323846);
    a.waves[w] = {f * std::cos(ang), f * std::sin(ang), rng.uniform(0.0, 6.2831853),
                  rng.uniform(5.0, 11.0)};
  }
  a.noise_amp = rng.uniform(4.0, 8.0);
  a.bg_texture_scale = rng.uniform(0.3, 0.6);
  a.noise_key = rng.child(0xA11CE).uniform() * 0x1.0p62;
  return vp;
}

inline FrameJitter draw_frame_jitter(Rng& rng, int frame_index, int size = 64) {
  FrameJitter j;
  const double amp = 1.5 * size / 64.0;
  j.dx = rng.uniform(-amp, amp);
  j.dy = rng.uniform(-amp, amp);
  j.light = rng.uniform(0.95, 1.05);
  j.phase_shift = 0.35 * frame_index + rng.uniform(0.0, 0.1);
  j.noise_key = rng.child(0xF00D + static_cast<uint64_t>(frame_index)).uniform() * 0x1.0p62;
  return j;
}

// Fixed 68-point template anchored to the face ellipse: 17 jaw, 2x5 brows,
// 9 nose, 2x6 eyes, 20 mouth points.
inline Landmarks landmark_template(const FaceGeometry& g, const FrameJitter& j) {
  Landmarks lms;
  lms.reserve(kNumLandmarks);
  const double cx = g.cx + j.dx, cy = g.cy + j.dy;
  auto push = [&](double x, double y) { lms.push_back({x, y}); };

  // jaw: lower half of the ellipse, left ear to right ear through the chin
  for (int i = 0; i <= 16; ++i) {
    const double a = 3.14159265358979323846 * (1.0 - static_cast<double>(i) / 16.0);
    push(cx + g.rx * std::cos(a), cy + g.ry * std::sin(a) * 0.98);
  }
  // brows: arcs above the eyes
  for (int side = 0; side < 2; ++side) {
    const double ex = cx + (side == 0 ? -1 : 1) * 0.40 * g.rx;
    for (int i = 0; i < 5; ++i) {
      const double t = (i - 2) / 2.0;
      push(ex + t * 0.20 * g.rx, cy - 0.38 * g.ry - 0.06 * g.ry * (1.0 - t * t));
    }
  }
  // nose: bridge plus base arc
  for (int i = 0; i < 4; ++i) push(cx, cy - 0.20 * g.ry + i * 0.11 * g.ry);
  for (int i = 0; i < 5; ++i) {
    const double t = (i - 2) / 2.0;
    push(cx + t * 0.10 * g.rx, cy + 0.18 * g.ry + 0.03 * g.ry * (1.0 - t * t));
  }
  // eyes: hexagonal rings
  for (int side = 0; side < 2; ++side) {
    const double ex = cx + (side == 0 ? -1 : 1) * 0.40 * g.rx;
    const double ey = cy - 0.20 * g.ry;
    for (int i = 0; i < 6; ++i) {
      const double a = 6.2831853 * i / 6.0;
      push(ex + 0.16 * g.rx * std::cos(a), ey + 0.07 * g.ry * std::sin(a));
    }
  }
  // mouth: outer ring of 12, inner ring of 8
  const double my = cy + 0.45 * g.ry;
  for (int i = 0; i < 12; ++i) {
    const double a = 6.2831853 * i / 12.0;
    push(cx + 0.30 * g.rx * std::cos(a), my + 0.10 * g.ry * std::sin(a));
  }
  for (int i = 0; i < 8; ++i) {
    const double a = 6.2831853 * i / 8.0;
    push(cx + 0.20 * g.rx * std::cos(a), my + 0.05 * g.ry * std::sin(a));
  }
  return lms;
}

// Renders one frame: background gradient, textured skin with shading, and
// the landmark-aligned features.
inline Image render_frame(const VideoParams& vp, const FrameJitter& j, int size) {
  using synth_detail::pixel_noise;
  using synth_detail::soft_ellipse;
  const auto& g = vp.geom;
  const auto& a = vp.look;
  const double cx = g.cx + j.dx, cy = g.cy + j.dy;
  const double ex_l = cx - 0.40 * g.rx, ex_r = cx + 0.40 * g.rx;
  const double ey = cy - 0.20 * g.ry;
  const double my = cy + 0.45 * g.ry;

  Image img(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double tex = 0.0;
      for (const auto& w : a.waves)
        tex += w.amp * std::sin(6.2831853 * (w.fx * x + w.fy * y) + w.phase + j.phase_shift);
      const double grain = a.noise_amp * pixel_noise(a.noise_key ^ j.noise_key, x, y);

      // background
      const double t = static_cast<double>(y) / size;
      double rgb[3];
      for (int c = 0; c < 3; ++c)
        rgb[c] = a.bg_top[c] * (1.0 - t) + a.bg_bottom[c] * t +
                 a.bg_texture_scale * (tex + grain);

      // face with radial shading
      const double face_w = soft_ellipse(x, y, cx, cy, g.rx, g.ry, 0.10);
      if (face_w > 0.0) {
        const double dx = (x - cx) / g.rx, dy = (y - cy) / g.ry;
        const double shade = 1.0 - 0.22 * (dx * dx + dy * dy);
        double face[3];
        for (int c = 0; c < 3; ++c) face[c] = a.skin[c] * shade + tex + grain;

        // features: brows, eyes, nose shadow, mouth
        for (int side = 0; side < 2; ++side) {
          const double ex = side == 0 ? ex_l : ex_r;
          const double brow_w =
              soft_ellipse(x, y, ex, cy - 0.41 * g.ry, 0.17 * g.rx, 0.045 * g.ry, 0.5);
          const double eye_w = soft_ellipse(x, y, ex, ey, 0.15 * g.rx, 0.065 * g.ry, 0.4);
          const double iris_w = soft_ellipse(x, y, ex, ey, 0.055 * g.rx, 0.035 * g.ry, 0.6);
          for (int c = 0; c < 3; ++c) {
            face[c] = face[c] * (1.0 - brow_w) + a.brow[c] * brow_w;
            face[c] = face[c] * (1.0 - eye_w) + (230.0 - 0.2 * a.eye[c]) * eye_w;
            face[c] = face[c] * (1.0 - iris_w) + a.eye[c] * iris_w;
          }
        }
        const double nose_w = soft_ellipse(x, y, cx, cy + 0.05 * g.ry, 0.07 * g.rx,
                                           0.22 * g.ry, 0.8);
        const double mouth_w = soft_ellipse(x, y, cx, my, 0.28 * g.rx, 0.09 * g.ry, 0.5);
        for (int c = 0; c < 3; ++c) {
          face[c] *= 1.0 - 0.18 * nose_w;
          face[c] = face[c] * (1.0 - mouth_w) + a.mouth[c] * mouth_w;
        }
        for (int c = 0; c < 3; ++c) rgb[c] = rgb[c] * (1.0 - face_w) + face[c] * face_w;
      }
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = static_cast<float>(clamp255(rgb[c] * j.light));
    }
  }
  return img;
}

// Face-swap-style composite: the donor appearance rendered in the source
// geometry, softened and color-offset, blended over the landmark hull.
inline Image fake_frame(const VideoParams& source, const FaceAppearance& donor,
                        const FrameJitter& j, int size, Rng& rng) {
  const Image base = render_frame(source, j, size);
  VideoParams swapped = source;
  swapped.look = donor;
  Image donor_img = render_frame(swapped, j, size);
  donor_img = gaussian_blur(donor_img, 0.7);
  donor_img = shift_rgb(donor_img, rng.uniform(2.0, 6.0), rng.uniform(-3.0, 3.0),
                        rng.uniform(-6.0, -2.0));
  BlendMask hull = convex_hull_mask(landmark_template(source.geom, j), size, size);
  gaussian_blur_plane(hull.values, size, size, 2.0, Border::Zero);
  return blend(hull, donor_img, base);
}

struct SynthConfig {
  int image_size = 64;
  int n_train_videos = 100;
  int n_test_real = 20;
  int n_test_fake = 20;
  int frames_per_video = 5;
  uint64_t seed = 1;
};

// Writes images under <out_dir>/images/<video>/ and the manifest at
// <out_dir>/manifest.csv; returns the records (with resolved paths).
inline std::vector<FrameRecord> generate_corpus(const SynthConfig& cfg,
                                                const std::string& out_dir) {
  if (cfg.n_train_videos < 1 || cfg.frames_per_video < 1)
    throw std::invalid_argument("generate_corpus: need at least one video and frame");
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "images");

  Rng root(cfg.seed);
  std::vector<FrameRecord> records;
  char name[64];

  auto emit_video = [&](const std::string& id, const std::string& split, bool fake,
                        uint64_t key) {
    Rng vrng = root.child(key);
    const VideoParams vp = draw_video_params(vrng, cfg.image_size);
    FaceAppearance donor{};
    if (fake) donor = draw_video_params(vrng, cfg.image_size).look;
    const fs::path dir = fs::path(out_dir) / "images" / id;
    fs::create_directories(dir);
    for (int fidx = 0; fidx < cfg.frames_per_video; ++fidx) {
      Rng frng = vrng.child(0x5EED + static_cast<uint64_t>(fidx));
      const FrameJitter j = draw_frame_jitter(frng, fidx, cfg.image_size);
      Image img = fake ? fake_frame(vp, donor, j, cfg.image_size, frng)
                       : render_frame(vp, j, cfg.image_size);
      std::snprintf(name, sizeof name, "f%03d.png", fidx);
      const fs::path file = dir / name;
      save_png(file.string(), img);
      FrameRecord rec;
      rec.path = (fs::path("images") / id / name).string();
      rec.video_id = id;
      rec.split = split;
      rec.is_fake = fake;
      rec.landmarks = landmark_template(vp.geom, j);
      records.push_back(std::move(rec));
    }
  };

  for (int v = 0; v < cfg.n_train_videos; ++v) {
    std::snprintf(name, sizeof name, "train_%03d", v);
    emit_video(name, "train", false, 0x100000 + v);
  }
  for (int v = 0; v < cfg.n_test_real; ++v) {
    std::snprintf(name, sizeof name, "real_%03d", v);
    emit_video(name, "test", false, 0x200000 + v);
  }
  for (int v = 0; v < cfg.n_test_fake; ++v) {
    std::snprintf(name, sizeof name, "fake_%03d", v);
    emit_video(name, "test", true, 0x300000 + v);
  }

  write_manifest((fs::path(out_dir) / "manifest.csv").string(), records);
  // reload so returned paths are resolved exactly like a consumer would see
  return read_manifest((fs::path(out_dir) / "manifest.csv").string());
}

}  // namespace seeable
